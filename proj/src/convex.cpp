#include "berezin/convex.hpp"

#include <algorithm>
#include <cfloat>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "berezin/error.hpp"
#include "text.hpp"

namespace berezin {

using repr::PresetKind;

double SubgradientInterval::sup() const { return empty ? -HUGE_VAL : hi; }
double SubgradientInterval::inf() const { return empty ? HUGE_VAL : lo; }

namespace {

constexpr double kInf = HUGE_VAL;

std::string fmt_num(double v) {
    std::ostringstream os;
    os.precision(12);
    os << v;
    return os.str();
}

std::string preset_id(const repr::Preset1D& p) {
    switch (p.kind) {
        case PresetKind::Power:
            if (p.p == 2.0 && p.c == 0.5) return "quad";
            if (p.p == 2.0 && p.c == 1.0) return "sq";
            if (p.c == 1.0) return "power:" + fmt_num(p.p);
            return "power:" + fmt_num(p.p) + "*" + fmt_num(p.c);
        case PresetKind::Support:
            if (p.offset == 0.0 && p.lo == -1.0 && p.hi == 1.0) return "abs";
            if (p.offset == 0.0 && p.lo == 0.0 && p.hi == 1.0) return "pospart";
            if (p.lo == p.hi) return "affine:" + fmt_num(p.lo) + "," + fmt_num(p.offset);
            return "support:" + fmt_num(p.lo) + "," + fmt_num(p.hi) + (p.offset != 0.0 ? "+" + fmt_num(p.offset) : "");
        case PresetKind::Indicator:
            return "indicator:" + fmt_num(p.lo) + "," + fmt_num(p.hi) + (p.offset != 0.0 ? "+" + fmt_num(p.offset) : "");
        case PresetKind::Exp: return "exp";
        case PresetKind::XLogX: return "xlogx";
        case PresetKind::Cosh: return "cosh";
        case PresetKind::CoshConj: return "cosh*";
    }
    return "preset";
}

double require_real(Point z, const char* what) {
    if (z.imag() != 0.0) throw ShapeError(std::string(what) + ": complex argument given to a function on R");
    return z.real();
}

ExtendedReal eval_preset(const repr::Preset1D& p, double t) {
    switch (p.kind) {
        case PresetKind::Power: return p.c * std::pow(std::abs(t), p.p);
        case PresetKind::Support: return std::max(p.lo * t, p.hi * t) + p.offset;
        case PresetKind::Indicator:
            if (t < p.lo || t > p.hi) return ExtendedReal::infinity();
            return p.offset;
        case PresetKind::Exp: return std::exp(t);
        case PresetKind::XLogX:
            if (t < 0.0) return ExtendedReal::infinity();
            if (t == 0.0) return 0.0;
            return t * std::log(t) - t;
        case PresetKind::Cosh: return std::cosh(t);
        case PresetKind::CoshConj: return t * std::asinh(t) - std::sqrt(1.0 + t * t);
    }
    return ExtendedReal::infinity();
}

// Index i with x[i] <= t <= x[i+1]; requires x.front() <= t <= x.back() and x.size() >= 2.
std::size_t bracket(std::span<const double> x, double t) {
    auto it = std::upper_bound(x.begin(), x.end(), t);
    std::size_t i = (it == x.begin()) ? 0 : static_cast<std::size_t>(it - x.begin()) - 1;
    return std::min(i, x.size() - 2);
}

ExtendedReal eval_sampled1d(const repr::Sampled1D& s, double t) {
    const auto& x = s.x;
    if (t < x.front() || t > x.back()) throw DomainError("eval: point outside sampled range");
    if (x.size() == 1) return s.f[0];
    const std::size_t i = bracket(x, t);
    if (t == x[i]) return s.f[i];
    if (t == x[i + 1]) return s.f[i + 1];
    if (s.f[i].is_infinite() || s.f[i + 1].is_infinite()) return ExtendedReal::infinity();
    const double w = (t - x[i]) / (x[i + 1] - x[i]);
    return (1.0 - w) * s.f[i].value() + w * s.f[i + 1].value();
}

ExtendedReal eval_sampled2d(const repr::Sampled2D& s, Point z) {
    const double a = z.real(), b = z.imag();
    if (a < s.x.front() || a > s.x.back() || b < s.y.front() || b > s.y.back())
        throw DomainError("eval: point outside sampled box");
    std::size_t i = 0, j = 0;
    double wx = 0.0, wy = 0.0;
    if (s.x.size() > 1) {
        i = bracket(s.x, a);
        wx = (a - s.x[i]) / (s.x[i + 1] - s.x[i]);
    }
    if (s.y.size() > 1) {
        j = bracket(s.y, b);
        wy = (b - s.y[j]) / (s.y[j + 1] - s.y[j]);
    }
    double acc = 0.0;
    for (int di = 0; di < 2; ++di) {
        const double w1 = di == 0 ? 1.0 - wx : wx;
        if (w1 == 0.0) continue;
        for (int dj = 0; dj < 2; ++dj) {
            const double w2 = dj == 0 ? 1.0 - wy : wy;
            if (w2 == 0.0) continue;
            const ExtendedReal& v = s.at(i + di, j + dj);
            if (v.is_infinite()) return ExtendedReal::infinity();
            acc += w1 * w2 * v.value();
        }
    }
    return acc;
}

std::vector<double> parse_numbers(std::string_view s) {
    std::vector<double> out;
    for (auto& tok : detail::split(s, ',')) out.push_back(detail::parse_double(tok));
    return out;
}

// Finite nodes and their values.
struct FiniteSamples {
    std::vector<double> x;
    std::vector<double> f;
};

FiniteSamples finite_samples(std::span<const double> x, std::span<const ExtendedReal> f) {
    FiniteSamples out;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (f[i].is_finite()) {
            out.x.push_back(x[i]);
            out.f.push_back(f[i].value());
        }
    }
    return out;
}

std::vector<double> hull_slopes(const FiniteSamples& fs, const std::vector<std::size_t>& hull) {
    std::vector<double> e;
    for (std::size_t k = 0; k + 1 < hull.size(); ++k) {
        const auto a = hull[k], b = hull[k + 1];
        e.push_back((fs.f[b] - fs.f[a]) / (fs.x[b] - fs.x[a]));
    }
    return e;
}

std::vector<ExtendedReal> to_extended(const std::vector<double>& v) { return {v.begin(), v.end()}; }

std::vector<double> uniform(double a, double b, std::size_t n) {
    std::vector<double> v(n);
    if (n == 1) {
        v[0] = 0.5 * (a + b);
        return v;
    }
    for (std::size_t i = 0; i < n; ++i) v[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
    return v;
}

// Slope range of consecutive finite pairs along one axis of a 2D grid, padded by 5%, as n nodes.
std::vector<double> axis_dual_grid(const repr::Sampled2D& s, bool along_x) {
    double lo = kInf, hi = -kInf;
    const std::size_t nx = s.x.size(), ny = s.y.size();
    if (along_x) {
        for (std::size_t j = 0; j < ny; ++j)
            for (std::size_t i = 0; i + 1 < nx; ++i) {
                const auto &a = s.at(i, j), &b = s.at(i + 1, j);
                if (a.is_finite() && b.is_finite()) {
                    const double sl = (b.value() - a.value()) / (s.x[i + 1] - s.x[i]);
                    lo = std::min(lo, sl);
                    hi = std::max(hi, sl);
                }
            }
    } else {
        for (std::size_t i = 0; i < nx; ++i)
            for (std::size_t j = 0; j + 1 < ny; ++j) {
                const auto &a = s.at(i, j), &b = s.at(i, j + 1);
                if (a.is_finite() && b.is_finite()) {
                    const double sl = (b.value() - a.value()) / (s.y[j + 1] - s.y[j]);
                    lo = std::min(lo, sl);
                    hi = std::max(hi, sl);
                }
            }
    }
    if (lo > hi) lo = hi = 0.0;
    const double pad = (hi > lo) ? 0.05 * (hi - lo) : 0.05 * std::max(1.0, std::abs(lo));
    return uniform(lo - pad, hi + pad, along_x ? nx : ny);
}

// max_{i,j} (p x_i + q y_j - f(i,j)) on the product grid p by q, row-major over (p, q).
std::vector<double> legendre_2d(const std::vector<double>& x, const std::vector<double>& y,
                                const std::vector<ExtendedReal>& f, const std::vector<double>& p,
                                const std::vector<double>& q) {
    const std::size_t nx = x.size(), ny = y.size();
    // Row pass: g(i, b) = max_j (q_b y_j - f(i, j)); rows without finite values drop out.
    std::vector<ExtendedReal> neg_g(nx * q.size(), ExtendedReal::infinity());
    for (std::size_t i = 0; i < nx; ++i) {
        std::span<const ExtendedReal> row(f.data() + i * ny, ny);
        if (std::none_of(row.begin(), row.end(), [](const ExtendedReal& v) { return v.is_finite(); })) continue;
        const auto g = legendre_transform(y, row, q);
        for (std::size_t b = 0; b < q.size(); ++b) neg_g[b * nx + i] = -g[b];
    }
    // Column pass: phi*(p_a, q_b) = max_i (p_a x_i - (-g(i, b))).
    std::vector<double> out(p.size() * q.size());
    for (std::size_t b = 0; b < q.size(); ++b) {
        std::span<const ExtendedReal> col(neg_g.data() + b * nx, nx);
        const auto v = legendre_transform(x, col, p);
        for (std::size_t a = 0; a < p.size(); ++a) out[a * q.size() + b] = v[a];
    }
    return out;
}

void check_increasing(const std::vector<double>& x, const char* what) {
    if (x.empty()) throw PreconditionError(std::string(what) + ": empty node list");
    for (std::size_t i = 0; i + 1 < x.size(); ++i)
        if (!(x[i] < x[i + 1])) throw PreconditionError(std::string(what) + ": nodes must be strictly increasing");
    for (double v : x)
        if (!std::isfinite(v)) throw PreconditionError(std::string(what) + ": non-finite node");
}

double rounding_slack(double a, double b, double c) {
    return 64.0 * DBL_EPSILON * (std::abs(a) + std::abs(b) + std::abs(c) + 1.0);
}

std::optional<AffinePair> witness_sampled1d(const repr::Sampled1D& s, double t0, double eps) {
    const auto fs = finite_samples(s.x, s.f);
    const double f0 = eval_sampled1d(s, t0).value();
    if (fs.x.size() == 1) return AffinePair{-f0, 0.0};
    const auto hull = lower_hull(fs.x, to_extended(fs.f));
    const auto e = hull_slopes(fs, hull);
    // Hull slope at t0: a vertex picks the middle of its subgradient interval, an edge its slope.
    double slope = 0.0;
    if (t0 <= fs.x[hull.front()]) {
        slope = e.front();
    } else if (t0 >= fs.x[hull.back()]) {
        slope = e.back();
    } else {
        for (std::size_t k = 0; k + 1 < hull.size(); ++k) {
            const double xa = fs.x[hull[k]], xb = fs.x[hull[k + 1]];
            if (t0 == xa && k > 0) {
                slope = 0.5 * (e[k - 1] + e[k]);
                break;
            }
            if (t0 > xa && t0 < xb) {
                slope = e[k];
                break;
            }
        }
    }
    double t_star = -kInf;
    for (std::size_t i = 0; i < fs.x.size(); ++i) t_star = std::max(t_star, slope * fs.x[i] - fs.f[i]);
    const AffinePair pair{t_star, slope};
    const double l0 = pair(t0);
    if (l0 >= f0 - eps - rounding_slack(l0, f0, t_star)) return pair;
    return std::nullopt;
}

std::optional<AffinePair> witness_sampled2d(const repr::Sampled2D& s, Point z0, double eps) {
    const double f0 = eval_sampled2d(s, z0).value();
    const auto p = axis_dual_grid(s, true);
    const auto q = axis_dual_grid(s, false);
    const auto conj = legendre_2d(s.x, s.y, s.f, p, q);
    double best = -kInf;
    AffinePair pair;
    for (std::size_t a = 0; a < p.size(); ++a)
        for (std::size_t b = 0; b < q.size(); ++b) {
            const AffinePair cand{conj[a * q.size() + b], Point{p[a], q[b]}};
            const double l0 = cand(z0);
            if (l0 > best) {
                best = l0;
                pair = cand;
            }
        }
    if (best >= f0 - eps - rounding_slack(best, f0, pair.t_star)) return pair;
    return std::nullopt;
}

SubgradientInterval subdifferential_preset(const repr::Preset1D& p, double t) {
    switch (p.kind) {
        case PresetKind::Power: {
            const double d = p.c * p.p * std::pow(std::abs(t), p.p - 1.0) * (t < 0 ? -1.0 : (t > 0 ? 1.0 : 0.0));
            return {d, d};
        }
        case PresetKind::Support:
            if (t < 0.0) return {p.lo, p.lo};
            if (t > 0.0) return {p.hi, p.hi};
            return {p.lo, p.hi};
        case PresetKind::Indicator:
            if (t < p.lo || t > p.hi) return SubgradientInterval::none();
            if (p.lo == p.hi) return {-kInf, kInf};
            if (t == p.lo) return {-kInf, 0.0};
            if (t == p.hi) return {0.0, kInf};
            return {0.0, 0.0};
        case PresetKind::Exp: return {std::exp(t), std::exp(t)};
        case PresetKind::XLogX:
            if (t <= 0.0) return SubgradientInterval::none();
            return {std::log(t), std::log(t)};
        case PresetKind::Cosh: return {std::sinh(t), std::sinh(t)};
        case PresetKind::CoshConj: return {std::asinh(t), std::asinh(t)};
    }
    return SubgradientInterval::none();
}

SubgradientInterval subdifferential_sampled(const repr::Sampled1D& s, double t) {
    const auto fs = finite_samples(s.x, s.f);
    if (t < fs.x.front() || t > fs.x.back()) return SubgradientInterval::none();
    if (fs.x.size() == 1) return {-kInf, kInf};
    const auto hull = lower_hull(fs.x, to_extended(fs.f));
    const auto e = hull_slopes(fs, hull);
    const ExtendedReal ft = eval_sampled1d(s, t);
    if (ft.is_infinite()) return SubgradientInterval::none();
    for (std::size_t k = 0; k < hull.size(); ++k) {
        const double xv = fs.x[hull[k]];
        if (t == xv) {
            if (k == 0) return {e.front(), e.front()};
            if (k + 1 == hull.size()) return {e.back(), e.back()};
            return {e[k - 1], e[k]};
        }
        if (k + 1 < hull.size() && t > xv && t < fs.x[hull[k + 1]]) {
            const double env = fs.f[hull[k]] + e[k] * (t - xv);
            if (ft.value() > env + 1e-12 * (1.0 + std::abs(env))) return SubgradientInterval::none();
            return {e[k], e[k]};
        }
    }
    return SubgradientInterval::none();
}

// Central differences at nodes, linearly interpolated in between; kinks tested by comparing the
// slope jump at a node with the jumps at its neighbours.
double gradient_sampled1d(const repr::Sampled1D& s, double t) {
    const auto& x = s.x;
    const std::size_t n = x.size();
    if (n < 3 || t <= x.front() || t >= x.back()) throw DomainError("gradient: point not interior to the sampled range");
    auto val = [&](std::size_t i) {
        if (s.f[i].is_infinite()) throw DomainError("gradient: +inf node next to the evaluation point");
        return s.f[i].value();
    };
    auto chord = [&](std::size_t i) { return (val(i + 1) - val(i)) / (x[i + 1] - x[i]); };
    auto jump = [&](std::size_t i) -> double {
        if (i == 0 || i + 1 >= n) return 0.0;
        return std::abs(chord(i) - chord(i - 1));
    };
    auto is_kink = [&](std::size_t i) {
        if (i == 0 || i + 1 >= n) return false;
        const double ji = jump(i);
        const double nb = std::max(i >= 2 ? jump(i - 1) : 0.0, i + 2 < n ? jump(i + 1) : 0.0);
        const double scale = 1e-9 * (1.0 + std::abs(chord(i)) + std::abs(chord(i - 1)));
        // Uniform-curvature data gives ratio ~1; a genuine kink stands far above its neighbours.
        return ji > scale && ji > 4.0 * nb;
    };
    auto central = [&](std::size_t i) { return (val(i + 1) - val(i - 1)) / (x[i + 1] - x[i - 1]); };
    const std::size_t i = bracket(x, t);
    if (t == x[i] || t == x[i + 1]) {
        const std::size_t k = (t == x[i]) ? i : i + 1;
        if (is_kink(k)) throw NotDifferentiableError("gradient: kink in sampled data at t = " + fmt_num(t));
        return central(k);
    }
    if (is_kink(i) || is_kink(i + 1) || i == 0 || i + 2 > n - 1) return chord(i);
    const double w = (t - x[i]) / (x[i + 1] - x[i]);
    return (1.0 - w) * central(i) + w * central(i + 1);
}

Point gradient_sampled2d(const repr::Sampled2D& s, Point z) {
    auto min_spacing = [](const std::vector<double>& v) {
        double m = kInf;
        for (std::size_t i = 0; i + 1 < v.size(); ++i) m = std::min(m, v[i + 1] - v[i]);
        return m;
    };
    const double hx = 0.5 * min_spacing(s.x), hy = 0.5 * min_spacing(s.y);
    if (!std::isfinite(hx) || !std::isfinite(hy)) throw DomainError("gradient: degenerate 2D grid");
    auto value = [&](Point w) {
        const auto v = eval_sampled2d(s, w);
        if (v.is_infinite()) throw DomainError("gradient: +inf next to the evaluation point");
        return v.value();
    };
    const double f0 = value(z);
    auto axis = [&](Point step, double h) {
        const double fwd = (value(z + step) - f0) / h;
        const double bwd = (f0 - value(z - step)) / h;
        if (std::abs(fwd - bwd) > 0.5 * (std::abs(fwd) + std::abs(bwd)) + 1e-8)
            throw NotDifferentiableError("gradient: kink in sampled 2D data");
        return 0.5 * (fwd + bwd);
    };
    return {axis(Point{hx, 0.0}, hx), axis(Point{0.0, hy}, hy)};
}

}  // namespace

// ---------------------------------------------------------------------------------------------

ConvexFunction::ConvexFunction(repr::Representation r, int dim, std::string id)
    : repr_(std::make_shared<const repr::Representation>(std::move(r))), dimension_(dim), id_(std::move(id)) {}

ConvexFunction ConvexFunction::power(double c, double p) {
    if (!(c > 0.0) || !(p > 1.0)) throw PreconditionError("power preset needs c > 0 and p > 1");
    repr::Preset1D r{PresetKind::Power, c, p};
    return {r, 1, preset_id(r)};
}

ConvexFunction ConvexFunction::support(double lo, double hi, double offset) {
    if (lo > hi) throw PreconditionError("support preset needs lo <= hi");
    repr::Preset1D r{PresetKind::Support, 1.0, 0.0, lo, hi, offset};
    return {r, 1, preset_id(r)};
}

ConvexFunction ConvexFunction::indicator(double lo, double hi, double offset) {
    if (lo > hi) throw PreconditionError("indicator preset needs lo <= hi");
    repr::Preset1D r{PresetKind::Indicator, 1.0, 0.0, lo, hi, offset};
    return {r, 1, preset_id(r)};
}

ConvexFunction ConvexFunction::exp() { return {repr::Preset1D{PresetKind::Exp}, 1, "exp"}; }
ConvexFunction ConvexFunction::xlogx() { return {repr::Preset1D{PresetKind::XLogX}, 1, "xlogx"}; }
ConvexFunction ConvexFunction::cosh() { return {repr::Preset1D{PresetKind::Cosh}, 1, "cosh"}; }
ConvexFunction ConvexFunction::cosh_conjugate() { return {repr::Preset1D{PresetKind::CoshConj}, 1, "cosh*"}; }

ConvexFunction ConvexFunction::squared_modulus(double c) {
    if (!(c > 0.0)) throw PreconditionError("squared modulus needs c > 0");
    return {repr::SquaredModulus{c}, 2, c == 1.0 ? "sqmod2d" : "sqmod2d*" + fmt_num(c)};
}

ConvexFunction ConvexFunction::sampled(std::vector<double> x, std::vector<ExtendedReal> f, std::string id) {
    check_increasing(x, "sampled");
    if (x.size() != f.size()) throw PreconditionError("sampled: node/value length mismatch");
    if (std::none_of(f.begin(), f.end(), [](const ExtendedReal& v) { return v.is_finite(); }))
        throw PreconditionError("sampled: improper function (all values +inf)");
    return {repr::Sampled1D{std::move(x), std::move(f)}, 1, std::move(id)};
}

ConvexFunction ConvexFunction::sampled2d(std::vector<double> x, std::vector<double> y, std::vector<ExtendedReal> f,
                                         std::string id) {
    check_increasing(x, "sampled2d");
    check_increasing(y, "sampled2d");
    if (x.size() * y.size() != f.size()) throw PreconditionError("sampled2d: value count must be nx * ny");
    if (std::none_of(f.begin(), f.end(), [](const ExtendedReal& v) { return v.is_finite(); }))
        throw PreconditionError("sampled2d: improper function (all values +inf)");
    return {repr::Sampled2D{std::move(x), std::move(y), std::move(f)}, 2, std::move(id)};
}

ConvexFunction ConvexFunction::sample(const ConvexFunction& f, double a, double b, std::size_t n) {
    if (f.dimension() != 1) throw PreconditionError("sample: only 1D functions can be sampled on an interval");
    if (n < 2 || !(a < b)) throw PreconditionError("sample: need n >= 2 and a < b");
    auto x = uniform(a, b, n);
    std::vector<ExtendedReal> v;
    v.reserve(n);
    for (double t : x) v.push_back(f(t));
    return sampled(std::move(x), std::move(v),
                   "sampled:" + f.id() + ":" + fmt_num(a) + "," + fmt_num(b) + "," + std::to_string(n));
}

ConvexFunction ConvexFunction::from_id(std::string_view id) {
    const auto colon = id.find(':');
    const std::string_view head = id.substr(0, colon);
    const std::string_view args = colon == std::string_view::npos ? std::string_view{} : id.substr(colon + 1);
    auto nums = [&](std::size_t expected) {
        auto v = parse_numbers(args);
        if (v.size() != expected) throw ConfigError("preset '" + std::string(id) + "': wrong number of parameters");
        return v;
    };
    if (head == "quad") return quadratic(0.5);
    if (head == "sq") return quadratic(1.0);
    if (head == "power") return power(1.0, nums(1)[0]);
    if (head == "abs") return abs();
    if (head == "pospart") return pospart();
    if (head == "exp") return exp();
    if (head == "xlogx") return xlogx();
    if (head == "cosh") return cosh();
    if (head == "affine") {
        const auto v = nums(2);
        return affine(v[0], v[1]);
    }
    if (head == "indicator") {
        const auto v = nums(2);
        return indicator(v[0], v[1]);
    }
    if (head == "support") {
        const auto v = nums(2);
        return support(v[0], v[1]);
    }
    if (head == "sqmod2d") return squared_modulus(1.0);
    if (head == "lift") return restrict_to_real(from_id(args));
    if (head == "sampled") {
        const auto last = args.rfind(':');
        if (last == std::string_view::npos) throw ConfigError("sampled preset needs sampled:<id>:<a>,<b>,<n>");
        const auto v = parse_numbers(args.substr(last + 1));
        if (v.size() != 3) throw ConfigError("sampled preset needs sampled:<id>:<a>,<b>,<n>");
        return sample(from_id(args.substr(0, last)), v[0], v[1], static_cast<std::size_t>(v[2]));
    }
    throw ConfigError("unknown convex function preset '" + std::string(id) + "'");
}

ConvexFunction ConvexFunction::load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open convex function file '" + path + "'");
    std::vector<std::vector<ExtendedReal>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        auto toks = detail::split(line, ',');
        std::vector<ExtendedReal> row;
        bool header = false;
        for (auto& t : toks) {
            const auto tok = detail::trim(t);
            if (tok == "inf" || tok == "+inf") {
                row.push_back(ExtendedReal::infinity());
                continue;
            }
            double v = 0.0;
            if (!detail::try_parse_double(tok, v)) {
                header = true;
                break;
            }
            row.push_back(v);
        }
        if (header) {
            if (rows.empty()) continue;
            throw ConfigError("convex function file '" + path + "': unparsable row '" + line + "'");
        }
        if (!rows.empty() && row.size() != rows.front().size())
            throw ConfigError("convex function file '" + path + "': inconsistent column count");
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ConfigError("convex function file '" + path + "' has no data rows");
    const std::size_t cols = rows.front().size();
    if (cols == 2) {
        std::vector<std::pair<double, ExtendedReal>> pts;
        for (auto& r : rows) pts.emplace_back(r[0].value(), r[1]);
        std::sort(pts.begin(), pts.end(), [](auto& a, auto& b) { return a.first < b.first; });
        std::vector<double> x;
        std::vector<ExtendedReal> f;
        for (auto& [a, b] : pts) {
            x.push_back(a);
            f.push_back(b);
        }
        return sampled(std::move(x), std::move(f), path);
    }
    if (cols == 3) {
        std::map<std::pair<double, double>, ExtendedReal> grid;
        std::vector<double> xs, ys;
        for (auto& r : rows) {
            grid[{r[0].value(), r[1].value()}] = r[2];
            xs.push_back(r[0].value());
            ys.push_back(r[1].value());
        }
        std::sort(xs.begin(), xs.end());
        xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
        std::sort(ys.begin(), ys.end());
        ys.erase(std::unique(ys.begin(), ys.end()), ys.end());
        if (grid.size() != xs.size() * ys.size())
            throw ConfigError("convex function file '" + path + "': (x, y) rows do not form a full tensor grid");
        std::vector<ExtendedReal> f;
        for (double a : xs)
            for (double b : ys) f.push_back(grid.at({a, b}));
        return sampled2d(std::move(xs), std::move(ys), std::move(f), path);
    }
    throw ConfigError("convex function file '" + path + "': expected 2 or 3 columns");
}

bool ConvexFunction::is_sampled() const {
    return std::holds_alternative<repr::Sampled1D>(*repr_) || std::holds_alternative<repr::Sampled2D>(*repr_);
}

double ConvexFunction::grid_modulus() const {
    auto spacing = [](const std::vector<double>& v) {
        double m = 0.0;
        for (std::size_t i = 0; i + 1 < v.size(); ++i) m = std::max(m, v[i + 1] - v[i]);
        return m;
    };
    if (auto* s = std::get_if<repr::Sampled1D>(repr_.get())) return spacing(s->x);
    if (auto* s = std::get_if<repr::Sampled2D>(repr_.get())) return std::max(spacing(s->x), spacing(s->y));
    if (auto* s = std::get_if<repr::LiftedToReal>(repr_.get())) return s->base->grid_modulus();
    if (auto* s = std::get_if<repr::RealCylinder>(repr_.get())) return s->base->grid_modulus();
    return 0.0;
}

ExtendedReal ConvexFunction::operator()(Point z) const { return eval(*this, z); }

ExtendedReal eval(const ConvexFunction& phi, Point z) {
    return std::visit(
        [&](const auto& r) -> ExtendedReal {
            using T = std::decay_t<decltype(r)>;
            if constexpr (std::is_same_v<T, repr::Preset1D>) {
                return eval_preset(r, require_real(z, "eval"));
            } else if constexpr (std::is_same_v<T, repr::Sampled1D>) {
                return eval_sampled1d(r, require_real(z, "eval"));
            } else if constexpr (std::is_same_v<T, repr::Sampled2D>) {
                return eval_sampled2d(r, z);
            } else if constexpr (std::is_same_v<T, repr::SquaredModulus>) {
                return r.c * std::norm(z);
            } else if constexpr (std::is_same_v<T, repr::LiftedToReal>) {
                if (z.imag() != 0.0) return ExtendedReal::infinity();
                return eval(*r.base, Point{z.real(), 0.0});
            } else {
                return eval(*r.base, Point{z.real(), 0.0});
            }
        },
        phi.representation());
}

std::vector<std::size_t> lower_hull(std::span<const double> x, std::span<const ExtendedReal> f) {
    std::vector<std::size_t> h;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (f[i].is_infinite()) continue;
        while (h.size() >= 2) {
            const auto a = h[h.size() - 2], b = h.back();
            const double cross =
                (x[b] - x[a]) * (f[i].value() - f[a].value()) - (f[b].value() - f[a].value()) * (x[i] - x[a]);
            if (cross > 0.0) break;
            h.pop_back();
        }
        h.push_back(i);
    }
    return h;
}

std::vector<double> legendre_transform(std::span<const double> x, std::span<const ExtendedReal> f,
                                       std::span<const double> slopes) {
    if (x.size() != f.size()) throw PreconditionError("legendre_transform: length mismatch");
    const auto hull = lower_hull(x, f);
    if (hull.empty()) throw PreconditionError("legendre_transform: improper input (all values +inf)");
    std::vector<double> e;
    for (std::size_t k = 0; k + 1 < hull.size(); ++k)
        e.push_back((f[hull[k + 1]].value() - f[hull[k]].value()) / (x[hull[k + 1]] - x[hull[k]]));

    std::vector<std::size_t> order(slopes.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    if (!std::is_sorted(slopes.begin(), slopes.end()))
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return slopes[a] < slopes[b]; });

    std::vector<double> out(slopes.size());
    std::size_t k = 0;  // active hull vertex: optimal for e[k-1] <= s <= e[k]
    for (std::size_t idx : order) {
        const double s = slopes[idx];
        while (k < e.size() && e[k] < s) ++k;
        const std::size_t v = hull[k];
        out[idx] = s * x[v] - f[v].value();
    }
    return out;
}

std::vector<double> default_dual_grid(std::span<const double> x, std::span<const ExtendedReal> f) {
    const auto fs = finite_samples(x, f);
    if (fs.x.size() < 2) throw PreconditionError("conjugate: need at least 2 finite nodes");
    const auto hull = lower_hull(fs.x, to_extended(fs.f));
    const auto e = hull_slopes(fs, hull);
    const double range = e.back() - e.front();
    const double pad = range > 0.0 ? 0.05 * range : 0.05 * std::max(1.0, std::abs(e.front()));

    std::vector<double> s;
    std::size_t k = 0;  // hull position of the next vertex
    for (std::size_t i = 0; i < fs.x.size(); ++i) {
        double slope;
        if (k < hull.size() && hull[k] == i) {
            if (k == 0)
                slope = e.front() - pad;
            else if (k + 1 == hull.size())
                slope = e.back() + pad;
            else
                slope = 0.5 * (e[k - 1] + e[k]);
            ++k;
        } else {
            slope = e[k - 1];  // node strictly between vertices k-1 and k
        }
        if (s.empty() || slope > s.back()) s.push_back(slope);
    }
    if (s.size() < 2) s = {e.front() - pad, e.back() + pad};
    return s;
}

ConvexFunction conjugate(const ConvexFunction& phi) {
    return std::visit(
        [&](const auto& r) -> ConvexFunction {
            using T = std::decay_t<decltype(r)>;
            if constexpr (std::is_same_v<T, repr::Preset1D>) {
                switch (r.kind) {
                    case PresetKind::Power: {
                        const double q = r.p / (r.p - 1.0);
                        const double c = (1.0 - 1.0 / r.p) * std::pow(r.c * r.p, -1.0 / (r.p - 1.0));
                        return ConvexFunction::power(c, q);
                    }
                    case PresetKind::Support: return ConvexFunction::indicator(r.lo, r.hi, -r.offset);
                    case PresetKind::Indicator: return ConvexFunction::support(r.lo, r.hi, -r.offset);
                    case PresetKind::Exp: return ConvexFunction::xlogx();
                    case PresetKind::XLogX: return ConvexFunction::exp();
                    case PresetKind::Cosh: return ConvexFunction::cosh_conjugate();
                    case PresetKind::CoshConj: return ConvexFunction::cosh();
                }
                throw PreconditionError("conjugate: unknown preset");
            } else if constexpr (std::is_same_v<T, repr::Sampled1D>) {
                auto s = default_dual_grid(r.x, r.f);
                auto v = legendre_transform(r.x, r.f, s);
                return ConvexFunction::sampled(std::move(s), to_extended(v), "conj(" + phi.id() + ")");
            } else if constexpr (std::is_same_v<T, repr::Sampled2D>) {
                auto p = axis_dual_grid(r, true);
                auto q = axis_dual_grid(r, false);
                auto v = legendre_2d(r.x, r.y, r.f, p, q);
                return ConvexFunction::sampled2d(std::move(p), std::move(q), to_extended(v), "conj(" + phi.id() + ")");
            } else if constexpr (std::is_same_v<T, repr::SquaredModulus>) {
                return ConvexFunction::squared_modulus(1.0 / (4.0 * r.c));
            } else if constexpr (std::is_same_v<T, repr::LiftedToReal>) {
                const auto g = std::make_shared<const ConvexFunction>(conjugate(*r.base));
                return ConvexFunction(repr::RealCylinder{g}, 2, "cyl:" + g->id());
            } else {
                const auto g = std::make_shared<const ConvexFunction>(conjugate(*r.base));
                return ConvexFunction(repr::LiftedToReal{g}, 2, "lift:" + g->id());
            }
        },
        phi.representation());
}

double biconjugate_gap(const ConvexFunction& phi) {
    const auto& r = phi.representation();
    if (auto* s = std::get_if<repr::Sampled1D>(&r)) {
        const auto dual = conjugate(phi);
        const auto& d = std::get<repr::Sampled1D>(dual.representation());
        const auto back = legendre_transform(d.x, d.f, s->x);
        double gap = 0.0;
        for (std::size_t i = 0; i < s->x.size(); ++i)
            if (s->f[i].is_finite()) gap = std::max(gap, std::abs(back[i] - s->f[i].value()));
        return gap;
    }
    if (auto* s = std::get_if<repr::Sampled2D>(&r)) {
        const auto dual = conjugate(phi);
        const auto& d = std::get<repr::Sampled2D>(dual.representation());
        const auto back = legendre_2d(d.x, d.y, d.f, s->x, s->y);
        double gap = 0.0;
        for (std::size_t k = 0; k < s->f.size(); ++k)
            if (s->f[k].is_finite()) gap = std::max(gap, std::abs(back[k] - s->f[k].value()));
        return gap;
    }
    if (auto* s = std::get_if<repr::LiftedToReal>(&r)) return biconjugate_gap(*s->base);
    if (auto* s = std::get_if<repr::RealCylinder>(&r)) return biconjugate_gap(*s->base);
    return 0.0;
}

std::vector<Point> probe_points(const ConvexFunction& phi) {
    std::vector<Point> pts;
    const auto& r = phi.representation();
    if (auto* s = std::get_if<repr::Sampled1D>(&r)) {
        for (double t : s->x) pts.emplace_back(t, 0.0);
    } else if (auto* s = std::get_if<repr::Sampled2D>(&r)) {
        for (double a : s->x)
            for (double b : s->y) pts.emplace_back(a, b);
    } else if (auto* s = std::get_if<repr::LiftedToReal>(&r)) {
        pts = probe_points(*s->base);
    } else if (auto* s = std::get_if<repr::RealCylinder>(&r)) {
        for (auto p : probe_points(*s->base))
            for (double b : {-2.0, 0.0, 2.0}) pts.emplace_back(p.real(), b);
    } else if (phi.dimension() == 1) {
        for (double t : uniform(-10.0, 10.0, 401)) pts.emplace_back(t, 0.0);
    } else {
        for (double a : uniform(-5.0, 5.0, 41))
            for (double b : uniform(-5.0, 5.0, 41)) pts.emplace_back(a, b);
    }
    return pts;
}

bool in_conjugate_epigraph(const ConvexFunction& phi, const AffinePair& pair) {
    for (const Point& p : probe_points(phi)) {
        const ExtendedReal v = eval(phi, p);
        if (v.is_infinite()) continue;
        const double l = pair(p);
        if (l > v.value() + rounding_slack(pairing(pair.x_star, p), pair.t_star, v.value())) return false;
    }
    return true;
}

SubgradientInterval subdifferential(const ConvexFunction& phi, double t) {
    const auto& r = phi.representation();
    if (auto* p = std::get_if<repr::Preset1D>(&r)) return subdifferential_preset(*p, t);
    if (auto* s = std::get_if<repr::Sampled1D>(&r)) return subdifferential_sampled(*s, t);
    throw ShapeError("subdifferential: defined here for functions on R only");
}

std::optional<AffinePair> eps_subdifferential_witness(const ConvexFunction& phi, Point x0, double eps) {
    if (!(eps >= 0.0)) throw PreconditionError("eps_subdifferential_witness: eps must be >= 0");
    const ExtendedReal f0 = eval(phi, x0);
    if (f0.is_infinite()) throw PreconditionError("eps_subdifferential_witness: phi(x0) = +inf");
    const auto& r = phi.representation();
    auto from_interval = [&](const SubgradientInterval& si, double t0) -> std::optional<AffinePair> {
        double s;
        if (std::isfinite(si.lo) && std::isfinite(si.hi))
            s = 0.5 * (si.lo + si.hi);
        else if (std::isfinite(si.lo))
            s = si.lo;
        else if (std::isfinite(si.hi))
            s = si.hi;
        else
            s = 0.0;
        // For the closed forms the pair below is an exact supporting line; clamp ranges that
        // leave the interval (e.g. s = 0 for an indicator at an endpoint is inside the cone).
        s = std::clamp(s, si.lo, si.hi);
        return AffinePair{s * t0 - f0.value(), Point{s, 0.0}};
    };
    if (auto* p = std::get_if<repr::Preset1D>(&r)) {
        const double t0 = require_real(x0, "eps_subdifferential_witness");
        const auto si = subdifferential_preset(*p, t0);
        if (!si.empty) return from_interval(si, t0);
        if (eps == 0.0) return std::nullopt;
        if (p->kind == PresetKind::XLogX && t0 == 0.0) {
            // phi* = exp; l(0) = -e^s >= -eps for s <= log eps.
            const double s = std::log(eps) - 1.0;
            return AffinePair{std::exp(s), Point{s, 0.0}};
        }
        return std::nullopt;
    }
    if (auto* s = std::get_if<repr::Sampled1D>(&r))
        return witness_sampled1d(*s, require_real(x0, "eps_subdifferential_witness"), eps);
    if (auto* s = std::get_if<repr::Sampled2D>(&r)) return witness_sampled2d(*s, x0, eps);
    if (auto* s = std::get_if<repr::SquaredModulus>(&r)) {
        const Point g = 2.0 * s->c * x0;
        return AffinePair{s->c * std::norm(x0), g};
    }
    if (auto* s = std::get_if<repr::LiftedToReal>(&r)) {
        auto w = eps_subdifferential_witness(*s->base, Point{x0.real(), 0.0}, eps);
        return w;
    }
    if (auto* s = std::get_if<repr::RealCylinder>(&r)) {
        // Pairing against Re only: t* unchanged, x* real.
        auto w = eps_subdifferential_witness(*s->base, Point{x0.real(), 0.0}, eps);
        return w;
    }
    return std::nullopt;
}

Point gradient(const ConvexFunction& phi, Point z) {
    const auto& r = phi.representation();
    if (auto* p = std::get_if<repr::Preset1D>(&r)) {
        const double t = require_real(z, "gradient");
        if (eval_preset(*p, t).is_infinite()) throw DomainError("gradient: point outside the effective domain");
        const auto si = subdifferential_preset(*p, t);
        if (si.empty || si.lo != si.hi) throw NotDifferentiableError("gradient: " + phi.id() + " is not differentiable at " + fmt_num(t));
        return {si.lo, 0.0};
    }
    if (auto* s = std::get_if<repr::Sampled1D>(&r)) return {gradient_sampled1d(*s, require_real(z, "gradient")), 0.0};
    if (auto* s = std::get_if<repr::Sampled2D>(&r)) return gradient_sampled2d(*s, z);
    if (auto* s = std::get_if<repr::SquaredModulus>(&r)) return 2.0 * s->c * z;
    if (auto* s = std::get_if<repr::LiftedToReal>(&r)) {
        // Off the axis the function is +inf; on it, the real derivative is a supporting slope.
        if (z.imag() != 0.0) throw DomainError("gradient: lifted function is +inf off the real axis");
        return {gradient(*s->base, Point{z.real(), 0.0}).real(), 0.0};
    }
    if (auto* s = std::get_if<repr::RealCylinder>(&r)) return {gradient(*s->base, Point{z.real(), 0.0}).real(), 0.0};
    throw ShapeError("gradient: unsupported representation");
}

ConvexFunction restrict_to_real(const ConvexFunction& phi_1d) {
    if (phi_1d.dimension() != 1) throw PreconditionError("restrict_to_real: input must be a function on R");
    return ConvexFunction(repr::LiftedToReal{std::make_shared<const ConvexFunction>(phi_1d)}, 2, "lift:" + phi_1d.id());
}

ConvexityCheck check_convexity(const ConvexFunction& phi, double tol) {
    auto line_ok = [&](const std::vector<double>& x, auto&& value, std::size_t n, bool& convex, bool& closed) {
        std::size_t runs = 0;
        bool in_run = false;
        for (std::size_t i = 0; i < n; ++i) {
            const bool fin = value(i).is_finite();
            if (fin && !in_run) ++runs;
            in_run = fin;
        }
        if (runs > 1) closed = false;
        for (std::size_t i = 1; i + 1 < n; ++i) {
            const ExtendedReal a = value(i - 1), b = value(i), c = value(i + 1);
            if (!(a.is_finite() && b.is_finite() && c.is_finite())) continue;
            const double w = (x[i] - x[i - 1]) / (x[i + 1] - x[i - 1]);
            const double chord = (1.0 - w) * a.value() + w * c.value();
            if (b.value() > chord + tol * (1.0 + std::abs(chord))) convex = false;
        }
    };
    ConvexityCheck out;
    const auto& r = phi.representation();
    if (auto* s = std::get_if<repr::Sampled1D>(&r)) {
        out.proper = std::any_of(s->f.begin(), s->f.end(), [](auto& v) { return v.is_finite(); });
        out.midpoint_convex = out.closed = true;
        line_ok(s->x, [&](std::size_t i) { return s->f[i]; }, s->x.size(), out.midpoint_convex, out.closed);
        return out;
    }
    if (auto* s = std::get_if<repr::Sampled2D>(&r)) {
        out.proper = std::any_of(s->f.begin(), s->f.end(), [](auto& v) { return v.is_finite(); });
        out.midpoint_convex = out.closed = true;
        for (std::size_t i = 0; i < s->x.size(); ++i)
            line_ok(s->y, [&](std::size_t j) { return s->at(i, j); }, s->y.size(), out.midpoint_convex, out.closed);
        for (std::size_t j = 0; j < s->y.size(); ++j)
            line_ok(s->x, [&](std::size_t i) { return s->at(i, j); }, s->x.size(), out.midpoint_convex, out.closed);
        return out;
    }
    if (auto* s = std::get_if<repr::LiftedToReal>(&r)) return check_convexity(*s->base, tol);
    if (auto* s = std::get_if<repr::RealCylinder>(&r)) return check_convexity(*s->base, tol);
    return {true, true, true};
}

}  // namespace berezin
