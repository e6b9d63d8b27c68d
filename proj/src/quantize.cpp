#include "berezin/quantize.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "berezin/error.hpp"
#include "text.hpp"

namespace berezin {

namespace {

constexpr double kPi = std::numbers::pi;

// Signed distance on the circle, in [-L/2, L/2).
double wrap(double d, double L) {
    d = std::fmod(d + 0.5 * L, L);
    if (d < 0) d += L;
    return d - 0.5 * L;
}

using detail::parse_scalar;
using detail::parse_scalars;

bool real_valued(const Eigen::MatrixXcd& v) { return v.imag().cwiseAbs().maxCoeff() <= 1e-14; }

std::string num(double v) {
    std::ostringstream os;
    os.precision(10);
    os << v;
    return os.str();
}

}  // namespace

PhaseGrid::PhaseGrid(int n, double h_, double l) : N(n), L(l), h(h_) {
    if (N <= 0 || N % 2 != 0) throw PreconditionError("PhaseGrid: N must be a positive even integer");
    if (!(h > 0.0)) throw PreconditionError("PhaseGrid: h must be > 0");
    if (!(L > 0.0)) throw PreconditionError("PhaseGrid: L must be > 0");
}

std::string PhaseGrid::id() const { return "N=" + std::to_string(N) + ",L=" + num(L) + ",h=" + num(h); }

SymbolGrid SymbolGrid::from_function(const PhaseGrid& g, const std::function<cplx(double, double)>& f,
                                     std::string id) {
    SymbolGrid s;
    s.grid = g;
    s.values.resize(2 * g.N, g.N);
    for (int p = 0; p < 2 * g.N; ++p)
        for (int kk = 0; kk < g.N; ++kk) {
            const cplx v = f(g.half_x(p), g.xi(kk));
            if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
                throw DomainError("symbol '" + id + "' is not finite at a grid node");
            s.values(p, kk) = v;
        }
    s.real = real_valued(s.values);
    s.id = std::move(id);
    return s;
}

SymbolGrid SymbolGrid::constant(const PhaseGrid& g, cplx c) {
    SymbolGrid s;
    s.grid = g;
    s.values = Eigen::MatrixXcd::Constant(2 * g.N, g.N, c);
    s.real = c.imag() == 0.0;
    s.id = c.imag() == 0.0 ? "const:" + num(c.real()) : "const:" + num(c.real()) + "," + num(c.imag());
    return s;
}

SymbolGrid SymbolGrid::conj() const {
    SymbolGrid s = *this;
    s.values = values.conjugate();
    s.id = "conj(" + id + ")";
    return s;
}

SymbolGrid SymbolGrid::operator+(const SymbolGrid& o) const {
    if (o.grid.N != grid.N) throw ShapeError("symbol sum: grids differ");
    SymbolGrid s = *this;
    s.values += o.values;
    s.real = real_valued(s.values);
    s.id = id + "+" + o.id;
    return s;
}

SymbolGrid SymbolGrid::operator*(cplx c) const {
    SymbolGrid s = *this;
    s.values *= c;
    s.real = real_valued(s.values);
    s.id = "(" + id + ")*" + num(c.real()) + (c.imag() != 0.0 ? "," + num(c.imag()) : "");
    return s;
}

SymbolGrid SymbolGrid::complement() const {
    SymbolGrid s = *this;
    s.values = Eigen::MatrixXcd::Ones(values.rows(), values.cols()) - values;
    s.id = "1-" + id;
    return s;
}

SymbolGrid SymbolGrid::map(const std::function<cplx(cplx)>& f, std::string new_id) const {
    SymbolGrid s = *this;
    s.values = values.unaryExpr(f);
    s.real = real_valued(s.values);
    s.id = std::move(new_id);
    return s;
}

OperatorMatrix quantize_tau(const SymbolGrid& sigma, double tau) {
    const int mode = tau == 0.0 ? 0 : tau == 0.5 ? 1 : tau == 1.0 ? 2 : -1;
    if (mode < 0) throw UnsupportedTauError("quantize_tau: tau must be 0, 1/2 or 1 (got " + num(tau) + ")");
    const int N = sigma.grid.N;
    if (sigma.values.rows() != 2 * N || sigma.values.cols() != N) throw ShapeError("quantize_tau: symbol shape mismatch");

#ifdef BEREZIN_FAULT_QUANTIZER
    const double norm = 1.0 / (N + 1);
#else
    const double norm = 1.0 / N;
#endif
    // phase(d, kk) = exp(2 pi i d k / N) / N
    Eigen::MatrixXcd phase(N, N);
    for (int d = 0; d < N; ++d)
        for (int kk = 0; kk < N; ++kk) {
            const long k = kk - N / 2;
            const long r = ((static_cast<long>(d) * k) % N + N) % N;
            const double a = 2.0 * kPi * static_cast<double>(r) / N;
            phase(d, kk) = cplx(std::cos(a), std::sin(a)) * norm;
        }
    // S(p, d) = sum_kk sigma(p, kk) phase(d, kk): kernel row for evaluation point p and offset d.
    const Eigen::MatrixXcd S = sigma.values * phase.transpose();

    OperatorMatrix out;
    out.entries.resize(N, N);
    for (int j = 0; j < N; ++j)
        for (int m = 0; m < N; ++m) {
            int p;
            if (mode == 2) {
                p = 2 * j;
            } else if (mode == 0) {
                p = 2 * m;
            } else {
                p = j + m;
                if (std::abs(j - m) > N / 2) p += N;
                p %= 2 * N;
            }
            out.entries(j, m) = S(p, ((j - m) % N + N) % N);
        }
    out.meta = {tau, sigma.grid.h, sigma.id, sigma.grid.id()};
    return out;
}

double adjoint_defect(const SymbolGrid& sigma, double tau) {
    const auto a = quantize_tau(sigma, tau);
    const auto b = quantize_tau(sigma.conj(), 1.0 - tau);
    return (a.entries.adjoint() - b.entries).cwiseAbs().maxCoeff();
}

SymbolGrid apply_convex_to_symbol(const SymbolGrid& sigma, const ConvexFunction& phi) {
    if (phi.dimension() == 1 && !sigma.real)
        throw ShapeError("apply_convex_to_symbol: a function on R needs a real symbol (" + sigma.id + ")");
    return sigma.map(
        [&](cplx v) {
            const Point z = phi.dimension() == 1 ? Point{v.real(), 0.0} : v;
            const ExtendedReal r = phi(z);
            if (r.is_infinite())
                throw DomainError("apply_convex_to_symbol: " + phi.id() + " is +inf on the range of " + sigma.id);
            return cplx(r.value(), 0.0);
        },
        phi.id() + "(" + sigma.id + ")");
}

RegionSpec RegionSpec::parse(std::string_view text) {
    RegionSpec r;
    text = detail::trim(text);
    if (text == "empty" || text.empty()) return r;
    if (text == "full") {
        r.full = true;
        return r;
    }
    for (auto& part : detail::split(text, '|')) {
        if (part == "rough") {
            r.rough = true;
            continue;
        }
        const auto v = parse_scalars(part);
        if (v.size() != 4) throw ConfigError("region rectangle needs x_lo,x_hi,xi_lo,xi_hi (got '" + part + "')");
        if (!(v[0] <= v[1]) || !(v[2] <= v[3])) throw ConfigError("region rectangle with lo > hi: '" + part + "'");
        r.rects.push_back({v[0], v[1], v[2], v[3]});
    }
    return r;
}

std::string RegionSpec::id() const {
    if (full) return "full";
    std::string s;
    for (const auto& q : rects) {
        if (!s.empty()) s += "|";
        s += num(q.x_lo) + "," + num(q.x_hi) + "," + num(q.xi_lo) + "," + num(q.xi_hi);
    }
    if (rough) s += s.empty() ? "rough" : "|rough";
    return s.empty() ? "empty" : s;
}

SymbolGrid indicator_symbol(const PhaseGrid& grid, const RegionSpec& region) {
    std::vector<Rect> rects = region.rects;
    if (region.rough) {
        // Unit square [L/4, 3L/4) x [-1, 1) with a staircase of dyadic steps on its right edge.
        const double x0 = 0.25 * grid.L, x1 = 0.75 * grid.L;
        rects.push_back({x0, x1, -1.0, 1.0});
        for (int k = 1; k <= 10; ++k) {
            const double w = 0.25 * grid.L * std::ldexp(1.0, -k);
            const double top = 1.0 - std::ldexp(1.0, -(k - 1));
            const double bot = 1.0 - std::ldexp(1.0, -k);
            rects.push_back({x1, x1 + w, top, bot});
            rects.push_back({x1, x1 + w, -bot, -top});
        }
    }
    const double tx = 1e-9 * grid.L / (2.0 * grid.N), txi = 1e-9 * grid.dxi();
    const double band_lo = grid.xi(0) - 0.5 * grid.dxi(), band_hi = grid.xi(grid.N - 1) + 0.5 * grid.dxi();
    bool clipped = false;
    for (const auto& q : rects)
        if (q.xi_lo < band_lo || q.xi_hi > band_hi || q.x_lo < 0.0 || q.x_hi > grid.L) clipped = true;

    auto inside = [&](double x, double xi) {
        if (region.full) return true;
        for (const auto& q : rects)
            if (x >= q.x_lo - tx && x < q.x_hi - tx && xi >= q.xi_lo - txi && xi < q.xi_hi - txi) return true;
        return false;
    };
    auto s = SymbolGrid::from_function(grid, [&](double x, double xi) { return cplx(inside(x, xi) ? 1.0 : 0.0, 0.0); },
                                       "indicator:" + region.id());
    s.clipped = clipped && !region.full;
    return s;
}

SymbolGrid symbol_from_id(const PhaseGrid& grid, std::string_view id) {
    const auto colon = id.find(':');
    const std::string_view head = id.substr(0, colon);
    const std::string_view args = colon == std::string_view::npos ? std::string_view{} : id.substr(colon + 1);
    const std::string sid(id);
    const double L = grid.L;
    auto nums = [&](std::size_t lo, std::size_t hi) {
        auto v = parse_scalars(args);
        if (v.size() < lo || v.size() > hi) throw ConfigError("symbol '" + sid + "': wrong number of parameters");
        return v;
    };
    if (head == "one") return SymbolGrid::constant(grid, 1.0);
    if (head == "const") {
        const auto v = nums(1, 2);
        return SymbolGrid::constant(grid, cplx(v[0], v.size() > 1 ? v[1] : 0.0));
    }
    if (head == "coord") {
        if (args == "x") return SymbolGrid::from_function(grid, [](double x, double) { return cplx(x, 0.0); }, sid);
        if (args == "xi") return SymbolGrid::from_function(grid, [](double, double xi) { return cplx(xi, 0.0); }, sid);
        throw ConfigError("symbol '" + sid + "': coord must be x or xi");
    }
    if (head == "cosx")
        return SymbolGrid::from_function(grid, [L](double x, double) { return cplx(std::cos(2 * kPi * x / L), 0.0); }, sid);
    if (head == "cos") {
        const auto v = nums(2, 2);
        return SymbolGrid::from_function(
            grid, [v, L](double x, double) { return cplx(v[0] + v[1] * std::cos(2 * kPi * x / L), 0.0); }, sid);
    }
    if (head == "expix")
        return SymbolGrid::from_function(grid, [L](double x, double) { return std::polar(1.0, 2 * kPi * x / L); }, sid);
    if (head == "gauss") {
        const auto v = nums(3, 3);
        return SymbolGrid::from_function(
            grid,
            [v, L](double x, double xi) {
                const double dx = wrap(x - v[0], L), dxi = xi - v[1];
                return cplx(std::exp(-(dx * dx + dxi * dxi) / (2.0 * v[2] * v[2])), 0.0);
            },
            sid);
    }
    if (head == "bump") {
        // exp(1 - 1/(1 - r^2)) for r < 1: smooth, compactly supported, peak value 1.
        const auto v = nums(3, 4);
        const double rx = v[2], rxi = v.size() > 3 ? v[3] : v[2];
        return SymbolGrid::from_function(
            grid,
            [v, rx, rxi, L](double x, double xi) {
                const double a = wrap(x - v[0], L) / rx, b = (xi - v[1]) / rxi;
                const double r2 = a * a + b * b;
                return cplx(r2 < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - r2)) : 0.0, 0.0);
            },
            sid);
    }
    if (head == "indicator") return indicator_symbol(grid, RegionSpec::parse(args));
    throw ConfigError("unknown symbol preset '" + sid + "'");
}

void save_symbol_csv(const SymbolGrid& sigma, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write symbol file '" + path + "'");
    out << "p,k,re,im\n";
    char buf[128];
    for (int p = 0; p < 2 * sigma.grid.N; ++p)
        for (int kk = 0; kk < sigma.grid.N; ++kk) {
            const cplx v = sigma.values(p, kk);
            std::snprintf(buf, sizeof buf, "%d,%d,%.17g,%.17g\n", p, sigma.grid.k(kk), v.real(), v.imag());
            out << buf;
        }
}

SymbolGrid load_symbol_csv(const std::string& path, const PhaseGrid& grid) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open symbol file '" + path + "'");
    SymbolGrid s;
    s.grid = grid;
    s.values = Eigen::MatrixXcd::Zero(2 * grid.N, grid.N);
    Eigen::MatrixXi seen = Eigen::MatrixXi::Zero(2 * grid.N, grid.N);
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (detail::trim(line).empty() || line[0] == '#') continue;
        const auto t = detail::split(line, ',');
        double probe;
        if (first && (t.empty() || !detail::try_parse_double(t[0], probe))) {
            first = false;
            continue;
        }
        first = false;
        if (t.size() != 3 && t.size() != 4) throw ConfigError("symbol file '" + path + "': expected p,k,re[,im]");
        const long p = detail::parse_int(t[0]), k = detail::parse_int(t[1]);
        if (p < 0 || p >= 2 * grid.N || k < -grid.N / 2 || k >= grid.N / 2)
            throw ConfigError("symbol file '" + path + "': node (" + t[0] + "," + t[1] + ") outside the grid");
        const cplx v(detail::parse_double(t[2]), t.size() == 4 ? detail::parse_double(t[3]) : 0.0);
        s.values(p, k + grid.N / 2) = v;
        seen(p, k + grid.N / 2) = 1;
    }
    if (seen.minCoeff() == 0)
        throw ConfigError("symbol file '" + path + "' does not cover every node of the " + grid.id() + " doubled lattice");
    s.real = real_valued(s.values);
    s.id = path;
    return s;
}

}  // namespace berezin
