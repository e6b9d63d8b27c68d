#include "berezin/inequality.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

#include "berezin/error.hpp"

namespace berezin {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double max_entry(const Eigen::MatrixXcd& A) { return A.size() == 0 ? 0.0 : A.cwiseAbs().maxCoeff(); }

bool is_hermitian(const Eigen::MatrixXcd& A) { return max_entry(A - A.adjoint()) <= 1e-12 * (1.0 + max_entry(A)); }

double finite_value(const ExtendedReal& v, const char* what) {
    if (v.is_infinite()) throw DomainError(std::string(what) + ": phi = +inf");
    return v.value();
}

// z as an argument of phi: functions on R take the real part of a numerically real z.
Point argument_for(const ConvexFunction& phi, Point z) {
    if (phi.dimension() == 2) return z;
    if (std::abs(z.imag()) > 1e-9 * (1.0 + std::abs(z)))
        throw ShapeError("non-real point fed to a function on R (Im = " + std::to_string(z.imag()) + ")");
    return {z.real(), 0.0};
}

// Quantized real and imaginary parts of sigma, reused for every affine symbol l(sigma).
struct AffineParts {
    Eigen::MatrixXcd q_re;
    Eigen::MatrixXcd q_im;
};

AffineParts affine_parts(const SymbolGrid& sigma, const Quantization& q) {
    SymbolGrid re = sigma.map([](cplx v) { return cplx(v.real(), 0.0); }, "Re(" + sigma.id + ")");
    SymbolGrid im = sigma.map([](cplx v) { return cplx(v.imag(), 0.0); }, "Im(" + sigma.id + ")");
    AffineParts p;
    p.q_re = q(re);
    p.q_im = sigma.real ? Eigen::MatrixXcd::Zero(p.q_re.rows(), p.q_re.cols()) : q(im);
    return p;
}

// q(l(sigma)) for l(w) = <x*, w> - t* = Re x* Re w + Im x* Im w - t*, by linearity and q(1) = I.
Eigen::MatrixXcd quantized_affine(const AffineParts& p, const AffinePair& l) {
    const Eigen::Index n = p.q_re.rows();
    return l.x_star.real() * p.q_re + l.x_star.imag() * p.q_im - l.t_star * Eigen::MatrixXcd::Identity(n, n);
}

// D = q(Im(z* conj sigma)) = Im z* q(Re sigma) - Re z* q(Im sigma).
Eigen::MatrixXcd quantized_im_pairing(const AffineParts& p, Point z_star) {
    return z_star.imag() * p.q_re - z_star.real() * p.q_im;
}

double nu1_single(const AffineParts& parts, Point z_star, const Eigen::MatrixXcd& T) {
    const Eigen::MatrixXcd D = quantized_im_pairing(parts, z_star);
    const Eigen::MatrixXcd defect = D - D.adjoint();
    if (max_entry(defect) <= 1e-12 * (1.0 + max_entry(D))) return 0.0;
    return garding(cplx(0.0, 0.5) * defect, T).nu;
}

struct RemainderResult {
    double nu = 0.0;
    int skipped = 0;
    int subgradient = 0;
    std::vector<Point> z_star;
};

RemainderResult remainder_nu(const Eigen::MatrixXcd& Q_phi, const AffineParts& parts, const ConvexFunction& phi,
                             const Eigen::MatrixXcd& T, const std::vector<Point>& z_samples) {
    RemainderResult r;
    bool any = false;
    for (const Point& z : z_samples) {
        const auto tl = tangent_line(phi, argument_for(phi, z));
        if (!tl) {
            ++r.skipped;
            continue;
        }
        if (!tl->from_gradient) ++r.subgradient;
        any = true;
        r.z_star.push_back(tl->line.x_star);
        const Eigen::MatrixXcd S = Q_phi - quantized_affine(parts, tl->line);
        r.nu = std::max(r.nu, garding(S, T).nu);
    }
    if (!any) throw DomainError("tangent_remainder_nu: phi is +inf or has no supporting line at every sample");
    return r;
}

// Boundary points spread evenly along a closed polygon by arc length.
std::vector<Point> along_polygon(const std::vector<cplx>& poly, int count) {
    std::vector<Point> out;
    if (poly.empty() || count <= 0) return out;
    double perim = 0.0;
    for (std::size_t i = 0; i < poly.size(); ++i) perim += std::abs(poly[(i + 1) % poly.size()] - poly[i]);
    if (perim == 0.0) return {poly.front()};
    const double step = perim / count;
    double pos = 0.0;
    std::size_t edge = 0;
    double edge_start = 0.0;
    for (int c = 0; c < count; ++c) {
        pos = c * step;
        while (edge < poly.size()) {
            const double len = std::abs(poly[(edge + 1) % poly.size()] - poly[edge]);
            if (pos <= edge_start + len || edge + 1 == poly.size()) {
                const double t = len > 0.0 ? std::clamp((pos - edge_start) / len, 0.0, 1.0) : 0.0;
                out.push_back(poly[edge] + t * (poly[(edge + 1) % poly.size()] - poly[edge]));
                break;
            }
            edge_start += len;
            ++edge;
        }
    }
    return out;
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

Quantization tau_quantization(double tau) {
    return [tau](const SymbolGrid& s) { return quantize_tau(s, tau).entries; };
}

void InequalityReport::finalize() {
    slack = rhs - lhs;
    pass = slack >= -tolerance * (std::abs(rhs) + 1.0);
}

BerezinSum berezin_lhs(const SpectrumReport& spec, const ConvexFunction& phi) {
    BerezinSum s;
    for (const auto& c : spec.clusters) {
        Point z = c.center;
        if (phi.dimension() == 1) {
            if (std::abs(z.imag()) > spec.cluster_tol)
                throw ShapeError("berezin_lhs: non-real eigenvalue fed to a function on R");
            z = {z.real(), 0.0};
        }
        const ExtendedReal v = phi(z);
        if (v.is_infinite()) throw DomainError("berezin_lhs: phi(lambda) = +inf at an eigenvalue");
        const double term = c.multiplicity * v.value();
        s.total += term;
        if (v.value() > 0.0) s.positive += term;
        if (v.value() < 0.0) s.negative += term;
    }
    return s;
}

InequalityReport projected_berezin_check(const Eigen::MatrixXcd& B, const Eigen::MatrixXcd& P,
                                         const ConvexFunction& phi) {
    if (B.rows() != B.cols() || P.rows() != P.cols() || B.rows() != P.rows())
        throw ShapeError("projected_berezin_check: B and P must be square of equal size");
    if (max_entry(B - B.adjoint()) > 1e-10) throw PreconditionError("projected_berezin_check: B is not Hermitian");
    if (max_entry(P - P.adjoint()) > 1e-10 || max_entry(P * P - P) > 1e-10)
        throw PreconditionError("projected_berezin_check: P is not an orthogonal projection");
    if (phi.dimension() != 1) throw ShapeError("projected_berezin_check: phi must be a function on R");

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> pe(herm(P));
    std::vector<Eigen::Index> cols;
    for (Eigen::Index i = 0; i < P.rows(); ++i)
        if (pe.eigenvalues()(i) > 0.5) cols.push_back(i);
    Eigen::MatrixXcd V(P.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t c = 0; c < cols.size(); ++c) V.col(static_cast<Eigen::Index>(c)) = pe.eigenvectors().col(cols[c]);

    auto f = [&](double t) { return finite_value(phi(t), "projected_berezin_check"); };
    InequalityReport r;
    r.provenance.phi_id = phi.id();
    r.provenance.N = static_cast<int>(B.rows());
    r.provenance.t_spec = "0";
    r.tolerance = 1e-9;
    if (!cols.empty()) {
        const Eigen::MatrixXcd C = herm(V.adjoint() * B * V);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> ce(C, Eigen::EigenvaluesOnly);
        for (Eigen::Index i = 0; i < C.rows(); ++i) r.lhs += f(ce.eigenvalues()(i));
        r.rhs = (V.adjoint() * hermitian_function(B, f) * V).trace().real();
    }
    r.finalize();
    return r;
}

std::optional<TangentLine> tangent_line(const ConvexFunction& phi, Point z) {
    const ExtendedReal v = phi(z);
    if (v.is_infinite()) return std::nullopt;
    try {
        const Point g = gradient(phi, z);
        return TangentLine{AffinePair{pairing(g, z) - v.value(), g}, true};
    } catch (const NotDifferentiableError&) {
    } catch (const DomainError&) {
    }
    try {
        if (auto w = eps_subdifferential_witness(phi, z, 0.0)) return TangentLine{*w, false};
    } catch (const PreconditionError&) {
    }
    return std::nullopt;
}

double nu1_bound(const SymbolGrid& sigma, const Quantization& q, const std::vector<Point>& z_star,
                 const Eigen::MatrixXcd& T) {
    if (sigma.real && z_star.empty()) return 0.0;
    const AffineParts parts = affine_parts(sigma, q);
    double nu = 0.0;
    for (const Point& zs : z_star) nu = std::max(nu, nu1_single(parts, zs, T));
    return nu;
}

double nu1_bound(const SymbolGrid& sigma, double tau, const std::vector<Point>& z_star, const Eigen::MatrixXcd& T) {
    return nu1_bound(sigma, tau_quantization(tau), z_star, T);
}

double tangent_remainder_nu(const SymbolGrid& sigma, const ConvexFunction& phi, const Quantization& q,
                            const Eigen::MatrixXcd& T, const std::vector<Point>& z_samples, Provenance* prov) {
    const Eigen::MatrixXcd Q_phi = q(apply_convex_to_symbol(sigma, phi));
    const auto r = remainder_nu(Q_phi, affine_parts(sigma, q), phi, T, z_samples);
    if (prov) {
        prov->skipped_samples += r.skipped;
        prov->subgradient_samples += r.subgradient;
    }
    return r.nu;
}

double tangent_remainder_nu(const SymbolGrid& sigma, const ConvexFunction& phi, double tau, const Eigen::MatrixXcd& T,
                            const std::vector<Point>& z_samples, Provenance* prov) {
    return tangent_remainder_nu(sigma, phi, tau_quantization(tau), T, z_samples, prov);
}

InequalityReport eq3_pointwise_check(const Eigen::MatrixXcd& Q_sigma, const Eigen::MatrixXcd& Q_phi_sigma,
                                     const ConvexFunction& phi, const Eigen::MatrixXcd& T, const Eigen::VectorXcd& u,
                                     double nu1, double nu2) {
    if (std::abs(u.norm() - 1.0) > 1e-12) throw PreconditionError("eq3_pointwise_check: u must be a unit vector");
    InequalityReport r;
    const cplx z = u.dot(Q_sigma * u);
    const ExtendedReal v = phi(argument_for(phi, z));
    r.lhs = v.is_infinite() ? HUGE_VAL : v.value();
    r.trace_T = u.dot(T * u).real();
    r.nu1 = r.nu1_raw = nu1;
    r.nu2 = r.nu2_raw = nu2;
    r.rhs = u.dot(Q_phi_sigma * u).real() + (nu1 + nu2) * r.trace_T;
    r.provenance.phi_id = phi.id();
    r.provenance.N = static_cast<int>(u.size());
    r.finalize();
    return r;
}

InequalityReport eq3_pointwise_check(const SymbolGrid& sigma, const ConvexFunction& phi, double tau,
                                     const Eigen::MatrixXcd& T, const Eigen::VectorXcd& u) {
    const Quantization q = tau_quantization(tau);
    const Eigen::MatrixXcd Qs = q(sigma);
    const Eigen::MatrixXcd Qp = q(apply_convex_to_symbol(sigma, phi));
    const Point z = argument_for(phi, u.dot(Qs * u) / u.squaredNorm());
    const auto parts = affine_parts(sigma, q);
    const auto rem = remainder_nu(Qp, parts, phi, T, {z});
    const double nu1 = rem.z_star.empty() ? 0.0 : nu1_single(parts, rem.z_star.front(), T);
    auto r = eq3_pointwise_check(Qs, Qp, phi, T, u, nu1, rem.nu);
    r.provenance.symbol_id = sigma.id;
    r.provenance.tau = tau;
    r.provenance.h = sigma.grid.h;
    return r;
}

std::vector<Point> range_samples(const Eigen::MatrixXcd& Q, const Theorem7Options& opt, std::string* density) {
    std::vector<Point> pts;
    if (is_hermitian(Q)) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(herm(Q), Eigen::EigenvaluesOnly);
        const double lo = es.eigenvalues()(0), hi = es.eigenvalues()(Q.rows() - 1);
        const int n = std::max(2, opt.segment_samples);
        for (int i = 0; i < n; ++i) pts.emplace_back(lo + (hi - lo) * i / (n - 1), 0.0);
        if (density) *density = "segment:" + std::to_string(n);
        return pts;
    }
    const RangeHull hull = numerical_range_hull(Q, opt.n_angles);
    pts = hull.outer;
    for (auto p : along_polygon(hull.outer, opt.boundary_samples)) pts.push_back(p);
    double x0 = HUGE_VAL, x1 = -HUGE_VAL, y0 = HUGE_VAL, y1 = -HUGE_VAL;
    for (auto p : hull.outer) {
        x0 = std::min(x0, p.real());
        x1 = std::max(x1, p.real());
        y0 = std::min(y0, p.imag());
        y1 = std::max(y1, p.imag());
    }
    const int g = opt.interior_grid;
    for (int i = 0; i < g; ++i)
        for (int j = 0; j < g; ++j) {
            const Point z(x0 + (x1 - x0) * (i + 0.5) / g, y0 + (y1 - y0) * (j + 0.5) / g);
            if (hull.contains(z, 0.0)) pts.push_back(z);
        }
    if (density)
        *density = "outer:" + std::to_string(hull.outer.size()) + "+boundary:" + std::to_string(opt.boundary_samples) +
                   "+interior:" + std::to_string(g) + "x" + std::to_string(g);
    return pts;
}

Theorem7Result theorem7_check(const SymbolGrid& sigma, const ConvexFunction& phi, const Quantization& q,
                              const Eigen::MatrixXcd& T, const Theorem7Options& opt, double tau_label) {
    Theorem7Result out;
    const Eigen::MatrixXcd Qs = q(sigma);
    if (T.rows() != Qs.rows() || T.cols() != Qs.cols()) throw ShapeError("theorem7_check: T has the wrong size");
    out.hermitian = is_hermitian(Qs);
    if (phi.dimension() == 1 && !out.hermitian)
        throw ShapeError("theorem7_check: a function on R needs a symmetric quantization; lift it to C instead");

    const SpectrumReport spec = spectrum(Qs, opt.cluster_tol);
    const SymbolGrid phs = apply_convex_to_symbol(sigma, phi);
    const Eigen::MatrixXcd Qp = q(phs);

    InequalityReport& r = out.report;
    r.tolerance = opt.tolerance;
    r.provenance = {sigma.id, phi.id(), tau_label, sigma.grid.h, static_cast<int>(Qs.rows()), opt.t_spec, "",
                    spec.cluster_tol, 0, 0};
    r.phi_nonnegative = phs.values.real().minCoeff() >= 0.0;
    r.lhs = berezin_lhs(spec, phi).total;

    // Every cluster selected: the basis spans the whole space, columns carry the diagonal of a Schur form.
    std::vector<int> all(spec.clusters.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
    const InvariantBasis ib = schur_invariant_basis(Qs, spec, all);

    std::vector<Point> z = range_samples(Qs, opt, &r.provenance.z_density);
    for (Eigen::Index j = 0; j < ib.basis.cols(); ++j) z.push_back(argument_for(phi, ib.basis.col(j).dot(Qs * ib.basis.col(j))));
    r.provenance.z_density += "+columns:" + std::to_string(ib.basis.cols());

    const AffineParts parts = affine_parts(sigma, q);
    const RemainderResult rem = remainder_nu(Qp, parts, phi, T, z);
    r.provenance.skipped_samples = rem.skipped;
    r.provenance.subgradient_samples = rem.subgradient;
    r.nu2_raw = rem.nu;
    r.nu1_raw = 0.0;
    for (const Point& zs : rem.z_star) r.nu1_raw = std::max(r.nu1_raw, nu1_single(parts, zs, T));
    r.nu1 = opt.safety * r.nu1_raw;
    r.nu2 = opt.safety * r.nu2_raw;
    r.trace_T = T.trace().real();
    r.rhs = Qp.trace().real() + (r.nu1 + r.nu2) * r.trace_T;
    r.complete_eigenvectors = true;
    r.finalize();

    for (Eigen::Index j = 0; j < ib.basis.cols(); ++j) {
        auto c = eq3_pointwise_check(Qs, Qp, phi, T, ib.basis.col(j), r.nu1, r.nu2);
        c.tolerance = opt.tolerance;
        c.provenance = r.provenance;
        c.finalize();
        out.columns.push_back(c);
    }

    out.spectral_mapping_lhs = kNaN;
    if (out.hermitian) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(herm(Qs), Eigen::EigenvaluesOnly);
        double s = 0.0;
        for (Eigen::Index i = 0; i < Qs.rows(); ++i)
            s += finite_value(phi(Point{es.eigenvalues()(i), 0.0}), "theorem7_check");
        out.spectral_mapping_lhs = s;
    }
    return out;
}

Theorem7Result theorem7_check(const SymbolGrid& sigma, const ConvexFunction& phi, double tau,
                              const Eigen::MatrixXcd& T, const Theorem7Options& opt) {
    return theorem7_check(sigma, phi, tau_quantization(tau), T, opt, tau);
}

// ---------------------------------------------------------------------------------------------

double SweepRow::get(const std::string& name) const {
    if (name == "sweep_value") return sweep_value;
    if (name == "lhs") return lhs;
    if (name == "rhs") return rhs;
    if (name == "slack") return slack;
    if (name == "nu1") return nu1;
    if (name == "nu2") return nu2;
    if (name == "trace_T") return trace_T;
    for (const auto& [k, v] : aux)
        if (k == name) return v;
    throw PreconditionError("sweep row has no column '" + name + "'");
}

std::pair<double, double> fit_exponent(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) return {kNaN, kNaN};
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0)) return {kNaN, kNaN};
        lx.push_back(std::log(x[i]));
        ly.push_back(std::log(y[i]));
    }
    const double n = static_cast<double>(lx.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        mx += lx[i] / n;
        my += ly[i] / n;
    }
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
    }
    if (sxx == 0.0) return {kNaN, kNaN};
    const double slope = sxy / sxx;
    double ss = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        const double e = ly[i] - (my + slope * (lx[i] - mx));
        ss += e * e;
    }
    return {slope, std::sqrt(ss / n)};
}

void SweepTable::finish() {
    fitted_exponent = fit_residual = kNaN;
    if (!fit_column.empty() && !rows.empty()) {
        std::vector<double> y;
        for (const auto& r : rows) y.push_back(std::abs(r.get(fit_column)));
        std::tie(fitted_exponent, fit_residual) = fit_exponent(column("sweep_value"), y);
    }
}

std::vector<double> SweepTable::column(const std::string& name) const {
    std::vector<double> v;
    for (const auto& r : rows) v.push_back(r.get(name));
    return v;
}

std::string SweepTable::to_csv() const {
    std::string s = "sweep_value,lhs,rhs,slack,nu1,nu2,trace_T";
    if (!rows.empty())
        for (const auto& [k, v] : rows.front().aux) s += ",aux_" + k;
    s += "\n";
    for (const auto& r : rows) {
        s += fmt(r.sweep_value) + "," + fmt(r.lhs) + "," + fmt(r.rhs) + "," + fmt(r.slack) + "," + fmt(r.nu1) + "," +
             fmt(r.nu2) + "," + fmt(r.trace_T);
        for (const auto& [k, v] : r.aux) s += "," + fmt(v);
        s += "\n";
    }
    return s;
}

bool strictly_decreasing(const std::vector<double>& v) {
    for (std::size_t i = 1; i < v.size(); ++i)
        if (!(v[i] < v[i - 1])) return false;
    return true;
}

bool bounded_by_first(const std::vector<double>& v, double factor) {
    if (v.empty()) return true;
    const double bound = factor * std::abs(v.front());
    for (double x : v)
        if (!(std::abs(x) <= bound)) return false;
    return true;
}

void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& f) {
    const std::size_t w = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, workers)));
    if (w <= 1) {
        for (std::size_t i = 0; i < n; ++i) f(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(n);
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < w; ++t)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    f(i);
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            }
        });
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace berezin
