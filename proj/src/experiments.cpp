#include <algorithm>
#include <cmath>
#include <numbers>

#include "berezin/error.hpp"
#include "berezin/inequality.hpp"

namespace berezin {

namespace {

constexpr double kPi = std::numbers::pi;

double max_entry(const Eigen::MatrixXcd& A) { return A.size() == 0 ? 0.0 : A.cwiseAbs().maxCoeff(); }

Eigen::MatrixXcd abs_hermitian(const Eigen::MatrixXcd& H) {
    return hermitian_function(H, [](double t) { return std::abs(t); });
}

// Integral over [-mu, mu] of the piecewise-linear interpolant of f on the integer nodes.
double integrate_pl(const std::function<double(int)>& f, double mu) {
    if (mu <= 0.0) return 0.0;
    const int m = static_cast<int>(std::floor(mu));
    auto interp = [&](double t) {
        const int a = static_cast<int>(std::floor(t));
        const double w = t - a;
        return w == 0.0 ? f(a) : (1.0 - w) * f(a) + w * f(a + 1);
    };
    double s = 0.0;
    for (int k = -m; k < m; ++k) s += 0.5 * (f(k) + f(k + 1));
    const double rest = mu - m;
    if (rest > 0.0) {
        s += 0.5 * rest * (f(m) + interp(mu));
        s += 0.5 * rest * (f(-m) + interp(-mu));
    }
    return s;
}

}  // namespace

SweepTable example10_experiment(const RegionSpec& region, const ConvexFunction& phi, const std::vector<double>& h_values,
                                const Example10Options& opt) {
    if (phi.dimension() != 2) throw PreconditionError("example10: phi must be a function on C (Q1(sigma) is not normal)");
    const ExtendedReal f0 = phi(Point{0.0, 0.0});
    if (f0.is_infinite() || f0.value() != 0.0) throw PreconditionError("example10: phi must vanish at the origin");
    const ExtendedReal f1x = phi(Point{1.0, 0.0});
    if (f1x.is_infinite()) throw PreconditionError("example10: phi(1) must be finite");
    const double f1 = f1x.value();

    SweepTable table;
    table.name = "example10";
    table.fit_column = "R_trace_norm";
    table.rows.resize(h_values.size());
    parallel_for(h_values.size(), opt.workers, [&](std::size_t idx) {
        const double h = h_values[idx];
        const PhaseGrid g(opt.N, h, opt.L);
        const SymbolGrid sigma = indicator_symbol(g, region);
        const SymbolGrid comp = sigma.complement();
        const Eigen::MatrixXcd Q1 = quantize_tau(sigma, 1.0).entries;
        const Eigen::MatrixXcd Q0 = quantize_tau(sigma, 0.0).entries;
        const Eigen::MatrixXcd Q1c = quantize_tau(comp, 1.0).entries;
        const Eigen::MatrixXcd Q0c = quantize_tau(comp, 0.0).entries;
        const Eigen::MatrixXcd R = Q1 * Q0c;
        const double res1 = max_entry(Q1 - Q1 * Q0 - R);
        const double res2 = max_entry(Q1c - Q1c * Q0c - R.adjoint());

        const auto spec = spectrum(Q1);
        const double lhs = berezin_lhs(spec, phi).total;

        // Cells of the tau = 1 evaluation lattice (x_j, xi_k) inside the region.
        int count = 0;
        for (int j = 0; j < g.N; ++j)
            for (int kk = 0; kk < g.N; ++kk)
                if (sigma.values(2 * j, kk).real() > 0.5) ++count;
        const double volume = count * (g.L / g.N) * g.dxi();
        const double phase_term = f1 * volume / (2.0 * kPi * h);

        // Suprema of |g|, |Im g| and |phi(1) - Re g| over the outer polygon of the numerical range.
        const RangeHull hull = numerical_range_hull(Q1, 64);
        std::vector<Point> pts = hull.outer;
        double x0 = HUGE_VAL, x1 = -HUGE_VAL, y0 = HUGE_VAL, y1 = -HUGE_VAL;
        for (auto p : hull.outer) {
            x0 = std::min(x0, p.real());
            x1 = std::max(x1, p.real());
            y0 = std::min(y0, p.imag());
            y1 = std::max(y1, p.imag());
        }
        for (int i = 0; i < opt.z_grid; ++i)
            for (int j = 0; j < opt.z_grid; ++j) {
                const Point z(x0 + (x1 - x0) * (i + 0.5) / opt.z_grid, y0 + (y1 - y0) * (j + 0.5) / opt.z_grid);
                if (hull.contains(z, 0.0)) pts.push_back(z);
            }
        double sup_g = 0.0, sup_im = 0.0, sup_re = 0.0;
        for (const Point& z : pts) {
            const Point gz = gradient(phi, z);
            sup_g = std::max(sup_g, std::abs(gz));
            sup_im = std::max(sup_im, std::abs(gz.imag()));
            sup_re = std::max(sup_re, std::abs(f1 - gz.real()));
        }

        const double r_norm = trace_norm(R);
        const Eigen::MatrixXcd ReR = 0.5 * (R + R.adjoint());
        const Eigen::MatrixXcd ImR = cplx(0.0, -0.5) * (R - R.adjoint());
        const Eigen::MatrixXcd T =
            abs_hermitian(ReR) + abs_hermitian(ImR) + 1e-10 * Eigen::MatrixXcd::Identity(g.N, g.N);
        const double trace_T = T.trace().real();
        const double certified = f1 * Q1.trace().real() + (sup_im + sup_re) * trace_T;
        const double display = phase_term + 4.0 * (f1 + sup_g) * r_norm;

        SweepRow row;
        row.sweep_value = h;
        row.lhs = lhs;
        row.rhs = display;
        row.slack = display - lhs;
        row.nu1 = sup_im;
        row.nu2 = sup_re;
        row.trace_T = trace_T;
        row.aux = {{"identity_residual", res1},
                   {"identity_residual_adjoint", res2},
                   {"R_trace_norm", r_norm},
                   {"h_R_trace_norm", h * r_norm},
                   {"phase_volume", volume},
                   {"phase_term", phase_term},
                   {"sup_grad", sup_g},
                   {"certified_rhs", certified},
                   {"certified_slack", certified - lhs},
                   {"certified_tighter", certified < display ? 1.0 : 0.0},
                   {"clipped", sigma.clipped ? 1.0 : 0.0}};
        table.rows[idx] = std::move(row);
    });
    table.finish();
    return table;
}

SweepTable example8_experiment(const std::string& b_symbol, const ConvexFunction& phi, const std::vector<double>& mu_values,
                               const Example8Options& opt) {
    if (phi.dimension() != 1) throw PreconditionError("example8: phi must be a function on R");
    const int N = 2 * opt.K;
    const PhaseGrid g(N, 1.0, 2.0 * kPi);
    const SymbolGrid b = symbol_from_id(g, b_symbol);
    if (!b.real) throw PreconditionError("example8: the symbol b must be real");
    const Eigen::MatrixXcd B = quantize_tau(b, 0.5).entries;
    const SymbolGrid phb = apply_convex_to_symbol(b, phi);

    auto sigma_a = [](int k) { return k == 0 ? 1.0 : std::abs(static_cast<double>(k)); };
    // Fourier modes e_k(x_j) = exp(i k x_j) / sqrt(N), column kk for k = kk - N/2.
    Eigen::MatrixXcd F(N, N);
    for (int j = 0; j < N; ++j)
        for (int kk = 0; kk < N; ++kk) F(j, kk) = std::polar(1.0 / std::sqrt(N), g.k(kk) * g.x(j));

    // x-averages of b and phi(b) along momentum column k.
    auto column_mean = [&](const SymbolGrid& s, int k) {
        double acc = 0.0;
        for (int j = 0; j < N; ++j) acc += s.values(2 * j, k + N / 2).real();
        return acc / N;
    };

    for (double mu : mu_values)
        if (mu > opt.K - 1) throw TruncationError("example8: mu exceeds the truncation band |k| < K");

    SweepTable table;
    table.name = "example8";
    table.fit_column = "phi_remainder";
    table.rows.resize(mu_values.size());
    parallel_for(mu_values.size(), opt.workers, [&](std::size_t idx) {
        const double mu = mu_values[idx];
        std::vector<int> modes;
        for (int kk = 0; kk < N; ++kk)
            if (sigma_a(g.k(kk)) < mu) modes.push_back(kk);
        const Eigen::Index r = static_cast<Eigen::Index>(modes.size());
        Eigen::MatrixXcd FS(N, r);
        Eigen::MatrixXcd T = Eigen::MatrixXcd::Zero(r, r);
        for (Eigen::Index c = 0; c < r; ++c) {
            FS.col(c) = F.col(modes[c]);
            T(c, c) = 1.0 / sigma_a(g.k(modes[c]));
        }
        const double integral_phi = integrate_pl([&](int k) { return column_mean(phb, k); }, mu);
        const double integral_b = integrate_pl([&](int k) { return column_mean(b, k); }, mu);

        SweepRow row;
        row.sweep_value = mu;
        row.rhs = integral_phi;
        double trace_b = 0.0, certified = 0.0, certified_slack = 0.0;
        if (r > 0) {
            const Quantization q = [&FS](const SymbolGrid& s) -> Eigen::MatrixXcd {
                return FS.adjoint() * quantize_tau(s, 0.5).entries * FS;
            };
            const Eigen::MatrixXcd C = FS.adjoint() * B * FS;
            trace_b = C.trace().real();
            Theorem7Options t7;
            t7.t_spec = "Pi A^-1 Pi";
            const auto res = theorem7_check(b, phi, q, T, t7, 0.5);
            row.lhs = res.report.lhs;
            row.nu1 = res.report.nu1;
            row.nu2 = res.report.nu2;
            row.trace_T = res.report.trace_T;
            certified = res.report.rhs;
            certified_slack = res.report.slack;
        }
        row.slack = row.rhs - row.lhs;
        row.aux = {{"rank", static_cast<double>(r)},
                   {"trace_B_Pi", trace_b},
                   {"integral_b", integral_b},
                   {"eq7_remainder", trace_b - integral_b},
                   {"phi_remainder", row.lhs - integral_phi},
                   {"certified_rhs", certified},
                   {"certified_slack", certified_slack}};
        table.rows[idx] = std::move(row);
    });
    table.finish();
    return table;
}

SweepTable example11_residual(const std::string& sigma_symbol, const ConvexFunction& phi, double z,
                              const std::vector<double>& h_values, const Example11Options& opt) {
    if (phi.dimension() != 1) throw PreconditionError("example11: phi must be a function on R");
    const ExtendedReal fzx = phi(z);
    if (fzx.is_infinite()) throw DomainError("example11: phi(z) = +inf");
    const double fz = fzx.value();
    const double dz = gradient(phi, Point{z, 0.0}).real();

    SweepTable table;
    table.name = "example11";
    table.fit_column = "residual_trace_norm";
    table.rows.resize(h_values.size());
    parallel_for(h_values.size(), opt.workers, [&](std::size_t idx) {
        const double h = h_values[idx];
        const PhaseGrid g(opt.N, h, opt.L);
        const SymbolGrid sigma = symbol_from_id(g, sigma_symbol);
        if (!sigma.real) throw PreconditionError("example11: sigma must be real");

        // Second differences of phi on the sampled range (widened around z).
        double lo = std::min(sigma.values.real().minCoeff(), z), hi = std::max(sigma.values.real().maxCoeff(), z);
        if (hi - lo < 1e-3) {
            lo -= 1e-3 * std::max(1.0, std::abs(z));
            hi += 1e-3 * std::max(1.0, std::abs(z));
        }
        const int M = 64;
        const double d = (hi - lo) / M;
        for (int i = 1; i < M; ++i) {
            const double t = lo + i * d;
            const double second = (phi(t + d).to_double() - 2.0 * phi(t).to_double() + phi(t - d).to_double()) / (d * d);
            if (!(second >= opt.delta))
                throw StrongConvexityError("example11: phi'' < delta on the range of sigma (at t = " + std::to_string(t) + ")");
        }

        const SymbolGrid rem = sigma.map(
            [&](cplx v) {
                const double s = v.real();
                return cplx(std::max(0.0, phi(s).value() - fz - dz * (s - z)), 0.0);
            },
            "phi_z(" + sigma.id + ")");
        SymbolGrid psi = rem;
        for (Eigen::Index p = 0; p < psi.values.rows(); ++p)
            for (Eigen::Index k = 0; k < psi.values.cols(); ++k) {
                const double s = sigma.values(p, k).real();
                const double sign = s > z ? 1.0 : (s < z ? -1.0 : 0.0);
                psi.values(p, k) = sign * std::sqrt(rem.values(p, k).real());
            }
        psi.id = "psi_z(" + sigma.id + ")";

        const Eigen::MatrixXcd Qrem = quantize_tau(rem, 0.5).entries;
        const Eigen::MatrixXcd P = quantize_tau(psi, 1.0).entries * quantize_tau(psi, 0.0).entries;
        const double residual = trace_norm(Qrem - P);

        SweepRow row;
        row.sweep_value = h;
        row.lhs = Qrem.trace().real();
        row.rhs = P.trace().real();
        row.slack = row.rhs - row.lhs;
        row.aux = {{"residual_trace_norm", residual},
                   {"h_residual", h * residual},
                   {"remainder_trace_norm", trace_norm(Qrem)}};
        table.rows[idx] = std::move(row);
    });
    table.finish();
    return table;
}

}  // namespace berezin
