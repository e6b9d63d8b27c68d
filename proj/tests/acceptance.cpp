// Acceptance run: one PASS/FAIL line per criterion.
// Exit status is 0 when every criterion passes or fails only for its documented cause.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "support.hpp"

#include "berezin/convex.hpp"
#include "berezin/error.hpp"
#include "berezin/inequality.hpp"
#include "berezin/jensen.hpp"
#include "berezin/quantize.hpp"
#include "berezin/runner.hpp"
#include "berezin/spectral.hpp"

using namespace berezin;
using testing::Gen;
using testing::kPi;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
    // Set when a failure has been traced to a known cause that the run itself confirms.
    bool explained = false;
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c, d);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Eigen::MatrixXcd random_projection(Gen& g, int n, int rank) {
    Eigen::HouseholderQR<Eigen::MatrixXcd> qr(testing::random_complex(g, n, n));
    const Eigen::MatrixXcd Q = Eigen::MatrixXcd(qr.householderQ()).leftCols(rank);
    return Q * Q.adjoint();
}

double spectral_sum(const Eigen::MatrixXcd& H, const ConvexFunction& phi) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (H + H.adjoint()));
    double s = 0.0;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) s += phi(es.eigenvalues()(i)).to_double();
    return s;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

Verdict conjugate_correctness() {
    const auto t0 = std::chrono::steady_clock::now();
    Gen g(101);
    double worst = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        const auto p = testing::random_convex_pl(g, g.integer(9, 65));
        const auto cf = conjugate(ConvexFunction::sampled(p.x, std::vector<ExtendedReal>(p.f.begin(), p.f.end())));
        const auto& d = std::get<repr::Sampled1D>(cf.representation());
        for (std::size_t k = 0; k < d.x.size(); ++k) {
            const double want = testing::brute_conjugate(p.x, p.f, d.x[k]);
            worst = std::max(worst, std::abs(d.f[k].to_double() - want) / (1.0 + std::abs(want)));
        }
    }
    const double t = seconds_since(t0);
    return {worst <= 1e-12 && t < 5.0, fmt("max rel error %.3g over 200 functions, %.2f s (budget 5 s)", worst, t)};
}

Verdict biconjugacy() {
    struct Item {
        ConvexFunction f;
        double a, b;
    };
    const std::vector<Item> smooth = {{ConvexFunction::quadratic(1.0), -3, 3}, {ConvexFunction::power(1.0, 4.0), -3, 3},
                                      {ConvexFunction::exp(), -3, 3},          {ConvexFunction::cosh(), -3, 3},
                                      {ConvexFunction::xlogx(), 0.05, 3}};
    double worst = 0.0;
    for (const auto& it : smooth) worst = std::max(worst, biconjugate_gap(ConvexFunction::sample(it.f, it.a, it.b, 201)));
    std::vector<double> x;
    std::vector<ExtendedReal> f;
    for (int i = 0; i <= 200; ++i) {
        x.push_back(-3.0 + 0.03 * i);
        f.emplace_back(std::sin(x.back()));
    }
    const double control = biconjugate_gap(ConvexFunction::sampled(x, f));
    return {worst <= 1e-6 && control > 0.01, fmt("max smooth gap %.3g (<= 1e-6), sin control gap %.3g (> 0.01)", worst, control)};
}

Verdict quantizer_exactness() {
    double id = 0.0, adj = 0.0, diag = 0.0, circ = 0.0;
    for (int N : {16, 64, 128})
        for (double h : {0.05, 0.2, 1.0}) {
            const PhaseGrid g(N, h);
            const auto mixed = SymbolGrid::from_function(g, [](double x, double xi) {
                return cplx(std::cos(x) * std::exp(-0.3 * xi * xi), std::sin(2 * x) / (1 + xi * xi));
            }, "mixed");
            const auto xo = SymbolGrid::from_function(g, [](double x, double) { return cplx(std::cos(x), std::sin(3 * x)); }, "x");
            auto fxi = [](double xi) { return cplx(1.0 / (1.0 + xi * xi), 0.3 * xi); };
            const auto xio = SymbolGrid::from_function(g, [&](double, double xi) { return fxi(xi); }, "xi");
            for (double tau : {0.0, 0.5, 1.0}) {
                id = std::max(id, testing::max_abs(quantize_tau(SymbolGrid::constant(g, 1.0), tau).entries -
                                                   Eigen::MatrixXcd::Identity(N, N)));
                adj = std::max(adj, adjoint_defect(mixed, tau));
                const auto D = quantize_tau(xo, tau).entries;
                for (int j = 0; j < N; ++j)
                    for (int m = 0; m < N; ++m) {
                        const cplx want = j == m ? cplx(std::cos(g.x(j)), std::sin(3 * g.x(j))) : cplx(0.0);
                        diag = std::max(diag, std::abs(D(j, m) - want));
                    }
                const auto C = quantize_tau(xio, tau).entries;
                // Circulant: constant along wrapped diagonals, with the symbol as its Fourier eigenvalues (relative residual).
                for (int j = 0; j < N; ++j)
                    for (int m = 0; m < N; ++m) circ = std::max(circ, std::abs(C(j, m) - C((j + 1) % N, (m + 1) % N)));
                for (int kk = 0; kk < N; ++kk) {
                    const int k = kk - N / 2;
                    Eigen::VectorXcd e(N);
                    for (int j = 0; j < N; ++j) e(j) = std::polar(1.0, 2.0 * kPi * j * k / N);
                    const cplx lam = fxi(g.xi(kk));
                    circ = std::max(circ, (C * e - lam * e).cwiseAbs().maxCoeff() / (1.0 + std::abs(lam)));
                }
            }
        }
    const bool ok = id <= 1e-12 && adj <= 1e-12 && diag <= 1e-12 && circ <= 1e-12;
    return {ok, fmt("identity %.2g, adjoint %.2g, diagonal %.2g, circulant %.2g (all <= 1e-12)", id, adj, diag, circ)};
}

Verdict classical_projected() {
    const auto t0 = std::chrono::steady_clock::now();
    Gen g(202);
    const std::vector<ConvexFunction> phis = {ConvexFunction::quadratic(1.0), ConvexFunction::power(1.0, 4.0),
                                              ConvexFunction::abs(),
                                              ConvexFunction::sample(ConvexFunction::exp(), -10, 10, 401)};
    const ConvexFunction affine = ConvexFunction::affine(2.0, -1.0);
    double worst = HUGE_VAL, affine_worst = 0.0, oracle = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const int n = g.integer(2, 10);
        const Eigen::MatrixXcd B = testing::random_hermitian(g, n);
        const int rank = g.integer(1, n);
        const Eigen::MatrixXcd P = random_projection(g, n, rank);
        const auto& phi = phis[trial % phis.size()];
        const auto r = projected_berezin_check(B, P, phi);
        worst = std::min(worst, r.slack);
        affine_worst = std::max(affine_worst, std::abs(projected_berezin_check(B, P, affine).slack));
        // Independent evaluation of both sides on an orthonormal basis of ran P.
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> ep(P);
        const Eigen::MatrixXcd V = ep.eigenvectors().rightCols(rank);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eb(B);
        Eigen::VectorXd fb(n);
        for (int i = 0; i < n; ++i) fb(i) = phi(eb.eigenvalues()(i)).to_double();
        const Eigen::MatrixXcd phiB = eb.eigenvectors() * fb.asDiagonal() * eb.eigenvectors().adjoint();
        const double lhs = spectral_sum(V.adjoint() * B * V, phi);
        const double rhs = (V.adjoint() * phiB * V).trace().real();
        if (std::isfinite(lhs) && std::isfinite(rhs))
            oracle = std::max(oracle, std::max(std::abs(lhs - r.lhs), std::abs(rhs - r.rhs)) / (1.0 + std::abs(rhs)));
    }
    const double t = seconds_since(t0);
    const bool ok = worst >= -1e-9 && affine_worst <= 1e-10 && oracle <= 1e-9 && t < 30.0;
    return {ok, fmt("min slack %.3g (>= -1e-9), affine |slack| %.3g (<= 1e-10), oracle gap %.2g, %.2f s", worst, affine_worst,
                    oracle, t)};
}

struct SuiteRun {
    std::vector<Theorem7Result> results;
    std::vector<std::string> labels;
    std::vector<double> mapping_oracle;  // Tr phi(Q) by an independent eigensolver (NaN if not Hermitian)
};

const SuiteRun& theorem7_suite() {
    static const SuiteRun run = [] {
        SuiteRun s;
        const std::vector<std::string> symbols = {"cosx", "gauss:pi,0,0.5", "indicator:0.5pi,1.5pi,-0.5,0.5"};
        const std::vector<ConvexFunction> phis = {ConvexFunction::quadratic(1.0), ConvexFunction::pospart(),
                                                  ConvexFunction::squared_modulus()};
        for (const auto& sid : symbols)
            for (const auto& phi : phis)
                for (double h : {0.4, 0.1}) {
                    const double tau = phi.dimension() == 1 ? 0.5 : 1.0;
                    const PhaseGrid g(64, h);
                    const auto sigma = symbol_from_id(g, sid);
                    s.results.push_back(theorem7_check(sigma, phi, tau, Eigen::MatrixXcd::Identity(64, 64)));
                    s.labels.push_back(sid + " " + phi.id() + " h=" + fmt("%g", h));
                    s.mapping_oracle.push_back(s.results.back().hermitian ? spectral_sum(quantize_tau(sigma, tau).entries, phi)
                                                                          : std::nan(""));
                }
        return s;
    }();
    return run;
}

Verdict theorem7_pipeline() {
    const auto& s = theorem7_suite();
    double worst = HUGE_VAL, mapping = 0.0, oracle = 0.0;
    int hermitian = 0;
    std::string worst_case;
    for (std::size_t i = 0; i < s.results.size(); ++i) {
        const auto& r = s.results[i];
        if (r.report.slack < worst) worst = r.report.slack, worst_case = s.labels[i];
        if (r.hermitian) {
            ++hermitian;
            mapping = std::max(mapping, std::abs(r.report.lhs - r.spectral_mapping_lhs));
            oracle = std::max(oracle, std::abs(r.report.lhs - s.mapping_oracle[i]));
        }
    }
    const bool ok = worst >= -1e-8 && mapping <= 1e-8 && oracle <= 1e-8 && hermitian > 0;
    return {ok, fmt("%g cases, min slack %.3g (>= -1e-8); %g Hermitian, spectral mapping error %.2g",
                    static_cast<double>(s.results.size()), worst, hermitian, mapping) +
                    fmt(", independent eigensolver gap %.2g; tightest: ", oracle) + worst_case};
}

Verdict pointwise_columns() {
    const auto& s = theorem7_suite();
    double worst = HUGE_VAL;
    std::size_t columns = 0;
    for (const auto& r : s.results) {
        columns += r.columns.size();
        for (const auto& c : r.columns) worst = std::min(worst, c.slack);
    }
    const bool ok = worst >= -1e-8 && columns == 64 * s.results.size();
    return {ok, fmt("%g Schur columns, min slack %.3g (>= -1e-8)", static_cast<double>(columns), worst)};
}

Verdict rayleigh_eigenvalues() {
    Gen g(303);
    const std::vector<ConvexFunction> phis = {ConvexFunction::quadratic(1.0), ConvexFunction::exp(), ConvexFunction::pospart()};
    double worst = HUGE_VAL, worst_in_range = HUGE_VAL, worst_extended = HUGE_VAL, pospart_F = 0.0;
    int rows = 0, above = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const int n = g.integer(2, 16);
        // B lower bidiagonal, so A = B B^T is tridiagonal and positive semidefinite.
        Eigen::MatrixXd Bd = Eigen::MatrixXd::Zero(n, n);
        for (int k = 0; k < n; ++k) {
            Bd(k, k) = g.uniform(-1.0, 1.0);
            if (k + 1 < n) Bd(k + 1, k) = g.uniform(-1.0, 1.0);
        }
        const Eigen::MatrixXd A = Bd * Bd.transpose();
        std::vector<double> sigma(n);
        for (auto& v : sigma) v = g.uniform();
        const double sup = *std::max_element(sigma.begin(), sigma.end());
        const auto& phi = phis[trial % phis.size()];
        Eigen::MatrixXd As = A, Ap = A;
        for (int k = 0; k < n; ++k) {
            As(k, k) += sigma[k];
            Ap(k, k) += phi(sigma[k]).to_double();
        }
        const auto lam = testing::jacobi_eigenvalues(As);
        const auto lam_phi = testing::jacobi_eigenvalues(Ap);
        for (int rank = 1; rank <= n; ++rank) {
            const double l = lam[rank - 1];
            const double F = example4_error(sigma, phi, l);
            const double base = lam_phi[rank - 1] - phi(l).to_double();
            const double slack = base + F;
            worst = std::min(worst, slack);
            if (l <= sup) worst_in_range = std::min(worst_in_range, slack);
            else ++above;
            worst_extended = std::min(worst_extended, base + example4_error_extended(sigma, phi, l));
            if (phi.id() == "pospart") pospart_F = std::max(pospart_F, std::abs(F));
            ++rows;
        }
    }
    Verdict v;
    v.pass = worst >= -1e-8 && pospart_F == 0.0;
    v.detail = fmt("%g rows, min slack %.3g (>= -1e-8); rows with lambda_n > sup sigma: %g", rows, worst, above) +
               fmt("; in-range min slack %.3g; widened-slope F min slack %.3g; pospart max F %.3g", worst_in_range,
                   worst_extended, pospart_F);
    // Known cause: the slope bound at sup sigma only covers lambda_n <= sup sigma. The failure is accepted
    // as explained when every in-range row and every widened-slope row holds.
    v.explained = !v.pass && worst_in_range >= -1e-8 && worst_extended >= -1e-8 && pospart_F == 0.0;
    return v;
}

Verdict commutator_sweep() {
    const auto t0 = std::chrono::steady_clock::now();
    const std::vector<double> hs = {0.4, 0.2, 0.1, 0.05};
    Example10Options opt;
    opt.N = 128;
    const auto region = RegionSpec::parse("0.5pi,1.5pi,-0.5,0.5");
    const auto t = example10_experiment(region, ConvexFunction::squared_modulus(), hs, opt);
    double resid = 0.0, slack = HUGE_VAL;
    for (const auto& r : t.rows) {
        resid = std::max({resid, r.get("identity_residual"), r.get("identity_residual_adjoint")});
        slack = std::min(slack, r.slack);
    }
    const auto hR = t.column("h_R_trace_norm");
    // Independent trace norm of R at the coarsest h from directly assembled matrices.
    const PhaseGrid g(128, hs[0]);
    auto chi = [&](double x, double xi) {
        const double a = 0.5 * kPi, b = 1.5 * kPi;
        return x >= a && x < b && xi >= -0.5 && xi < 0.5 ? 1.0 : 0.0;
    };
    const auto Q1 = testing::direct_quantization(128, hs[0], g.L, 1.0, [&](double x, double xi) { return cplx(chi(x, xi)); });
    const auto Q0 = testing::direct_quantization(128, hs[0], g.L, 0.0, [&](double x, double xi) { return cplx(1.0 - chi(x, xi)); });
    const double tn = Eigen::JacobiSVD<Eigen::MatrixXcd>(Q1 * Q0).singularValues().sum();
    const double oracle = std::abs(tn - t.rows[0].get("R_trace_norm")) / (1.0 + tn);
    const double secs = seconds_since(t0);
    const bool ok = resid <= 1e-10 && strictly_decreasing(hR) && slack >= -1e-8 && oracle <= 1e-8 && secs < 120.0;
    std::string seq;
    for (double v : hR) seq += fmt(" %.4g", v);
    return {ok, fmt("identity residual %.2g (<= 1e-10), min slack %.3g, trace-norm oracle gap %.2g, %.1f s; h|R|_1:", resid, slack,
                    oracle, secs) + seq};
}

Verdict circle_remainders() {
    Example8Options opt;
    opt.K = 64;
    const std::vector<double> mus = {4, 8, 16, 32};
    const auto t = example8_experiment("cos:0.5,1", ConvexFunction::quadratic(1.0), mus, opt);
    const auto eq7 = t.column("eq7_remainder");
    const auto phr = t.column("phi_remainder");
    // B = Op(1/2 + cos x) has diagonal 1/2, so Tr(B Pi_mu) = rank / 2 and the integral is mu: remainder -1/2.
    double oracle = 0.0;
    for (double v : eq7) oracle = std::max(oracle, std::abs(v + 0.5));
    const bool ok = bounded_by_first(eq7, 2.0) && bounded_by_first(phr, 2.0) && oracle <= 1e-10;
    std::string a, b;
    for (double v : eq7) a += fmt(" %.4g", v);
    for (double v : phr) b += fmt(" %.4g", v);
    return {ok, "trace remainder:" + a + "; phi remainder:" + b + fmt(" (each <= 2x first); closed-form gap %.2g", oracle)};
}

Verdict factorisation_residual() {
    Example11Options opt;
    opt.N = 128;
    const auto t = example11_residual("bump:pi,0,1,1", ConvexFunction::quadratic(1.0), 0.0, {0.4, 0.2, 0.1, 0.05}, opt);
    const auto r = t.column("residual_trace_norm");
    std::string seq;
    for (double v : r) seq += fmt(" %.4g", v);
    return {bounded_by_first(r, 2.0) && r.front() > 0.0, "residual trace norm:" + seq + " (each <= 2x first)"};
}

Verdict garding_certification() {
    Gen g(404);
    double worst = 0.0, upper = HUGE_VAL;
    int lower_fail = 0, positive = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const int n = g.integer(1, 12);
        const Eigen::MatrixXcd S = testing::random_complex(g, n, n);
        const Eigen::MatrixXcd G = testing::random_complex(g, n, n);
        const Eigen::MatrixXcd T = G * G.adjoint() / n + 0.1 * Eigen::MatrixXcd::Identity(n, n);
        const auto r = garding(S, T);
        const double want = testing::bisection_garding(S, T);
        worst = std::max(worst, std::abs(r.nu - want) / (1.0 + want));
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> at(herm(S) + r.nu * T);
        upper = std::min(upper, at.eigenvalues()(0));
        if (r.nu > 0.0) {
            ++positive;
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> below(herm(S) + (r.nu - 1e-6) * T);
            if (!(below.eigenvalues()(0) < 0.0) || !r.lower_certified) ++lower_fail;
        }
    }
    const bool ok = worst <= 1e-8 && upper >= -1e-10 && lower_fail == 0;
    return {ok, fmt("max rel gap to bisection %.2g (<= 1e-8), min lambda at nu %.2g, lower certificate failures %g of %g", worst,
                    upper, lower_fail, positive)};
}

Verdict determinism() {
    namespace fs = std::filesystem;
    std::ostringstream s1, s2;
    run_selftest(s1);
    run_selftest(s2);
    bool ok = s1.str() == s2.str();
    const fs::path root = fs::temp_directory_path() / "berezin_acceptance_determinism";
    fs::remove_all(root);
    const std::string cfg = std::string(BEREZIN_SOURCE_DIR) + "/configs/projected.ini";
    std::string csv, js, log;
    int runs = 0;
    for (int rep = 0; rep < 2; ++rep)
        for (int workers : {1, 4}) {
            RunOptions opt;
            opt.workers = workers;
            const fs::path dir = root / ("r" + std::to_string(rep) + "w" + std::to_string(workers));
            opt.out_dir = dir.string();
            std::ostringstream out, err;
            if (run_experiment(cfg, opt, out, err) != kExitPass) ok = false;
            std::string text = out.str();
            // The summary names the output directory; compare it with that path removed.
            for (std::size_t p; (p = text.find(dir.string())) != std::string::npos;) text.erase(p, dir.string().size());
            const std::string c = slurp(dir / "projected.csv"), j = slurp(dir / "projected.json");
            if (runs++ == 0) csv = c, js = j, log = text;
            ok = ok && c == csv && j == js && text == log && !c.empty();
        }
    fs::remove_all(root);
    return {ok, fmt("selftest identical across 2 runs; projected suite csv/json/stdout identical across %g runs (workers 1, 4)", runs)};
}

}  // namespace

int main() {
    struct Criterion {
        const char* name;
        std::function<Verdict()> run;
    };
    const std::vector<Criterion> criteria = {
        {"conjugate_correctness", conjugate_correctness},
        {"biconjugacy", biconjugacy},
        {"quantizer_exactness", quantizer_exactness},
        {"projected_trace_inequality", classical_projected},
        {"quantized_trace_inequality", theorem7_pipeline},
        {"pointwise_columns", pointwise_columns},
        {"rayleigh_eigenvalue_bound", rayleigh_eigenvalues},
        {"commutator_sweep", commutator_sweep},
        {"circle_remainders", circle_remainders},
        {"factorisation_residual", factorisation_residual},
        {"garding_certification", garding_certification},
        {"determinism", determinism},
    };
    int failed = 0, unexplained = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Verdict v;
        try {
            v = criteria[i].run();
        } catch (const std::exception& e) {
            v = {false, std::string("threw: ") + e.what()};
        }
        std::printf("%s %2zu %s: %s%s\n", v.pass ? "PASS" : "FAIL", i + 1, criteria[i].name, v.detail.c_str(),
                    !v.pass && v.explained ? " [known failure, cause confirmed]" : "");
        std::fflush(stdout);
        if (!v.pass) {
            ++failed;
            if (!v.explained) ++unexplained;
        }
    }
    std::printf("%zu criteria: %zu passed, %d failed (%d unexplained)\n", criteria.size(), criteria.size() - failed, failed,
                unexplained);
    return unexplained == 0 ? 0 : 1;
}
