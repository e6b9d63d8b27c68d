#include <cmath>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "berezin/error.hpp"
#include "berezin/inequality.hpp"
#include "berezin/jensen.hpp"
#include "berezin/runner.hpp"
#include "serialize.hpp"

namespace berezin {

namespace {

using detail::csv_number;
using Eigen::MatrixXcd;

constexpr double kPi = std::numbers::pi;

// A check returns an empty string on success, otherwise what went wrong.
struct SelfCheck {
    std::string id;
    std::function<std::string()> run;
};

std::string expect_near(const std::string& what, double got, double want, double tol) {
    if (std::abs(got - want) <= tol) return {};
    return what + " = " + csv_number(got) + ", expected " + csv_number(want) + " (tol " + csv_number(tol) + ")";
}

std::string expect(bool ok, const std::string& what) { return ok ? std::string() : what; }

double max_entry(const MatrixXcd& A) { return A.size() == 0 ? 0.0 : A.cwiseAbs().maxCoeff(); }

MatrixXcd diag(std::initializer_list<cplx> d) {
    MatrixXcd A = MatrixXcd::Zero(static_cast<Eigen::Index>(d.size()), static_cast<Eigen::Index>(d.size()));
    Eigen::Index i = 0;
    for (cplx v : d) A(i, i) = v, ++i;
    return A;
}

MatrixXcd jordan2() {
    MatrixXcd J = MatrixXcd::Zero(2, 2);
    J(0, 1) = 1.0;
    return J;
}

std::vector<SelfCheck> checks() {
    const PhaseGrid g16(16, 0.2);
    std::vector<SelfCheck> c;

    // Convex functions.
    c.push_back({"eval:quadratic", [] { return expect_near("phi(2)", ConvexFunction::quadratic()(2.0).value(), 2.0, 0.0); }});
    c.push_back({"eval:indicator_outside",
                 [] { return expect(ConvexFunction::indicator(-1, 1)(3.0).is_infinite(), "indicator(3) is finite"); }});
    c.push_back({"eval:sampled_abs", [] {
                     const auto f = ConvexFunction::sample(ConvexFunction::abs(), -2, 2, 9);
                     return expect_near("phi(0.5)", f(0.5).value(), 0.5, 1e-15);
                 }});
    c.push_back({"conjugate:quadratic", [] {
                     const auto f = ConvexFunction::sample(ConvexFunction::quadratic(), -4, 4, 401);
                     const auto cj = conjugate(f);
                     const auto& d = std::get<repr::Sampled1D>(cj.representation());
                     double err = 0.0;
                     for (std::size_t k = 0; k < d.x.size(); ++k)
                         if (std::abs(d.x[k]) <= 4.0) err = std::max(err, std::abs(d.f[k].value() - 0.5 * d.x[k] * d.x[k]));
                     const auto closed = conjugate(ConvexFunction::quadratic());
                     std::string msg = expect(err <= f.grid_modulus(), "sampled conjugate error " + csv_number(err));
                     if (msg.empty()) msg = expect_near("closed form at 3", closed(3.0).value(), 4.5, 1e-14);
                     return msg;
                 }});
    c.push_back({"conjugate:abs_indicator", [] {
                     const auto cj = conjugate(ConvexFunction::abs());
                     for (double s : {-1.0, -0.3, 0.0, 0.7, 1.0})
                         if (cj(s).is_infinite() || cj(s).value() != 0.0) return "abs* not 0 at " + csv_number(s);
                     for (double s : {-1.5, 1.0001, 3.0})
                         if (cj(s).is_finite()) return "abs* finite at " + csv_number(s);
                     return std::string();
                 }});
    c.push_back({"biconjugate_gap:affine", [] {
                     const auto f = ConvexFunction::sample(ConvexFunction::affine(2.0, -1.0), -3, 3, 31);
                     return expect_near("gap", biconjugate_gap(f), 0.0, 0.0);
                 }});
    c.push_back({"eps_subdifferential_witness:smooth", [] {
                     const auto w = eps_subdifferential_witness(ConvexFunction::power(1.0, 2.0), 1.0, 0.0);
                     if (!w) return std::string("no witness");
                     std::string m = expect_near("t*", w->t_star, 1.0, 1e-12);
                     if (m.empty()) m = expect_near("x*", w->x_star.real(), 2.0, 1e-12);
                     return m;
                 }});
    c.push_back({"eps_subdifferential_witness:kink", [] {
                     const auto f = ConvexFunction::abs();
                     const auto w = eps_subdifferential_witness(f, 0.0, 0.0);
                     if (!w) return std::string("no witness");
                     std::string m = expect_near("t*", w->t_star, 0.0, 0.0);
                     if (m.empty()) m = expect(std::abs(w->x_star.real()) <= 1.0, "x* outside [-1, 1]");
                     if (m.empty()) m = expect(in_conjugate_epigraph(f, *w), "witness fails the membership test");
                     return m;
                 }});
    c.push_back({"gradient:quadratic",
                 [] { return expect_near("phi'(3)", gradient(ConvexFunction::power(1.0, 2.0), 3.0).real(), 6.0, 1e-12); }});
    c.push_back({"gradient:squared_modulus", [] {
                     const Point g = gradient(ConvexFunction::squared_modulus(), Point{1.0, 1.0});
                     return expect(std::abs(g - Point{2.0, 2.0}) <= 1e-12, "gradient " + csv_number(g.real()) + "," +
                                                                             csv_number(g.imag()));
                 }});
    c.push_back({"restrict_to_real:on_axis", [] {
                     const auto f = restrict_to_real(ConvexFunction::power(1.0, 2.0));
                     return expect_near("phi(1)", f(Point{1.0, 0.0}).value(), 1.0, 0.0);
                 }});
    c.push_back({"restrict_to_real:off_axis", [] {
                     const auto f = restrict_to_real(ConvexFunction::power(1.0, 2.0));
                     return expect(f(Point{0.0, 1.0}).is_infinite(), "finite off the real axis");
                 }});

    // Functional Jensen inequality.
    c.push_back({"check_lemma3:uniform_average", [] {
                     const auto r = check_lemma3(FunctionalPair::uniform_average(4), real_grid_function({0, 1, 2, 3}),
                                                 ConvexFunction::power(1.0, 2.0));
                     std::string m = expect_near("lhs", r.lhs, 2.25, 1e-12);
                     if (m.empty()) m = expect_near("rhs", r.rhs, 3.5, 1e-12);
                     if (m.empty()) m = expect_near("slack", r.slack, 1.25, 1e-12);
                     return m;
                 }});
    c.push_back({"check_lemma3:point_evaluation_affine", [] {
                     const auto r = check_lemma3(FunctionalPair::point_evaluation(2), real_grid_function({0.3, -1, 4, 2}),
                                                 ConvexFunction::affine(1.5, -0.5));
                     return expect_near("slack", r.slack, 0.0, 1e-12);
                 }});
    c.push_back({"rayleigh_eigenvalue:diagonal_potential", [] {
                     return expect_near("lambda_1", rayleigh_eigenvalue(Eigen::MatrixXd::Zero(3, 3), {3, 1, 2}, 1), 1.0, 1e-12);
                 }});
    c.push_back({"rayleigh_eigenvalue:diagonal_operator", [] {
                     const Eigen::MatrixXd A = Eigen::Vector3d(1, 2, 3).asDiagonal();
                     return expect_near("lambda_2", rayleigh_eigenvalue(A, {0, 0, 0}, 2), 2.0, 1e-12);
                 }});
    c.push_back({"example4_error:quadratic", [] {
                     return expect_near("F", example4_error({0.0, 0.5, 1.0}, ConvexFunction::power(1.0, 2.0), 0.5), 0.5, 1e-12);
                 }});
    c.push_back({"example4_error:affine", [] {
                     return expect_near("F", example4_error({0.0, 0.5, 1.0}, ConvexFunction::affine(1.0, 0.0), 0.3), 0.0, 0.0);
                 }});
    c.push_back({"example4_check:commuting_diagonal", [] {
                     const auto r = example4_check(Eigen::MatrixXd::Zero(2, 2), {0.2, 0.9}, ConvexFunction::power(1.0, 2.0), 1);
                     std::string m = expect_near("lhs", r.lhs, 0.04, 1e-12);
                     if (m.empty()) m = expect_near("rhs - F", r.rhs - r.c1, 0.04, 1e-12);
                     if (m.empty()) m = expect(r.slack >= 0.0, "slack " + csv_number(r.slack));
                     return m;
                 }});

    // Quantization.
    c.push_back({"quantize_tau:identity", [g16] {
                     const auto one = SymbolGrid::constant(g16, 1.0);
                     for (double tau : {0.0, 0.5, 1.0}) {
                         const double err = max_entry(quantize_tau(one, tau).entries - MatrixXcd::Identity(16, 16));
                         if (err > 1e-12) return "tau " + csv_number(tau) + ": |Q(1) - I| = " + csv_number(err);
                     }
                     return std::string();
                 }});
    c.push_back({"quantize_tau:x_only_diagonal", [g16] {
                     const auto s = symbol_from_id(g16, "cosx");
                     for (double tau : {0.0, 0.5, 1.0}) {
                         MatrixXcd Q = quantize_tau(s, tau).entries;
                         for (int j = 0; j < 16; ++j) {
                             if (std::abs(Q(j, j) - std::cos(g16.x(j))) > 1e-12) return "diagonal entry " + std::to_string(j);
                             Q(j, j) = 0.0;
                         }
                         if (max_entry(Q) > 1e-12) return "off-diagonal " + csv_number(max_entry(Q));
                     }
                     return std::string();
                 }});
    c.push_back({"adjoint_defect:real_weyl", [g16] {
                     const double d = adjoint_defect(symbol_from_id(g16, "gauss:pi,0,0.7"), 0.5);
                     return expect(d <= 1e-12, "defect " + csv_number(d));
                 }});
    c.push_back({"adjoint_defect:constant_i", [g16] {
                     const auto s = SymbolGrid::constant(g16, cplx(0.0, 1.0));
                     const double d = adjoint_defect(s, 0.5);
                     const double e = max_entry(quantize_tau(s, 0.5).entries - cplx(0.0, 1.0) * MatrixXcd::Identity(16, 16));
                     return expect(d <= 1e-12 && e <= 1e-12, "defect " + csv_number(d) + ", |Q - iI| " + csv_number(e));
                 }});
    c.push_back({"apply_convex_to_symbol:square_cos", [g16] {
                     const auto s = symbol_from_id(g16, "cosx");
                     const auto f = apply_convex_to_symbol(s, ConvexFunction::power(1.0, 2.0));
                     double err = 0.0;
                     for (int p = 0; p < 32; ++p)
                         for (int k = 0; k < 16; ++k)
                             err = std::max(err, std::abs(f.values(p, k) - std::pow(std::cos(g16.half_x(p)), 2)));
                     return expect(err <= 1e-15, "error " + csv_number(err));
                 }});
    c.push_back({"apply_convex_to_symbol:sqmod_expix", [g16] {
                     const auto f = apply_convex_to_symbol(symbol_from_id(g16, "expix"), ConvexFunction::squared_modulus());
                     const double err = (f.values.array() - 1.0).abs().maxCoeff();
                     return expect(err <= 1e-15, "error " + csv_number(err));
                 }});
    c.push_back({"indicator_symbol:full", [g16] {
                     const auto s = indicator_symbol(g16, RegionSpec::parse("full"));
                     return expect((s.values.array() - 1.0).abs().maxCoeff() == 0.0, "not identically 1");
                 }});
    c.push_back({"indicator_symbol:empty", [g16] {
                     const auto s = indicator_symbol(g16, RegionSpec::parse("empty"));
                     return expect(s.values.cwiseAbs().maxCoeff() == 0.0, "not identically 0");
                 }});

    // Spectral tools.
    c.push_back({"spectrum:diagonal", [] {
                     const auto s = spectrum(diag({1, 1, 3}));
                     const bool ok = s.clusters.size() == 2 && std::abs(s.clusters[0].center - 1.0) < 1e-12 &&
                                     s.clusters[0].multiplicity == 2 && std::abs(s.clusters[1].center - 3.0) < 1e-12 &&
                                     s.clusters[1].multiplicity == 1;
                     return expect(ok, "clusters differ from {(1,2),(3,1)}");
                 }});
    c.push_back({"spectrum:jordan", [] {
                     const auto s = spectrum(jordan2());
                     return expect(s.clusters.size() == 1 && s.clusters[0].multiplicity == 2 && std::abs(s.clusters[0].center) < 1e-12,
                                   "expected one cluster (0, 2)");
                 }});
    c.push_back({"schur_invariant_basis:diagonal", [] {
                     const MatrixXcd A = diag({1, 2, 3});
                     const auto b = schur_invariant_basis(A, spectrum(A), {1});
                     const bool ok = b.basis.cols() == 1 && std::abs(std::abs(b.basis(1, 0)) - 1.0) < 1e-12 &&
                                     std::abs(b.triangular(0, 0) - 2.0) < 1e-12;
                     return expect(ok, "basis is not e_2");
                 }});
    c.push_back({"schur_invariant_basis:jordan", [] {
                     const MatrixXcd J = jordan2();
                     const auto b = schur_invariant_basis(J, spectrum(J), {0});
                     const bool ok = b.basis.cols() == 2 && std::abs(b.triangular(0, 0)) < 1e-12 &&
                                     std::abs(b.triangular(1, 1)) < 1e-12 && std::abs(std::abs(b.triangular(0, 1)) - 1.0) < 1e-12;
                     return expect(ok, "triangular form differs from J2");
                 }});
    c.push_back({"trace:diagonal", [] {
                     const MatrixXcd A = diag({1, -2});
                     std::string m = expect_near("trace", trace(A).real(), -1.0, 1e-15);
                     if (m.empty()) m = expect_near("trace_norm", trace_norm(A), 3.0, 1e-12);
                     return m;
                 }});
    c.push_back({"trace_norm:rank_one", [] {
                     Eigen::VectorXcd u(3), v(3);
                     u << 1.0, cplx(0, 2), -1.0;
                     v << 0.5, 1.0, cplx(1, 1);
                     return expect_near("trace_norm", trace_norm(u * v.adjoint()), u.norm() * v.norm(), 1e-12);
                 }});
    c.push_back({"numerical_range_hull:hermitian", [] {
                     const MatrixXcd A = diag({-1, 0.5, 2});
                     const auto h = numerical_range_hull(A, 64);
                     double width = 0.0, lo = HUGE_VAL, hi = -HUGE_VAL;
                     for (auto p : h.outer) {
                         width = std::max(width, std::abs(p.imag()));
                         lo = std::min(lo, p.real());
                         hi = std::max(hi, p.real());
                     }
                     return expect(width <= 1e-10 && std::abs(lo + 1) < 1e-10 && std::abs(hi - 2) < 1e-10,
                                   "not the segment [-1, 2]");
                 }});
    c.push_back({"numerical_range_hull:scalar_i", [] {
                     const auto h = numerical_range_hull(cplx(0, 1) * MatrixXcd::Identity(3, 3), 16);
                     double d = 0.0;
                     for (auto p : h.outer) d = std::max(d, std::abs(p - cplx(0, 1)));
                     return expect(d <= 1e-10, "distance from i " + csv_number(d));
                 }});
    c.push_back({"garding_nu:nonnegative",
                 [] { return expect_near("nu", garding_nu(diag({1, 2}), MatrixXcd::Identity(2, 2)), 0.0, 0.0); }});
    c.push_back({"garding_nu:shift",
                 [] { return expect_near("nu", garding_nu(diag({-3, 5}), MatrixXcd::Identity(2, 2)), 3.0, 1e-10); }});

    // Berezin-type inequalities.
    c.push_back({"berezin_lhs:clusters", [] {
                     return expect_near("sum", berezin_lhs(spectrum(diag({1, 1, 3})), ConvexFunction::power(1.0, 2.0)).total, 11.0,
                                        1e-12);
                 }});
    c.push_back({"berezin_lhs:jordan", [] {
                     return expect_near("sum", berezin_lhs(spectrum(jordan2()), ConvexFunction::power(1.0, 2.0)).total, 0.0, 1e-15);
                 }});
    c.push_back({"projected_berezin_check:two_by_two", [] {
                     const MatrixXcd P = MatrixXcd::Constant(2, 2, 0.5);
                     const auto r = projected_berezin_check(diag({0, 2}), P, ConvexFunction::power(1.0, 2.0));
                     std::string m = expect_near("lhs", r.lhs, 1.0, 1e-12);
                     if (m.empty()) m = expect_near("rhs", r.rhs, 2.0, 1e-12);
                     if (m.empty()) m = expect_near("slack", r.slack, 1.0, 1e-12);
                     return m;
                 }});
    c.push_back({"projected_berezin_check:affine", [] {
                     MatrixXcd B(3, 3);
                     B << 1.0, cplx(0, 1), 0.5, cplx(0, -1), -2.0, 0.0, 0.5, 0.0, 0.25;
                     Eigen::VectorXcd u(3);
                     u << 1.0, cplx(1, 1), -0.5;
                     u.normalize();
                     const auto r = projected_berezin_check(B, u * u.adjoint(), ConvexFunction::affine(-0.7, 2.0));
                     return expect_near("slack", r.slack, 0.0, 1e-10);
                 }});
    c.push_back({"eq3_pointwise_check:constant", [g16] {
                     const auto s = SymbolGrid::constant(g16, 0.75);
                     Eigen::VectorXcd u = Eigen::VectorXcd::Zero(16);
                     u(3) = cplx(0.6, 0.0);
                     u(9) = cplx(0.0, 0.8);
                     const auto r = eq3_pointwise_check(s, ConvexFunction::exp(), 0.5, MatrixXcd::Identity(16, 16), u);
                     std::string m = expect_near("lhs", r.lhs, std::exp(0.75), 1e-10);
                     if (m.empty()) m = expect_near("rhs", r.rhs, std::exp(0.75), 1e-10);
                     return m;
                 }});
    c.push_back({"eq3_pointwise_check:affine_weyl", [g16] {
                     const auto s = symbol_from_id(g16, "gauss:pi,0,0.7");
                     Eigen::VectorXcd u = Eigen::VectorXcd::Zero(16);
                     for (int j = 0; j < 16; ++j) u(j) = std::polar(1.0 + 0.1 * j, 0.3 * j);
                     u.normalize();
                     const auto r = eq3_pointwise_check(s, ConvexFunction::affine(2.0, 1.0), 0.5, MatrixXcd::Identity(16, 16), u);
                     std::string m = expect_near("slack", r.slack, 0.0, 1e-10);
                     if (m.empty()) m = expect_near("nu1 + nu2", r.nu1 + r.nu2, 0.0, 1e-12);
                     return m;
                 }});
    c.push_back({"nu1_bound:real_weyl", [g16] {
                     const auto s = symbol_from_id(g16, "cosx");
                     return expect_near("nu1", nu1_bound(s, 0.5, {Point{1, 1}, Point{0, -2}}, MatrixXcd::Identity(16, 16)), 0.0, 0.0);
                 }});
    c.push_back({"nu1_bound:constant_one", [g16] {
                     const auto s = SymbolGrid::constant(g16, 1.0);
                     for (double tau : {0.0, 0.5, 1.0})
                         if (nu1_bound(s, tau, {Point{1, 1}, Point{0, -2}}, MatrixXcd::Identity(16, 16)) != 0.0)
                             return "nonzero at tau " + csv_number(tau);
                     return std::string();
                 }});
    c.push_back({"tangent_remainder_nu:square_constant", [g16] {
                     const auto s = SymbolGrid::constant(g16, 0.4);
                     const double nu = tangent_remainder_nu(s, ConvexFunction::power(1.0, 2.0), 0.5, MatrixXcd::Identity(16, 16),
                                                            {Point{-1, 0}, Point{0.4, 0}, Point{2, 0}});
                     return expect_near("nu2", nu, 0.0, 0.0);
                 }});
    c.push_back({"tangent_remainder_nu:affine", [g16] {
                     const auto s = symbol_from_id(g16, "cosx");
                     const double nu = tangent_remainder_nu(s, ConvexFunction::affine(3.0, -1.0), 0.5, MatrixXcd::Identity(16, 16),
                                                            {Point{-1, 0}, Point{0.5, 0}});
                     return expect_near("nu2", nu, 0.0, 1e-12);
                 }});
    c.push_back({"theorem7_check:affine_weyl", [g16] {
                     const auto s = symbol_from_id(g16, "gauss:pi,0,0.7");
                     const auto r = theorem7_check(s, ConvexFunction::affine(-1.0, 0.5), 0.5, MatrixXcd::Identity(16, 16));
                     return expect_near("slack", r.report.slack, 0.0, 1e-8);
                 }});

    // Experiments in their degenerate configurations.
    c.push_back({"example10_experiment:full_region", [] {
                     Example10Options opt;
                     opt.N = 16;
                     const auto t = example10_experiment(RegionSpec::parse("full"), ConvexFunction::squared_modulus(), {0.2}, opt);
                     const auto& r = t.rows.front();
                     std::string m = expect(r.get("R_trace_norm") <= 1e-10, "R norm " + csv_number(r.get("R_trace_norm")));
                     if (m.empty()) m = expect(r.lhs <= r.get("phase_term") + 1e-10, "lhs above the phase-space term");
                     return m;
                 }});
    c.push_back({"example10_experiment:empty_region", [] {
                     Example10Options opt;
                     opt.N = 16;
                     const auto t = example10_experiment(RegionSpec::parse("empty"), ConvexFunction::squared_modulus(), {0.2}, opt);
                     const auto& r = t.rows.front();
                     double worst = std::max({std::abs(r.lhs), std::abs(r.rhs), std::abs(r.slack)});
                     for (const char* k : {"R_trace_norm", "phase_volume", "phase_term", "identity_residual"})
                         worst = std::max(worst, std::abs(r.get(k)));
                     std::string m = expect(worst == 0.0, "nonzero entry " + csv_number(worst));
                     if (m.empty())
                         m = expect(r.get("identity_residual_adjoint") <= 1e-12, "adjoint identity residual " +
                                                                                 csv_number(r.get("identity_residual_adjoint")));
                     // The certified side keeps only the 1e-10 I regularization of T.
                     if (m.empty()) m = expect_near("trace_T", r.trace_T, 16e-10, 1e-20);
                     if (m.empty())
                         m = expect(r.get("certified_rhs") <= (r.nu1 + r.nu2) * r.trace_T * (1 + 1e-12), "certified rhs above nu Tr T");
                     return m;
                 }});
    c.push_back({"example8_experiment:empty_projection", [] {
                     Example8Options opt;
                     opt.K = 8;
                     const auto t = example8_experiment("cosx", ConvexFunction::power(1.0, 2.0), {0.5}, opt);
                     const auto& r = t.rows.front();
                     std::string m = expect(r.get("rank") == 0.0, "projection not empty");
                     if (m.empty()) m = expect(r.lhs == 0.0 && r.lhs <= r.rhs, "lhs " + csv_number(r.lhs));
                     return m;
                 }});
    c.push_back({"example11_residual:constant_symbol", [] {
                     Example11Options opt;
                     opt.N = 16;
                     const auto t = example11_residual("const:0.3", ConvexFunction::power(1.0, 2.0), 0.3, {0.2}, opt);
                     return expect_near("residual", t.rows.front().get("residual_trace_norm"), 0.0, 1e-14);
                 }});

    return c;
}

}  // namespace

int run_selftest(std::ostream& out) {
    const auto list = checks();
    std::size_t passed = 0;
    for (const auto& ck : list) {
        std::string msg;
        try {
            msg = ck.run();
        } catch (const std::exception& e) {
            msg = std::string("exception: ") + e.what();
        }
        if (msg.empty()) {
            ++passed;
            out << "PASS " << ck.id << "\n";
        } else {
            out << "FAIL " << ck.id << ": " << msg << "\n";
        }
    }
    out << "selftest: " << passed << "/" << list.size() << " passed\n";
    return passed == list.size() ? kExitPass : kExitCheckFailed;
}

}  // namespace berezin
