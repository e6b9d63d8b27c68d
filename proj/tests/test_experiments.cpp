#include <cmath>

#include "doctest.h"
#include "support.hpp"

#include "berezin/error.hpp"
#include "berezin/inequality.hpp"

using namespace berezin;
using testing::kPi;

namespace {

double trace_norm_oracle(const Eigen::MatrixXcd& A) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(A.adjoint() * A);
    double s = 0.0;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) s += std::sqrt(std::max(0.0, es.eigenvalues()(i)));
    return s;
}

// Same bump profile as the preset, written out independently.
double bump(double x, double xi, double x0, double r) {
    double dx = std::fmod(x - x0, 2.0 * kPi);
    if (dx > kPi) dx -= 2.0 * kPi;
    if (dx < -kPi) dx += 2.0 * kPi;
    const double r2 = (dx * dx + xi * xi) / (r * r);
    return r2 < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - r2)) : 0.0;
}

}  // namespace

TEST_CASE("circle experiment with B = I and phi = t counts modes") {
    Example8Options opt;
    opt.K = 16;
    const std::vector<double> mus = {0.5, 1.5, 4.0, 7.5, 12.0};
    const auto t = example8_experiment("one", ConvexFunction::affine(1.0, 0.0), mus, opt);
    REQUIRE(t.rows.size() == mus.size());
    for (std::size_t i = 0; i < mus.size(); ++i) {
        const double mu = mus[i];
        int count = 0;
        for (int k = -16; k < 16; ++k)
            if ((k == 0 ? 1.0 : std::abs(k)) < mu) ++count;
        const auto& r = t.rows[i];
        CHECK(r.sweep_value == mu);
        CHECK(r.get("rank") == count);
        CHECK(r.lhs == doctest::Approx(count).epsilon(1e-12));
        CHECK(r.get("trace_B_Pi") == doctest::Approx(count).epsilon(1e-12));
        CHECK(std::abs(r.get("eq7_remainder")) <= 2.0);
        CHECK(std::abs(r.get("phi_remainder")) <= 2.0);
        if (mu > 1.0) CHECK(r.get("integral_b") == doctest::Approx(2.0 * mu).epsilon(1e-12));
    }
    CHECK(t.rows[0].get("rank") == 0.0);
    CHECK(t.rows[0].lhs == 0.0);
    CHECK(t.rows[0].lhs <= t.rows[0].rhs);
}

TEST_CASE("circle experiment: cos symbol remainders stay bounded and the certified bound holds") {
    Example8Options opt;
    opt.K = 32;
    const auto t = example8_experiment("cos:0.5,1", ConvexFunction::power(1.0, 2.0), {4, 8, 16}, opt);
    CHECK(bounded_by_first(t.column("eq7_remainder"), 2.0));
    CHECK(bounded_by_first(t.column("phi_remainder"), 2.0));
    for (const auto& r : t.rows) CHECK(r.get("certified_slack") >= -1e-8);
    CHECK_THROWS_AS(example8_experiment("cos:0.5,1", ConvexFunction::power(1.0, 2.0), {40}, opt), TruncationError);
    CHECK_THROWS_AS(example8_experiment("expix", ConvexFunction::power(1.0, 2.0), {4}, opt), PreconditionError);
    CHECK_THROWS_AS(example8_experiment("one", ConvexFunction::squared_modulus(), {4}, opt), PreconditionError);
}

TEST_CASE("commutator experiment: full and empty regions") {
    Example10Options opt;
    opt.N = 32;
    const auto full = example10_experiment(RegionSpec::parse("full"), ConvexFunction::squared_modulus(), {0.2}, opt);
    const auto& f = full.rows[0];
    CHECK(f.get("R_trace_norm") <= 1e-12);
    CHECK(f.get("identity_residual") <= 1e-12);
    CHECK(f.slack >= -1e-8);
    // Q1(1) = I, so the eigenvalue sum is N.
    CHECK(f.lhs == doctest::Approx(32.0).epsilon(1e-10));
    CHECK(f.get("phase_term") == doctest::Approx(32.0).epsilon(1e-10));

    const auto empty = example10_experiment(RegionSpec::parse("empty"), ConvexFunction::squared_modulus(), {0.2}, opt);
    const auto& e = empty.rows[0];
    CHECK(e.lhs == 0.0);
    CHECK(e.rhs == 0.0);
    CHECK(e.get("R_trace_norm") == 0.0);
    CHECK(e.get("phase_volume") == 0.0);

    CHECK_THROWS_AS(example10_experiment(RegionSpec::parse("full"), ConvexFunction::power(1.0, 2.0), {0.2}, opt),
                    PreconditionError);
    CHECK_THROWS_AS(example10_experiment(RegionSpec::parse("full"), ConvexFunction::from_id("lift:exp"), {0.2}, opt),
                    PreconditionError);
}

TEST_CASE("commutator experiment: rectangle against direct matrices") {
    Example10Options opt;
    opt.N = 32;
    const double h = 0.2;
    const auto t = example10_experiment(RegionSpec::parse("1.05,4.05,-0.55,0.65"), ConvexFunction::squared_modulus(), {h}, opt);
    const auto& r = t.rows[0];
    auto inside = [](double x, double xi) { return x >= 1.05 && x < 4.05 && xi >= -0.55 && xi < 0.65 ? 1.0 : 0.0; };
    const auto Q1 = testing::direct_quantization(32, h, 2 * kPi, 1.0, [&](double x, double xi) { return cplx(inside(x, xi)); });
    const auto Q0c =
        testing::direct_quantization(32, h, 2 * kPi, 0.0, [&](double x, double xi) { return cplx(1.0 - inside(x, xi)); });
    const Eigen::MatrixXcd R = Q1 * Q0c;
    CHECK(r.get("R_trace_norm") == doctest::Approx(trace_norm_oracle(R)).epsilon(1e-8));
    CHECK(r.get("identity_residual") <= 1e-10);
    CHECK(r.get("identity_residual_adjoint") <= 1e-10);
    CHECK(r.slack >= -1e-8);
    CHECK(r.get("certified_slack") >= -1e-8);
    // Schur: sum |lambda|^2 <= ||Q1||_F^2.
    CHECK(r.lhs <= Q1.squaredNorm() + 1e-10);
    int count = 0;
    for (int j = 0; j < 32; ++j)
        for (int k = -16; k < 16; ++k) count += inside(j * 2 * kPi / 32, 2 * kPi * h * k / (2 * kPi)) > 0.5 ? 1 : 0;
    CHECK(r.get("phase_volume") == doctest::Approx(count * (2 * kPi / 32) * h).epsilon(1e-12));
}

TEST_CASE("commutator experiment is independent of the worker count") {
    Example10Options a, b;
    a.N = b.N = 32;
    a.workers = 1;
    b.workers = 4;
    const auto region = RegionSpec::parse("1,4,-0.6,0.6");
    const std::vector<double> hs = {0.4, 0.2, 0.1};
    CHECK(example10_experiment(region, ConvexFunction::squared_modulus(), hs, a).to_csv() ==
          example10_experiment(region, ConvexFunction::squared_modulus(), hs, b).to_csv());
}

TEST_CASE("factorisation residual: constant symbol and bump against direct matrices") {
    Example11Options opt;
    opt.N = 32;
    const auto c = example11_residual("const:0.5", ConvexFunction::power(1.0, 2.0), 0.5, {0.4, 0.1}, opt);
    for (const auto& r : c.rows) CHECK(r.get("residual_trace_norm") == 0.0);

    const double h = 0.2;
    const auto t = example11_residual("bump:pi,0,1,1", ConvexFunction::power(1.0, 2.0), 0.0, {h}, opt);
    // phi = t^2, z = 0: phi_z(sigma) = sigma^2 and the signed root is sigma itself.
    auto s = [&](double x, double xi) { return cplx(bump(x, xi, kPi, 1.0)); };
    auto s2 = [&](double x, double xi) { return cplx(std::pow(bump(x, xi, kPi, 1.0), 2)); };
    const auto W = testing::direct_quantization(32, h, 2 * kPi, 0.5, s2);
    const auto L1 = testing::direct_quantization(32, h, 2 * kPi, 1.0, s);
    const auto R0 = testing::direct_quantization(32, h, 2 * kPi, 0.0, s);
    const Eigen::MatrixXcd D = W - L1 * R0;
    CHECK(t.rows[0].get("residual_trace_norm") == doctest::Approx(trace_norm_oracle(D)).epsilon(1e-8));

    CHECK_THROWS_AS(example11_residual("bump:pi,0,1,1", ConvexFunction::abs(), 0.0, {h}, opt), NotDifferentiableError);
    CHECK_THROWS_AS(example11_residual("bump:pi,0,1,1", ConvexFunction::abs(), 0.5, {h}, opt), StrongConvexityError);
    CHECK_THROWS_AS(example11_residual("bump:pi,0,1,1", ConvexFunction::affine(2.0, 1.0), 0.5, {h}, opt), StrongConvexityError);
    CHECK_THROWS_AS(example11_residual("expix", ConvexFunction::power(1.0, 2.0), 0.0, {h}, opt), PreconditionError);
}

TEST_CASE("factorisation residual stays bounded as h shrinks") {
    Example11Options opt;
    opt.N = 64;
    const auto t = example11_residual("bump:pi,0,1,1", ConvexFunction::power(1.0, 2.0), 0.0, {0.4, 0.2, 0.1}, opt);
    CHECK(bounded_by_first(t.column("residual_trace_norm"), 2.0));
    const auto c = example11_residual("bump:pi,0,1,1", ConvexFunction::cosh(), 0.0, {0.4, 0.2, 0.1}, opt);
    CHECK(bounded_by_first(c.column("residual_trace_norm"), 2.0));
}
