#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "support.hpp"

#include "berezin/error.hpp"
#include "berezin/jensen.hpp"

using namespace berezin;
using testing::Gen;

namespace {

Eigen::MatrixXd with_potential(const Eigen::MatrixXd& A, const std::vector<double>& s) {
    Eigen::MatrixXd M = A;
    for (std::size_t i = 0; i < s.size(); ++i) M(i, i) += s[i];
    return M;
}

Eigen::MatrixXd random_symmetric(Gen& g, int n) {
    Eigen::MatrixXd M(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j <= i; ++j) M(i, j) = M(j, i) = g.normal();
    return M;
}

Eigen::MatrixXd random_psd(Gen& g, int n) {
    const Eigen::MatrixXd B = random_symmetric(g, n);
    return B * B.transpose();
}

std::vector<double> random_vector(Gen& g, int n, double lo, double hi) {
    std::vector<double> v(n);
    for (auto& x : v) x = g.uniform(lo, hi);
    return v;
}

}  // namespace

TEST_CASE("uniform average of (0,1,2,3) under t^2") {
    const auto r = check_lemma3(FunctionalPair::uniform_average(4), real_grid_function({0, 1, 2, 3}),
                                ConvexFunction::power(1.0, 2.0));
    CHECK(r.lhs == doctest::Approx(2.25));
    CHECK(r.rhs == doctest::Approx(3.5));
    CHECK(r.slack == doctest::Approx(1.25));
    CHECK(r.c1 <= 1e-12);
    CHECK(r.c2 == 0.0);
    CHECK(r.eps == 1e-8);
}

TEST_CASE("point evaluation of an affine function is exact") {
    Gen g(1);
    const auto sigma = real_grid_function(random_vector(g, 6, -2, 2));
    for (std::size_t j = 0; j < 6; ++j) {
        const auto r = check_lemma3(FunctionalPair::point_evaluation(j), sigma, ConvexFunction::affine(1.5, -0.25));
        CHECK(std::abs(r.slack) <= 1e-12);
    }
}

TEST_CASE("property: weighted averages have zero defects and affine functions are exact") {
    Gen g(2);
    for (int trial = 0; trial < 100; ++trial) {
        const int n = g.integer(1, 12);
        std::vector<double> w(n);
        double s = 0.0;
        for (auto& x : w) s += (x = g.uniform(0.0, 1.0));
        for (auto& x : w) x /= s;
        w.back() = 1.0;
        for (int i = 0; i + 1 < n; ++i) w.back() -= w[i];
        if (w.back() < 0.0) continue;
        std::vector<std::size_t> nodes(n);
        for (int i = 0; i < n; ++i) nodes[i] = static_cast<std::size_t>(g.integer(0, 11));
        const auto pair = FunctionalPair::weighted_average(w, nodes);
        const auto sigma = real_grid_function(random_vector(g, 12, -2, 2));
        for (const char* id : {"quad", "exp", "abs", "cosh", "power:4"}) {
            const auto r = check_lemma3(pair, sigma, ConvexFunction::from_id(id));
            CHECK(r.c1 <= 1e-10);
            CHECK(r.c2 <= 1e-10);
            CHECK(r.slack >= -1e-10);
        }
        const auto a = check_lemma3(pair, sigma, ConvexFunction::affine(-0.7, 3.0));
        CHECK(std::abs(a.slack) <= 1e-10);
    }
}

TEST_CASE("weighted averages on the plane with the squared modulus") {
    GridFunction sigma = {Point{1, 0}, Point{0, 1}, Point{-1, 0}, Point{0, -1}};
    const auto r = check_lemma3(FunctionalPair::uniform_average(4), sigma, ConvexFunction::squared_modulus());
    CHECK(r.lhs == doctest::Approx(0.0));
    CHECK(r.rhs == doctest::Approx(1.0));
}

TEST_CASE("eigenvalue-rank pair on the Laplacian with sampled exp") {
    Gen g(3);
    const auto phi = ConvexFunction::sample(ConvexFunction::exp(), -1.0, 6.0, 701);
    for (int trial = 0; trial < 20; ++trial) {
        const auto sigma = random_vector(g, 8, 0.0, 1.0);
        const auto pair = FunctionalPair::eigenvalue_rank(laplacian_1d(8), 1);
        const auto r = check_lemma3(pair, real_grid_function(sigma), phi);
        CHECK(r.slack >= -1e-8);
        const double lam = testing::jacobi_eigenvalues(with_potential(laplacian_1d(8), sigma))[0];
        CHECK(r.lhs == doctest::Approx(phi(lam).value()).epsilon(1e-10));
        CHECK(r.c1 <= example4_error(sigma, phi, lam) + 1e-10);
    }
}

TEST_CASE("functional pair invariants") {
    CHECK_THROWS_AS(FunctionalPair::weighted_average({0.5, 0.4}, {0, 1}).validate(2), PreconditionError);
    CHECK_THROWS_AS(FunctionalPair::weighted_average({1.5, -0.5}, {0, 1}).validate(2), PreconditionError);
    CHECK_THROWS_AS(FunctionalPair::weighted_average({1.0}, {3}).validate(2), PreconditionError);
    CHECK_THROWS_AS(FunctionalPair::point_evaluation(5).validate(3), PreconditionError);
    Eigen::MatrixXd ns = Eigen::MatrixXd::Identity(2, 2);
    ns(0, 1) = 1.0;
    CHECK_THROWS_AS(FunctionalPair::eigenvalue_rank(ns, 1).validate(2), PreconditionError);
    CHECK_THROWS_AS(FunctionalPair::eigenvalue_rank(Eigen::MatrixXd::Identity(2, 2), 3).validate(2), PreconditionError);
    CHECK_THROWS_AS(FunctionalPair::eigenvalue_rank(Eigen::MatrixXd::Identity(2, 2), 0).validate(2), PreconditionError);
    CHECK_NOTHROW(FunctionalPair::uniform_average(3).validate(3));
}

TEST_CASE("eps schedules and witness failures") {
    const auto pair = FunctionalPair::uniform_average(2);
    const auto sigma = real_grid_function({0.0, 1.0});
    CHECK_THROWS_AS(check_lemma3(pair, sigma, ConvexFunction::quadratic(), {}), PreconditionError);
    CHECK_THROWS_AS(check_lemma3(pair, sigma, ConvexFunction::quadratic(), {1e-2, 1e-1}), PreconditionError);
    CHECK_THROWS_AS(check_lemma3(pair, real_grid_function({0.0, 3.0}), ConvexFunction::indicator(0, 1)), DomainError);
    // Closed functions always have eps-subgradients; the report keeps the last one.
    CHECK(check_lemma3(pair, sigma, ConvexFunction::xlogx(), {1e-1, 1e-3}).eps == 1e-3);
}

TEST_CASE("Rayleigh eigenvalues") {
    CHECK(rayleigh_eigenvalue(Eigen::MatrixXd::Zero(3, 3), {3, 1, 2}, 1) == 1.0);
    Eigen::MatrixXd D = Eigen::MatrixXd::Zero(3, 3);
    D.diagonal() << 1, 2, 3;
    CHECK(rayleigh_eigenvalue(D, {0, 0, 0}, 2) == doctest::Approx(2.0));
    CHECK_THROWS_AS(rayleigh_eigenvalue(D, {0, 0, 0}, 4), PreconditionError);
    CHECK_THROWS_AS(rayleigh_eigenvalue(D, {0, 0}, 1), PreconditionError);

    Gen g(4);
    for (int trial = 0; trial < 20; ++trial) {
        const Eigen::MatrixXd A = random_psd(g, 6);
        const auto sigma = random_vector(g, 6, -1, 1);
        const auto want = testing::jacobi_eigenvalues(with_potential(A, sigma));
        for (int n = 1; n <= 6; ++n)
            CHECK(std::abs(rayleigh_eigenvalue(A, sigma, n) - want[n - 1]) <= 1e-10 * (1.0 + std::abs(want[n - 1])));
    }
}

TEST_CASE("property: eigenvalues are monotone in the potential and shift with constants") {
    Gen g(5);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = g.integer(1, 9);
        const Eigen::MatrixXd A = random_symmetric(g, n);
        auto s1 = random_vector(g, n, -2, 2);
        auto s2 = s1;
        for (auto& x : s2) x += g.uniform(0.0, 1.0);
        const double c = g.uniform(-3, 3);
        auto s3 = s1;
        for (auto& x : s3) x += c;
        for (int k = 1; k <= n; ++k) {
            CHECK(rayleigh_eigenvalue(A, s1, k) <= rayleigh_eigenvalue(A, s2, k) + 1e-10);
            CHECK(std::abs(rayleigh_eigenvalue(A, s3, k) - rayleigh_eigenvalue(A, s1, k) - c) <= 1e-10 * (1.0 + std::abs(c)));
        }
    }
}

TEST_CASE("error functional: closed-form cases") {
    const std::vector<double> unit = {0.0, 0.3, 1.0};
    Gen g(6);
    for (int i = 0; i < 10; ++i) {
        const double lam = g.uniform(-3, 3);
        CHECK(example4_error(unit, ConvexFunction::pospart(), lam) == 0.0);
        CHECK(example4_error(unit, ConvexFunction::affine(1.0, 0.0), lam) == 0.0);
    }
    CHECK(example4_error(unit, ConvexFunction::power(1.0, 2.0), 0.5) == doctest::Approx(0.5));
    // a_- (sup sigma - lambda) branch: slope at inf sigma is negative.
    CHECK(example4_error({-1.0, 1.0}, ConvexFunction::power(1.0, 2.0), 0.0) == doctest::Approx(2.0));
    // Empty subdifferential at an endpoint of the domain: sup := -inf, so a_- = +inf.
    CHECK(std::isinf(example4_error({0.0, 1.0}, ConvexFunction::xlogx(), 0.5)));
    // 0 * inf = 0 when lambda sits at sup sigma.
    CHECK(example4_error({0.0, 1.0}, ConvexFunction::xlogx(), 1.0) == 0.0);
    CHECK_THROWS_AS(example4_error({}, ConvexFunction::quadratic(), 0.0), PreconditionError);
}

TEST_CASE("property: error functional is nonnegative and vanishes when sup sigma <= lambda and b <= 1") {
    Gen g(7);
    for (int trial = 0; trial < 200; ++trial) {
        const auto sigma = random_vector(g, 5, -1, 1);
        const double lam = g.uniform(-3, 3);
        for (const char* id : {"quad", "exp", "abs", "pospart", "cosh"}) {
            const auto phi = ConvexFunction::from_id(id);
            const double F = example4_error(sigma, phi, lam);
            CHECK(F >= 0.0);
            const double mx = *std::max_element(sigma.begin(), sigma.end());
            if (mx <= lam && subdifferential(phi, mx).inf() <= 1.0) CHECK(F == 0.0);
        }
    }
}

TEST_CASE("eigenvalue inequality on diagonal and Laplacian instances") {
    const auto d = example4_check(Eigen::MatrixXd::Zero(2, 2), {0.2, 0.9}, ConvexFunction::power(1.0, 2.0), 1);
    CHECK(d.lhs == doctest::Approx(0.04));
    CHECK(d.rhs == doctest::Approx(0.04 + d.c1));
    CHECK(d.slack >= 0.0);

    std::vector<double> s(16);
    for (int i = 0; i < 16; ++i) s[i] = std::pow(std::sin(0.3 * i), 2);
    const auto L = laplacian_1d(16);
    const auto e = example4_check(L, s, ConvexFunction::exp(), 1);
    CHECK(e.slack >= -1e-8);
    const auto p = example4_check(L, s, ConvexFunction::pospart(), 16);
    CHECK(p.c1 == 0.0);
    CHECK(p.slack >= -1e-8);
}

TEST_CASE("slopes at sup sigma undercount once lambda exceeds sup sigma; the widened slopes do not") {
    // 1x1 instance: lambda = 10.5 lies far above sup sigma = 0.5.
    Eigen::MatrixXd A(1, 1);
    A(0, 0) = 10.0;
    const auto phi = ConvexFunction::exp();
    const auto r = example4_check(A, {0.5}, phi, 1);
    CHECK(r.lhs == doctest::Approx(std::exp(10.5)));
    CHECK(r.slack < 0.0);
    const double Fx = example4_error_extended({0.5}, phi, 10.5);
    CHECK(10.0 + std::exp(0.5) + Fx >= std::exp(10.5));

    // The widened functional agrees with the original inside [inf sigma, sup sigma] and bounds every random PSD case.
    Gen g(8);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = g.integer(1, 6);
        const Eigen::MatrixXd P = random_psd(g, n) * 0.3;
        const auto sigma = random_vector(g, n, 0.0, 1.0);
        for (const char* id : {"quad", "exp", "pospart"}) {
            const auto f = ConvexFunction::from_id(id);
            for (int k = 1; k <= n; ++k) {
                const double lam = rayleigh_eigenvalue(P, sigma, k);
                std::vector<double> fs(n);
                for (int i = 0; i < n; ++i) fs[i] = f(sigma[i]).value();
                const double rhs = rayleigh_eigenvalue(P, fs, k) + example4_error_extended(sigma, f, lam);
                CHECK(f(lam).value() <= rhs + 1e-8 * (1.0 + std::abs(rhs)));
                const auto [mn, mx] = std::minmax_element(sigma.begin(), sigma.end());
                if (lam >= *mn && lam <= *mx)
                    CHECK(example4_error_extended(sigma, f, lam) == example4_error(sigma, f, lam));
            }
        }
    }
}

TEST_CASE("Dirichlet Laplacian") {
    const auto L = laplacian_1d(5);
    CHECK(L(0, 0) == 2.0);
    CHECK(L(0, 1) == -1.0);
    CHECK(L(0, 2) == 0.0);
    const auto ev = testing::jacobi_eigenvalues(L);
    CHECK(ev[0] == doctest::Approx(2.0 - 2.0 * std::cos(testing::kPi / 6)).epsilon(1e-12));
}
