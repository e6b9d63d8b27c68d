#include "berezin/jensen.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

#include "berezin/error.hpp"

namespace berezin {

GridFunction real_grid_function(const std::vector<double>& v) { return {v.begin(), v.end()}; }

FunctionalPair FunctionalPair::weighted_average(std::vector<double> w, std::vector<std::size_t> nodes) {
    FunctionalPair p;
    p.kind = Kind::WeightedAverage;
    p.weights = std::move(w);
    p.nodes = std::move(nodes);
    return p;
}

FunctionalPair FunctionalPair::uniform_average(std::size_t n) {
    std::vector<std::size_t> nodes(n);
    for (std::size_t i = 0; i < n; ++i) nodes[i] = i;
    return weighted_average(std::vector<double>(n, 1.0 / static_cast<double>(n)), std::move(nodes));
}

FunctionalPair FunctionalPair::point_evaluation(std::size_t node) {
    FunctionalPair p;
    p.kind = Kind::PointEvaluation;
    p.node = node;
    return p;
}

FunctionalPair FunctionalPair::eigenvalue_rank(Eigen::MatrixXd A, int rank) {
    FunctionalPair p;
    p.kind = Kind::EigenvalueRank;
    p.A = std::move(A);
    p.rank = rank;
    return p;
}

void FunctionalPair::validate(std::size_t grid_size) const {
    switch (kind) {
        case Kind::WeightedAverage: {
            if (weights.size() != nodes.size() || weights.empty())
                throw PreconditionError("weighted_average: weights and nodes must be non-empty and of equal length");
            double s = 0.0;
            for (double w : weights) {
                if (w < 0.0) throw PreconditionError("weighted_average: negative weight");
                s += w;
            }
            if (std::abs(s - 1.0) > 1e-12) throw PreconditionError("weighted_average: weights must sum to 1");
            for (auto n : nodes)
                if (n >= grid_size) throw PreconditionError("weighted_average: node index out of range");
            break;
        }
        case Kind::PointEvaluation:
            if (node >= grid_size) throw PreconditionError("point_evaluation: node index out of range");
            break;
        case Kind::EigenvalueRank:
            if (A.rows() != A.cols() || static_cast<std::size_t>(A.rows()) != grid_size)
                throw PreconditionError("eigenvalue_rank: A must be square of the grid size");
            if ((A - A.transpose()).cwiseAbs().maxCoeff() > 1e-12)
                throw PreconditionError("eigenvalue_rank: A is not symmetric");
            if (rank < 1 || rank > A.rows()) throw PreconditionError("eigenvalue_rank: rank out of range");
            break;
    }
}

Point FunctionalPair::apply_x(const GridFunction& sigma) const {
    switch (kind) {
        case Kind::WeightedAverage: {
            Point acc = 0.0;
            for (std::size_t i = 0; i < nodes.size(); ++i) acc += weights[i] * sigma[nodes[i]];
            return acc;
        }
        case Kind::PointEvaluation: return sigma[node];
        case Kind::EigenvalueRank: {
            std::vector<double> re(sigma.size());
            for (std::size_t i = 0; i < sigma.size(); ++i) {
                if (sigma[i].imag() != 0.0) throw ShapeError("eigenvalue_rank: grid function must be real");
                re[i] = sigma[i].real();
            }
            return rayleigh_eigenvalue(A, re, rank);
        }
    }
    return 0.0;
}

double FunctionalPair::apply_r(const std::vector<double>& g) const {
    switch (kind) {
        case Kind::WeightedAverage: {
            double acc = 0.0;
            for (std::size_t i = 0; i < nodes.size(); ++i) acc += weights[i] * g[nodes[i]];
            return acc;
        }
        case Kind::PointEvaluation: return g[node];
        case Kind::EigenvalueRank: return rayleigh_eigenvalue(A, g, rank);
    }
    return 0.0;
}

JensenReport check_lemma3(const FunctionalPair& pair, const GridFunction& sigma, const ConvexFunction& phi,
                          const std::vector<double>& eps_schedule) {
    pair.validate(sigma.size());
    if (eps_schedule.empty()) throw PreconditionError("check_lemma3: empty eps schedule");
    for (std::size_t i = 0; i < eps_schedule.size(); ++i)
        if (!(eps_schedule[i] > 0.0) || (i > 0 && !(eps_schedule[i] < eps_schedule[i - 1])))
            throw PreconditionError("check_lemma3: eps schedule must be positive and strictly decreasing");

    std::vector<double> phi_sigma(sigma.size());
    for (std::size_t i = 0; i < sigma.size(); ++i) {
        const ExtendedReal v = phi(sigma[i]);
        if (v.is_infinite()) throw DomainError("check_lemma3: phi(sigma) = +inf at node " + std::to_string(i));
        phi_sigma[i] = v.value();
    }
    const Point x0 = pair.apply_x(sigma);
    const ExtendedReal fx0 = phi(x0);
    if (fx0.is_infinite()) throw DomainError("check_lemma3: I_X(sigma) lies outside the domain of phi");
    const double ir_phi = pair.apply_r(phi_sigma);

    JensenReport rep;
    for (double eps : eps_schedule) {
        const auto w = eps_subdifferential_witness(phi, x0, eps);
        if (!w) throw WitnessError("check_lemma3: no eps-subgradient found at eps = " + std::to_string(eps));
        std::vector<double> l_sigma(sigma.size());
        for (std::size_t i = 0; i < sigma.size(); ++i) l_sigma[i] = (*w)(sigma[i]);
        const double ir_l = pair.apply_r(l_sigma);
        rep.witness = *w;
        rep.eps = eps;
        rep.c1 = std::max(0.0, (*w)(x0) - ir_l);
        rep.c2 = std::max(0.0, ir_l - ir_phi);
    }
    rep.lhs = fx0.value();
    rep.rhs = ir_phi + rep.c1 + rep.c2;
    rep.slack = rep.rhs - rep.lhs;
    return rep;
}

double rayleigh_eigenvalue(const Eigen::MatrixXd& A, const std::vector<double>& sigma, int n) {
    if (A.rows() != A.cols() || static_cast<std::size_t>(A.rows()) != sigma.size())
        throw PreconditionError("rayleigh_eigenvalue: A must be square of the grid size");
    if (n < 1 || n > A.rows()) throw PreconditionError("rayleigh_eigenvalue: rank out of range");
    Eigen::MatrixXd M = 0.5 * (A + A.transpose());
    for (std::size_t i = 0; i < sigma.size(); ++i) M(i, i) += sigma[i];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw NumericError("rayleigh_eigenvalue: eigensolver did not converge");
    return es.eigenvalues()(n - 1);
}

namespace {

double error_with_slopes(double a, double b, double mn, double mx, double lambda_n) {
    auto product = [](double coef, double dist) { return dist == 0.0 ? 0.0 : coef * dist; };
    const double a_minus = std::max(0.0, -a);
    const double b_plus = std::max(0.0, b - 1.0);
    const double t1 = product(a_minus, std::max(0.0, mx - lambda_n));
    const double t2 = product(b_plus, lambda_n - mn);
    return std::max(t1, t2);
}

}  // namespace

double example4_error(const std::vector<double>& sigma, const ConvexFunction& phi, double lambda_n) {
    if (sigma.empty()) throw PreconditionError("example4_error: empty grid function");
    const auto [mn, mx] = std::minmax_element(sigma.begin(), sigma.end());
    return error_with_slopes(subdifferential(phi, *mn).sup(), subdifferential(phi, *mx).inf(), *mn, *mx, lambda_n);
}

double example4_error_extended(const std::vector<double>& sigma, const ConvexFunction& phi, double lambda_n) {
    if (sigma.empty()) throw PreconditionError("example4_error_extended: empty grid function");
    const auto [mn, mx] = std::minmax_element(sigma.begin(), sigma.end());
    const double a = subdifferential(phi, std::min(*mn, lambda_n)).sup();
    const double b = subdifferential(phi, std::max(*mx, lambda_n)).inf();
    return error_with_slopes(a, b, *mn, *mx, lambda_n);
}

JensenReport example4_check(const Eigen::MatrixXd& A, const std::vector<double>& sigma, const ConvexFunction& phi,
                            int n) {
    const double lam = rayleigh_eigenvalue(A, sigma, n);
    std::vector<double> phi_sigma(sigma.size());
    for (std::size_t i = 0; i < sigma.size(); ++i) {
        const ExtendedReal v = phi(sigma[i]);
        if (v.is_infinite()) throw DomainError("example4_check: phi(sigma) = +inf at node " + std::to_string(i));
        phi_sigma[i] = v.value();
    }
    JensenReport rep;
    const ExtendedReal fl = phi(lam);
    if (fl.is_infinite()) throw DomainError("example4_check: phi(lambda_n) = +inf");
    rep.lhs = fl.value();
    rep.c1 = example4_error(sigma, phi, lam);
    rep.rhs = rayleigh_eigenvalue(A, phi_sigma, n) + rep.c1;
    rep.slack = rep.rhs - rep.lhs;
    if (auto w = eps_subdifferential_witness(phi, lam, 0.0)) rep.witness = *w;
    return rep;
}

Eigen::MatrixXd laplacian_1d(int n) {
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        A(i, i) = 2.0;
        if (i + 1 < n) A(i, i + 1) = A(i + 1, i) = -1.0;
    }
    return A;
}

}  // namespace berezin
