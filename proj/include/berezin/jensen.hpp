#pragma once

#include <Eigen/Dense>
#include <vector>

#include "berezin/convex.hpp"

namespace berezin {

/// Values of a grid function on the finite node set.
using GridFunction = std::vector<Point>;

GridFunction real_grid_function(const std::vector<double>& v);

/// A pair (I_X, I_R) of functionals on grid functions.
struct FunctionalPair {
    enum class Kind { WeightedAverage, PointEvaluation, EigenvalueRank };

    Kind kind = Kind::WeightedAverage;
    std::vector<double> weights;     // WeightedAverage
    std::vector<std::size_t> nodes;  // WeightedAverage
    std::size_t node = 0;            // PointEvaluation
    Eigen::MatrixXd A;               // EigenvalueRank, real symmetric
    int rank = 1;                    // EigenvalueRank, 1-based

    static FunctionalPair weighted_average(std::vector<double> w, std::vector<std::size_t> nodes);
    static FunctionalPair uniform_average(std::size_t n);
    static FunctionalPair point_evaluation(std::size_t node);
    static FunctionalPair eigenvalue_rank(Eigen::MatrixXd A, int rank);

    /// Throws PreconditionError when an invariant fails.
    void validate(std::size_t grid_size) const;

    Point apply_x(const GridFunction& sigma) const;
    double apply_r(const std::vector<double>& g) const;
};

struct JensenReport {
    double lhs = 0.0;
    double rhs = 0.0;
    double c1 = 0.0;
    double c2 = 0.0;
    AffinePair witness;
    double eps = 0.0;
    double slack = 0.0;

    bool pass(double tol) const { return slack >= -tol; }
};

/// The abstract Jensen inequality phi(I_X sigma) <= I_R(phi sigma) + C1 + C2 with measured defects
/// C1 = max(0, l(I_X sigma) - I_R(l sigma)) and C2 = max(0, I_R(l sigma) - I_R(phi sigma)),
/// where l comes from the eps-subdifferential at I_X sigma. Reports the smallest eps in the schedule.
JensenReport check_lemma3(const FunctionalPair& pair, const GridFunction& sigma, const ConvexFunction& phi,
                          const std::vector<double>& eps_schedule = {1e-2, 1e-4, 1e-6, 1e-8});

/// n-th smallest eigenvalue (1-based) of A + diag(sigma).
double rayleigh_eigenvalue(const Eigen::MatrixXd& A, const std::vector<double>& sigma, int n);

/// F(lambda) = max{a_-(sup sigma - lambda)_+, (b - 1)_+(lambda - inf sigma)},
/// a = sup of the subdifferential at inf sigma, b = inf of the subdifferential at sup sigma.
/// May be +inf when a subdifferential is empty; 0 * inf is taken as 0.
double example4_error(const std::vector<double>& sigma, const ConvexFunction& phi, double lambda_n);

/// F with the slopes taken at min(inf sigma, lambda) and max(sup sigma, lambda). It equals F when
/// lambda lies in [inf sigma, sup sigma] and remains a valid bound when lambda exceeds sup sigma.
double example4_error_extended(const std::vector<double>& sigma, const ConvexFunction& phi, double lambda_n);

/// lhs = phi(lambda_n(sigma)), rhs = lambda_n(phi(sigma)) + F(lambda_n(sigma)); c1 holds F.
JensenReport example4_check(const Eigen::MatrixXd& A, const std::vector<double>& sigma, const ConvexFunction& phi,
                            int n);

/// Tridiagonal Dirichlet Laplacian (2 on the diagonal, -1 off it), positive definite.
Eigen::MatrixXd laplacian_1d(int n);

}  // namespace berezin
