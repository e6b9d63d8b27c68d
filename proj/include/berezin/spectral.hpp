#pragma once

#include <Eigen/Dense>
#include <complex>
#include <functional>
#include <optional>
#include <vector>

namespace berezin {

using cplx = std::complex<double>;

struct Cluster {
    cplx center;
    int multiplicity = 0;
};

struct SpectrumReport {
    std::vector<Cluster> clusters;
    double cluster_tol = 0.0;
    std::vector<cplx> eigenvalues;
    /// Eigenvalue condition estimates ||V e_i|| ||e_i^T V^-1||, aligned with `eigenvalues`.
    std::vector<double> condition;
};

/// Default clustering tolerance 1e-8 (1 + max |a_ij|).
double default_cluster_tol(const Eigen::MatrixXcd& A);

/// Eigenvalues of a dense matrix, clustered single-linkage within cluster_tol (default when omitted).
/// Clusters are ordered by (real, imag) of their centers.
SpectrumReport spectrum(const Eigen::MatrixXcd& A, std::optional<double> cluster_tol = std::nullopt);

struct InvariantBasis {
    Eigen::MatrixXcd basis;       // n x m, orthonormal columns
    Eigen::MatrixXcd triangular;  // m x m upper triangular, basis* A basis
    double residual = 0.0;        // ||A basis - basis triangular||_max
};

/// Orthonormal basis of the invariant subspace belonging to the selected clusters, through a
/// reordered complex Schur form. ConditioningError when the invariance residual exceeds 1e-8 (1 + ||A||).
InvariantBasis schur_invariant_basis(const Eigen::MatrixXcd& A, const SpectrumReport& spec,
                                     const std::vector<int>& selected);

cplx trace(const Eigen::MatrixXcd& A);
double trace_norm(const Eigen::MatrixXcd& A);

/// Numerical range enclosure. `inner` are support points (a convex polygon inside the range);
/// `outer` are the corners of the support-line polygon that contains it.
struct RangeHull {
    std::vector<cplx> inner;
    std::vector<cplx> outer;
    std::vector<double> angles;
    std::vector<double> support;  // max Re(e^{-i angle} w) over the range
    int n_angles = 0;

    /// Membership in the support-line polygon, inflated by `inflation`.
    bool contains(cplx z, double inflation = 1e-8) const;
};

RangeHull numerical_range_hull(const Eigen::MatrixXcd& A, int n_angles = 64);

/// Counterclockwise convex hull of points (collinear points dropped).
std::vector<cplx> convex_hull(std::vector<cplx> pts);

struct GardingResult {
    double nu = 0.0;
    double lambda_min_at_nu = 0.0;     // lambda_min(Herm S + nu T)
    double lambda_min_below = 0.0;     // lambda_min(Herm S + (nu - 1e-6) T); meaningful for nu > 0
    bool lower_certified = true;       // nu == 0 or lambda_min_below < 0
};

/// Minimal nu >= 0 with (S + S*)/2 + nu T >= 0. T must be Hermitian positive definite.
/// The upper certificate lambda_min(Herm S + nu T) >= -1e-10 is enforced (nu is nudged up past rounding);
/// the lower one is reported in `lower_certified`.
GardingResult garding(const Eigen::MatrixXcd& S, const Eigen::MatrixXcd& T);
inline double garding_nu(const Eigen::MatrixXcd& S, const Eigen::MatrixXcd& T) { return garding(S, T).nu; }

/// Hermitian part (A + A*)/2.
inline Eigen::MatrixXcd herm(const Eigen::MatrixXcd& A) { return 0.5 * (A + A.adjoint()); }
double lambda_min(const Eigen::MatrixXcd& H);
double lambda_max(const Eigen::MatrixXcd& H);

/// f applied to a Hermitian matrix through its eigendecomposition.
Eigen::MatrixXcd hermitian_function(const Eigen::MatrixXcd& H, const std::function<double(double)>& f);

}  // namespace berezin
