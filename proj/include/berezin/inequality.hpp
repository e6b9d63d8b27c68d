#pragma once

#include <Eigen/Dense>
#include <functional>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "berezin/convex.hpp"
#include "berezin/quantize.hpp"
#include "berezin/spectral.hpp"

namespace berezin {

/// A linear map from symbols to matrices with q(1) = I.
using Quantization = std::function<Eigen::MatrixXcd(const SymbolGrid&)>;

/// The tau-quantization as a Quantization.
Quantization tau_quantization(double tau);

struct Provenance {
    std::string symbol_id;
    std::string phi_id;
    double tau = 0.5;
    double h = 0.0;
    int N = 0;
    std::string t_spec;
    std::string z_density;
    double cluster_tol = 0.0;
    int skipped_samples = 0;     // phi = +inf at the sample
    int subgradient_samples = 0; // phi not differentiable; an exact supporting line was used
};

struct InequalityReport {
    double lhs = 0.0;
    double rhs = 0.0;
    double nu1 = 0.0;
    double nu2 = 0.0;
    double nu1_raw = 0.0;  // sampled maxima before the safety factor
    double nu2_raw = 0.0;
    double trace_T = 0.0;
    double slack = 0.0;
    double tolerance = 1e-8;
    bool pass = false;
    bool phi_nonnegative = false;  // (c1) on the sampled symbol
    bool complete_eigenvectors = true;
    Provenance provenance;

    /// Sets slack = rhs - lhs and pass = slack >= -tolerance (|rhs| + 1).
    void finalize();
};

struct BerezinSum {
    double total = 0.0;
    double positive = 0.0;  // over eigenvalues with phi > 0
    double negative = 0.0;  // over eigenvalues with phi < 0
};

/// sum m(lambda) phi(lambda) over the clusters. A 1D phi needs real centers (|Im| <= cluster tol).
BerezinSum berezin_lhs(const SpectrumReport& spec, const ConvexFunction& phi);

/// Tr phi(P B P restricted to ran P) <= Tr(P phi(B) P restricted to ran P).
InequalityReport projected_berezin_check(const Eigen::MatrixXcd& B, const Eigen::MatrixXcd& P,
                                         const ConvexFunction& phi);

/// Affine minorant used at z: the tangent plane phi(z) + <g, w - z> when phi is differentiable at z,
/// otherwise an exact supporting line from the subdifferential. nullopt when phi(z) = +inf.
struct TangentLine {
    AffinePair line;
    bool from_gradient = true;
};
std::optional<TangentLine> tangent_line(const ConvexFunction& phi, Point z);

/// nu1 = max over z* of the Garding constant of i (D - D*)/2, D = q(Im(z* conj sigma)), relative to T.
double nu1_bound(const SymbolGrid& sigma, const Quantization& q, const std::vector<Point>& z_star,
                 const Eigen::MatrixXcd& T);
double nu1_bound(const SymbolGrid& sigma, double tau, const std::vector<Point>& z_star, const Eigen::MatrixXcd& T);

/// Max over z samples of the Garding constant of q(rho_z), rho_z = phi(sigma) - l_z(sigma).
/// Records skipped / subgradient counts in `prov` when given; DomainError if every sample is skipped.
double tangent_remainder_nu(const SymbolGrid& sigma, const ConvexFunction& phi, const Quantization& q,
                            const Eigen::MatrixXcd& T, const std::vector<Point>& z_samples,
                            Provenance* prov = nullptr);
double tangent_remainder_nu(const SymbolGrid& sigma, const ConvexFunction& phi, double tau, const Eigen::MatrixXcd& T,
                            const std::vector<Point>& z_samples, Provenance* prov = nullptr);

/// phi((Qu,u)) <= Re(Q(phi sigma)u,u) + (nu1 + nu2)(Tu,u) for a unit vector u.
InequalityReport eq3_pointwise_check(const Eigen::MatrixXcd& Q_sigma, const Eigen::MatrixXcd& Q_phi_sigma,
                                     const ConvexFunction& phi, const Eigen::MatrixXcd& T, const Eigen::VectorXcd& u,
                                     double nu1, double nu2);
/// Same, quantizing sigma and phi(sigma) with tau and computing nu1, nu2 at z = (Qu,u).
InequalityReport eq3_pointwise_check(const SymbolGrid& sigma, const ConvexFunction& phi, double tau,
                                     const Eigen::MatrixXcd& T, const Eigen::VectorXcd& u);

struct Theorem7Options {
    int boundary_samples = 64;
    int interior_grid = 10;
    int segment_samples = 65;
    int n_angles = 64;
    double safety = 1.05;
    double tolerance = 1e-8;
    std::optional<double> cluster_tol;
    std::string t_spec = "I";
};

/// Sample points of the numerical range: Hermitian case a segment, otherwise the outer polygon
/// boundary plus an interior grid.
std::vector<Point> range_samples(const Eigen::MatrixXcd& Q, const Theorem7Options& opt, std::string* density = nullptr);

struct Theorem7Result {
    InequalityReport report;
    std::vector<InequalityReport> columns;  // eq3 at every Schur column
    double spectral_mapping_lhs = 0.0;      // Tr phi(Q) when Q is Hermitian (NaN otherwise)
    bool hermitian = false;
};

/// sum m(lambda) phi(lambda) <= Re Tr q(phi sigma) + (nu1 + nu2) Tr T.
Theorem7Result theorem7_check(const SymbolGrid& sigma, const ConvexFunction& phi, const Quantization& q,
                              const Eigen::MatrixXcd& T, const Theorem7Options& opt = {}, double tau_label = 0.5);
Theorem7Result theorem7_check(const SymbolGrid& sigma, const ConvexFunction& phi, double tau,
                              const Eigen::MatrixXcd& T, const Theorem7Options& opt = {});

struct SweepRow {
    double sweep_value = 0.0;
    double lhs = 0.0;
    double rhs = 0.0;
    double slack = 0.0;
    double nu1 = 0.0;
    double nu2 = 0.0;
    double trace_T = 0.0;
    std::vector<std::pair<std::string, double>> aux;

    double get(const std::string& name) const;
};

struct SweepTable {
    std::string name;
    std::vector<SweepRow> rows;
    std::string fit_column;
    double fitted_exponent = 0.0;  // NaN when not all values are positive
    double fit_residual = 0.0;

    /// Keeps the rows in sweep order and fits log|fit_column| against log(sweep value).
    void finish();
    std::vector<double> column(const std::string& name) const;
    std::string to_csv() const;
};

/// Least-squares slope and RMS residual of log y against log x; NaN when some value is not positive.
std::pair<double, double> fit_exponent(const std::vector<double>& x, const std::vector<double>& y);

bool strictly_decreasing(const std::vector<double>& v);
bool bounded_by_first(const std::vector<double>& v, double factor);

/// Runs f(i) for i in [0, n) on `workers` threads; results land in index order.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& f);

struct Example10Options {
    int N = 128;
    double L = 2.0 * std::numbers::pi;
    int z_grid = 10;
    int workers = 1;
};

/// Indicator symbol sigma of `region`, R = Q1(sigma) Q0(1 - sigma). Per h: identity residuals, lhs for
/// Q1(sigma), the displayed bound, and a certified bound with T = |Re R| + |Im R| + 1e-10 I.
SweepTable example10_experiment(const RegionSpec& region, const ConvexFunction& phi, const std::vector<double>& h_values,
                                const Example10Options& opt = {});

struct Example8Options {
    int K = 64;  // N = 2K Fourier modes, h = 1, L = 2 pi
    int workers = 1;
};

/// Circle operator A with symbol |xi| (1 at xi = 0), B = Q_{1/2}(b). Per mu: compression of B to the modes
/// with sigma_A < mu, the eigenvalue sum against the phase-space integral, and the trace remainder.
SweepTable example8_experiment(const std::string& b_symbol, const ConvexFunction& phi, const std::vector<double>& mu_values,
                               const Example8Options& opt = {});

struct Example11Options {
    int N = 128;
    double L = 2.0 * std::numbers::pi;
    double delta = 1e-3;  // required lower bound on phi''
    int workers = 1;
};

/// || Q_{1/2}(phi_z(sigma)) - Q1(psi) Q0(psi) ||_1 with psi = sign(sigma - z) sqrt(phi_z(sigma)).
SweepTable example11_residual(const std::string& sigma_symbol, const ConvexFunction& phi, double z,
                              const std::vector<double>& h_values, const Example11Options& opt = {});

}  // namespace berezin
