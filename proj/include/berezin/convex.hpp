#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "berezin/extended_real.hpp"

namespace berezin {

/// Points of R and R^2 are both carried as complex numbers; real arguments have zero imaginary part.
using Point = std::complex<double>;

/// Real pairing on C identified with R^2: <a, b> = Re(a * conj(b)).
inline double pairing(Point a, Point b) { return (a * std::conj(b)).real(); }

/// Affine minorant l(x) = <x_star, x> - t_star.
struct AffinePair {
    double t_star = 0.0;
    Point x_star{0.0, 0.0};

    double operator()(Point x) const { return pairing(x_star, x) - t_star; }
};

/// Closed interval [lo, hi] of subgradients on R; either end may be infinite (IEEE inf).
struct SubgradientInterval {
    double lo = 0.0;
    double hi = 0.0;
    bool empty = false;

    static SubgradientInterval none() { return {0.0, 0.0, true}; }
    /// sup of the set, with sup(empty) := -inf.
    double sup() const;
    /// inf of the set, with inf(empty) := +inf.
    double inf() const;
};

class ConvexFunction;

namespace repr {

enum class PresetKind {
    Power,      // c |t|^p, p > 1
    Support,    // max(lo t, hi t) + offset; covers |t|, (t)_+ and affine functions
    Indicator,  // offset on [lo, hi], +inf elsewhere
    Exp,        // e^t
    XLogX,      // t log t - t on [0, inf), +inf for t < 0
    Cosh,       // cosh t
    CoshConj,   // s asinh s - sqrt(1 + s^2)
};

struct Preset1D {
    PresetKind kind = PresetKind::Power;
    double c = 1.0;
    double p = 2.0;
    double lo = 0.0;
    double hi = 0.0;
    double offset = 0.0;
};

/// Nodes strictly increasing; values may be +inf outside the effective domain.
struct Sampled1D {
    std::vector<double> x;
    std::vector<ExtendedReal> f;
};

/// Tensor grid; f is row-major with f[i * y.size() + j] = phi(x[i], y[j]).
struct Sampled2D {
    std::vector<double> x;
    std::vector<double> y;
    std::vector<ExtendedReal> f;

    const ExtendedReal& at(std::size_t i, std::size_t j) const { return f[i * y.size() + j]; }
};

/// c |z|^2 on C.
struct SquaredModulus {
    double c = 1.0;
};

/// phi(Re z) on the real axis, +inf off it.
struct LiftedToReal {
    std::shared_ptr<const ConvexFunction> base;
};

/// g(Re z), independent of Im z. Conjugate partner of LiftedToReal.
struct RealCylinder {
    std::shared_ptr<const ConvexFunction> base;
};

using Representation =
    std::variant<Preset1D, Sampled1D, Sampled2D, SquaredModulus, LiftedToReal, RealCylinder>;

}  // namespace repr

/// A proper convex function on R (dimension 1) or on R^2 = C (dimension 2), either in
/// closed form or sampled on a grid with extended-real values. Immutable; cheap to copy.
class ConvexFunction {
public:
    // Closed-form presets on R.
    static ConvexFunction power(double c, double p);
    static ConvexFunction quadratic(double c = 0.5) { return power(c, 2.0); }
    static ConvexFunction support(double lo, double hi, double offset = 0.0);
    static ConvexFunction abs() { return support(-1.0, 1.0); }
    static ConvexFunction pospart() { return support(0.0, 1.0); }
    static ConvexFunction affine(double slope, double intercept) { return support(slope, slope, intercept); }
    static ConvexFunction indicator(double lo, double hi, double offset = 0.0);
    static ConvexFunction exp();
    static ConvexFunction xlogx();
    static ConvexFunction cosh();
    static ConvexFunction cosh_conjugate();
    // Closed-form preset on C.
    static ConvexFunction squared_modulus(double c = 1.0);

    /// Sampled function on R. Requires strictly increasing nodes and at least one finite value.
    static ConvexFunction sampled(std::vector<double> x, std::vector<ExtendedReal> f, std::string id = "sampled");
    /// Sampled function on R^2 over the tensor grid x by y (row-major values).
    static ConvexFunction sampled2d(std::vector<double> x, std::vector<double> y, std::vector<ExtendedReal> f,
                                    std::string id = "sampled2d");
    /// Samples `f` (dimension 1) at n equispaced nodes on [a, b].
    static ConvexFunction sample(const ConvexFunction& f, double a, double b, std::size_t n);

    /// Parses a preset id: quad, sq, power:<p>, abs, pospart, exp, xlogx, cosh, affine:<a>,<b>,
    /// indicator:<a>,<b>, support:<lo>,<hi>, sqmod2d, lift:<id>, sampled:<id>:<a>,<b>,<n>.
    static ConvexFunction from_id(std::string_view id);

    /// Loads (x, value) or (x, y, value) CSV rows; the literal `inf` denotes +infinity.
    static ConvexFunction load_csv(const std::string& path);

    int dimension() const { return dimension_; }
    const std::string& id() const { return id_; }
    const repr::Representation& representation() const { return *repr_; }
    bool is_sampled() const;

    /// Maximum node spacing of a sampled representation (0 for closed forms).
    double grid_modulus() const;

    ExtendedReal operator()(Point z) const;
    ExtendedReal operator()(double t) const { return (*this)(Point{t, 0.0}); }

private:
    ConvexFunction(repr::Representation r, int dim, std::string id);
    friend ConvexFunction conjugate(const ConvexFunction& phi);
    friend ConvexFunction restrict_to_real(const ConvexFunction& phi_1d);

    std::shared_ptr<const repr::Representation> repr_;
    int dimension_ = 1;
    std::string id_;
};

/// phi(x). Sampled functions are interpolated piecewise linearly between adjacent finite nodes
/// (bilinearly on 2D cells), +inf where an involved node is +inf; outside the box is a DomainError.
ExtendedReal eval(const ConvexFunction& phi, Point x);

/// Discrete Legendre transform max_i (s x_i - f_i) at every slope s, over the finite nodes.
/// Linear time after sorting the slopes: lower convex hull plus a monotone march.
std::vector<double> legendre_transform(std::span<const double> x, std::span<const ExtendedReal> f,
                                       std::span<const double> slopes);

/// Indices of the vertices of the lower convex hull of the finite samples (collinear points dropped).
std::vector<std::size_t> lower_hull(std::span<const double> x, std::span<const ExtendedReal> f);

/// Default dual grid for a 1D sampled function: one slope per node taken from its hull
/// subdifferential, spanning the one-sided slope range padded by 5%, duplicates removed.
std::vector<double> default_dual_grid(std::span<const double> x, std::span<const ExtendedReal> f);

/// phi*(x*) = sup_x { <x*, x> - phi(x) }. Closed forms map to closed forms; sampled inputs are
/// transformed on their default dual grid (factored row/column transform in 2D).
ConvexFunction conjugate(const ConvexFunction& phi);

/// max over finite nodes of |phi**(x) - phi(x)| for a sampled function (0 for closed forms).
double biconjugate_gap(const ConvexFunction& phi);

/// Nodes on which membership tests run: the sampling grid, or a fixed probe grid for closed forms.
std::vector<Point> probe_points(const ConvexFunction& phi);

/// (t*, x*) in E(phi*) iff l <= phi at every probe point (up to floating-point rounding).
bool in_conjugate_epigraph(const ConvexFunction& phi, const AffinePair& pair);

/// Some (t*, x*) in E(phi*) with l(x0) >= phi(x0) - eps, or nullopt when none is found
/// (for eps = 0 an empty subdifferential is a legitimate outcome). PreconditionError if phi(x0) = +inf.
std::optional<AffinePair> eps_subdifferential_witness(const ConvexFunction& phi, Point x0, double eps);

/// Subdifferential of a 1D function at t. Sampled functions use hull slopes in the interior and
/// one-sided slopes at boundary nodes.
SubgradientInterval subdifferential(const ConvexFunction& phi, double t);

/// Gradient g in the real pairing, so that phi(z + w) ~ phi(z) + <g, w>.
/// Throws NotDifferentiableError at kinks and DomainError outside the interior of the domain.
Point gradient(const ConvexFunction& phi, Point z);

/// The function on C equal to phi on R and +inf elsewhere.
ConvexFunction restrict_to_real(const ConvexFunction& phi_1d);

/// Grid diagnostics. midpoint_convex: every finite node lies on or below the chord of its finite
/// neighbours (within tol). closed: the finite nodes form one contiguous run per grid line, so the
/// interpolant is continuous on a closed box and +inf outside it.
struct ConvexityCheck {
    bool proper = false;
    bool midpoint_convex = false;
    bool closed = false;
};
ConvexityCheck check_convexity(const ConvexFunction& phi, double tol = 1e-12);

}  // namespace berezin
