#pragma once

#include <Eigen/Dense>
#include <complex>
#include <functional>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include "berezin/convex.hpp"

namespace berezin {

using cplx = std::complex<double>;

/// Periodic phase space of the circle of length L: x_j = j L / N, xi_k = 2 pi h k / L for
/// k in [-N/2, N/2). Momentum columns are stored with index kk = k + N/2.
struct PhaseGrid {
    int N = 64;
    double L = 2.0 * std::numbers::pi;
    double h = 0.1;

    PhaseGrid() = default;
    PhaseGrid(int n, double h_, double l = 2.0 * std::numbers::pi);

    double x(int j) const { return j * L / N; }
    /// Point of the doubled lattice, p L / (2N).
    double half_x(int p) const { return p * L / (2.0 * N); }
    int k(int kk) const { return kk - N / 2; }
    double xi(int kk) const { return 2.0 * std::numbers::pi * h * k(kk) / L; }
    double dxi() const { return 2.0 * std::numbers::pi * h / L; }
    double xi_max() const { return xi(N - 1); }
    std::string id() const;
};

/// Symbol samples on (doubled spatial lattice) x (momentum lattice): values(p, kk) = sigma(p L/(2N), xi_kk).
struct SymbolGrid {
    PhaseGrid grid;
    Eigen::MatrixXcd values;  // 2N rows, N columns
    bool real = false;
    bool clipped = false;  // region preset reached beyond the momentum band
    std::string id;

    /// Samples f(x, xi) on the grid.
    static SymbolGrid from_function(const PhaseGrid& g, const std::function<cplx(double, double)>& f, std::string id);
    static SymbolGrid constant(const PhaseGrid& g, cplx c);

    SymbolGrid conj() const;
    SymbolGrid operator+(const SymbolGrid& o) const;
    SymbolGrid operator*(cplx c) const;
    /// 1 - sigma.
    SymbolGrid complement() const;
    /// Pointwise map; the result is real-flagged when every value is real.
    SymbolGrid map(const std::function<cplx(cplx)>& f, std::string new_id) const;
};

struct OperatorMeta {
    double tau = 0.5;
    double h = 0.0;
    std::string symbol_id;
    std::string grid_id;
};

struct OperatorMatrix {
    Eigen::MatrixXcd entries;
    OperatorMeta meta;
};

/// K(j, m) = (1/N) sum_k exp(2 pi i (j - m) k / N) sigma(tau x_j + (1 - tau) x_m, xi_k).
/// For tau = 1/2 the midpoint is taken along the shorter arc of the circle. tau must be 0, 1/2 or 1.
OperatorMatrix quantize_tau(const SymbolGrid& sigma, double tau);

/// max |Q_tau(sigma)* - Q_{1-tau}(conj sigma)| entrywise.
double adjoint_defect(const SymbolGrid& sigma, double tau);

/// phi(sigma) nodewise. 1D phi needs a real symbol; +inf anywhere is a DomainError.
SymbolGrid apply_convex_to_symbol(const SymbolGrid& sigma, const ConvexFunction& phi);

/// Half-open phase-space rectangle [x_lo, x_hi) x [xi_lo, xi_hi).
struct Rect {
    double x_lo, x_hi, xi_lo, xi_hi;
};

/// Finite union of rectangles; `rough` adds a dyadic staircase of shrinking rectangles.
struct RegionSpec {
    std::vector<Rect> rects;
    bool full = false;
    bool rough = false;

    static RegionSpec parse(std::string_view text);
    std::string id() const;
};

SymbolGrid indicator_symbol(const PhaseGrid& grid, const RegionSpec& region);

/// Preset symbols: one, const:<re>[,<im>], coord:x, coord:xi, cosx, cos:<c0>,<c1> (c0 + c1 cos x), expix, gauss:<x0>,<xi0>,<w>,
/// bump:<x0>,<xi0>,<r>, indicator:<region>.
SymbolGrid symbol_from_id(const PhaseGrid& grid, std::string_view id);

/// Rows "p,k,re,im" with p in [0, 2N) on the doubled lattice and k in [-N/2, N/2).
void save_symbol_csv(const SymbolGrid& sigma, const std::string& path);
SymbolGrid load_symbol_csv(const std::string& path, const PhaseGrid& grid);

}  // namespace berezin
