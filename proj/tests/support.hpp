#pragma once

// Test-side generators and reference computations. Nothing here calls into the library's
// numerical routines, so comparisons against these are independent checks.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <vector>

namespace testing {

using cplx = std::complex<double>;
constexpr double kPi = std::numbers::pi;

/// xorshift64* stream with Box-Muller normals.
class Gen {
public:
    explicit Gen(std::uint64_t seed) : s_(seed * 0x9E3779B97F4A7C15ull + 0x632BE59BD9B4E019ull) {
        if (s_ == 0) s_ = 1;
    }
    std::uint64_t next() {
        s_ ^= s_ >> 12;
        s_ ^= s_ << 25;
        s_ ^= s_ >> 27;
        return s_ * 0x2545F4914F6CDD1Dull;
    }
    double uniform() { return (next() >> 11) * 0x1.0p-53; }
    double uniform(double a, double b) { return a + (b - a) * uniform(); }
    int integer(int lo, int hi) { return lo + static_cast<int>(next() % static_cast<std::uint64_t>(hi - lo + 1)); }
    double normal() {
        const double u1 = 1.0 - uniform(), u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
    }
    cplx cnormal() { return {normal() / std::sqrt(2.0), normal() / std::sqrt(2.0)}; }

private:
    std::uint64_t s_;
};

inline Eigen::MatrixXcd random_complex(Gen& g, int r, int c) {
    Eigen::MatrixXcd M(r, c);
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) M(i, j) = g.cnormal();
    return M;
}

inline Eigen::MatrixXcd random_hermitian(Gen& g, int n) {
    const Eigen::MatrixXcd G = random_complex(g, n, n);
    return 0.5 * (G + G.adjoint());
}

/// Random convex piecewise-linear samples: increasing nodes, sorted slopes.
struct PL {
    std::vector<double> x, f;
};

inline PL random_convex_pl(Gen& g, int n) {
    PL p;
    p.x.resize(n);
    p.f.resize(n);
    std::vector<double> s(n - 1);
    p.x[0] = g.uniform(-4.0, 0.0);
    for (int i = 1; i < n; ++i) p.x[i] = p.x[i - 1] + g.uniform(0.05, 0.8);
    for (auto& v : s) v = g.uniform(-4.0, 4.0);
    std::sort(s.begin(), s.end());
    p.f[0] = g.uniform(-1.0, 1.0);
    for (int i = 1; i < n; ++i) p.f[i] = p.f[i - 1] + s[i - 1] * (p.x[i] - p.x[i - 1]);
    return p;
}

/// max_i (s x_i - f_i), O(n) per slope.
inline double brute_conjugate(const std::vector<double>& x, const std::vector<double>& f, double s) {
    double best = -HUGE_VAL;
    for (std::size_t i = 0; i < x.size(); ++i) best = std::max(best, s * x[i] - f[i]);
    return best;
}

/// Lower convex envelope at every node: min over chords through nodes j <= i <= k. O(n^3).
inline std::vector<double> brute_envelope(const std::vector<double>& x, const std::vector<double>& f) {
    const std::size_t n = x.size();
    std::vector<double> env(f);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j <= i; ++j)
            for (std::size_t k = i; k < n; ++k) {
                if (j == k) continue;
                const double w = (x[i] - x[j]) / (x[k] - x[j]);
                env[i] = std::min(env[i], (1.0 - w) * f[j] + w * f[k]);
            }
    return env;
}

/// Positive semidefiniteness of a Hermitian matrix by attempted Cholesky of H + tiny * I.
inline bool psd_by_cholesky(const Eigen::MatrixXcd& H, double tiny) {
    const Eigen::MatrixXcd M = H + tiny * Eigen::MatrixXcd::Identity(H.rows(), H.cols());
    Eigen::LLT<Eigen::MatrixXcd> llt(M);
    return llt.info() == Eigen::Success;
}

/// Minimal nu >= 0 with Herm S + nu T >= 0 by bisection on the Cholesky test.
inline double bisection_garding(const Eigen::MatrixXcd& S, const Eigen::MatrixXcd& T) {
    const Eigen::MatrixXcd H = 0.5 * (S + S.adjoint());
    if (psd_by_cholesky(H, 0.0)) return 0.0;
    double lo = 0.0, hi = 1.0;
    while (!psd_by_cholesky(H + hi * T, 0.0)) hi *= 2.0;
    for (int it = 0; it < 200 && hi - lo > 1e-15 * (1.0 + hi); ++it) {
        const double mid = 0.5 * (lo + hi);
        (psd_by_cholesky(H + mid * T, 0.0) ? hi : lo) = mid;
    }
    return hi;
}

/// Direct evaluation of the discrete tau-quantization from a symbol function:
/// K(j, m) = (1/N) sum_k e^{2 pi i (j - m) k / N} f(point, 2 pi h k / L).
template <class F>
Eigen::MatrixXcd direct_quantization(int N, double h, double L, double tau, F f) {
    Eigen::MatrixXcd K = Eigen::MatrixXcd::Zero(N, N);
    for (int j = 0; j < N; ++j)
        for (int m = 0; m < N; ++m) {
            const double xm = m * L / N;
            double pt;
            if (tau == 1.0) pt = j * L / N;
            else if (tau == 0.0) pt = xm;
            else {
                // midpoint along the shorter arc; at |j - m| = N/2 both arcs tie and the plain mean is used
                int d = j - m;
                if (d > N / 2) d -= N;
                if (d < -N / 2) d += N;
                pt = xm + 0.5 * d * L / N;
            }
            cplx acc = 0.0;
            for (int k = -N / 2; k < N / 2; ++k)
                acc += std::polar(1.0, 2.0 * kPi * (j - m) * k / N) * f(pt, 2.0 * kPi * h * k / L);
            K(j, m) = acc / static_cast<double>(N);
        }
    return K;
}

/// Eigenvalues of a real symmetric matrix by cyclic Jacobi rotations, ascending.
inline std::vector<double> jacobi_eigenvalues(Eigen::MatrixXd M) {
    const Eigen::Index n = M.rows();
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (Eigen::Index p = 0; p < n; ++p)
            for (Eigen::Index q = p + 1; q < n; ++q) off += M(p, q) * M(p, q);
        if (off < 1e-30 * (1.0 + M.squaredNorm())) break;
        for (Eigen::Index p = 0; p < n; ++p)
            for (Eigen::Index q = p + 1; q < n; ++q) {
                if (M(p, q) == 0.0) continue;
                const double theta = 0.5 * (M(q, q) - M(p, p)) / M(p, q);
                const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
                for (Eigen::Index k = 0; k < n; ++k) {
                    const double a = M(k, p), b = M(k, q);
                    M(k, p) = c * a - s * b;
                    M(k, q) = s * a + c * b;
                }
                for (Eigen::Index k = 0; k < n; ++k) {
                    const double a = M(p, k), b = M(q, k);
                    M(p, k) = c * a - s * b;
                    M(q, k) = s * a + c * b;
                }
            }
    }
    std::vector<double> ev(n);
    for (Eigen::Index i = 0; i < n; ++i) ev[i] = M(i, i);
    std::sort(ev.begin(), ev.end());
    return ev;
}

inline double max_abs(const Eigen::MatrixXcd& A) { return A.size() == 0 ? 0.0 : A.cwiseAbs().maxCoeff(); }

}  // namespace testing
