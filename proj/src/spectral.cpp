#include "berezin/spectral.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include "berezin/error.hpp"

namespace berezin {

namespace {

bool lex_less(cplx a, cplx b) { return a.real() < b.real() || (a.real() == b.real() && a.imag() < b.imag()); }

double max_entry(const Eigen::MatrixXcd& A) { return A.size() == 0 ? 0.0 : A.cwiseAbs().maxCoeff(); }

std::size_t find_root(std::vector<std::size_t>& parent, std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
}

std::vector<Cluster> cluster_values(const std::vector<cplx>& ev, double tol) {
    const std::size_t n = ev.size();
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (std::abs(ev[i] - ev[j]) <= tol) parent[find_root(parent, i)] = find_root(parent, j);

    std::vector<std::vector<std::size_t>> groups;
    std::vector<long> slot(n, -1);
    for (std::size_t i = 0; i < n; ++i) {
        const auto r = find_root(parent, i);
        if (slot[r] < 0) {
            slot[r] = static_cast<long>(groups.size());
            groups.emplace_back();
        }
        groups[slot[r]].push_back(i);
    }
    std::vector<Cluster> cl;
    for (auto& g : groups) {
        cplx c = 0.0;
        for (auto i : g) c += ev[i];
        cl.push_back({c / static_cast<double>(g.size()), static_cast<int>(g.size())});
    }
    // Merge until centers are separated by more than tol.
    bool merged = true;
    while (merged) {
        merged = false;
        for (std::size_t a = 0; a < cl.size() && !merged; ++a)
            for (std::size_t b = a + 1; b < cl.size() && !merged; ++b)
                if (std::abs(cl[a].center - cl[b].center) <= tol) {
                    const double ma = cl[a].multiplicity, mb = cl[b].multiplicity;
                    cl[a].center = (ma * cl[a].center + mb * cl[b].center) / (ma + mb);
                    cl[a].multiplicity += cl[b].multiplicity;
                    cl.erase(cl.begin() + static_cast<long>(b));
                    merged = true;
                }
    }
    std::sort(cl.begin(), cl.end(), [](const Cluster& a, const Cluster& b) { return lex_less(a.center, b.center); });
    return cl;
}

Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> hermitian_solver(const Eigen::MatrixXcd& H, bool vectors) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(herm(H), vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw NumericError("Hermitian eigensolver did not converge");
    return es;
}

double cross(cplx o, cplx a, cplx b) {
    return (a.real() - o.real()) * (b.imag() - o.imag()) - (a.imag() - o.imag()) * (b.real() - o.real());
}

}  // namespace

double default_cluster_tol(const Eigen::MatrixXcd& A) { return 1e-8 * (1.0 + max_entry(A)); }

SpectrumReport spectrum(const Eigen::MatrixXcd& A, std::optional<double> cluster_tol) {
    if (A.rows() != A.cols()) throw ShapeError("spectrum: matrix must be square");
    if (!A.allFinite()) throw DomainError("spectrum: non-finite matrix entries");
    const double tol = cluster_tol.value_or(default_cluster_tol(A));
    if (tol < 0.0) throw PreconditionError("spectrum: cluster tolerance must be >= 0");
    SpectrumReport rep;
    rep.cluster_tol = tol;
    if (A.rows() == 0) return rep;

    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(A, true);
    if (es.info() != Eigen::Success) {
        std::ostringstream os;
        os << "spectrum: eigensolver did not converge (n = " << A.rows() << ", max |a_ij| = " << max_entry(A) << ")";
        throw NumericError(os.str());
    }
    const Eigen::VectorXcd ev = es.eigenvalues();
    rep.eigenvalues.assign(ev.data(), ev.data() + ev.size());

    const Eigen::MatrixXcd& V = es.eigenvectors();
    Eigen::FullPivLU<Eigen::MatrixXcd> lu(V);
    rep.condition.assign(ev.size(), HUGE_VAL);
    if (lu.isInvertible()) {
        const Eigen::MatrixXcd W = lu.inverse();
        for (Eigen::Index i = 0; i < ev.size(); ++i) rep.condition[i] = V.col(i).norm() * W.row(i).norm();
    }
    rep.clusters = cluster_values(rep.eigenvalues, tol);
    return rep;
}

InvariantBasis schur_invariant_basis(const Eigen::MatrixXcd& A, const SpectrumReport& spec,
                                     const std::vector<int>& selected) {
    const Eigen::Index n = A.rows();
    std::vector<bool> chosen(spec.clusters.size(), false);
    for (int id : selected) {
        if (id < 0 || static_cast<std::size_t>(id) >= spec.clusters.size())
            throw PreconditionError("schur_invariant_basis: cluster id out of range");
        chosen[id] = true;
    }
    Eigen::ComplexSchur<Eigen::MatrixXcd> cs(A);
    if (cs.info() != Eigen::Success) throw NumericError("schur_invariant_basis: Schur decomposition did not converge");
    Eigen::MatrixXcd T = cs.matrixT();
    Eigen::MatrixXcd U = cs.matrixU();

    // Each diagonal entry belongs to its nearest cluster center.
    std::vector<char> flag(n, 0);
    for (Eigen::Index i = 0; i < n; ++i) {
        std::size_t best = 0;
        for (std::size_t c = 1; c < spec.clusters.size(); ++c)
            if (std::abs(T(i, i) - spec.clusters[c].center) < std::abs(T(i, i) - spec.clusters[best].center)) best = c;
        flag[i] = !spec.clusters.empty() && chosen[best];
    }

    // Adjacent swap of diagonal entries k, k+1 by a Givens rotation.
    auto swap_at = [&](Eigen::Index k) {
        const cplx a = T(k, k), c = T(k + 1, k + 1), b = T(k, k + 1);
        Eigen::Vector2cd x(b, c - a);
        const double nx = x.norm();
        if (nx == 0.0) return;
        x /= nx;
        Eigen::Matrix2cd G;
        G << x(0), -std::conj(x(1)), x(1), std::conj(x(0));
        T.middleRows(k, 2) = G.adjoint() * T.middleRows(k, 2);
        T.middleCols(k, 2) = T.middleCols(k, 2) * G;
        U.middleCols(k, 2) = U.middleCols(k, 2) * G;
        T(k + 1, k) = 0.0;
    };
    Eigen::Index m = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!flag[i]) continue;
        for (Eigen::Index k = i - 1; k >= m; --k) {
            swap_at(k);
            std::swap(flag[k], flag[k + 1]);
        }
        ++m;
    }

    InvariantBasis out;
    out.basis = U.leftCols(m);
    out.triangular = T.topLeftCorner(m, m).triangularView<Eigen::Upper>();
    out.residual = m == 0 ? 0.0 : max_entry(A * out.basis - out.basis * out.triangular);
    const double bound = 1e-8 * (1.0 + max_entry(A));
    if (out.residual > bound) {
        std::ostringstream os;
        os << "schur_invariant_basis: invariance residual " << out.residual << " exceeds " << bound;
        throw ConditioningError(os.str());
    }
    return out;
}

cplx trace(const Eigen::MatrixXcd& A) { return A.trace(); }

double trace_norm(const Eigen::MatrixXcd& A) {
    if (A.size() == 0) return 0.0;
    Eigen::BDCSVD<Eigen::MatrixXcd> svd(A);
    return svd.singularValues().sum();
}

std::vector<cplx> convex_hull(std::vector<cplx> pts) {
    std::sort(pts.begin(), pts.end(), lex_less);
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    if (pts.size() <= 1) return pts;
    double scale = 0.0;
    for (auto p : pts) scale = std::max(scale, std::abs(p - pts.front()));
    const double eps = 1e-14 * scale * scale;
    std::vector<cplx> h(2 * pts.size());
    std::size_t k = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        while (k >= 2 && cross(h[k - 2], h[k - 1], pts[i]) <= eps) --k;
        h[k++] = pts[i];
    }
    for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
        while (k >= t && cross(h[k - 2], h[k - 1], pts[i]) <= eps) --k;
        h[k++] = pts[i];
    }
    h.resize(k - 1);
    return h;
}

bool RangeHull::contains(cplx z, double inflation) const {
    for (std::size_t i = 0; i < angles.size(); ++i)
        if (std::cos(angles[i]) * z.real() + std::sin(angles[i]) * z.imag() > support[i] + inflation) return false;
    return true;
}

RangeHull numerical_range_hull(const Eigen::MatrixXcd& A, int n_angles) {
    if (n_angles < 8) throw PreconditionError("numerical_range_hull: n_angles must be >= 8");
    if (A.rows() != A.cols() || A.rows() == 0) throw ShapeError("numerical_range_hull: non-empty square matrix required");
    RangeHull out;
    out.n_angles = n_angles;
    std::vector<cplx> pts;
    for (int i = 0; i < n_angles; ++i) {
        const double th = 2.0 * std::numbers::pi * i / n_angles;
        const Eigen::MatrixXcd H = herm(std::polar(1.0, -th) * A);
        const auto es = hermitian_solver(H, true);
        const Eigen::VectorXcd u = es.eigenvectors().col(H.rows() - 1);
        pts.push_back(u.dot(A * u));
        out.angles.push_back(th);
        out.support.push_back(es.eigenvalues()(H.rows() - 1));
    }
    for (int i = 0; i < n_angles; ++i) {
        const int j = (i + 1) % n_angles;
        const double c1 = std::cos(out.angles[i]), s1 = std::sin(out.angles[i]);
        const double c2 = std::cos(out.angles[j]), s2 = std::sin(out.angles[j]);
        const double det = c1 * s2 - s1 * c2;
        const double x = (out.support[i] * s2 - s1 * out.support[j]) / det;
        const double y = (c1 * out.support[j] - c2 * out.support[i]) / det;
        out.outer.emplace_back(x, y);
    }
    out.inner = convex_hull(pts);
    return out;
}

double lambda_min(const Eigen::MatrixXcd& H) { return hermitian_solver(H, false).eigenvalues()(0); }
double lambda_max(const Eigen::MatrixXcd& H) {
    const auto es = hermitian_solver(H, false);
    return es.eigenvalues()(H.rows() - 1);
}

GardingResult garding(const Eigen::MatrixXcd& S, const Eigen::MatrixXcd& T) {
    if (S.rows() != S.cols() || T.rows() != T.cols() || S.rows() != T.rows())
        throw ShapeError("garding_nu: S and T must be square of equal size");
    const double t_norm = max_entry(T);
    if (max_entry(T - T.adjoint()) > 1e-10 * (1.0 + t_norm)) throw PreconditionError("garding_nu: T is not Hermitian");
    const double t_min = lambda_min(T);
    if (!(t_min > 1e-12 * hermitian_solver(T, false).eigenvalues().cwiseAbs().maxCoeff()))
        throw PreconditionError("garding_nu: T is not positive definite");

    const Eigen::MatrixXcd HS = herm(S);
    const Eigen::MatrixXcd TH = herm(T);
    Eigen::LLT<Eigen::MatrixXcd> llt(TH);
    if (llt.info() != Eigen::Success) throw PreconditionError("garding_nu: Cholesky factorization of T failed");
    const auto L = llt.matrixL();
    const Eigen::MatrixXcd Y = L.solve(-HS);
    const Eigen::MatrixXcd M = L.solve(Y.adjoint());

    GardingResult r;
    r.nu = std::max(0.0, lambda_max(M));
    r.lambda_min_at_nu = lambda_min(HS + r.nu * TH);
    if (r.lambda_min_at_nu < -1e-10) {
        // HS + (nu + d) T >= HS + nu T + d t_min I.
        r.nu += -r.lambda_min_at_nu / t_min * (1.0 + 1e-12);
        r.lambda_min_at_nu = lambda_min(HS + r.nu * TH);
        if (r.lambda_min_at_nu < -1e-10) throw NumericError("garding_nu: upper certificate failed after correction");
    }
    if (r.nu > 0.0) {
        r.lambda_min_below = lambda_min(HS + (r.nu - 1e-6) * TH);
        r.lower_certified = r.lambda_min_below < 0.0;
    }
    return r;
}

Eigen::MatrixXcd hermitian_function(const Eigen::MatrixXcd& H, const std::function<double(double)>& f) {
    const auto es = hermitian_solver(H, true);
    Eigen::VectorXd fv = es.eigenvalues().unaryExpr(f);
    return es.eigenvectors() * fv.asDiagonal() * es.eigenvectors().adjoint();
}

}  // namespace berezin
