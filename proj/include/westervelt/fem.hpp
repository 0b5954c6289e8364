#pragma once

// P1 finite elements on Mesh2D: mass/stiffness/boundary-mass assembly,
// coefficient-weighted mass matrices (exact closed-form triple-product
// integrals), Robin-Helmholtz solves with cached factorizations, consistent
// discrete Laplacian and Robin trace maps, and quadrature-based error norms.
//
// All variational statements use the weak form of
//     -div(grad u) - kappa_term * u = f   in the disk,
//      gamma * u + du/dn = g             on the boundary,
// whose system matrix is  K + gamma*B - M_c(kappa_term),  with K the
// stiffness, B the boundary mass, and M_c a weighted mass matrix.

#include <complex>
#include <functional>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include "westervelt/mesh.hpp"

namespace westervelt {

using Cplx = std::complex<double>;
using SpMat = Eigen::SparseMatrix<double>;
using SpMatC = Eigen::SparseMatrix<Cplx>;

namespace detail {

/// Constant gradients of the three barycentric basis functions on a triangle,
/// plus its (signed) area. Throws on non-positive orientation.
struct TriGeometry {
    Eigen::Matrix<double, 3, 2> grad;  ///< grad lambda_i, one row per vertex
    double area = 0.0;

    TriGeometry(const Mesh2D& mesh, int t) {
        const auto& tr = mesh.triangles[static_cast<std::size_t>(t)];
        Eigen::Vector2d p0 = mesh.nodes.row(tr[0]);
        Eigen::Vector2d d1 = mesh.nodes.row(tr[1]).transpose() - p0;
        Eigen::Vector2d d2 = mesh.nodes.row(tr[2]).transpose() - p0;
        const double det = d1.x() * d2.y() - d1.y() * d2.x();
        if (!(det > 0))
            throw std::runtime_error("fem: triangle " + std::to_string(t) +
                                     " is degenerate or negatively oriented");
        area = 0.5 * det;
        grad.row(1) << d2.y() / det, -d2.x() / det;
        grad.row(2) << -d1.y() / det, d1.x() / det;
        grad.row(0) = -(grad.row(1) + grad.row(2));
    }
};

/// Exact integral of lambda_i * lambda_j * lambda_k over a triangle of area A:
/// 2A * a! b! c! / (a+b+c+2)! for exponents (a,b,c). Values: A/10 (all equal),
/// A/30 (two equal), A/60 (all distinct).
inline double triple_product_integral(double area, int i, int j, int k) {
    if (i == j && j == k) return area / 10.0;
    if (i == j || j == k || i == k) return area / 30.0;
    return area / 60.0;
}

}  // namespace detail

/// Matrices shared by every Helmholtz solve on a fixed mesh.
struct AssembledOperators {
    SpMat M;        ///< domain mass matrix
    SpMat K;        ///< stiffness matrix
    SpMat B;        ///< boundary mass matrix (whole boundary)
    SpMat B_gamma;  ///< gamma * B (Robin term)
    SpMat B_sigma;  ///< boundary mass restricted to Sigma edges (unscaled)
    double gamma = 0.0;
    Eigen::VectorXd lumped_area;  ///< row sums of M (nodal control areas)
};

/// Assemble mass, stiffness and boundary-mass matrices for Robin constant gamma.
inline AssembledOperators assemble(const Mesh2D& mesh, double gamma) {
    const int n = mesh.num_nodes();
    AssembledOperators ops;
    ops.gamma = gamma;

    std::vector<Eigen::Triplet<double>> tm, tk, tb, tbs;
    tm.reserve(static_cast<std::size_t>(mesh.num_triangles()) * 9);
    tk.reserve(static_cast<std::size_t>(mesh.num_triangles()) * 9);
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        const auto& tr = mesh.triangles[static_cast<std::size_t>(t)];
        detail::TriGeometry g(mesh, t);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                const double mij = g.area / ((i == j) ? 6.0 : 12.0);
                const double kij = g.area * g.grad.row(i).dot(g.grad.row(j));
                tm.emplace_back(tr[i], tr[j], mij);
                tk.emplace_back(tr[i], tr[j], kij);
            }
    }
    for (const auto& e : mesh.boundary_edges) {
        const double len = (mesh.nodes.row(e.b) - mesh.nodes.row(e.a)).norm();
        const int id[2] = {e.a, e.b};
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) {
                const double bij = len / ((i == j) ? 3.0 : 6.0);
                tb.emplace_back(id[i], id[j], bij);
                if (e.on_sigma) tbs.emplace_back(id[i], id[j], bij);
            }
    }

    ops.M.resize(n, n);
    ops.K.resize(n, n);
    ops.B.resize(n, n);
    ops.B_sigma.resize(n, n);
    ops.M.setFromTriplets(tm.begin(), tm.end());
    ops.K.setFromTriplets(tk.begin(), tk.end());
    ops.B.setFromTriplets(tb.begin(), tb.end());
    ops.B_sigma.setFromTriplets(tbs.begin(), tbs.end());
    ops.B_gamma = gamma * ops.B;
    ops.lumped_area = ops.M * Eigen::VectorXd::Ones(n);
    return ops;
}

/// Weighted mass matrix (M_c)_ij = integral of c(x) phi_i phi_j with c given
/// nodally, assembled exactly via the closed-form triple-product integrals.
template <typename Scalar>
Eigen::SparseMatrix<Scalar> mass_weighted(const Mesh2D& mesh,
                                          const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& c) {
    if (c.size() != mesh.num_nodes())
        throw std::invalid_argument("mass_weighted: coefficient size mismatch");
    std::vector<Eigen::Triplet<Scalar>> trips;
    trips.reserve(static_cast<std::size_t>(mesh.num_triangles()) * 9);
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        const auto& tr = mesh.triangles[static_cast<std::size_t>(t)];
        detail::TriGeometry g(mesh, t);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                Scalar v{};
                for (int k = 0; k < 3; ++k)
                    v += c[tr[k]] * detail::triple_product_integral(g.area, i, j, k);
                trips.emplace_back(tr[i], tr[j], v);
            }
    }
    Eigen::SparseMatrix<Scalar> Mc(mesh.num_nodes(), mesh.num_nodes());
    Mc.setFromTriplets(trips.begin(), trips.end());
    return Mc;
}

/// Cached Cholesky factorization of the SPD mass matrix; solves M x = b for
/// real and complex right-hand sides.
class MassSolver {
  public:
    explicit MassSolver(const AssembledOperators& ops) {
        ldlt_.compute(ops.M);
        if (ldlt_.info() != Eigen::Success)
            throw std::runtime_error("MassSolver: mass matrix factorization failed");
    }

    Eigen::VectorXd solve(const Eigen::VectorXd& b) const { return ldlt_.solve(b); }

    Eigen::VectorXcd solve(const Eigen::VectorXcd& b) const {
        Eigen::VectorXcd x(b.size());
        x.real() = ldlt_.solve(b.real().eval());
        x.imag() = ldlt_.solve(b.imag().eval());
        return x;
    }

  private:
    Eigen::SimplicialLDLT<SpMat> ldlt_;
};

/// Boundary flux load F(u): for each boundary edge, the constant gradient of
/// the P1 field on the owning triangle dotted with the outward normal, tested
/// against the two edge hat functions (each integrates to len/2). This makes
/// M^{-1}(-K u + F(u)) the discrete Laplacian consistent with the weak form.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> boundary_flux_load(
    const Mesh2D& mesh, const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& u) {
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> F =
        Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Zero(mesh.num_nodes());
    for (const auto& e : mesh.boundary_edges) {
        const auto& tr = mesh.triangles[static_cast<std::size_t>(e.tri)];
        detail::TriGeometry g(mesh, e.tri);
        Scalar flux{};
        for (int i = 0; i < 3; ++i)
            flux += u[tr[i]] * (g.grad(i, 0) * e.normal.x() + g.grad(i, 1) * e.normal.y());
        const double len = (mesh.nodes.row(e.b) - mesh.nodes.row(e.a)).norm();
        F[e.a] += flux * (0.5 * len);
        F[e.b] += flux * (0.5 * len);
    }
    return F;
}

/// Discrete Laplacian consistent with the stiffness matrix:
/// Delta_h u = M^{-1} (-K u + F(u)).
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> discrete_laplacian(
    const Mesh2D& mesh, const AssembledOperators& ops, const MassSolver& msolve,
    const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& u) {
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> load = -(ops.K * u) + boundary_flux_load(mesh, u);
    return msolve.solve(load);
}

/// Nodal Robin trace  gamma*u + du/dn  on the boundary: the weak residual
/// gamma*B*u + F(u) restricted to boundary nodes, premultiplied by the
/// inverse of the boundary-node mass block. Interior entries are zero.
class BoundaryTrace {
  public:
    BoundaryTrace(const Mesh2D& mesh, const AssembledOperators& ops)
        : mesh_(&mesh), ops_(&ops), bnodes_(mesh.boundary_nodes) {
        const int nb = static_cast<int>(bnodes_.size());
        Eigen::MatrixXd Bb(nb, nb);
        for (int i = 0; i < nb; ++i)
            for (int j = 0; j < nb; ++j) Bb(i, j) = ops.B.coeff(bnodes_[static_cast<std::size_t>(i)],
                                                                bnodes_[static_cast<std::size_t>(j)]);
        ldlt_.compute(Bb);
    }

    template <typename Scalar>
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> trace(
        const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& u) const {
        Eigen::Matrix<Scalar, Eigen::Dynamic, 1> resid =
            ops_->B_gamma * u + boundary_flux_load(*mesh_, u);
        const int nb = static_cast<int>(bnodes_.size());
        Eigen::Matrix<Scalar, Eigen::Dynamic, 1> rb(nb);
        for (int i = 0; i < nb; ++i) rb[i] = resid[bnodes_[static_cast<std::size_t>(i)]];
        Eigen::Matrix<Scalar, Eigen::Dynamic, 1> tb = solve_boundary(rb);
        Eigen::Matrix<Scalar, Eigen::Dynamic, 1> out =
            Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Zero(mesh_->num_nodes());
        for (int i = 0; i < nb; ++i) out[bnodes_[static_cast<std::size_t>(i)]] = tb[i];
        return out;
    }

  private:
    Eigen::VectorXd solve_boundary(const Eigen::VectorXd& rb) const { return ldlt_.solve(rb); }
    Eigen::VectorXcd solve_boundary(const Eigen::VectorXcd& rb) const {
        Eigen::VectorXcd x(rb.size());
        x.real() = ldlt_.solve(rb.real().eval());
        x.imag() = ldlt_.solve(rb.imag().eval());
        return x;
    }

    const Mesh2D* mesh_;
    const AssembledOperators* ops_;
    std::vector<int> bnodes_;
    Eigen::LDLT<Eigen::MatrixXd> ldlt_;
};

/// Direct solver for one Robin-Helmholtz harmonic block
///     (K + gamma*B - M_c(kappa_term)) u = rhs + B g.
/// The system matrix is complex symmetric (not Hermitian), so the adjoint
/// solve A^H x = b is available as conj(A^{-1} conj(b)) at no extra cost.
class RobinHelmholtzSolver {
  public:
    RobinHelmholtzSolver(const Mesh2D& mesh, const AssembledOperators& ops,
                         const Eigen::VectorXcd& kappa_term)
        : B_(&ops.B) {
        SpMatC A = (ops.K + ops.B_gamma).cast<Cplx>();
        if (kappa_term.size() != 0) {
            if (kappa_term.size() != mesh.num_nodes())
                throw std::invalid_argument("RobinHelmholtzSolver: kappa_term size mismatch");
            A -= mass_weighted<Cplx>(mesh, kappa_term);
        }
        A_ = A;
        lu_.compute(A_);
        if (lu_.info() != Eigen::Success)
            throw std::runtime_error("RobinHelmholtzSolver: factorization failed (singular block?)");
    }

    /// Solve A u = rhs + B g; `rhs` is an assembled load vector, `g` nodal
    /// boundary data (pass empty vectors for absent terms).
    Eigen::VectorXcd solve(const Eigen::VectorXcd& rhs, const Eigen::VectorXcd& g_hat) const {
        Eigen::VectorXcd load = Eigen::VectorXcd::Zero(A_.rows());
        if (rhs.size() != 0) load += rhs;
        if (g_hat.size() != 0) load += B_->cast<Cplx>() * g_hat;
        Eigen::VectorXcd u = lu_.solve(load);
        const double ref = load.norm();
        const double resid = (A_ * u - load).norm();
        if (!(resid <= 1e-10 * (ref + 1.0)))
            throw std::runtime_error("RobinHelmholtzSolver: direct solve residual too large");
        return u;
    }

    /// Solve A^H x = b (Hermitian adjoint of the block).
    Eigen::VectorXcd solve_adjoint(const Eigen::VectorXcd& b) const {
        return lu_.solve(b.conjugate()).conjugate();
    }

    const SpMatC& matrix() const { return A_; }

  private:
    const SpMat* B_;
    SpMatC A_;
    Eigen::SparseLU<SpMatC> lu_;
};

/// One-shot Robin-Helmholtz solve (factor + solve); see RobinHelmholtzSolver.
inline Eigen::VectorXcd solve_robin_helmholtz(const Mesh2D& mesh, const AssembledOperators& ops,
                                              const Eigen::VectorXcd& kappa_term,
                                              const Eigen::VectorXcd& rhs,
                                              const Eigen::VectorXcd& g_hat) {
    return RobinHelmholtzSolver(mesh, ops, kappa_term).solve(rhs, g_hat);
}

/// Cached factorization of the real SPD zeroth-harmonic block K + gamma*B.
class MeanModeSolver {
  public:
    explicit MeanModeSolver(const AssembledOperators& ops) {
        SpMat A = ops.K + ops.B_gamma;
        ldlt_.compute(A);
        if (ldlt_.info() != Eigen::Success)
            throw std::runtime_error("MeanModeSolver: factorization failed");
    }
    Eigen::VectorXd solve(const Eigen::VectorXd& load) const { return ldlt_.solve(load); }

  private:
    Eigen::SimplicialLDLT<SpMat> ldlt_;
};

// --- quadrature utilities -------------------------------------------------

namespace detail {

/// 7-point degree-5 triangle rule (barycentric coordinates and weights).
struct TriQuadRule {
    static constexpr int n = 7;
    double bary[7][3];
    double w[7];
    TriQuadRule() {
        const double a1 = 0.0597158717897698, b1 = 0.4701420641051151;
        const double a2 = 0.7974269853530873, b2 = 0.1012865073234563;
        const double w0 = 0.225;
        const double w1 = 0.1323941527885062, w2 = 0.1259391805448271;
        double tmp[7][3] = {{1.0 / 3, 1.0 / 3, 1.0 / 3}, {a1, b1, b1}, {b1, a1, b1}, {b1, b1, a1},
                            {a2, b2, b2}, {b2, a2, b2}, {b2, b2, a2}};
        double tw[7] = {w0, w1, w1, w1, w2, w2, w2};
        for (int q = 0; q < 7; ++q) {
            w[q] = tw[q];
            for (int k = 0; k < 3; ++k) bary[q][k] = tmp[q][k];
        }
    }
};

}  // namespace detail

/// L2 norm over the mesh of (P1 interpolant of `nodal`) - exact(x, y),
/// integrated with a degree-5 rule per triangle.
inline double l2_error(const Mesh2D& mesh, const Eigen::VectorXd& nodal,
                       const std::function<double(double, double)>& exact) {
    static const detail::TriQuadRule rule;
    double acc = 0.0;
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        const auto& tr = mesh.triangles[static_cast<std::size_t>(t)];
        const double area = mesh.tri_area(t);
        for (int q = 0; q < rule.n; ++q) {
            double x = 0, y = 0, uh = 0;
            for (int k = 0; k < 3; ++k) {
                x += rule.bary[q][k] * mesh.nodes(tr[k], 0);
                y += rule.bary[q][k] * mesh.nodes(tr[k], 1);
                uh += rule.bary[q][k] * nodal[tr[k]];
            }
            const double d = uh - exact(x, y);
            acc += area * rule.w[q] * d * d;
        }
    }
    return std::sqrt(acc);
}

/// L2 norm of a nodal field: sqrt(u^T M u).
inline double l2_norm(const AssembledOperators& ops, const Eigen::VectorXd& u) {
    return std::sqrt(std::max(0.0, u.dot(ops.M * u)));
}

inline double l2_norm(const AssembledOperators& ops, const Eigen::VectorXcd& u) {
    return std::sqrt(std::max(0.0, u.dot(ops.M.cast<Cplx>() * u).real()));
}

}  // namespace westervelt
