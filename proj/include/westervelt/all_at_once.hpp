// All-at-once view of the periodic model: parameters and state are treated as
// one joint unknown, the operator returns (interior model residual, Robin
// boundary value, arc observation) on a time-collocation grid, and the
// effective-increment map makes the exact range-invariance identity
//   F(x) - F(x0) = F'(x0) r(x, x0)
// verifiable to rounding. All grid products are pointwise and all time/space
// operators are fixed linear maps, which is what makes the identity algebraic
// rather than asymptotic. This module exists for verification; the production
// Newton loop works with the reduced map instead.
#pragma once

#include <westervelt/fem.hpp>
#include <westervelt/forward.hpp>
#include <westervelt/harmonics.hpp>
#include <westervelt/mesh.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace westervelt {

// ---------------------------------------------------------------------------
// Joint points and increments
// ---------------------------------------------------------------------------

/// One experiment's joint unknown: coefficient fields sampled on the
/// time-collocation grid (n nodes x S = 4N+1 samples; constant columns for
/// time-independent coefficients) together with the harmonic state.
struct AaoPoint {
    Eigen::MatrixXd s, b, eta;  ///< n x S grid fields
    HarmonicField u;

    static AaoPoint lift(const ParameterSet& p, const HarmonicField& u) {
        const int S = 4 * u.N + 1;
        AaoPoint x;
        x.s = p.s.replicate(1, S);
        x.b = p.b.replicate(1, S);
        x.eta = p.eta.replicate(1, S);
        x.u = u;
        return x;
    }

    int grid_size() const { return static_cast<int>(s.cols()); }

    void validate(int n_nodes) const {
        const int S = grid_size();
        if (S != 4 * u.N + 1)
            throw std::invalid_argument(
                "AaoPoint: grid size must be 4N+1 for the state's harmonic count");
        if (s.rows() != n_nodes || b.rows() != n_nodes || eta.rows() != n_nodes ||
            b.cols() != S || eta.cols() != S)
            throw std::invalid_argument("AaoPoint: field shapes are inconsistent");
        if (u.num_nodes() != n_nodes)
            throw std::invalid_argument("AaoPoint: state size does not match the mesh");
    }
};

/// Direction at a joint point: grid coefficient increments and a state field.
struct AaoIncrement {
    Eigen::MatrixXd ds, db, deta;  ///< n x S
    HarmonicField du;
};

/// Operator values: interior model residual and Robin boundary value as
/// node x sample grids, observation restricted to the arc nodes.
struct AaoResidual {
    Eigen::MatrixXd model;     ///< n x S
    Eigen::MatrixXd boundary;  ///< n x S, supported on boundary nodes
    Eigen::MatrixXd obs;       ///< ns x S

    AaoResidual& operator-=(const AaoResidual& o) {
        model -= o.model;
        boundary -= o.boundary;
        obs -= o.obs;
        return *this;
    }
    friend AaoResidual operator-(AaoResidual a, const AaoResidual& b) {
        a -= b;
        return a;
    }
};

// ---------------------------------------------------------------------------
// Evaluation context
// ---------------------------------------------------------------------------

/// Carries the fixed linear operators (interior discrete Laplacian, weak Robin
/// trace, arc restriction, spectral time derivatives) shared by the all-at-once
/// evaluations on one mesh.
class AaoContext {
public:
    AaoContext(const Mesh2D& mesh, const AssembledOperators& ops)
        : mesh_(&mesh), ops_(&ops), msolve_(ops), tracer_(mesh, ops) {}

    const Mesh2D& mesh() const { return *mesh_; }

    /// n x S matrix of time samples of a harmonic field.
    static Eigen::MatrixXd grid(const HarmonicField& u, int S) {
        const std::vector<Eigen::VectorXd> cols = sample_grid(u, S);
        Eigen::MatrixXd out(u.num_nodes(), S);
        for (int j = 0; j < S; ++j) out.col(j) = cols[static_cast<std::size_t>(j)];
        return out;
    }

    /// Spectral time derivative of a grid matrix (odd S, band (S-1)/2).
    static Eigen::MatrixXd grid_dt(const Eigen::MatrixXd& vals, double omega, int order) {
        const int S = static_cast<int>(vals.cols());
        std::vector<Eigen::VectorXd> cols(static_cast<std::size_t>(S));
        for (int j = 0; j < S; ++j) cols[static_cast<std::size_t>(j)] = vals.col(j);
        const std::vector<Eigen::VectorXd> der = grid_time_derivative(cols, omega, order);
        Eigen::MatrixXd out(vals.rows(), S);
        for (int j = 0; j < S; ++j) out.col(j) = der[static_cast<std::size_t>(j)];
        return out;
    }

    /// Harmonic field of interior discrete Laplacians, mode by mode.
    HarmonicField laplacian(const HarmonicField& u) const {
        HarmonicField out(u.N, u.omega, u.num_nodes());
        for (int m = 0; m <= u.N; ++m)
            out.mode(m) = discrete_laplacian(*mesh_, *ops_, msolve_, Eigen::VectorXcd(u.mode(m)));
        out.enforce_real_mean();
        return out;
    }

    /// Harmonic field of weak Robin traces gamma*u + grad(u).n (boundary rows).
    HarmonicField robin_trace(const HarmonicField& u) const {
        HarmonicField out(u.N, u.omega, u.num_nodes());
        for (int m = 0; m <= u.N; ++m)
            out.mode(m) = tracer_.trace<Cplx>(Eigen::VectorXcd(u.mode(m)));
        out.enforce_real_mean();
        return out;
    }

    Eigen::MatrixXd restrict_to_arc(const Eigen::MatrixXd& vals) const {
        const auto& sigma = mesh_->sigma_nodes;
        Eigen::MatrixXd out(static_cast<int>(sigma.size()), vals.cols());
        for (std::size_t i = 0; i < sigma.size(); ++i)
            out.row(static_cast<int>(i)) = vals.row(sigma[i]);
        return out;
    }

    /// Joint operator value at a point.
    AaoResidual eval(const AaoPoint& x) const {
        x.validate(mesh_->num_nodes());
        const int S = x.grid_size();
        const double w = x.u.omega;
        const Eigen::MatrixXd U = grid(x.u, S);
        const Eigen::MatrixXd L = grid(laplacian(x.u), S);
        const Eigen::MatrixXd Ldot = grid_dt(L, w, 1);
        const Eigen::MatrixXd G =
            x.b.cwiseProduct(U) - x.eta.cwiseProduct(U.cwiseProduct(U));
        AaoResidual r;
        r.model = grid_dt(G, w, 2) - x.s.cwiseProduct(L) - Ldot;
        r.boundary = grid(robin_trace(x.u), S);
        r.obs = restrict_to_arc(U);
        return r;
    }

    /// Exact directional derivative of eval at x0 in direction dx.
    AaoResidual eval_linearized(const AaoPoint& x0, const AaoIncrement& dx) const {
        x0.validate(mesh_->num_nodes());
        const int S = x0.grid_size();
        const double w = x0.u.omega;
        x0.u.check_compatible(dx.du);
        const Eigen::MatrixXd U0 = grid(x0.u, S);
        const Eigen::MatrixXd dU = grid(dx.du, S);
        const Eigen::MatrixXd L0 = grid(laplacian(x0.u), S);
        const Eigen::MatrixXd Ld = grid(laplacian(dx.du), S);
        const Eigen::MatrixXd Ld_dot = grid_dt(Ld, w, 1);
        const Eigen::MatrixXd Gp = x0.b.cwiseProduct(dU) + dx.db.cwiseProduct(U0) -
                                   2.0 * x0.eta.cwiseProduct(U0.cwiseProduct(dU)) -
                                   dx.deta.cwiseProduct(U0.cwiseProduct(U0));
        AaoResidual r;
        r.model = grid_dt(Gp, w, 2) - x0.s.cwiseProduct(Ld) - dx.ds.cwiseProduct(L0) -
                  Ld_dot;
        r.boundary = grid(robin_trace(dx.du), S);
        r.obs = restrict_to_arc(dU);
        return r;
    }

    /// Effective increments r(x, x0): the transformed differences for which
    /// F(x) - F(x0) = F'(x0) r holds exactly. Requires the reference state and
    /// its interior Laplacian to stay above c_u = c_u_factor * max|u0| in
    /// magnitude on the whole grid.
    AaoIncrement r_map(const AaoPoint& x, const AaoPoint& x0,
                       double c_u_factor = 1e-8) const {
        x.validate(mesh_->num_nodes());
        x0.validate(mesh_->num_nodes());
        x0.u.check_compatible(x.u);
        const int S = x0.grid_size();
        if (x.grid_size() != S)
            throw std::invalid_argument("r_map: grid sizes differ");

        const Eigen::MatrixXd U = grid(x.u, S);
        const Eigen::MatrixXd U0 = grid(x0.u, S);
        const Eigen::MatrixXd L = grid(laplacian(x.u), S);
        const Eigen::MatrixXd L0 = grid(laplacian(x0.u), S);

        const double c_u = c_u_factor * U0.cwiseAbs().maxCoeff();
        check_lower_bound(U0, c_u, "reference state |u0|");
        check_lower_bound(L0, c_u, "reference Laplacian |lap(u0)|");

        AaoIncrement r;
        r.du = x.u;
        r.du -= x0.u;
        r.db = x.b - x0.b;
        r.ds = (x.s - x0.s).cwiseProduct(L).cwiseQuotient(L0);
        const Eigen::MatrixXd dU = U - U0;
        r.deta = (x0.eta.cwiseProduct(dU.cwiseProduct(dU)) +
                  (x.eta - x0.eta).cwiseProduct(U.cwiseProduct(U)) -
                  r.db.cwiseProduct(dU))
                     .cwiseQuotient(U0.cwiseProduct(U0));
        return r;
    }

    /// Max relative discrepancy of the range-invariance identity over the
    /// three operator parts, measured backward-error style against the larger
    /// of the operand magnitudes.
    double range_invariance_residual(const AaoPoint& x, const AaoPoint& x0,
                                     double c_u_factor = 1e-8) const {
        const AaoResidual fx = eval(x);
        const AaoResidual fx0 = eval(x0);
        const AaoResidual lin = eval_linearized(x0, r_map(x, x0, c_u_factor));
        const AaoResidual lhs = fx - fx0;
        auto part = [](const Eigen::MatrixXd& l, const Eigen::MatrixXd& r,
                       const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
            const double scale = std::max(
                {a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff(), 1e-300});
            return (l - r).cwiseAbs().maxCoeff() / scale;
        };
        double rel = part(lhs.model, lin.model, fx.model, fx0.model);
        rel = std::max(rel, part(lhs.boundary, lin.boundary, fx.boundary, fx0.boundary));
        rel = std::max(rel, part(lhs.obs, lin.obs, fx.obs, fx0.obs));
        return rel;
    }

private:
    static void check_lower_bound(const Eigen::MatrixXd& vals, double c_u,
                                  const char* what) {
        int i = -1, j = -1;
        const double mn = vals.cwiseAbs().minCoeff(&i, &j);
        if (mn < c_u) {
            std::ostringstream msg;
            msg << "r_map: lower bound violated: " << what << " = " << mn << " < " << c_u
                << " at node " << i << ", grid index " << j;
            throw std::runtime_error(msg.str());
        }
    }

    const Mesh2D* mesh_;
    const AssembledOperators* ops_;
    MassSolver msolve_;
    BoundaryTrace tracer_;
};

// ---------------------------------------------------------------------------
// Weak-layer diagnostic
// ---------------------------------------------------------------------------

/// Relative algebraic residual of the harmonic system at (params, u) for the
/// boundary drive `source`, over all modes 0..N. A converged forward solution
/// satisfies this to its fixed-point tolerance; it is the weak counterpart of
/// the strong grid residual returned by AaoContext::eval.
inline double harmonic_model_residual(const Mesh2D& mesh, const AssembledOperators& ops,
                                      const ParameterSet& params, const HarmonicField& source,
                                      const HarmonicField& u, const KappaOptions& kopt = {}) {
    ModeSystems systems(mesh, ops, params, u.N, u.omega, kopt);
    const HarmonicField w = project_product(u, u);
    double res_sq = 0.0, load_sq = 0.0;
    {
        const Eigen::VectorXd load0 = ops.B * source.mode(0).real().eval();
        const Eigen::VectorXd r0 =
            ops.K * u.mode(0).real().eval() + ops.B_gamma * u.mode(0).real().eval() - load0;
        res_sq += r0.squaredNorm();
        load_sq += load0.squaredNorm();
    }
    for (int m = 1; m <= u.N; ++m) {
        const Eigen::VectorXcd load =
            systems.quadratic_mass(m) * w.mode(m) + ops.B * source.mode(m);
        const Eigen::VectorXcd r = systems.mode(m).matrix() * u.mode(m) - load;
        res_sq += r.squaredNorm();
        load_sq += load.squaredNorm();
    }
    return std::sqrt(res_sq) / std::max(std::sqrt(load_sq), 1e-300);
}

// ---------------------------------------------------------------------------
// Penalty operator
// ---------------------------------------------------------------------------

/// Subtract, at every node, the weighted time average over the collocation
/// grid: the output has zero weighted mean in time, and time-constant inputs
/// map to zero. w must be strictly positive.
inline Eigen::MatrixXd penalty_P(const Eigen::MatrixXd& fields, const Eigen::VectorXd& w) {
    if (w.size() != fields.cols())
        throw std::invalid_argument("penalty_P: weight count != grid size");
    if (w.minCoeff() <= 0.0)
        throw std::invalid_argument("penalty_P: weights must be strictly positive");
    const Eigen::VectorXd wbar = w / w.sum();
    const Eigen::VectorXd mean = fields * wbar;
    return fields - mean * Eigen::RowVectorXd::Ones(fields.cols());
}

// ---------------------------------------------------------------------------
// Contraction-factor measurement
// ---------------------------------------------------------------------------

struct CRhoSample {
    double eps;    ///< perturbation magnitude
    double ratio;  ///< ||r(x) - (x - x0)|| / ||x - x0|| in scaled sup norms
};

/// Sweep perturbation magnitudes around x0 and report the ratio
/// ||r(x) - (x - x0)|| / ||x - x0||; the effective increments differ from the
/// plain differences only in the s and eta components, quadratically near x0,
/// so the curve decreases roughly linearly with eps and certifies a
/// contraction factor below one inside the sampled radius.
inline std::vector<CRhoSample> measure_c_rho(const AaoContext& ctx, const AaoPoint& x0,
                                             const std::vector<double>& epsilons,
                                             double scale_s, double scale_b,
                                             double scale_eta, unsigned seed = 1234) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    const int n = static_cast<int>(x0.s.rows());
    const int S = x0.grid_size();
    const AaoContext& c = ctx;
    (void)c;

    std::vector<CRhoSample> curve;
    curve.reserve(epsilons.size());
    for (double eps : epsilons) {
        // Smooth spatial profiles (low polynomials), constant in time, for the
        // coefficients; state perturbation proportional to the reference modes
        // so the Laplacian ratio stays uniformly bounded.
        auto smooth = [&](double scale) {
            const double a0 = unif(rng), a1 = unif(rng), a2 = unif(rng), a3 = unif(rng);
            Eigen::VectorXd f(n);
            for (int i = 0; i < n; ++i) {
                const double x = ctx.mesh().nodes(i, 0) / ctx.mesh().radius;
                const double y = ctx.mesh().nodes(i, 1) / ctx.mesh().radius;
                f[i] = scale * (a0 + a1 * x + a2 * y + a3 * (x * x + y * y));
            }
            return Eigen::MatrixXd(f.replicate(1, S));
        };

        AaoPoint x = x0;
        x.s += eps * smooth(scale_s);
        x.b += eps * smooth(scale_b);
        x.eta += eps * smooth(scale_eta);
        for (int m = 0; m <= x.u.N; ++m) {
            const Cplx cm(unif(rng), m == 0 ? 0.0 : unif(rng));
            x.u.mode(m) += eps * cm * x0.u.mode(m);
        }
        x.u.enforce_real_mean();

        const AaoIncrement r = ctx.r_map(x, x0);
        const Eigen::MatrixXd dU =
            AaoContext::grid(x.u, S) - AaoContext::grid(x0.u, S);
        const double den =
            std::max({(x.s - x0.s).cwiseAbs().maxCoeff(), (x.b - x0.b).cwiseAbs().maxCoeff(),
                      (x.eta - x0.eta).cwiseAbs().maxCoeff(), dU.cwiseAbs().maxCoeff()});
        const double num =
            std::max({(r.ds - (x.s - x0.s)).cwiseAbs().maxCoeff(),
                      (r.db - (x.b - x0.b)).cwiseAbs().maxCoeff(),
                      (r.deta - (x.eta - x0.eta)).cwiseAbs().maxCoeff()});
        curve.push_back({eps, num / std::max(den, 1e-300)});
    }
    return curve;
}

}  // namespace westervelt
