// Time-periodic forward solver: the periodic nonlinear pressure field is
// represented by its harmonic coefficients and computed by a fixed-point
// iteration over N+1 coupled Robin-Helmholtz problems, with the quadratic
// nonlinearity feeding each harmonic through exact triple-product loads.
#pragma once

#include <westervelt/excitation.hpp>
#include <westervelt/fem.hpp>
#include <westervelt/harmonics.hpp>
#include <westervelt/mesh.hpp>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <complex>
#include <iostream>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace westervelt {

// ---------------------------------------------------------------------------
// Material coefficient fields
// ---------------------------------------------------------------------------

/// Nodal coefficient triple of the damped nonlinear wave model
///   b p_tt - s lap(p) - lap(p_t) = eta (p^2)_tt + f.
struct ParameterSet {
    Eigen::VectorXd s;    ///< squared-speed / diffusivity ratio, > 0
    Eigen::VectorXd b;    ///< inverse diffusivity, > 0
    Eigen::VectorXd eta;  ///< quadratic-nonlinearity coefficient

    ParameterSet() = default;

    ParameterSet(Eigen::VectorXd s_, Eigen::VectorXd b_, Eigen::VectorXd eta_)
        : s(std::move(s_)), b(std::move(b_)), eta(std::move(eta_)) {}

    /// Constant-coefficient set on n nodes.
    static ParameterSet constant(int n, double s0, double b0, double eta0) {
        return ParameterSet(Eigen::VectorXd::Constant(n, s0),
                            Eigen::VectorXd::Constant(n, b0),
                            Eigen::VectorXd::Constant(n, eta0));
    }

    int num_nodes() const { return static_cast<int>(s.size()); }

    void validate(int n_nodes) const {
        if (s.size() != n_nodes || b.size() != n_nodes || eta.size() != n_nodes)
            throw std::invalid_argument("ParameterSet: field size does not match mesh");
        if (!s.allFinite() || !b.allFinite() || !eta.allFinite())
            throw std::invalid_argument("ParameterSet: fields must be finite");
        if (s.minCoeff() <= 0.0) throw std::invalid_argument("ParameterSet: s must be positive");
        if (b.minCoeff() <= 0.0) throw std::invalid_argument("ParameterSet: b must be positive");
    }
};

/// Pointwise coefficient triple derived from the physical material maps.
struct MaterialPoint {
    double s = 0.0;
    double b = 0.0;
    double eta = 0.0;
};

/// Map physical material constants (sound speed c, sound diffusivity frak_b,
/// nonlinearity ratio B/A, mass density rho0) to the model coefficients:
///   s = c^2 / frak_b,  b = 1 / frak_b,  eta = (1 + BA/2) / (2 rho0 c^2 frak_b).
inline MaterialPoint transform_parameters(double c, double frak_b, double BA, double rho0) {
    if (!(c > 0.0) || !(frak_b > 0.0) || !(rho0 > 0.0))
        throw std::invalid_argument(
            "transform_parameters: c, frak_b, rho0 must all be positive");
    if (!std::isfinite(c) || !std::isfinite(frak_b) || !std::isfinite(BA) ||
        !std::isfinite(rho0))
        throw std::invalid_argument("transform_parameters: inputs must be finite");
    MaterialPoint p;
    p.s = c * c / frak_b;
    p.b = 1.0 / frak_b;
    p.eta = (1.0 + 0.5 * BA) / (2.0 * rho0 * c * c * frak_b);
    return p;
}

// ---------------------------------------------------------------------------
// Boundary source synthesis
// ---------------------------------------------------------------------------

/// Harmonic coefficients of the Robin boundary data g for an excitation
/// psi(t) = A_eff (a + cos(omega t)) modulated by a spatial profile:
/// mode 0 = A_eff * a * phi, mode 1 = A_eff * phi, modes >= 2 zero.
///
/// Profiles: "constant" uses phi == 1 (the data is prescribed directly);
/// "bump:<theta0>:<width>" centers a Gaussian bump exp(-|x - x0|^2 / width^2)
/// at boundary angle theta0 and feeds its weak Robin trace
/// gamma*phi + grad(phi).n into the data. A profile whose trace vanishes on
/// the whole boundary excites nothing and triggers a warning on stderr.
inline HarmonicField build_source(const ExcitationSpec& spec, const Mesh2D& mesh,
                                  const AssembledOperators& ops, int N) {
    if (N < 2)
        throw std::invalid_argument(
            "build_source: need at least two harmonics (N >= 2) to carry the "
            "quadratic interaction");
    if (!(spec.T > 0.0) || !std::isfinite(spec.T))
        throw std::invalid_argument("build_source: excitation period must be positive");
    if (!(spec.amplitude >= 0.0) || !std::isfinite(spec.amplitude))
        throw std::invalid_argument("build_source: amplitude must be nonnegative");
    // Amplitude zero is allowed here (it yields the zero drive); the stricter
    // admissibility screen enforces A > 0 where identifiability needs it.
    if (!(spec.a_offset < -1.0 || spec.a_offset > -0.25))
        throw std::invalid_argument(
            "build_source: offset must lie in (-inf,-1) U (-1/4,inf)");

    const int n = mesh.num_nodes();
    const double A = spec.effective_amplitude();

    Eigen::VectorXd trace;
    if (spec.spatial_profile == "constant") {
        trace = Eigen::VectorXd::Ones(n);
    } else if (spec.spatial_profile.rfind("bump:", 0) == 0) {
        double theta0 = 0.0, width = 0.0;
        {
            std::istringstream ss(spec.spatial_profile.substr(5));
            char colon = 0;
            if (!(ss >> theta0 >> colon >> width) || colon != ':' || !(width > 0.0))
                throw std::invalid_argument(
                    "build_source: bump profile must be 'bump:<theta0>:<width>' with "
                    "positive width");
        }
        const double x0 = mesh.radius * std::cos(theta0);
        const double y0 = mesh.radius * std::sin(theta0);
        Eigen::VectorXd phi(n);
        for (int i = 0; i < n; ++i) {
            const double dx = mesh.nodes(i, 0) - x0, dy = mesh.nodes(i, 1) - y0;
            phi[i] = std::exp(-(dx * dx + dy * dy) / (width * width));
        }
        BoundaryTrace tracer(mesh, ops);
        trace = tracer.trace<double>(phi);
        const double peak = trace.cwiseAbs().maxCoeff();
        if (peak < 1e-12 * std::max(1.0, phi.cwiseAbs().maxCoeff()))
            std::cerr << "warning: build_source: spatial profile has a vanishing "
                         "Robin trace; the excitation will not drive the field\n";
    } else {
        throw std::invalid_argument("build_source: unknown spatial profile '" +
                                    spec.spatial_profile + "'");
    }

    HarmonicField g(N, spec.omega(), n);
    g.mode(0).real() = (A * spec.a_offset) * trace;
    g.mode(1).real() = A * trace;
    return g;
}

// ---------------------------------------------------------------------------
// Degeneracy guard
// ---------------------------------------------------------------------------

/// Minimum over the nodes and a 4N+1 time-collocation grid of b - 2 eta u.
/// The model loses its leading time-derivative coefficient when this reaches
/// zero; solves abort when the margin is nonpositive.
inline double degeneracy_margin(const ParameterSet& params, const HarmonicField& u) {
    if (u.N < 0 || u.num_nodes() == 0) return params.b.minCoeff();
    const int S = 4 * u.N + 1;
    const std::vector<Eigen::VectorXd> vals = sample_grid(u, S);
    double margin = std::numeric_limits<double>::infinity();
    for (const Eigen::VectorXd& v : vals) {
        const double m =
            (params.b.array() - 2.0 * params.eta.array() * v.array()).minCoeff();
        margin = std::min(margin, m);
    }
    return margin;
}

/// Raised when b - 2 eta u reaches zero somewhere during a solve: the state
/// left the region where the model is well-posed (source too strong).
class DegenerateStateError : public std::runtime_error {
public:
    double margin;
    explicit DegenerateStateError(double margin_)
        : std::runtime_error("degenerate state: b - 2*eta*u reached " +
                             std::to_string(margin_) +
                             " <= 0 on the collocation grid; reduce the source "
                             "amplitude"),
          margin(margin_) {}
};

/// Raised when the fixed-point sweep fails to reach the tolerance within the
/// iteration budget; carries the relative residual history for diagnosis.
class FixedPointDivergence : public std::runtime_error {
public:
    std::vector<double> residual_history;
    FixedPointDivergence(const std::string& msg, std::vector<double> history)
        : std::runtime_error(msg), residual_history(std::move(history)) {}
};

// ---------------------------------------------------------------------------
// Per-harmonic Helmholtz systems for fixed coefficients
// ---------------------------------------------------------------------------

/// How the per-harmonic wavenumber coefficient is formed.
struct KappaOptions {
    /// When true, kappa_m^2 uses fixed reference values (s_ref, b_ref) instead
    /// of the local nodal coefficients. Default: local coefficients.
    bool frozen_reference = false;
    double s_ref = 0.0;
    double b_ref = 0.0;
};

/// Factorized harmonic blocks for a fixed coefficient set: for m >= 1 the
/// complex symmetric operator K + B_gamma - M_c(kappa_m^2 m^2) with
/// kappa_m^2 = omega^2 b / (s + i m omega), and for m = 0 the real SPD
/// operator K + B_gamma. Also carries the quadratic-feedback mass matrices
/// M_c(-m^2 omega^2 eta / (s + i m omega)) used by the fixed-point sweep.
class ModeSystems {
public:
    ModeSystems(const Mesh2D& mesh, const AssembledOperators& ops,
                const ParameterSet& params, int N, double omega,
                const KappaOptions& kopt = {})
        : N_(N), omega_(omega), params_(params), mean_(ops) {
        if (N < 1) throw std::invalid_argument("ModeSystems: need N >= 1");
        if (!(omega > 0.0)) throw std::invalid_argument("ModeSystems: omega must be positive");
        params.validate(mesh.num_nodes());
        const int n = mesh.num_nodes();

        Eigen::VectorXd kappa_s = params.s, kappa_b = params.b;
        if (kopt.frozen_reference) {
            if (!(kopt.s_ref > 0.0) || !(kopt.b_ref > 0.0))
                throw std::invalid_argument(
                    "ModeSystems: frozen-reference wavenumber needs positive s_ref, b_ref");
            kappa_s.setConstant(kopt.s_ref);
            kappa_b.setConstant(kopt.b_ref);
        }

        solvers_.reserve(static_cast<std::size_t>(N));
        nl_mass_.reserve(static_cast<std::size_t>(N));
        for (int m = 1; m <= N; ++m) {
            const double mw = m * omega;
            Eigen::VectorXcd denom =
                kappa_s.cast<Cplx>() + Eigen::VectorXcd::Constant(n, Cplx(0.0, mw));
            // kappa_m^2 m^2 = m^2 omega^2 b / (s + i m omega)
            Eigen::VectorXcd kappa_term =
                (mw * mw) * kappa_b.cast<Cplx>().cwiseQuotient(denom);
            solvers_.push_back(
                std::make_unique<RobinHelmholtzSolver>(mesh, ops, kappa_term));
            // quadratic feedback coefficient: -(eta kappa_m^2 m^2) / b with the
            // local b of the equation (the frozen option only replaces kappa)
            Eigen::VectorXcd q =
                -(kappa_term.array() * params.eta.array().cast<Cplx>() /
                  params.b.array().cast<Cplx>())
                     .matrix();
            nl_mass_.push_back(mass_weighted<Cplx>(mesh, q));
        }
    }

    int N() const { return N_; }
    double omega() const { return omega_; }
    const ParameterSet& params() const { return params_; }
    const MeanModeSolver& mean() const { return mean_; }
    const RobinHelmholtzSolver& mode(int m) const {
        return *solvers_.at(static_cast<std::size_t>(m - 1));
    }
    /// Weighted mass of the quadratic feedback coefficient for harmonic m >= 1.
    const SpMatC& quadratic_mass(int m) const {
        return nl_mass_.at(static_cast<std::size_t>(m - 1));
    }

private:
    int N_;
    double omega_;
    ParameterSet params_;
    MeanModeSolver mean_;
    std::vector<std::unique_ptr<RobinHelmholtzSolver>> solvers_;
    std::vector<SpMatC> nl_mass_;
};

// ---------------------------------------------------------------------------
// Forward solve
// ---------------------------------------------------------------------------

struct ForwardOptions {
    double fp_tol = 1e-10;  ///< relative algebraic residual target
    int max_fp_iters = 50;  ///< fixed-point sweep budget after the linear start
};

/// Solve the coupled harmonic system for the periodic pressure field using
/// prefactorized blocks. The iteration starts from the linear (eta = 0)
/// solution and resolves the quadratic coupling by fixed point; it returns
/// when the relative algebraic residual of the full coupled system is at most
/// fp_tol. Each sweep checks the degeneracy margin of the current iterate.
inline HarmonicField solve_forward(const Mesh2D& mesh, const AssembledOperators& ops,
                                   const ModeSystems& systems, const HarmonicField& source,
                                   const ForwardOptions& opt = {},
                                   std::vector<double>* residual_history = nullptr) {
    const int N = systems.N();
    const int n = mesh.num_nodes();
    if (source.N != N)
        throw std::invalid_argument("solve_forward: source harmonic count != system N");
    if (source.num_nodes() != n)
        throw std::invalid_argument("solve_forward: source node count != mesh");
    if (!(opt.fp_tol > 0.0)) throw std::invalid_argument("solve_forward: fp_tol must be > 0");
    if (opt.max_fp_iters < 1)
        throw std::invalid_argument("solve_forward: max_fp_iters must be >= 1");

    const ParameterSet& params = systems.params();
    const Eigen::VectorXcd zero_load = Eigen::VectorXcd::Zero(n);

    // Mean mode: (K + B_gamma) u_0 = B g_0; no quadratic term feeds it.
    HarmonicField u(N, systems.omega(), n);
    u.mode(0).real() = systems.mean().solve(ops.B * source.mode(0).real().eval());

    // Linear start for the oscillating modes.
    for (int m = 1; m <= N; ++m) u.mode(m) = systems.mode(m).solve(zero_load, source.mode(m));

    std::vector<double> history;
    history.reserve(static_cast<std::size_t>(opt.max_fp_iters) + 1);

    for (int sweep = 0;; ++sweep) {
        const double margin = degeneracy_margin(params, u);
        if (margin <= 0.0) throw DegenerateStateError(margin);

        // Quadratic feedback loads at the current iterate.
        const HarmonicField w = project_product(u, u);
        std::vector<Eigen::VectorXcd> nl_load(static_cast<std::size_t>(N));
        for (int m = 1; m <= N; ++m)
            nl_load[static_cast<std::size_t>(m - 1)] = systems.quadratic_mass(m) * w.mode(m);

        // Relative algebraic residual of the coupled system at the iterate.
        double res_sq = 0.0, load_sq = 0.0;
        for (int m = 1; m <= N; ++m) {
            const Eigen::VectorXcd load =
                nl_load[static_cast<std::size_t>(m - 1)] + ops.B * source.mode(m);
            const Eigen::VectorXcd r = systems.mode(m).matrix() * u.mode(m) - load;
            res_sq += r.squaredNorm();
            load_sq += load.squaredNorm();
        }
        const double rel = std::sqrt(res_sq) / std::max(std::sqrt(load_sq), 1e-300);
        history.push_back(rel);

        if (rel <= opt.fp_tol) break;
        if (sweep >= opt.max_fp_iters) {
            if (residual_history) *residual_history = history;
            std::ostringstream msg;
            msg << "fixed-point sweep did not reach tolerance " << opt.fp_tol << " in "
                << opt.max_fp_iters << " iterations (last relative residual " << rel
                << ")";
            throw FixedPointDivergence(msg.str(), std::move(history));
        }

        for (int m = 1; m <= N; ++m)
            u.mode(m) = systems.mode(m).solve(nl_load[static_cast<std::size_t>(m - 1)],
                                              source.mode(m));
    }

    if (residual_history) *residual_history = history;
    return u;
}

/// Convenience overload: factorizes the harmonic blocks internally.
inline HarmonicField solve_forward(const Mesh2D& mesh, const AssembledOperators& ops,
                                   const ParameterSet& params, const HarmonicField& source,
                                   int N, double omega, const ForwardOptions& opt = {},
                                   std::vector<double>* residual_history = nullptr,
                                   const KappaOptions& kopt = {}) {
    ModeSystems systems(mesh, ops, params, N, omega, kopt);
    return solve_forward(mesh, ops, systems, source, opt, residual_history);
}

}  // namespace westervelt
