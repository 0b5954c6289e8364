// Measurement extraction and the frozen linearized forward map: boundary
// traces of the harmonic pressure field, the weighted measurement inner
// product, the reduced derivative K of the parameter-to-measurement map at a
// reference pair (coefficients with zero nonlinearity, linear state), and the
// exact discrete adjoint K* with respect to the mass-weighted inner products.
#pragma once

#include <westervelt/fem.hpp>
#include <westervelt/forward.hpp>
#include <westervelt/harmonics.hpp>
#include <westervelt/mesh.hpp>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

namespace westervelt {

// ---------------------------------------------------------------------------
// Measurements
// ---------------------------------------------------------------------------

/// Boundary pressure traces of one experiment: harmonic coefficients
/// restricted to the measurement-arc nodes.
struct MeasurementSet {
    double omega = 0.0;                    ///< fundamental frequency of the experiment
    std::vector<int> sigma_nodes;          ///< global mesh ids of the trace nodes
    std::vector<Eigen::VectorXcd> traces;  ///< modes 0..N on the trace nodes
    double delta = 0.0;                    ///< recorded absolute noise level

    int highest_mode() const { return static_cast<int>(traces.size()) - 1; }
    double period() const { return 2.0 * M_PI / omega; }

    void check_compatible(const MeasurementSet& o) const {
        if (o.traces.size() != traces.size() || o.sigma_nodes != sigma_nodes ||
            o.omega != omega)
            throw std::invalid_argument("MeasurementSet: incompatible operands");
    }

    MeasurementSet& operator-=(const MeasurementSet& o) {
        check_compatible(o);
        for (std::size_t m = 0; m < traces.size(); ++m) traces[m] -= o.traces[m];
        return *this;
    }
    MeasurementSet& operator+=(const MeasurementSet& o) {
        check_compatible(o);
        for (std::size_t m = 0; m < traces.size(); ++m) traces[m] += o.traces[m];
        return *this;
    }
    MeasurementSet& operator*=(double f) {
        for (auto& t : traces) t *= f;
        return *this;
    }

    friend MeasurementSet operator-(MeasurementSet a, const MeasurementSet& b) {
        a -= b;
        return a;
    }
    friend MeasurementSet operator+(MeasurementSet a, const MeasurementSet& b) {
        a += b;
        return a;
    }
    friend MeasurementSet operator*(double f, MeasurementSet y) {
        y *= f;
        return y;
    }
};

/// Dirichlet trace of every harmonic coefficient on the measurement arc.
inline MeasurementSet observe(const HarmonicField& u, const Mesh2D& mesh) {
    if (mesh.sigma_nodes.empty())
        throw std::invalid_argument("observe: the measurement arc contains no nodes");
    MeasurementSet ms;
    ms.omega = u.omega;
    ms.sigma_nodes = mesh.sigma_nodes;
    const int ns = static_cast<int>(ms.sigma_nodes.size());
    ms.traces.reserve(static_cast<std::size_t>(u.N) + 1);
    for (int m = 0; m <= u.N; ++m) {
        Eigen::VectorXcd t(ns);
        for (int i = 0; i < ns; ++i)
            t[i] = u.mode(m)[ms.sigma_nodes[static_cast<std::size_t>(i)]];
        ms.traces.push_back(std::move(t));
    }
    return ms;
}

/// Inner-product geometry of the measurement space: the boundary mass matrix
/// restricted to the arc nodes, paired over harmonics so the product
/// approximates the time-averaged boundary L2 product over one period,
///   <y, z> = T * [ Re(y_0^H Bs z_0) + (1/2) sum_{m>=1} Re(y_m^H Bs z_m) ].
class MeasurementGeometry {
public:
    MeasurementGeometry(const Mesh2D& mesh, const AssembledOperators& ops)
        : sigma_nodes_(mesh.sigma_nodes) {
        if (sigma_nodes_.empty())
            throw std::invalid_argument("MeasurementGeometry: empty measurement arc");
        const int n = mesh.num_nodes();
        std::vector<int> to_local(static_cast<std::size_t>(n), -1);
        for (std::size_t i = 0; i < sigma_nodes_.size(); ++i)
            to_local[static_cast<std::size_t>(sigma_nodes_[i])] = static_cast<int>(i);
        std::vector<Eigen::Triplet<double>> trips;
        for (int k = 0; k < ops.B_sigma.outerSize(); ++k)
            for (SpMat::InnerIterator it(ops.B_sigma, k); it; ++it) {
                const int li = to_local[static_cast<std::size_t>(it.row())];
                const int lj = to_local[static_cast<std::size_t>(it.col())];
                if (li >= 0 && lj >= 0) trips.emplace_back(li, lj, it.value());
            }
        const int ns = static_cast<int>(sigma_nodes_.size());
        Bs_.resize(ns, ns);
        Bs_.setFromTriplets(trips.begin(), trips.end());
    }

    const std::vector<int>& sigma_nodes() const { return sigma_nodes_; }
    const SpMat& arc_mass() const { return Bs_; }

    double inner(const MeasurementSet& y, const MeasurementSet& z) const {
        y.check_compatible(z);
        if (y.sigma_nodes != sigma_nodes_)
            throw std::invalid_argument("MeasurementGeometry: trace nodes mismatch");
        double acc = 0.0;
        for (int m = 0; m <= y.highest_mode(); ++m) {
            const double w = (m == 0) ? 1.0 : 0.5;
            acc += w * y.traces[static_cast<std::size_t>(m)]
                           .dot(Bs_.cast<Cplx>() * z.traces[static_cast<std::size_t>(m)])
                           .real();
        }
        return y.period() * acc;
    }

    double norm_sq(const MeasurementSet& y) const { return std::max(0.0, inner(y, y)); }
    double norm(const MeasurementSet& y) const { return std::sqrt(norm_sq(y)); }

private:
    std::vector<int> sigma_nodes_;
    SpMat Bs_;
};

// ---------------------------------------------------------------------------
// Parameter increments (the X space of the inversion)
// ---------------------------------------------------------------------------

/// A direction in coefficient space: nodal increments of (s, b, eta).
struct ParameterIncrement {
    Eigen::VectorXd ds, db, deta;

    ParameterIncrement() = default;
    explicit ParameterIncrement(int n)
        : ds(Eigen::VectorXd::Zero(n)), db(Eigen::VectorXd::Zero(n)),
          deta(Eigen::VectorXd::Zero(n)) {}
    ParameterIncrement(Eigen::VectorXd s_, Eigen::VectorXd b_, Eigen::VectorXd e_)
        : ds(std::move(s_)), db(std::move(b_)), deta(std::move(e_)) {}

    static ParameterIncrement between(const ParameterSet& x, const ParameterSet& x0) {
        return ParameterIncrement(x.s - x0.s, x.b - x0.b, x.eta - x0.eta);
    }

    int num_nodes() const { return static_cast<int>(ds.size()); }

    ParameterIncrement& operator+=(const ParameterIncrement& o) {
        ds += o.ds;
        db += o.db;
        deta += o.deta;
        return *this;
    }
    ParameterIncrement& operator-=(const ParameterIncrement& o) {
        ds -= o.ds;
        db -= o.db;
        deta -= o.deta;
        return *this;
    }
    ParameterIncrement& operator*=(double f) {
        ds *= f;
        db *= f;
        deta *= f;
        return *this;
    }
    friend ParameterIncrement operator*(double f, ParameterIncrement d) {
        d *= f;
        return d;
    }
    friend ParameterIncrement operator+(ParameterIncrement a, const ParameterIncrement& b) {
        a += b;
        return a;
    }
    friend ParameterIncrement operator-(ParameterIncrement a, const ParameterIncrement& b) {
        a -= b;
        return a;
    }
};

/// Shift a coefficient set by an increment.
inline ParameterSet apply_increment(const ParameterSet& x, const ParameterIncrement& d) {
    return ParameterSet(x.s + d.ds, x.b + d.db, x.eta + d.deta);
}

/// Mass-weighted inner product on parameter triples,
///   <d, e> = ds^T M es + db^T M eb + deta^T M eeta.
inline double x_inner(const AssembledOperators& ops, const ParameterIncrement& a,
                      const ParameterIncrement& b) {
    return a.ds.dot(ops.M * b.ds) + a.db.dot(ops.M * b.db) + a.deta.dot(ops.M * b.deta);
}

inline double x_norm(const AssembledOperators& ops, const ParameterIncrement& a) {
    return std::sqrt(std::max(0.0, x_inner(ops, a, a)));
}

// ---------------------------------------------------------------------------
// Frozen linearization
// ---------------------------------------------------------------------------

/// The derivative K of the parameter-to-trace map, frozen at a reference pair
/// (params0 with zero nonlinearity coefficient, its periodic state u0), and
/// its exact adjoint with respect to the mass-weighted parameter product and
/// the arc-mass measurement product.
///
/// With eta0 = 0 the harmonic blocks decouple: for m >= 1,
///   A_m (du)_m = M_c(u0_m) diag(beta_m) ds + M_c(u0_m) diag(alpha_m) db
///              - M_c(w0_m) diag(alpha_m) deta,
/// where alpha_m = m^2 w^2 / (s0 + i m w), beta_m = -m^2 w^2 b0 / (s0 + i m w)^2
/// (the derivatives of the wavenumber coefficient m^2 kappa_m^2), and
/// w0 = projected u0*u0. The mean harmonic block does not depend on the
/// coefficients, so its derivative row vanishes identically.
class FrozenLinearization {
public:
    FrozenLinearization(const Mesh2D& mesh, const AssembledOperators& ops,
                        const ParameterSet& params0, const HarmonicField& u0)
        : mesh_(&mesh), ops_(&ops),
          systems_(mesh, ops, params0, u0.N, u0.omega),
          geometry_(mesh, ops), msolve_(ops), u0_(u0) {
        if (params0.eta.cwiseAbs().maxCoeff() != 0.0)
            throw std::invalid_argument(
                "FrozenLinearization: the reference nonlinearity coefficient must be "
                "zero (freeze at (s0, b0, 0))");
        if (u0.num_nodes() != mesh.num_nodes())
            throw std::invalid_argument("FrozenLinearization: state/mesh size mismatch");
        const int n = mesh.num_nodes();
        const int N = u0.N;
        const double w = u0.omega;
        const HarmonicField w0 = project_product(u0, u0);

        Ws_.reserve(static_cast<std::size_t>(N));
        Wb_.reserve(static_cast<std::size_t>(N));
        We_.reserve(static_cast<std::size_t>(N));
        for (int m = 1; m <= N; ++m) {
            const double mw = m * w;
            const Eigen::VectorXcd denom =
                params0.s.cast<Cplx>() + Eigen::VectorXcd::Constant(n, Cplx(0.0, mw));
            const Eigen::VectorXcd alpha =
                Eigen::VectorXcd::Constant(n, Cplx(mw * mw, 0.0)).cwiseQuotient(denom);
            const Eigen::VectorXcd beta =
                -(mw * mw) * params0.b.cast<Cplx>().cwiseQuotient(denom.cwiseProduct(denom));

            const SpMatC Mu = mass_weighted<Cplx>(mesh, Eigen::VectorXcd(u0.mode(m)));
            const SpMatC Mw = mass_weighted<Cplx>(mesh, Eigen::VectorXcd(w0.mode(m)));
            Ws_.push_back(Mu * beta.asDiagonal());
            Wb_.push_back(Mu * alpha.asDiagonal());
            We_.push_back(SpMatC(Mw * (-alpha).asDiagonal()));
        }
    }

    const HarmonicField& reference_state() const { return u0_; }
    const MeasurementGeometry& geometry() const { return geometry_; }
    int highest_mode() const { return u0_.N; }

    /// Directional derivative of the trace map: returns tr_Sigma(du).
    MeasurementSet apply_K(const ParameterIncrement& d) const {
        const int n = mesh_->num_nodes();
        if (d.num_nodes() != n || d.db.size() != n || d.deta.size() != n)
            throw std::invalid_argument("apply_K: increment size mismatch");
        if (!d.ds.allFinite() || !d.db.allFinite() || !d.deta.allFinite())
            throw std::invalid_argument("apply_K: increment must be finite");

        HarmonicField du(u0_.N, u0_.omega, n);
        // Mean block: independent of the coefficients, derivative zero.
        for (int m = 1; m <= u0_.N; ++m) {
            const std::size_t k = static_cast<std::size_t>(m - 1);
            const Eigen::VectorXcd load = Ws_[k] * d.ds.cast<Cplx>() +
                                          Wb_[k] * d.db.cast<Cplx>() +
                                          We_[k] * d.deta.cast<Cplx>();
            du.mode(m) = systems_.mode(m).solve(load, Eigen::VectorXcd::Zero(n));
        }
        return observe(du, *mesh_);
    }

    /// Exact adjoint of apply_K: for every harmonic, back-solve the
    /// conjugate-transposed block on the weighted, arc-injected trace datum and
    /// accumulate the three coefficient gradients through the transposed load
    /// maps; finally pull back by the inverse mass matrix so the result is the
    /// gradient in the mass-weighted parameter product.
    ParameterIncrement apply_Kstar(const MeasurementSet& y) const {
        if (y.sigma_nodes != geometry_.sigma_nodes())
            throw std::invalid_argument("apply_Kstar: trace nodes mismatch");
        if (y.highest_mode() != u0_.N)
            throw std::invalid_argument("apply_Kstar: harmonic count mismatch");
        const int n = mesh_->num_nodes();
        const double T = y.period();
        const auto& sigma = geometry_.sigma_nodes();
        const int ns = static_cast<int>(sigma.size());

        Eigen::VectorXd gs = Eigen::VectorXd::Zero(n);
        Eigen::VectorXd gb = Eigen::VectorXd::Zero(n);
        Eigen::VectorXd ge = Eigen::VectorXd::Zero(n);
        for (int m = 1; m <= u0_.N; ++m) {
            const std::size_t k = static_cast<std::size_t>(m - 1);
            const Eigen::VectorXcd yb =
                geometry_.arc_mass().cast<Cplx>() * y.traces[static_cast<std::size_t>(m)];
            Eigen::VectorXcd v = Eigen::VectorXcd::Zero(n);
            for (int i = 0; i < ns; ++i)
                v[sigma[static_cast<std::size_t>(i)]] = (0.5 * T) * yb[i];
            const Eigen::VectorXcd z = systems_.mode(m).solve_adjoint(v);
            gs += (Ws_[k].adjoint() * z).real();
            gb += (Wb_[k].adjoint() * z).real();
            ge += (We_[k].adjoint() * z).real();
        }
        ParameterIncrement g;
        g.ds = msolve_.solve(gs);
        g.db = msolve_.solve(gb);
        g.deta = msolve_.solve(ge);
        return g;
    }

private:
    const Mesh2D* mesh_;
    const AssembledOperators* ops_;
    ModeSystems systems_;
    MeasurementGeometry geometry_;
    MassSolver msolve_;
    HarmonicField u0_;
    std::vector<SpMatC> Ws_, Wb_, We_;  ///< per-harmonic load maps for ds, db, deta
};

}  // namespace westervelt
