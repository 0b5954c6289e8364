#pragma once

// Multiharmonic (truncated Fourier-in-time) fields and their algebra.
//
// A time-periodic real field is represented as
//     u(x, t) = Re sum_{m=0}^{N} u_m(x) e^{i m omega t},
// with the mean mode u_0 real by convention. The key nonlinear operation is
// the L2(0,T)-orthogonal projection of a pointwise product u*v back onto the
// first N+1 modes (a truncated Cauchy convolution including the conjugate
// cross terms), which is what turns the quadratic Westervelt nonlinearity
// into couplings between harmonic amplitudes.

#include <complex>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace westervelt {

/// Truncated multiharmonic expansion of a real time-periodic nodal field.
struct HarmonicField {
    int N = 0;                           ///< highest retained harmonic
    double omega = 0.0;                  ///< fundamental angular frequency [rad/s]
    std::vector<Eigen::VectorXcd> coeffs;  ///< modes 0..N, coeffs[0] real

    HarmonicField() = default;

    HarmonicField(int N_, double omega_, int n_nodes) : N(N_), omega(omega_) {
        if (N_ < 0) throw std::invalid_argument("HarmonicField: N must be >= 0");
        coeffs.assign(static_cast<std::size_t>(N_) + 1, Eigen::VectorXcd::Zero(n_nodes));
    }

    int num_nodes() const {
        return coeffs.empty() ? 0 : static_cast<int>(coeffs.front().size());
    }

    Eigen::VectorXcd& mode(int m) { return coeffs[static_cast<std::size_t>(m)]; }
    const Eigen::VectorXcd& mode(int m) const { return coeffs[static_cast<std::size_t>(m)]; }

    /// Zero out the imaginary part of the mean mode (representation invariant).
    void enforce_real_mean() {
        if (!coeffs.empty()) coeffs[0].imag().setZero();
    }

    bool mean_mode_is_real() const {
        return coeffs.empty() || coeffs[0].imag().isZero(0.0);
    }

    HarmonicField& operator+=(const HarmonicField& o) {
        check_compatible(o);
        for (int m = 0; m <= N; ++m) mode(m) += o.mode(m);
        return *this;
    }
    HarmonicField& operator-=(const HarmonicField& o) {
        check_compatible(o);
        for (int m = 0; m <= N; ++m) mode(m) -= o.mode(m);
        return *this;
    }
    HarmonicField& operator*=(double a) {
        for (auto& c : coeffs) c *= a;
        return *this;
    }
    friend HarmonicField operator+(HarmonicField a, const HarmonicField& b) { return a += b; }
    friend HarmonicField operator-(HarmonicField a, const HarmonicField& b) { return a -= b; }
    friend HarmonicField operator*(double a, HarmonicField u) { return u *= a; }

    void check_compatible(const HarmonicField& o) const {
        if (o.N != N || o.num_nodes() != num_nodes())
            throw std::invalid_argument("HarmonicField: incompatible shapes");
    }
};

/// Projection of the pointwise product u*v onto modes 0..N (truncation of the
/// exact band-2N product). Mean mode:
///     w_0 = u_0 v_0 + (1/2) sum_{k>=1} Re(conj(u_k) v_k),
/// and for m >= 1:
///     w_m = u_0 v_m + u_m v_0 + (1/2) sum_{k=1}^{m-1} u_k v_{m-k}
///         + (1/2) sum_{n=1}^{N-m} [ u_{n+m} conj(v_n) + conj(u_n) v_{n+m} ].
inline HarmonicField project_product(const HarmonicField& u, const HarmonicField& v) {
    u.check_compatible(v);
    const int N = u.N;
    HarmonicField w(N, u.omega, u.num_nodes());

    Eigen::VectorXd w0 = (u.mode(0).real().array() * v.mode(0).real().array()).matrix();
    for (int k = 1; k <= N; ++k)
        w0 += 0.5 * (u.mode(k).conjugate().array() * v.mode(k).array()).real().matrix();
    w.mode(0).real() = w0;
    w.mode(0).imag().setZero();

    for (int m = 1; m <= N; ++m) {
        Eigen::VectorXcd wm = u.mode(0).cwiseProduct(v.mode(m)) +
                              u.mode(m).cwiseProduct(v.mode(0));
        for (int k = 1; k <= m - 1; ++k)
            wm += 0.5 * u.mode(k).cwiseProduct(v.mode(m - k));
        for (int n = 1; n <= N - m; ++n)
            wm += 0.5 * (u.mode(n + m).cwiseProduct(v.mode(n).conjugate()) +
                         u.mode(n).conjugate().cwiseProduct(v.mode(n + m)));
        w.mode(m) = wm;
    }
    return w;
}

/// Mode-wise second time derivative: multiplies mode m by -(m omega)^2.
/// The mean mode is annihilated.
inline HarmonicField second_time_derivative(const HarmonicField& u) {
    HarmonicField w(u.N, u.omega, u.num_nodes());
    for (int m = 0; m <= u.N; ++m) {
        const double f = -static_cast<double>(m) * m * u.omega * u.omega;
        w.mode(m) = f * u.mode(m);
    }
    return w;
}

/// Evaluate the real field at time t: Re sum_m u_m e^{i m omega t}.
inline Eigen::VectorXd sample_time(const HarmonicField& u, double t) {
    Eigen::VectorXd out = u.mode(0).real();
    for (int m = 1; m <= u.N; ++m) {
        const std::complex<double> ph =
            std::exp(std::complex<double>(0.0, m * u.omega * t));
        out += (u.mode(m) * ph).real();
    }
    return out;
}

/// Sample on the equispaced grid t_j = j T / S, j = 0..S-1 (T = 2 pi / omega).
inline std::vector<Eigen::VectorXd> sample_grid(const HarmonicField& u, int S) {
    const double T = 2.0 * M_PI / u.omega;
    std::vector<Eigen::VectorXd> vals;
    vals.reserve(static_cast<std::size_t>(S));
    for (int j = 0; j < S; ++j) vals.push_back(sample_time(u, T * j / S));
    return vals;
}

/// Recover modes 0..N from S >= 2N+1 equispaced samples over one period
/// (t_j = j T / S) by the exact discrete Fourier transform. Exact for fields
/// band-limited to N; band above N is aliased-free-truncated when S > 2N+1
/// covers it.
inline HarmonicField from_samples(const std::vector<Eigen::VectorXd>& samples, int N,
                                  double omega) {
    const int S = static_cast<int>(samples.size());
    if (S < 2 * N + 1)
        throw std::invalid_argument("from_samples: need at least 2N+1 equispaced samples");
    const int n_nodes = static_cast<int>(samples.front().size());
    HarmonicField u(N, omega, n_nodes);
    for (int m = 0; m <= N; ++m) {
        Eigen::VectorXcd acc = Eigen::VectorXcd::Zero(n_nodes);
        for (int j = 0; j < S; ++j) {
            const std::complex<double> ph =
                std::exp(std::complex<double>(0.0, -2.0 * M_PI * m * j / S));
            acc += samples[static_cast<std::size_t>(j)].cast<std::complex<double>>() * ph;
        }
        const double scale = (m == 0 ? 1.0 : 2.0) / S;
        u.mode(m) = scale * acc;
    }
    u.enforce_real_mean();
    return u;
}

/// Exact spectral time derivative of order `order` of a band-limited grid
/// function given by S odd equispaced samples over one period: transforms to
/// the full band (S-1)/2, multiplies mode m by (i m omega)^order, resamples.
inline std::vector<Eigen::VectorXd> grid_time_derivative(
    const std::vector<Eigen::VectorXd>& vals, double omega, int order) {
    const int S = static_cast<int>(vals.size());
    if (S < 1 || S % 2 == 0)
        throw std::invalid_argument("grid_time_derivative: need an odd number of samples");
    const int P = (S - 1) / 2;
    HarmonicField u = from_samples(vals, P, omega);
    for (int m = 0; m <= P; ++m) {
        std::complex<double> f(1.0, 0.0);
        for (int k = 0; k < order; ++k) f *= std::complex<double>(0.0, m * omega);
        u.mode(m) *= f;
    }
    if (order % 2 == 1) u.mode(0).setZero();  // odd derivatives kill the mean
    return sample_grid(u, S);
}

/// Time-averaged squared L2(M) norm: (1/T) int_0^T u(t)^T M u(t) dt
///   = u_0^T M u_0 + (1/2) sum_{m>=1} Re( u_m^H M u_m ).
template <typename MatT>
double time_mean_norm_sq(const HarmonicField& u, const MatT& M) {
    const Eigen::VectorXd u0 = u.mode(0).real();
    double acc = u0.dot(M * u0);
    for (int m = 1; m <= u.N; ++m) {
        const Eigen::VectorXd re = u.mode(m).real(), im = u.mode(m).imag();
        acc += 0.5 * (re.dot(M * re) + im.dot(M * im));
    }
    return acc;
}

/// Max over modes and nodes of |coefficient| (sup-style diagnostic norm).
inline double coeff_max_norm(const HarmonicField& u) {
    double mx = 0.0;
    for (const auto& c : u.coeffs) mx = std::max(mx, c.cwiseAbs().maxCoeff());
    return mx;
}

}  // namespace westervelt
