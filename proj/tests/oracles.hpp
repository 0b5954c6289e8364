#pragma once

// Independent cross-check implementations used only by the tests.
//
// Everything here deliberately avoids the code paths it verifies:
// the product projection is checked by pointwise collocation + DFT,
// Bessel functions by their integral representation, and disk Helmholtz
// solutions by radial Bessel series.

#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "westervelt/harmonics.hpp"

namespace oracles {

using Cplx = std::complex<double>;

/// Collocation oracle for the truncated product projection: sample both
/// factors at S >= 4N+1 equispaced times, multiply pointwise, DFT back and
/// keep modes 0..N. Exact for band-limited inputs because the true product
/// has band 2N.
inline westervelt::HarmonicField product_by_collocation(const westervelt::HarmonicField& u,
                                                        const westervelt::HarmonicField& v) {
    const int N = u.N;
    const int S = 4 * N + 1;
    const double T = 2.0 * M_PI / u.omega;
    std::vector<Eigen::VectorXd> prod;
    prod.reserve(S);
    for (int j = 0; j < S; ++j) {
        const double t = T * j / S;
        prod.push_back(westervelt::sample_time(u, t).cwiseProduct(
            westervelt::sample_time(v, t)));
    }
    return westervelt::from_samples(prod, N, u.omega);
}

/// Bessel J_n for complex argument via the integral representation
/// J_n(z) = (1/pi) int_0^pi cos(n t - z sin t) dt (entire integrand;
/// trapezoid/midpoint converges fast for |z| up to ~50 with enough points).
inline Cplx bessel_J(int n, Cplx z) {
    const int Q = 4000;
    Cplx acc(0.0, 0.0);
    for (int q = 0; q < Q; ++q) {
        const double t = M_PI * (q + 0.5) / Q;
        acc += std::cos(static_cast<double>(n) * t - z * std::sin(t));
    }
    return acc / static_cast<double>(Q);
}

/// Radial solution of  -Delta u - ksq u = 0  in B_R(0) with Robin data
/// gamma u + du/dn = g (constant) on r = R:  u(r) = g J_0(k r) / D,
/// D = gamma J_0(k R) - k J_1(k R), principal branch k = sqrt(ksq).
inline Cplx disk_robin_solution(Cplx ksq, double gamma, double R, Cplx g, double r) {
    const Cplx k = std::sqrt(ksq);
    const Cplx D = gamma * bessel_J(0, k * R) - k * bessel_J(1, k * R);
    return g * bessel_J(0, k * r) / D;
}

/// Seeded random nodal complex vector with entries ~ N(0,1) + i N(0,1).
inline Eigen::VectorXcd random_cvec(int n, std::mt19937& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    Eigen::VectorXcd v(n);
    for (int i = 0; i < n; ++i) v[i] = Cplx(g(rng), g(rng));
    return v;
}

inline Eigen::VectorXd random_rvec(int n, std::mt19937& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = g(rng);
    return v;
}

/// Random multiharmonic field with real mean mode.
inline westervelt::HarmonicField random_field(int N, double omega, int n_nodes,
                                              std::mt19937& rng) {
    westervelt::HarmonicField u(N, omega, n_nodes);
    u.mode(0).real() = random_rvec(n_nodes, rng);
    for (int m = 1; m <= N; ++m) u.mode(m) = random_cvec(n_nodes, rng);
    return u;
}

/// Largest |difference| across all modes of two fields.
inline double field_max_diff(const westervelt::HarmonicField& a,
                             const westervelt::HarmonicField& b) {
    double mx = 0.0;
    for (int m = 0; m <= a.N; ++m)
        mx = std::max(mx, (a.mode(m) - b.mode(m)).cwiseAbs().maxCoeff());
    return mx;
}

/// Mean observed convergence order from errors on meshes refined by 2:
/// averages log2(e_i / e_{i+1}).
inline double fit_order(const std::vector<double>& errors) {
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < errors.size(); ++i)
        acc += std::log2(errors[i] / errors[i + 1]);
    return acc / static_cast<double>(errors.size() - 1);
}

}  // namespace oracles
