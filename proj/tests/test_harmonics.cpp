// Multiharmonic algebra: product projection against a collocation oracle,
// derivative/sampling consistency, DFT round trips, and Parseval identities.

#include <catch2/catch_amalgamated.hpp>

#include <random>

#include <Eigen/Sparse>

#include "oracles.hpp"
#include "westervelt/harmonics.hpp"

using namespace westervelt;

TEST_CASE("product projection matches pointwise collocation") {
    std::mt19937 rng(42);
    const double omega = 2.0 * M_PI / 0.7;
    for (int N : {2, 4, 8}) {
        for (int rep = 0; rep < 12; ++rep) {
            HarmonicField u = oracles::random_field(N, omega, 5, rng);
            HarmonicField v = oracles::random_field(N, omega, 5, rng);
            HarmonicField w = project_product(u, v);
            HarmonicField w_ref = oracles::product_by_collocation(u, v);
            REQUIRE(oracles::field_max_diff(w, w_ref) < 1e-12);
            REQUIRE(w.mean_mode_is_real());
        }
    }
}

TEST_CASE("product projection is symmetric and respects constants") {
    std::mt19937 rng(3);
    const double omega = 2.0 * M_PI;
    const int N = 4, n = 7;
    HarmonicField u = oracles::random_field(N, omega, n, rng);
    HarmonicField v = oracles::random_field(N, omega, n, rng);
    REQUIRE(oracles::field_max_diff(project_product(u, v), project_product(v, u)) < 1e-14);

    // A time-constant factor scales every mode pointwise.
    HarmonicField c(N, omega, n);
    c.mode(0).real() = oracles::random_rvec(n, rng);
    HarmonicField w = project_product(c, v);
    for (int m = 0; m <= N; ++m) {
        Eigen::VectorXcd want = v.mode(m).cwiseProduct(c.mode(0));
        REQUIRE((w.mode(m) - want).cwiseAbs().maxCoeff() < 1e-13);
    }
}

TEST_CASE("second time derivative matches a centered difference of samples") {
    std::mt19937 rng(11);
    const double omega = 2.0 * M_PI / 1.3;
    HarmonicField u = oracles::random_field(3, omega, 4, rng);
    HarmonicField utt = second_time_derivative(u);
    REQUIRE(utt.mode(0).cwiseAbs().maxCoeff() == 0.0);  // mean mode annihilated

    const double t0 = 0.37, dt = 1e-4;
    Eigen::VectorXd fd = (sample_time(u, t0 + dt) - 2.0 * sample_time(u, t0) +
                          sample_time(u, t0 - dt)) /
                         (dt * dt);
    Eigen::VectorXd ex = sample_time(utt, t0);
    REQUIRE((fd - ex).cwiseAbs().maxCoeff() < 1e-4 * (1.0 + ex.cwiseAbs().maxCoeff()));
}

TEST_CASE("sampling and DFT recovery are mutually inverse") {
    std::mt19937 rng(8);
    const double omega = 2.0 * M_PI / 0.9;
    const int N = 5;
    HarmonicField u = oracles::random_field(N, omega, 6, rng);

    for (int S : {2 * N + 1, 2 * N + 2, 4 * N + 1}) {
        HarmonicField back = from_samples(sample_grid(u, S), N, omega);
        REQUIRE(oracles::field_max_diff(u, back) < 1e-12);
    }
    REQUIRE_THROWS_AS(from_samples(sample_grid(u, 2 * N), N, omega), std::invalid_argument);
}

TEST_CASE("spectral grid derivative is exact for band-limited functions") {
    std::mt19937 rng(21);
    const double omega = 2.0 * M_PI / 0.7;
    const int N = 4, S = 4 * N + 1;
    HarmonicField u = oracles::random_field(N, omega, 3, rng);

    auto vals = sample_grid(u, S);
    auto d2 = grid_time_derivative(vals, omega, 2);
    HarmonicField utt = second_time_derivative(u);
    auto d2_ref = sample_grid(utt, S);
    double mx = 0.0;
    for (int j = 0; j < S; ++j) mx = std::max(mx, (d2[j] - d2_ref[j]).cwiseAbs().maxCoeff());
    REQUIRE(mx < 1e-10 * (1.0 + coeff_max_norm(utt)));

    // Odd sample counts are required.
    REQUIRE_THROWS_AS(grid_time_derivative(sample_grid(u, S + 1), omega, 1),
                      std::invalid_argument);
}

TEST_CASE("time-averaged norm satisfies the Parseval identity") {
    std::mt19937 rng(5);
    const double omega = 2.0 * M_PI / 1.1;
    const int N = 4, n = 6, S = 4 * N + 1;
    HarmonicField u = oracles::random_field(N, omega, n, rng);

    Eigen::SparseMatrix<double> I(n, n);
    I.setIdentity();
    const double viaModes = time_mean_norm_sq(u, I);
    double viaGrid = 0.0;
    for (const auto& v : sample_grid(u, S)) viaGrid += v.squaredNorm();
    viaGrid /= S;
    REQUIRE(viaModes == Catch::Approx(viaGrid).epsilon(1e-12));
}
