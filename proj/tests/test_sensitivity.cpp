// Tests for measurement extraction, the weighted measurement inner product,
// and the frozen linearization: linearity, the adjoint identity, the dense
// transpose cross-check, and the Taylor remainder of the full forward map.
#include <catch2/catch_amalgamated.hpp>

#include <westervelt/fem.hpp>
#include <westervelt/forward.hpp>
#include <westervelt/harmonics.hpp>
#include <westervelt/mesh.hpp>
#include <westervelt/sensitivity.hpp>

#include "oracles.hpp"

#include <cmath>
#include <complex>
#include <random>
#include <vector>

using namespace westervelt;
using Catch::Approx;

namespace {

constexpr double kRadius = 0.2;
constexpr double kGamma = 1.0;

struct Lab {
    Mesh2D mesh;
    AssembledOperators ops;
    ParameterSet params0;
    HarmonicField source;
    HarmonicField u0;

    Lab(double h, int N, double amplitude, ArcInterval arc = ArcInterval::full())
        : mesh(generate_disk_mesh(kRadius, h, arc)), ops(assemble(mesh, kGamma)),
          params0(ParameterSet::constant(mesh.num_nodes(), 2000.0, 20.0, 0.0)) {
        ExcitationSpec e;
        e.amplitude = amplitude;
        source = build_source(e, mesh, ops, N);
        u0 = solve_forward(mesh, ops, params0, source, N, e.omega());
    }
};

ParameterIncrement random_increment(const Lab& lab, std::mt19937& rng, double scale_s,
                                    double scale_b, double scale_e) {
    const int n = lab.mesh.num_nodes();
    std::normal_distribution<double> dist;
    ParameterIncrement d(n);
    for (int i = 0; i < n; ++i) {
        d.ds[i] = scale_s * dist(rng);
        d.db[i] = scale_b * dist(rng);
        d.deta[i] = scale_e * dist(rng);
    }
    return d;
}

MeasurementSet random_measurement(const MeasurementSet& like, std::mt19937& rng) {
    std::normal_distribution<double> dist;
    MeasurementSet y = like;
    for (auto& t : y.traces)
        for (int i = 0; i < t.size(); ++i) t[i] = Cplx(dist(rng), dist(rng));
    return y;
}

}  // namespace

TEST_CASE("observation restricts every harmonic to the measurement arc") {
    Lab lab(kRadius / 8, 3, 10.0);

    // Full-boundary arc: one trace value per boundary node, matching the field.
    MeasurementSet ms = observe(lab.u0, lab.mesh);
    REQUIRE(ms.sigma_nodes == lab.mesh.boundary_nodes);
    REQUIRE(ms.highest_mode() == 3);
    for (int m = 0; m <= 3; ++m)
        for (std::size_t i = 0; i < ms.sigma_nodes.size(); ++i)
            REQUIRE(ms.traces[static_cast<std::size_t>(m)][static_cast<int>(i)] ==
                    lab.u0.mode(m)[ms.sigma_nodes[i]]);

    // Zero field gives zero traces.
    HarmonicField z(3, lab.u0.omega, lab.mesh.num_nodes());
    MeasurementSet mz = observe(z, lab.mesh);
    for (const auto& t : mz.traces) REQUIRE(t.cwiseAbs().maxCoeff() == 0.0);

    // Half-boundary arc: trace nodes are exactly the flagged subset.
    Lab half(kRadius / 8, 3, 10.0, ArcInterval{0.0, M_PI});
    MeasurementSet mh = observe(half.u0, half.mesh);
    REQUIRE(mh.sigma_nodes.size() < half.mesh.boundary_nodes.size());
    REQUIRE(mh.sigma_nodes == half.mesh.sigma_nodes);
    for (int i : mh.sigma_nodes) {
        const double th = std::atan2(half.mesh.nodes(i, 1), half.mesh.nodes(i, 0));
        REQUIRE(ArcInterval{0.0, M_PI}.contains(th));
    }

    // An empty arc is a contract violation.
    Mesh2D stripped = lab.mesh;
    stripped.sigma_nodes.clear();
    REQUIRE_THROWS_AS(observe(lab.u0, stripped), std::invalid_argument);
}

TEST_CASE("measurement inner product carries the period and harmonic weights") {
    Lab lab(kRadius / 8, 2, 1.0);
    MeasurementGeometry geom(lab.mesh, lab.ops);
    const int ns = static_cast<int>(geom.sigma_nodes().size());
    const double perim =
        Eigen::VectorXd::Ones(lab.mesh.num_nodes())
            .dot(lab.ops.B * Eigen::VectorXd::Ones(lab.mesh.num_nodes()));

    MeasurementSet y;
    y.omega = 2.0 * M_PI;  // T = 1
    y.sigma_nodes = geom.sigma_nodes();
    y.traces.assign(3, Eigen::VectorXcd::Zero(ns));

    // Mode-0 constant c: |y|^2 = T * c^2 * perimeter.
    y.traces[0].setConstant(Cplx(3.0, 0.0));
    REQUIRE(geom.norm_sq(y) == Approx(9.0 * perim).epsilon(1e-12));

    // Adding a constant first harmonic contributes with weight 1/2.
    y.traces[1].setConstant(Cplx(0.0, 2.0));
    REQUIRE(geom.norm_sq(y) == Approx((9.0 + 0.5 * 4.0) * perim).epsilon(1e-12));

    // Halving the frequency doubles the period factor.
    MeasurementSet y2 = y;
    y2.omega = M_PI;
    MeasurementGeometry geom2(lab.mesh, lab.ops);
    REQUIRE(geom2.norm_sq(y2) == Approx(2.0 * geom.norm_sq(y)).epsilon(1e-12));
}

TEST_CASE("the linearized map is linear and vanishes on the zero direction") {
    Lab lab(kRadius / 8, 3, 10.0);
    FrozenLinearization lin(lab.mesh, lab.ops, lab.params0, lab.u0);
    MeasurementGeometry geom(lab.mesh, lab.ops);
    std::mt19937 rng(77);

    const ParameterIncrement zero(lab.mesh.num_nodes());
    REQUIRE(geom.norm(lin.apply_K(zero)) == 0.0);

    const ParameterIncrement d = random_increment(lab, rng, 100.0, 1.0, 1e-3);
    const MeasurementSet Kd = lin.apply_K(d);
    const MeasurementSet K2d = lin.apply_K(2.0 * d);
    REQUIRE(geom.norm(K2d - 2.0 * Kd) <= 1e-12 * geom.norm(K2d));

    // Superposition over the three coefficient components.
    ParameterIncrement only_s = zero, only_b = zero, only_e = zero;
    only_s.ds = d.ds;
    only_b.db = d.db;
    only_e.deta = d.deta;
    MeasurementSet sum = lin.apply_K(only_s);
    sum += lin.apply_K(only_b);
    sum += lin.apply_K(only_e);
    REQUIRE(geom.norm(sum - Kd) <= 1e-12 * geom.norm(Kd));

    // The mean-harmonic row of the map is identically zero.
    REQUIRE(Kd.traces[0].cwiseAbs().maxCoeff() == 0.0);

    // Frozen cache: repeated application is bit-identical.
    const MeasurementSet Kd_again = lin.apply_K(d);
    REQUIRE(geom.norm(Kd_again - Kd) == 0.0);
}

TEST_CASE("adjoint identity holds to near rounding for random pairs") {
    Lab lab(kRadius / 8, 3, 10.0);
    FrozenLinearization lin(lab.mesh, lab.ops, lab.params0, lab.u0);
    MeasurementGeometry geom(lab.mesh, lab.ops);
    std::mt19937 rng(2024);

    const MeasurementSet proto = observe(lab.u0, lab.mesh);
    for (int rep = 0; rep < 50; ++rep) {
        const ParameterIncrement d = random_increment(lab, rng, 100.0, 1.0, 1e-3);
        const MeasurementSet y = random_measurement(proto, rng);
        const MeasurementSet Kd = lin.apply_K(d);
        const ParameterIncrement g = lin.apply_Kstar(y);
        const double lhs = geom.inner(Kd, y);
        const double rhs = x_inner(lab.ops, d, g);
        REQUIRE(std::abs(lhs - rhs) <= 1e-10 * (geom.norm(Kd) * geom.norm(y) + 1e-30));
    }

    // Zero measurement pulls back to the zero gradient.
    MeasurementSet zero = proto;
    for (auto& t : zero.traces) t.setZero();
    const ParameterIncrement g0 = lin.apply_Kstar(zero);
    REQUIRE(x_norm(lab.ops, g0) == 0.0);
}

TEST_CASE("dense matrices of K and K* are exact transposes in the weighted products") {
    Lab lab(kRadius / 2, 2, 5.0);  // 19 nodes
    const int n = lab.mesh.num_nodes();
    REQUIRE(n < 40);
    FrozenLinearization lin(lab.mesh, lab.ops, lab.params0, lab.u0);
    MeasurementGeometry geom(lab.mesh, lab.ops);
    const int ns = static_cast<int>(geom.sigma_nodes().size());
    const int N = 2;
    const int dimX = 3 * n;
    const int dimY = 2 * (N + 1) * ns;  // interleaved Re/Im per harmonic

    auto pack_y = [&](const MeasurementSet& y) {
        Eigen::VectorXd v(dimY);
        for (int m = 0; m <= N; ++m) {
            v.segment((2 * m) * ns, ns) = y.traces[static_cast<std::size_t>(m)].real();
            v.segment((2 * m + 1) * ns, ns) = y.traces[static_cast<std::size_t>(m)].imag();
        }
        return v;
    };
    auto unpack_y = [&](const Eigen::VectorXd& v) {
        MeasurementSet y;
        y.omega = lab.u0.omega;
        y.sigma_nodes = geom.sigma_nodes();
        y.traces.assign(static_cast<std::size_t>(N) + 1, Eigen::VectorXcd::Zero(ns));
        for (int m = 0; m <= N; ++m) {
            y.traces[static_cast<std::size_t>(m)].real() = v.segment((2 * m) * ns, ns);
            y.traces[static_cast<std::size_t>(m)].imag() = v.segment((2 * m + 1) * ns, ns);
        }
        return y;
    };

    Eigen::MatrixXd Kmat(dimY, dimX);
    for (int c = 0; c < dimX; ++c) {
        ParameterIncrement d(n);
        if (c < n)
            d.ds[c] = 1.0;
        else if (c < 2 * n)
            d.db[c - n] = 1.0;
        else
            d.deta[c - 2 * n] = 1.0;
        Kmat.col(c) = pack_y(lin.apply_K(d));
    }
    Eigen::MatrixXd Ksmat(dimX, dimY);
    for (int c = 0; c < dimY; ++c) {
        Eigen::VectorXd e = Eigen::VectorXd::Zero(dimY);
        e[c] = 1.0;
        const ParameterIncrement g = lin.apply_Kstar(unpack_y(e));
        Ksmat.col(c).segment(0, n) = g.ds;
        Ksmat.col(c).segment(n, n) = g.db;
        Ksmat.col(c).segment(2 * n, n) = g.deta;
    }

    const Eigen::MatrixXd M = Eigen::MatrixXd(lab.ops.M);
    Eigen::MatrixXd Wx = Eigen::MatrixXd::Zero(dimX, dimX);
    Wx.block(0, 0, n, n) = M;
    Wx.block(n, n, n, n) = M;
    Wx.block(2 * n, 2 * n, n, n) = M;

    const Eigen::MatrixXd Bs = Eigen::MatrixXd(geom.arc_mass());
    const double T = lab.u0.omega > 0 ? 2.0 * M_PI / lab.u0.omega : 0.0;
    Eigen::MatrixXd Wy = Eigen::MatrixXd::Zero(dimY, dimY);
    for (int m = 0; m <= N; ++m) {
        const double w = T * ((m == 0) ? 1.0 : 0.5);
        Wy.block((2 * m) * ns, (2 * m) * ns, ns, ns) = w * Bs;
        Wy.block((2 * m + 1) * ns, (2 * m + 1) * ns, ns, ns) = w * Bs;
    }

    const Eigen::MatrixXd lhs = Wx * Ksmat;
    const Eigen::MatrixXd rhs = Kmat.transpose() * Wy;
    const double scale = rhs.cwiseAbs().maxCoeff();
    REQUIRE(scale > 0.0);
    REQUIRE((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-10 * scale);
}

TEST_CASE("Taylor remainder of the forward map decays at second order") {
    const int N = 3;
    Lab lab(kRadius / 8, N, 20.0);
    FrozenLinearization lin(lab.mesh, lab.ops, lab.params0, lab.u0);
    MeasurementGeometry geom(lab.mesh, lab.ops);
    std::mt19937 rng(5);
    const ParameterIncrement d = random_increment(lab, rng, 200.0, 2.0, 2e-3);

    ForwardOptions tight;
    tight.fp_tol = 1e-13;
    const double omega = lab.u0.omega;
    const MeasurementSet F0 = observe(lab.u0, lab.mesh);
    const MeasurementSet Kd = lin.apply_K(d);

    std::vector<double> rems;
    for (double eps : {1e-2, 1e-3, 1e-4}) {
        const ParameterSet x = apply_increment(lab.params0, eps * d);
        const HarmonicField u =
            solve_forward(lab.mesh, lab.ops, x, lab.source, N, omega, tight);
        MeasurementSet rem = observe(u, lab.mesh);
        rem -= F0;
        rem -= eps * Kd;
        rems.push_back(geom.norm(rem));
    }

    REQUIRE(rems[0] > rems[1]);
    REQUIRE(rems[1] > rems[2]);
    for (std::size_t i = 0; i + 1 < rems.size(); ++i) {
        const double slope = std::log10(rems[i] / rems[i + 1]);
        REQUIRE(slope >= 1.9);
        REQUIRE(slope <= 2.5);
    }
}

TEST_CASE("the frozen linearization rejects an incompatible reference") {
    Lab lab(kRadius / 4, 2, 5.0);
    ParameterSet bad = lab.params0;
    bad.eta.setConstant(1e-4);
    REQUIRE_THROWS_AS(FrozenLinearization(lab.mesh, lab.ops, bad, lab.u0),
                      std::invalid_argument);
}
