#pragma once

// Triangulated disk meshes with boundary markers.
//
// The domain is a disk B_R(0); the boundary carries a Robin (impedance)
// condition everywhere and a measurement arc Sigma marked edge-by-edge.
// Meshes are generated as concentric rings of nodes (6*i nodes on ring i)
// zipped into positively oriented triangles, so boundary nodes lie exactly
// on the circle and the mesh size is uniform ~ R/n_rings both radially and
// azimuthally.

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace westervelt {

/// One oriented boundary edge. (a -> b) traverses the boundary loop
/// counterclockwise, i.e. the domain lies to the left of the edge.
struct BoundaryEdge {
    int a = -1;                 ///< first node index
    int b = -1;                 ///< second node index
    int tri = -1;               ///< index of the unique adjacent triangle
    Eigen::Vector2d normal;     ///< outward unit normal
    bool on_sigma = false;      ///< edge belongs to the measurement arc Sigma
};

/// Conforming P1 triangulation of a disk with boundary markers.
struct Mesh2D {
    Eigen::Matrix<double, Eigen::Dynamic, 2> nodes;  ///< node coordinates [m]
    std::vector<std::array<int, 3>> triangles;       ///< CCW vertex triples
    std::vector<BoundaryEdge> boundary_edges;        ///< closed CCW loop
    std::vector<int> boundary_nodes;                 ///< sorted unique indices
    std::vector<int> sigma_nodes;                    ///< sorted unique indices on Sigma
    double radius = 0.0;                             ///< generating radius (0 if unknown)

    int num_nodes() const { return static_cast<int>(nodes.rows()); }
    int num_triangles() const { return static_cast<int>(triangles.size()); }

    double tri_area(int t) const {
        const auto& tr = triangles[static_cast<std::size_t>(t)];
        Eigen::Vector2d p0 = nodes.row(tr[0]), p1 = nodes.row(tr[1]), p2 = nodes.row(tr[2]);
        return 0.5 * ((p1 - p0).x() * (p2 - p0).y() - (p1 - p0).y() * (p2 - p0).x());
    }

    double total_area() const {
        double a = 0.0;
        for (int t = 0; t < num_triangles(); ++t) a += tri_area(t);
        return a;
    }
};

/// Angular interval [start, end] (radians, counterclockwise from start to end).
/// start == 0 && end == 2*pi (or any span >= 2*pi) denotes the full circle.
struct ArcInterval {
    double start = 0.0;
    double end = 2.0 * M_PI;

    static ArcInterval full() { return {0.0, 2.0 * M_PI}; }

    double span() const { return end - start; }

    bool is_full() const { return span() >= 2.0 * M_PI - 1e-14; }

    /// Membership test with wrap-around.
    bool contains(double theta) const {
        if (is_full()) return true;
        const double two_pi = 2.0 * M_PI;
        double t = std::fmod(theta - start, two_pi);
        if (t < 0) t += two_pi;
        double s = std::fmod(span(), two_pi);
        if (s < 0) s += two_pi;
        return t <= s + 1e-14;
    }
};

namespace detail {

/// Edge key with order-independent hashing via sorted pair.
inline std::pair<int, int> edge_key(int a, int b) {
    return a < b ? std::make_pair(a, b) : std::make_pair(b, a);
}

}  // namespace detail

/// Recompute boundary connectivity (edges, adjacency, normals, node lists)
/// from the triangle list, and verify the mesh invariants:
/// positive orientation, boundary edges owned by exactly one triangle,
/// boundary forming a single closed loop. Sigma flags are taken from
/// `sigma_of_edge` (by unordered node pair) when provided, else all-true.
inline void rebuild_boundary(Mesh2D& mesh,
                             const std::map<std::pair<int, int>, bool>* sigma_of_edge = nullptr) {
    const int nt = mesh.num_triangles();
    for (int t = 0; t < nt; ++t) {
        if (!(mesh.tri_area(t) > 0.0))
            throw std::runtime_error("mesh: triangle " + std::to_string(t) +
                                     " is degenerate or negatively oriented");
    }

    // Count owners of each undirected edge; boundary edges appear once.
    std::map<std::pair<int, int>, std::pair<int, int>> owners;  // key -> (count, tri)
    for (int t = 0; t < nt; ++t) {
        const auto& tr = mesh.triangles[static_cast<std::size_t>(t)];
        for (int k = 0; k < 3; ++k) {
            auto key = detail::edge_key(tr[k], tr[(k + 1) % 3]);
            auto it = owners.find(key);
            if (it == owners.end())
                owners[key] = {1, t};
            else
                it->second.first += 1;
        }
    }

    // Directed boundary edges in triangle (CCW) order: domain on the left.
    std::map<int, BoundaryEdge> next_from;  // start node -> edge
    for (int t = 0; t < nt; ++t) {
        const auto& tr = mesh.triangles[static_cast<std::size_t>(t)];
        for (int k = 0; k < 3; ++k) {
            int a = tr[k], b = tr[(k + 1) % 3];
            auto ow = owners.at(detail::edge_key(a, b));
            if (ow.first != 1) continue;
            BoundaryEdge e;
            e.a = a;
            e.b = b;
            e.tri = t;
            Eigen::Vector2d d = mesh.nodes.row(b) - mesh.nodes.row(a);
            double len = d.norm();
            if (!(len > 0)) throw std::runtime_error("mesh: zero-length boundary edge");
            e.normal = Eigen::Vector2d(d.y(), -d.x()) / len;
            e.on_sigma = true;
            if (sigma_of_edge) {
                auto it = sigma_of_edge->find(detail::edge_key(a, b));
                if (it == sigma_of_edge->end())
                    throw std::runtime_error("mesh: boundary edge missing from BOUNDARY section");
                e.on_sigma = it->second;
            }
            if (next_from.count(a))
                throw std::runtime_error("mesh: boundary is not a simple loop at node " +
                                         std::to_string(a));
            next_from[a] = e;
        }
    }
    if (next_from.empty()) throw std::runtime_error("mesh: no boundary edges found");

    // Walk the loop once and require it closes over all boundary edges.
    mesh.boundary_edges.clear();
    int start = next_from.begin()->first;
    int cur = start;
    do {
        auto it = next_from.find(cur);
        if (it == next_from.end())
            throw std::runtime_error("mesh: boundary loop broken at node " + std::to_string(cur));
        mesh.boundary_edges.push_back(it->second);
        cur = it->second.b;
    } while (cur != start && mesh.boundary_edges.size() <= next_from.size());
    if (mesh.boundary_edges.size() != next_from.size())
        throw std::runtime_error("mesh: boundary edges form more than one loop");

    mesh.boundary_nodes.clear();
    mesh.sigma_nodes.clear();
    for (const auto& e : mesh.boundary_edges) {
        mesh.boundary_nodes.push_back(e.a);
        if (e.on_sigma) {
            mesh.sigma_nodes.push_back(e.a);
            mesh.sigma_nodes.push_back(e.b);
        }
    }
    std::sort(mesh.boundary_nodes.begin(), mesh.boundary_nodes.end());
    std::sort(mesh.sigma_nodes.begin(), mesh.sigma_nodes.end());
    mesh.sigma_nodes.erase(std::unique(mesh.sigma_nodes.begin(), mesh.sigma_nodes.end()),
                           mesh.sigma_nodes.end());
}

/// Generate a uniform disk mesh of given radius and target edge length.
/// Boundary edges whose midpoint angle lies in `sigma_arc` are flagged as
/// measurement edges. Throws if the requested arc captures no edge.
inline Mesh2D generate_disk_mesh(double radius, double target_h,
                                 ArcInterval sigma_arc = ArcInterval::full()) {
    if (!(radius > 0)) throw std::invalid_argument("generate_disk_mesh: radius must be > 0");
    if (!(target_h > 0) || !(target_h < radius))
        throw std::invalid_argument("generate_disk_mesh: need 0 < target_h < radius");

    const int nr = std::max(1, static_cast<int>(std::lround(radius / target_h)));

    Mesh2D mesh;
    mesh.radius = radius;
    const int n_nodes = 1 + 3 * nr * (nr + 1);
    mesh.nodes.resize(n_nodes, 2);
    mesh.nodes.row(0) << 0.0, 0.0;

    // ring_first[i] = index of the first node on ring i (ring 0 = center).
    std::vector<int> ring_first(static_cast<std::size_t>(nr) + 1, 0);
    int idx = 1;
    for (int i = 1; i <= nr; ++i) {
        ring_first[static_cast<std::size_t>(i)] = idx;
        const int cnt = 6 * i;
        const double r = radius * static_cast<double>(i) / nr;
        for (int k = 0; k < cnt; ++k) {
            const double th = 2.0 * M_PI * k / cnt;
            mesh.nodes.row(idx++) << r * std::cos(th), r * std::sin(th);
        }
    }

    // Zip consecutive rings with an angle-ordered two-pointer sweep.
    for (int i = 1; i <= nr; ++i) {
        const int m = (i == 1) ? 1 : 6 * (i - 1);
        const int M = 6 * i;
        const int ibase = (i == 1) ? 0 : ring_first[static_cast<std::size_t>(i - 1)];
        const int obase = ring_first[static_cast<std::size_t>(i)];
        if (i == 1) {
            for (int k = 0; k < M; ++k)
                mesh.triangles.push_back({0, obase + k, obase + (k + 1) % M});
            continue;
        }
        auto inner_angle = [&](int k) { return 2.0 * M_PI * k / m; };
        auto outer_angle = [&](int k) { return 2.0 * M_PI * k / M; };
        int pi_ = 0, po = 0;
        const int total = m + M;
        for (int step = 0; step < total; ++step) {
            const double next_in = inner_angle(pi_ + 1);
            const double next_out = outer_angle(po + 1);
            const bool advance_outer = (po < M) && (next_out <= next_in + 1e-15 || pi_ == m);
            if (advance_outer) {
                mesh.triangles.push_back(
                    {ibase + pi_ % m, obase + po % M, obase + (po + 1) % M});
                ++po;
            } else {
                mesh.triangles.push_back(
                    {ibase + pi_ % m, obase + po % M, ibase + (pi_ + 1) % m});
                ++pi_;
            }
        }
    }

    rebuild_boundary(mesh);

    // Sigma flags by edge midpoint angle.
    int n_sigma = 0;
    for (auto& e : mesh.boundary_edges) {
        Eigen::Vector2d mid = 0.5 * (mesh.nodes.row(e.a) + mesh.nodes.row(e.b));
        double th = std::atan2(mid.y(), mid.x());
        if (th < 0) th += 2.0 * M_PI;
        e.on_sigma = sigma_arc.contains(th);
        n_sigma += e.on_sigma ? 1 : 0;
    }
    if (n_sigma == 0)
        throw std::invalid_argument("generate_disk_mesh: sigma arc captures no boundary edge");

    // Refresh the node lists with the final flags.
    std::map<std::pair<int, int>, bool> flags;
    for (const auto& e : mesh.boundary_edges) flags[detail::edge_key(e.a, e.b)] = e.on_sigma;
    rebuild_boundary(mesh, &flags);
    return mesh;
}

}  // namespace westervelt
