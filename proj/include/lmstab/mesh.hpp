#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <ostream>
#include <stdexcept>
#include <vector>

namespace lmstab {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double norm(Vec2 a) { return std::sqrt(dot(a, a)); }

/// Sides of the unit square. Dirichlet data lives on Bottom/Top, Neumann on Left/Right.
enum class Side { Bottom = 0, Top = 1, Left = 2, Right = 3 };

inline const char* side_name(Side s) {
    switch (s) {
        case Side::Bottom: return "bottom";
        case Side::Top: return "top";
        case Side::Left: return "left";
        case Side::Right: return "right";
    }
    return "?";
}

struct Triangle {
    std::array<int, 3> v;  // node indices, counterclockwise
};

struct BoundaryEdge {
    std::array<int, 2> v;  // ordered along the side's arc direction (+x on Bottom/Top, +y on Left/Right)
    Side side;
    Vec2 normal;  // outward unit normal
    int tri;      // the single adjacent triangle
    int la, lb;   // local vertex indices of v[0], v[1] in that triangle
    double length;
};

struct InteriorFace {
    std::array<int, 2> v;     // node pair, sorted
    std::array<int, 2> tris;  // the two adjacent triangles
};

/// Structured triangulation of the unit square. Immutable after construction.
struct TriMesh {
    int n = 0;  // subdivisions per side
    std::vector<Vec2> nodes;
    std::vector<Triangle> triangles;
    std::vector<BoundaryEdge> boundary_edges;
    std::vector<InteriorFace> interior_faces;
    std::vector<std::array<int, 2>> edges;     // all unique edges, sorted node pairs
    std::vector<std::array<int, 3>> tri_edges; // per triangle: global edge id of local edge (v[e], v[e+1])
    double h = 0.0;                            // max element diameter

    int n_nodes() const { return static_cast<int>(nodes.size()); }
    int n_triangles() const { return static_cast<int>(triangles.size()); }
    int n_edges() const { return static_cast<int>(edges.size()); }

    Vec2 node(int i) const { return nodes[i]; }

    double tri_area(int t) const {
        const auto& tr = triangles[t];
        Vec2 a = nodes[tr.v[0]], b = nodes[tr.v[1]], c = nodes[tr.v[2]];
        return 0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
    }
};

// Builds edge list, interior faces and per-triangle edge ids from nodes + triangles.
inline void build_connectivity(TriMesh& m) {
    std::map<std::array<int, 2>, int> edge_ids;
    std::map<std::array<int, 2>, std::vector<int>> edge_tris;
    m.tri_edges.assign(m.triangles.size(), {-1, -1, -1});
    for (int t = 0; t < m.n_triangles(); ++t) {
        for (int e = 0; e < 3; ++e) {
            int a = m.triangles[t].v[e];
            int b = m.triangles[t].v[(e + 1) % 3];
            std::array<int, 2> key{std::min(a, b), std::max(a, b)};
            auto it = edge_ids.find(key);
            int id;
            if (it == edge_ids.end()) {
                id = static_cast<int>(m.edges.size());
                edge_ids.emplace(key, id);
                m.edges.push_back(key);
            } else {
                id = it->second;
            }
            m.tri_edges[t][e] = id;
            edge_tris[key].push_back(t);
        }
    }
    m.interior_faces.clear();
    for (const auto& [key, tris] : edge_tris) {
        if (tris.size() == 2)
            m.interior_faces.push_back({key, {tris[0], tris[1]}});
        else if (tris.size() != 1)
            throw std::runtime_error("mesh: edge shared by more than two triangles");
    }
}

/// n x n structured mesh of (0,1)^2; each grid square is split by the
/// diagonal from its lower-left to its upper-right corner.
inline TriMesh build_unit_square_mesh(int n) {
    if (n < 1) throw std::invalid_argument("build_unit_square_mesh: n must be >= 1");
    TriMesh m;
    m.n = n;
    const int np = n + 1;
    m.nodes.reserve(np * np);
    for (int j = 0; j < np; ++j)
        for (int i = 0; i < np; ++i)
            m.nodes.push_back({static_cast<double>(i) / n, static_cast<double>(j) / n});

    auto vid = [np](int i, int j) { return j * np + i; };

    m.triangles.reserve(2 * n * n);
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            int v00 = vid(i, j), v10 = vid(i + 1, j);
            int v01 = vid(i, j + 1), v11 = vid(i + 1, j + 1);
            m.triangles.push_back({{v00, v10, v11}});  // lower
            m.triangles.push_back({{v00, v11, v01}});  // upper
        }
    }

    // Boundary edges in arc order per side. Lower triangle of square (i,j) is
    // 2*(j*n+i), upper is that +1.
    auto lower = [n](int i, int j) { return 2 * (j * n + i); };
    auto upper = [n](int i, int j) { return 2 * (j * n + i) + 1; };
    for (int i = 0; i < n; ++i)  // Bottom: edge (v00,v10) of lower triangle, local edge 0
        m.boundary_edges.push_back({{vid(i, 0), vid(i + 1, 0)}, Side::Bottom, {0, -1}, lower(i, 0), 0, 1, 1.0 / n});
    for (int i = 0; i < n; ++i)  // Top: edge (v01,v11) of upper triangle; v01 local 2, v11 local 1
        m.boundary_edges.push_back({{vid(i, n), vid(i + 1, n)}, Side::Top, {0, 1}, upper(i, n - 1), 2, 1, 1.0 / n});
    for (int j = 0; j < n; ++j)  // Left: edge (v00,v01) of upper triangle; v00 local 0, v01 local 2
        m.boundary_edges.push_back({{vid(0, j), vid(0, j + 1)}, Side::Left, {-1, 0}, upper(0, j), 0, 2, 1.0 / n});
    for (int j = 0; j < n; ++j)  // Right: edge (v10,v11) of lower triangle; v10 local 1, v11 local 2
        m.boundary_edges.push_back({{vid(n, j), vid(n, j + 1)}, Side::Right, {1, 0}, lower(n - 1, j), 1, 2, 1.0 / n});

    build_connectivity(m);
    m.h = std::sqrt(2.0) / n;
    return m;
}

/// One segment of a boundary trace mesh. Segments subdivide volume boundary
/// edges; t0/t1 give the covered parameter range of the parent edge.
struct TraceSegment {
    std::array<Vec2, 2> p;  // endpoints, in arc direction
    int parent_edge;        // index into TriMesh::boundary_edges
    double t0, t1;          // sub-range of the parent edge
    double length;
    int component;          // index into TraceMesh::components
    double arc0, arc1;      // arc coordinates within the component
};

/// Interior trace node: shared endpoint of two consecutive segments of one
/// component. Component endpoints (square corners) are excluded.
struct TraceNode {
    Vec2 pos;
    int left_seg;   // segment ending at the node
    int right_seg;  // segment starting at the node
    double h;       // mean of the adjacent segment lengths
};

struct TraceMesh {
    const TriMesh* mesh = nullptr;
    std::vector<Side> components;
    std::vector<TraceSegment> segments;                    // contiguous and arc-ordered per component
    std::vector<TraceNode> interior_nodes;
    std::vector<std::pair<int, int>> component_segments;   // [begin,end) into segments per component
    int refine_factor = 1;

    int n_segments() const { return static_cast<int>(segments.size()); }
    double parent_edge_length(int seg) const { return mesh->boundary_edges[segments[seg].parent_edge].length; }
    Vec2 segment_point(int seg, double t) const {
        const auto& s = segments[seg];
        return (1.0 - t) * s.p[0] + t * s.p[1];
    }
};

/// Splits every volume boundary edge of the selected side tags into
/// refine_factor equal segments. Each side tag is one connected component.
inline TraceMesh extract_trace_mesh(const TriMesh& mesh, const std::vector<Side>& components, int refine_factor) {
    if (components.empty()) throw std::invalid_argument("extract_trace_mesh: component set is empty");
    if (refine_factor < 1) throw std::invalid_argument("extract_trace_mesh: refine_factor must be >= 1");

    TraceMesh tm;
    tm.mesh = &mesh;
    tm.components = components;
    tm.refine_factor = refine_factor;

    for (int c = 0; c < static_cast<int>(components.size()); ++c) {
        Side side = components[c];
        // Volume boundary edges of this side, in arc order.
        std::vector<int> edge_ids;
        for (int e = 0; e < static_cast<int>(mesh.boundary_edges.size()); ++e)
            if (mesh.boundary_edges[e].side == side) edge_ids.push_back(e);
        auto arc_key = [&](int e) {
            const auto& be = mesh.boundary_edges[e];
            Vec2 a = mesh.node(be.v[0]);
            return (side == Side::Bottom || side == Side::Top) ? a.x : a.y;
        };
        std::sort(edge_ids.begin(), edge_ids.end(), [&](int a, int b) { return arc_key(a) < arc_key(b); });

        int begin = tm.n_segments();
        double arc = 0.0;
        for (int e : edge_ids) {
            const auto& be = mesh.boundary_edges[e];
            Vec2 a = mesh.node(be.v[0]);
            Vec2 b = mesh.node(be.v[1]);
            for (int r = 0; r < refine_factor; ++r) {
                double t0 = static_cast<double>(r) / refine_factor;
                double t1 = static_cast<double>(r + 1) / refine_factor;
                TraceSegment seg;
                seg.p = {a + t0 * (b - a), a + t1 * (b - a)};
                seg.parent_edge = e;
                seg.t0 = t0;
                seg.t1 = t1;
                seg.length = be.length / refine_factor;
                seg.component = c;
                seg.arc0 = arc;
                arc += seg.length;
                seg.arc1 = arc;
                tm.segments.push_back(seg);
            }
        }
        int end = tm.n_segments();
        tm.component_segments.emplace_back(begin, end);
        for (int s = begin; s + 1 < end; ++s) {
            TraceNode nd;
            nd.pos = tm.segments[s].p[1];
            nd.left_seg = s;
            nd.right_seg = s + 1;
            nd.h = 0.5 * (tm.segments[s].length + tm.segments[s + 1].length);
            tm.interior_nodes.push_back(nd);
        }
    }
    return tm;
}

// Debug dump: "v x y" / "t i j k" / "e i j tag" records, one per line.
inline void dump_mesh(const TriMesh& m, std::ostream& os) {
    for (const auto& p : m.nodes) os << "v " << p.x << " " << p.y << "\n";
    for (const auto& t : m.triangles) os << "t " << t.v[0] << " " << t.v[1] << " " << t.v[2] << "\n";
    for (const auto& e : m.boundary_edges)
        os << "e " << e.v[0] << " " << e.v[1] << " " << side_name(e.side) << "\n";
}

}  // namespace lmstab
