#pragma once

#include <array>
#include <stdexcept>
#include <vector>

#include "lmstab/mesh.hpp"

namespace lmstab {

/// Values and reference gradients of the element shape functions at one
/// reference point.
struct ShapeValues {
    int count = 0;
    std::array<double, 6> value{};
    std::array<Vec2, 6> grad{};
};

/// Continuous Lagrange space V_h^k, k in {1,2}, on a TriMesh. P1 dofs are the
/// mesh nodes; P2 adds one dof per edge (midpoint).
struct FeSpace {
    const TriMesh* mesh = nullptr;
    int degree = 1;
    int n_dofs = 0;
    int dofs_per_cell = 3;
    std::array<std::vector<int>, 4> boundary_dofs;  // per Side

    int cell_dof(int t, int l) const {
        const auto& tri = mesh->triangles[t];
        if (l < 3) return tri.v[l];
        return mesh->n_nodes() + mesh->tri_edges[t][l - 3];
    }

    /// Physical coordinates of a dof (nodal for P1, nodal + edge midpoints for P2).
    Vec2 dof_point(int dof) const {
        if (dof < mesh->n_nodes()) return mesh->node(dof);
        const auto& e = mesh->edges[dof - mesh->n_nodes()];
        return 0.5 * (mesh->node(e[0]) + mesh->node(e[1]));
    }
};

inline FeSpace build_primal_space(const TriMesh& mesh, int k) {
    if (k != 1 && k != 2) throw std::invalid_argument("build_primal_space: degree must be 1 or 2");
    FeSpace sp;
    sp.mesh = &mesh;
    sp.degree = k;
    sp.dofs_per_cell = (k == 1) ? 3 : 6;
    sp.n_dofs = (k == 1) ? mesh.n_nodes() : mesh.n_nodes() + mesh.n_edges();
    for (int e = 0; e < static_cast<int>(mesh.boundary_edges.size()); ++e) {
        const auto& be = mesh.boundary_edges[e];
        auto& list = sp.boundary_dofs[static_cast<int>(be.side)];
        list.push_back(be.v[0]);
        list.push_back(be.v[1]);
        if (k == 2) {
            // locate the global edge id of this boundary edge
            std::array<int, 2> key{std::min(be.v[0], be.v[1]), std::max(be.v[0], be.v[1])};
            for (int loc = 0; loc < 3; ++loc) {
                int a = mesh.triangles[be.tri].v[loc];
                int b = mesh.triangles[be.tri].v[(loc + 1) % 3];
                if (std::min(a, b) == key[0] && std::max(a, b) == key[1]) {
                    list.push_back(mesh.n_nodes() + mesh.tri_edges[be.tri][loc]);
                    break;
                }
            }
        }
    }
    for (auto& list : sp.boundary_dofs) {
        std::sort(list.begin(), list.end());
        list.erase(std::unique(list.begin(), list.end()), list.end());
    }
    return sp;
}

/// Lagrange shape functions on the reference triangle at (x,y).
/// Local order: vertices 0,1,2 then (P2) midpoints of edges (0,1),(1,2),(2,0).
inline ShapeValues eval_basis(const FeSpace& sp, Vec2 p) {
    ShapeValues sv;
    const double l1 = 1.0 - p.x - p.y, l2 = p.x, l3 = p.y;
    if (sp.degree == 1) {
        sv.count = 3;
        sv.value = {l1, l2, l3, 0, 0, 0};
        sv.grad = {Vec2{-1, -1}, Vec2{1, 0}, Vec2{0, 1}};
        return sv;
    }
    sv.count = 6;
    sv.value = {l1 * (2 * l1 - 1), l2 * (2 * l2 - 1), l3 * (2 * l3 - 1),
                4 * l1 * l2,       4 * l2 * l3,       4 * l3 * l1};
    const Vec2 g1{-1, -1}, g2{1, 0}, g3{0, 1};
    sv.grad = {(4 * l1 - 1) * g1,
               (4 * l2 - 1) * g2,
               (4 * l3 - 1) * g3,
               4 * (l2 * g1 + l1 * g2),
               4 * (l3 * g2 + l2 * g3),
               4 * (l1 * g3 + l3 * g1)};
    return sv;
}

enum class MultKind { P0Disc, P2Disc, P1Cont };

inline const char* mult_kind_name(MultKind k) {
    switch (k) {
        case MultKind::P0Disc: return "p0-disc";
        case MultKind::P2Disc: return "p2-disc";
        case MultKind::P1Cont: return "p1-cont";
    }
    return "?";
}

/// Multiplier space on a boundary trace mesh. P1Cont is continuous within
/// each connected component only; component endpoints stay free dofs.
struct MultSpace {
    const TraceMesh* trace = nullptr;
    MultKind kind = MultKind::P0Disc;
    int n_dofs = 0;
    int dofs_per_seg = 1;
    std::vector<int> component_offset;  // P1Cont: first dof of each component

    int seg_dof(int seg, int l) const {
        switch (kind) {
            case MultKind::P0Disc: return seg;
            case MultKind::P2Disc: return 3 * seg + l;
            case MultKind::P1Cont: {
                const auto& s = trace->segments[seg];
                int local = seg - trace->component_segments[s.component].first;
                return component_offset[s.component] + local + l;
            }
        }
        return -1;
    }
};

inline MultSpace build_multiplier_space(const TraceMesh& trace, MultKind kind) {
    MultSpace sp;
    sp.trace = &trace;
    sp.kind = kind;
    const int ns = trace.n_segments();
    switch (kind) {
        case MultKind::P0Disc:
            sp.dofs_per_seg = 1;
            sp.n_dofs = ns;
            break;
        case MultKind::P2Disc:
            sp.dofs_per_seg = 3;
            sp.n_dofs = 3 * ns;
            break;
        case MultKind::P1Cont: {
            sp.dofs_per_seg = 2;
            int off = 0;
            for (const auto& [b, e] : trace.component_segments) {
                sp.component_offset.push_back(off);
                off += (e - b) + 1;
            }
            sp.n_dofs = off;
            break;
        }
    }
    return sp;
}

/// Segment shape values and first/second derivatives w.r.t. the local
/// coordinate t in [0,1]. Physical arc derivatives divide by powers of the
/// segment length.
struct SegShape {
    int count = 0;
    std::array<double, 3> value{};
    std::array<double, 3> d1{};
    std::array<double, 3> d2{};
};

inline SegShape eval_basis(const MultSpace& sp, double t) {
    SegShape s;
    switch (sp.kind) {
        case MultKind::P0Disc:
            s.count = 1;
            s.value = {1.0, 0, 0};
            break;
        case MultKind::P1Cont:
            s.count = 2;
            s.value = {1.0 - t, t, 0};
            s.d1 = {-1.0, 1.0, 0};
            break;
        case MultKind::P2Disc:
            // nodes at t = 0, 1/2, 1
            s.count = 3;
            s.value = {(1 - t) * (1 - 2 * t), 4 * t * (1 - t), t * (2 * t - 1)};
            s.d1 = {4 * t - 3, 4 - 8 * t, 4 * t - 1};
            s.d2 = {4, -8, 4};
            break;
    }
    return s;
}

/// Evaluates the multiplier field with the given coefficients at local
/// coordinate t of a segment.
inline double eval_mult(const MultSpace& sp, const std::vector<double>& coeffs, int seg, double t) {
    SegShape s = eval_basis(sp, t);
    double v = 0;
    for (int l = 0; l < s.count; ++l) v += coeffs[sp.seg_dof(seg, l)] * s.value[l];
    return v;
}

}  // namespace lmstab
