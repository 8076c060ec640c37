#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <functional>
#include <stdexcept>
#include <vector>

#include "lmstab/quadrature.hpp"
#include "lmstab/spaces.hpp"

namespace lmstab {

struct UnsupportedConfiguration : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Coordinate-format sparse matrix; duplicate triplets sum on compression.
struct CooMatrix {
    int n_rows = 0;
    int n_cols = 0;
    std::vector<Eigen::Triplet<double>> triplets;

    CooMatrix() = default;
    CooMatrix(int rows, int cols) : n_rows(rows), n_cols(cols) {}

    void add(int r, int c, double v) {
        if (r < 0 || r >= n_rows || c < 0 || c >= n_cols)
            throw std::out_of_range("CooMatrix::add: index out of range");
        triplets.emplace_back(r, c, v);
    }

    Eigen::SparseMatrix<double> compressed() const {
        Eigen::SparseMatrix<double> m(n_rows, n_cols);
        m.setFromTriplets(triplets.begin(), triplets.end());
        m.makeCompressed();
        return m;
    }

    Eigen::MatrixXd dense() const { return Eigen::MatrixXd(compressed()); }
};

using ScalarField = std::function<double(Vec2)>;
using VectorField = std::function<Vec2(Vec2)>;
using FluxField = std::function<double(Vec2, Vec2)>;  // (point, outward unit normal)

/// Data of the boundary value problem -Laplace(u) = f with u = g_D on the
/// Dirichlet part and grad(u).n = g_N on the Neumann part. Exact fields are
/// optional and only consumed by error evaluation.
struct ProblemData {
    ScalarField f;
    ScalarField dirichlet;  // g_D
    FluxField neumann;      // g_N = grad(u).n
    ScalarField exact_u;
    VectorField exact_grad;
    bool has_exact = false;

    /// Exact multiplier lambda = -grad(u).n (the diffusive flux).
    double exact_flux(Vec2 p, Vec2 n) const { return -dot(exact_grad(p), n); }
};

inline const std::vector<Side>& dirichlet_sides() {
    static const std::vector<Side> s{Side::Bottom, Side::Top};
    return s;
}

inline const std::vector<Side>& neumann_sides() {
    static const std::vector<Side> s{Side::Left, Side::Right};
    return s;
}

inline bool is_dirichlet(Side s) { return s == Side::Bottom || s == Side::Top; }

// Affine map of a triangle: x = a + J * ref.
struct ElementGeom {
    Vec2 a;
    double j00, j01, j10, j11;  // J columns are (b-a), (c-a)
    double det;                 // = 2 * area
    Vec2 map(Vec2 r) const { return {a.x + j00 * r.x + j01 * r.y, a.y + j10 * r.x + j11 * r.y}; }
    Vec2 grad(Vec2 g) const {  // J^{-T} * g
        return {(j11 * g.x - j10 * g.y) / det, (-j01 * g.x + j00 * g.y) / det};
    }
};

inline ElementGeom element_geometry(const TriMesh& m, int t) {
    const auto& tr = m.triangles[t];
    Vec2 a = m.node(tr.v[0]), b = m.node(tr.v[1]), c = m.node(tr.v[2]);
    ElementGeom g;
    g.a = a;
    g.j00 = b.x - a.x;
    g.j01 = c.x - a.x;
    g.j10 = b.y - a.y;
    g.j11 = c.y - a.y;
    g.det = g.j00 * g.j11 - g.j01 * g.j10;
    return g;
}

/// Reference coordinates, within the adjacent triangle, of the point at
/// parameter t in [0,1] along a boundary edge (arc direction).
inline Vec2 edge_ref_point(const BoundaryEdge& be, double t) {
    static constexpr std::array<Vec2, 3> ref{Vec2{0, 0}, Vec2{1, 0}, Vec2{0, 1}};
    return (1.0 - t) * ref[be.la] + t * ref[be.lb];
}

inline int stiffness_quad_degree(int k) { return 2 * (k - 1); }
inline int mass_quad_degree(int k) { return 2 * k + 2; }  // mass, coupling and boundary terms

/// Stiffness matrix A[i][j] = integral of grad(phi_j).grad(phi_i) over the domain.
inline CooMatrix assemble_stiffness(const FeSpace& V) {
    const TriMesh& m = *V.mesh;
    CooMatrix A(V.n_dofs, V.n_dofs);
    QuadRule qr = gauss_triangle(stiffness_quad_degree(V.degree));
    std::vector<Vec2> grads(V.dofs_per_cell);
    for (int t = 0; t < m.n_triangles(); ++t) {
        ElementGeom g = element_geometry(m, t);
        for (int q = 0; q < qr.size(); ++q) {
            ShapeValues sv = eval_basis(V, qr.points[q]);
            for (int l = 0; l < sv.count; ++l) grads[l] = g.grad(sv.grad[l]);
            double w = qr.weights[q] * g.det;  // det = ref-measure scaling (weights carry the 1/2)
            for (int i = 0; i < sv.count; ++i)
                for (int j = 0; j < sv.count; ++j)
                    A.add(V.cell_dof(t, i), V.cell_dof(t, j), w * dot(grads[i], grads[j]));
        }
    }
    return A;
}

/// Volume mass matrix, used for exact L2 distances between coefficient vectors.
inline CooMatrix assemble_mass(const FeSpace& V) {
    const TriMesh& m = *V.mesh;
    CooMatrix M(V.n_dofs, V.n_dofs);
    QuadRule qr = gauss_triangle(std::min(2 * V.degree + 2, 6));
    for (int t = 0; t < m.n_triangles(); ++t) {
        ElementGeom g = element_geometry(m, t);
        for (int q = 0; q < qr.size(); ++q) {
            ShapeValues sv = eval_basis(V, qr.points[q]);
            double w = qr.weights[q] * g.det;
            for (int i = 0; i < sv.count; ++i)
                for (int j = 0; j < sv.count; ++j)
                    M.add(V.cell_dof(t, i), V.cell_dof(t, j), w * sv.value[i] * sv.value[j]);
        }
    }
    return M;
}

/// Coupling matrix B with one row per multiplier dof and one column per
/// primal dof, B[m][j] = <psi_m, phi_j> over the multiplier trace mesh.
inline CooMatrix assemble_coupling(const FeSpace& V, const MultSpace& M) {
    const TraceMesh& tr = *M.trace;
    if (tr.mesh != V.mesh) throw UnsupportedConfiguration("assemble_coupling: trace mesh not derived from primal mesh");
    CooMatrix B(M.n_dofs, V.n_dofs);
    QuadRule qr = gauss_segment(mass_quad_degree(std::max(V.degree, 2)));
    for (int s = 0; s < tr.n_segments(); ++s) {
        const TraceSegment& seg = tr.segments[s];
        const BoundaryEdge& be = tr.mesh->boundary_edges[seg.parent_edge];
        for (int q = 0; q < qr.size(); ++q) {
            double t = qr.points[q].x;  // segment-local
            double te = seg.t0 + t * (seg.t1 - seg.t0);
            ShapeValues sv = eval_basis(V, edge_ref_point(be, te));
            SegShape ms = eval_basis(M, t);
            double w = qr.weights[q] * seg.length;
            for (int lm = 0; lm < ms.count; ++lm)
                for (int j = 0; j < sv.count; ++j)
                    B.add(M.seg_dof(s, lm), V.cell_dof(be.tri, j), w * ms.value[lm] * sv.value[j]);
        }
    }
    return B;
}

/// Right hand side: primal block (f,v) + <g_N, v> on the Neumann sides,
/// followed (if mult != nullptr) by the unsigned multiplier block <mu, g_D>.
/// The solver applies the sign convention of the method variant.
inline Eigen::VectorXd assemble_load(const FeSpace& V, const MultSpace* mult, const ProblemData& data) {
    const TriMesh& m = *V.mesh;
    const int n_lambda = mult ? mult->n_dofs : 0;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(V.n_dofs + n_lambda);

    QuadRule qv = gauss_triangle(std::min(mass_quad_degree(V.degree), 6));
    for (int t = 0; t < m.n_triangles(); ++t) {
        ElementGeom g = element_geometry(m, t);
        for (int q = 0; q < qv.size(); ++q) {
            ShapeValues sv = eval_basis(V, qv.points[q]);
            double w = qv.weights[q] * g.det * data.f(g.map(qv.points[q]));
            for (int i = 0; i < sv.count; ++i) rhs[V.cell_dof(t, i)] += w * sv.value[i];
        }
    }

    QuadRule qs = gauss_segment(mass_quad_degree(V.degree));
    for (const auto& be : m.boundary_edges) {
        if (is_dirichlet(be.side)) continue;
        for (int q = 0; q < qs.size(); ++q) {
            double t = qs.points[q].x;
            Vec2 p = (1.0 - t) * m.node(be.v[0]) + t * m.node(be.v[1]);
            ShapeValues sv = eval_basis(V, edge_ref_point(be, t));
            double w = qs.weights[q] * be.length * data.neumann(p, be.normal);
            for (int i = 0; i < sv.count; ++i) rhs[V.cell_dof(be.tri, i)] += w * sv.value[i];
        }
    }

    if (mult) {
        const TraceMesh& tr = *mult->trace;
        for (int s = 0; s < tr.n_segments(); ++s) {
            const TraceSegment& seg = tr.segments[s];
            for (int q = 0; q < qs.size(); ++q) {
                double t = qs.points[q].x;
                Vec2 p = tr.segment_point(s, t);
                SegShape ms = eval_basis(*mult, t);
                double w = qs.weights[q] * seg.length * data.dirichlet(p);
                for (int lm = 0; lm < ms.count; ++lm) rhs[V.n_dofs + mult->seg_dof(s, lm)] += w * ms.value[lm];
            }
        }
    }
    return rhs;
}

struct NitscheTerms {
    CooMatrix matrix;    // boundary flux terms, to be added to the stiffness
    Eigen::VectorXd rhs; // Dirichlet data contribution
};

/// Penalty-free Nitsche boundary terms on the Dirichlet sides:
///   -<dn(u), v> + sigma <dn(v), u>   with sigma = -1 (symmetric) or +1,
/// plus the consistent data term sigma <dn(v), g_D> on the right hand side.
inline NitscheTerms assemble_nitsche(const FeSpace& V, bool symmetric, const ProblemData& data) {
    const TriMesh& m = *V.mesh;
    const double sigma = symmetric ? -1.0 : 1.0;
    NitscheTerms out;
    out.matrix = CooMatrix(V.n_dofs, V.n_dofs);
    out.rhs = Eigen::VectorXd::Zero(V.n_dofs);
    QuadRule qs = gauss_segment(mass_quad_degree(V.degree));
    std::vector<double> dn(V.dofs_per_cell);
    for (const auto& be : m.boundary_edges) {
        if (!is_dirichlet(be.side)) continue;
        ElementGeom g = element_geometry(m, be.tri);
        for (int q = 0; q < qs.size(); ++q) {
            double t = qs.points[q].x;
            Vec2 p = (1.0 - t) * m.node(be.v[0]) + t * m.node(be.v[1]);
            ShapeValues sv = eval_basis(V, edge_ref_point(be, t));
            for (int l = 0; l < sv.count; ++l) dn[l] = dot(g.grad(sv.grad[l]), be.normal);
            double w = qs.weights[q] * be.length;
            for (int i = 0; i < sv.count; ++i) {
                for (int j = 0; j < sv.count; ++j)
                    out.matrix.add(V.cell_dof(be.tri, i), V.cell_dof(be.tri, j),
                                   w * (-dn[j] * sv.value[i] + sigma * dn[i] * sv.value[j]));
                out.rhs[V.cell_dof(be.tri, i)] += w * sigma * dn[i] * data.dirichlet(p);
            }
        }
    }
    return out;
}

/// Boundary mass <h^e u, v> over the Dirichlet sides; h is the local volume
/// boundary edge length. e = -1 builds the ||.||_{1/2,h} weight.
inline CooMatrix assemble_boundary_mass(const FeSpace& V, int h_exponent) {
    const TriMesh& m = *V.mesh;
    CooMatrix M(V.n_dofs, V.n_dofs);
    QuadRule qs = gauss_segment(mass_quad_degree(V.degree));
    for (const auto& be : m.boundary_edges) {
        if (!is_dirichlet(be.side)) continue;
        double hw = std::pow(be.length, h_exponent);
        for (int q = 0; q < qs.size(); ++q) {
            ShapeValues sv = eval_basis(V, edge_ref_point(be, qs.points[q].x));
            double w = qs.weights[q] * be.length * hw;
            for (int i = 0; i < sv.count; ++i)
                for (int j = 0; j < sv.count; ++j)
                    M.add(V.cell_dof(be.tri, i), V.cell_dof(be.tri, j), w * sv.value[i] * sv.value[j]);
        }
    }
    return M;
}

/// Multiplier mass <h^e lambda, mu> over the trace mesh; h is the parent
/// volume boundary edge length (the primal trace mesh size). e = 1 realises
/// the ||.||_{-1/2,h} norm matrix.
inline CooMatrix assemble_mult_mass(const MultSpace& M, int h_exponent) {
    const TraceMesh& tr = *M.trace;
    CooMatrix out(M.n_dofs, M.n_dofs);
    QuadRule qs = gauss_segment(mass_quad_degree(2));
    for (int s = 0; s < tr.n_segments(); ++s) {
        const TraceSegment& seg = tr.segments[s];
        double hw = std::pow(tr.parent_edge_length(s), h_exponent);
        for (int q = 0; q < qs.size(); ++q) {
            SegShape ms = eval_basis(M, qs.points[q].x);
            double w = qs.weights[q] * seg.length * hw;
            for (int i = 0; i < ms.count; ++i)
                for (int j = 0; j < ms.count; ++j)
                    out.add(M.seg_dof(s, i), M.seg_dof(s, j), w * ms.value[i] * ms.value[j]);
        }
    }
    return out;
}

}  // namespace lmstab
