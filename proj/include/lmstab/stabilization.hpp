#pragma once

#include <Eigen/Dense>

#include "lmstab/forms.hpp"

namespace lmstab {

// Contiguous dof range of one trace component of a multiplier space.
inline std::pair<int, int> component_dof_range(const MultSpace& sp, int c) {
    const auto& [b, e] = sp.trace->component_segments[c];
    switch (sp.kind) {
        case MultKind::P0Disc: return {b, e};
        case MultKind::P2Disc: return {3 * b, 3 * e};
        case MultKind::P1Cont: return {sp.component_offset[c], sp.component_offset[c] + (e - b) + 1};
    }
    return {0, 0};
}

// Nesting of two trace meshes over the same components: maps a fine segment
// to its containing coarse segment. Requires the fine refine factor to be a
// multiple of the coarse one.
struct TraceNesting {
    int rf, rc;
    const TraceMesh* fine;
    const TraceMesh* coarse;

    int coarse_segment(int fine_seg) const {
        const auto& s = fine->segments[fine_seg];
        int local = fine_seg - fine->component_segments[s.component].first;
        return coarse->component_segments[s.component].first + (local * rc) / rf;
    }
    // fine-segment local t -> coarse-segment local coordinate
    double coarse_param(int fine_seg, int coarse_seg, double t) const {
        const auto& sf = fine->segments[fine_seg];
        const auto& sc = coarse->segments[coarse_seg];
        double te = sf.t0 + t * (sf.t1 - sf.t0);
        return (te - sc.t0) / (sc.t1 - sc.t0);
    }
};

inline TraceNesting require_nested(const TraceMesh& fine, const TraceMesh& coarse) {
    if (fine.mesh != coarse.mesh || fine.components != coarse.components)
        throw UnsupportedConfiguration("trace meshes live on different boundaries");
    if (fine.refine_factor % coarse.refine_factor != 0)
        throw UnsupportedConfiguration("trace meshes are not nested");
    return {fine.refine_factor, coarse.refine_factor, &fine, &coarse};
}

/// Coefficient realisation of the L2(boundary) projection pi_L from a rich
/// multiplier space Lambda_h onto a stable space L_h, assembled per connected
/// component.
struct ProjectionOperator {
    const MultSpace* source = nullptr;  // Lambda_h
    const MultSpace* target = nullptr;  // L_h
    Eigen::MatrixXd P;                  // n_L x n_Lambda, coefficients of pi_L
    Eigen::MatrixXd mass_L;             // L_h mass matrix (block diagonal per component)
    Eigen::MatrixXd mixed;              // <psi^L_i, phi^Lambda_j>

    Eigen::VectorXd apply(const Eigen::VectorXd& lambda_coeffs) const { return P * lambda_coeffs; }
};

// Cross mass <h^e psi^L_i, phi^Lambda_j> integrated on the common refinement
// (the fine mesh).
inline Eigen::MatrixXd cross_mass(const MultSpace& fine_sp, const MultSpace& coarse_sp, int h_exponent) {
    TraceNesting nest = require_nested(*fine_sp.trace, *coarse_sp.trace);
    Eigen::MatrixXd C = Eigen::MatrixXd::Zero(coarse_sp.n_dofs, fine_sp.n_dofs);
    QuadRule qr = gauss_segment(mass_quad_degree(2));
    for (int s = 0; s < fine_sp.trace->n_segments(); ++s) {
        const TraceSegment& seg = fine_sp.trace->segments[s];
        int cs = nest.coarse_segment(s);
        double hw = std::pow(fine_sp.trace->parent_edge_length(s), h_exponent);
        for (int q = 0; q < qr.size(); ++q) {
            double t = qr.points[q].x;
            SegShape fb = eval_basis(fine_sp, t);
            SegShape cb = eval_basis(coarse_sp, nest.coarse_param(s, cs, t));
            double w = qr.weights[q] * seg.length * hw;
            for (int i = 0; i < cb.count; ++i)
                for (int j = 0; j < fb.count; ++j)
                    C(coarse_sp.seg_dof(cs, i), fine_sp.seg_dof(s, j)) += w * cb.value[i] * fb.value[j];
        }
    }
    return C;
}

inline ProjectionOperator project_to_stable(const MultSpace& lambda, const MultSpace& stable) {
    require_nested(*lambda.trace, *stable.trace);
    ProjectionOperator op;
    op.source = &lambda;
    op.target = &stable;
    op.mass_L = assemble_mult_mass(stable, 0).dense();
    op.mixed = cross_mass(lambda, stable, 0);
    op.P = Eigen::MatrixXd::Zero(stable.n_dofs, lambda.n_dofs);
    for (int c = 0; c < static_cast<int>(stable.trace->components.size()); ++c) {
        auto [lb, le] = component_dof_range(stable, c);
        int nc = le - lb;
        Eigen::MatrixXd Mc = op.mass_L.block(lb, lb, nc, nc);
        op.P.middleRows(lb, nc) = Mc.llt().solve(op.mixed.middleRows(lb, nc));
    }
    return op;
}

/// Projection stabiliser S with s(lambda,mu) = gamma <h (lambda - pi_L lambda),
/// mu - pi_L mu> on the Dirichlet boundary; h is the primal trace mesh size.
inline CooMatrix assemble_projection_stab(const MultSpace& lambda, const MultSpace& stable, double gamma) {
    if (gamma <= 0) throw std::invalid_argument("assemble_projection_stab: gamma must be positive");
    ProjectionOperator op = project_to_stable(lambda, stable);
    Eigen::MatrixXd N_ll = assemble_mult_mass(lambda, 1).dense();
    Eigen::MatrixXd N_LL = assemble_mult_mass(stable, 1).dense();
    Eigen::MatrixXd N_Ll = cross_mass(lambda, stable, 1);  // n_L x n_Lambda
    Eigen::MatrixXd S = N_ll - N_Ll.transpose() * op.P - op.P.transpose() * N_Ll + op.P.transpose() * N_LL * op.P;
    S = 0.5 * gamma * (S + S.transpose());  // symmetrise roundoff
    CooMatrix out(lambda.n_dofs, lambda.n_dofs);
    for (int i = 0; i < S.rows(); ++i)
        for (int j = 0; j < S.cols(); ++j)
            if (S(i, j) != 0.0) out.add(i, j, S(i, j));
    return out;
}

/// Interior-penalty stabiliser on the multiplier trace mesh. For P0 it
/// penalises value jumps at interior trace nodes with weight gamma h^2; for
/// P2-disc it additionally penalises jumps of the first and second tangential
/// derivatives with weights gamma h^4 and gamma h^6. Corner/endpoint nodes
/// carry no penalty.
inline CooMatrix assemble_jump_stab(const MultSpace& lambda, double gamma) {
    if (gamma <= 0) throw std::invalid_argument("assemble_jump_stab: gamma must be positive");
    if (lambda.kind == MultKind::P1Cont)
        throw UnsupportedConfiguration("assemble_jump_stab: continuous multiplier has no jumps to penalise");
    const TraceMesh& tr = *lambda.trace;
    CooMatrix S(lambda.n_dofs, lambda.n_dofs);
    const int orders = (lambda.kind == MultKind::P0Disc) ? 1 : 3;
    for (const TraceNode& nd : tr.interior_nodes) {
        const double ll = tr.segments[nd.left_seg].length;
        const double lr = tr.segments[nd.right_seg].length;
        SegShape bl = eval_basis(lambda, 1.0);
        SegShape br = eval_basis(lambda, 0.0);
        for (int ord = 0; ord < orders; ++ord) {
            // jump row: left-segment dofs with +, right-segment dofs with -
            std::vector<std::pair<int, double>> row;
            for (int l = 0; l < bl.count; ++l) {
                double v = (ord == 0) ? bl.value[l] : (ord == 1 ? bl.d1[l] / ll : bl.d2[l] / (ll * ll));
                row.emplace_back(lambda.seg_dof(nd.left_seg, l), v);
            }
            for (int l = 0; l < br.count; ++l) {
                double v = (ord == 0) ? br.value[l] : (ord == 1 ? br.d1[l] / lr : br.d2[l] / (lr * lr));
                row.emplace_back(lambda.seg_dof(nd.right_seg, l), -v);
            }
            double w = gamma * std::pow(nd.h, 2 + 2 * ord);
            for (const auto& [di, vi] : row)
                for (const auto& [dj, vj] : row)
                    if (vi != 0.0 && vj != 0.0) S.add(di, dj, w * vi * vj);
        }
    }
    return S;
}

/// Blocks of the Barbosa-Hughes residual penalty
///   gamma <h (lambda + dn(u)), mu + dn(v)>
/// on the Dirichlet boundary, integrated over the multiplier trace mesh.
struct BhBlocks {
    CooMatrix uu;      // test v, trial u
    CooMatrix ulam;    // test v, trial lambda
    CooMatrix lamu;    // test mu, trial u
    CooMatrix lamlam;  // test mu, trial lambda (gamma x h-weighted multiplier mass)
};

inline BhBlocks assemble_bh_stab(const FeSpace& V, const MultSpace& lambda, double gamma) {
    if (gamma <= 0) throw std::invalid_argument("assemble_bh_stab: gamma must be positive");
    const TraceMesh& tr = *lambda.trace;
    if (tr.mesh != V.mesh) throw UnsupportedConfiguration("assemble_bh_stab: trace mesh not derived from primal mesh");
    BhBlocks out{CooMatrix(V.n_dofs, V.n_dofs), CooMatrix(V.n_dofs, lambda.n_dofs),
                 CooMatrix(lambda.n_dofs, V.n_dofs), CooMatrix(lambda.n_dofs, lambda.n_dofs)};
    QuadRule qr = gauss_segment(mass_quad_degree(std::max(V.degree, 2)));
    std::vector<double> dn(V.dofs_per_cell);
    for (int s = 0; s < tr.n_segments(); ++s) {
        const TraceSegment& seg = tr.segments[s];
        const BoundaryEdge& be = tr.mesh->boundary_edges[seg.parent_edge];
        ElementGeom g = element_geometry(*tr.mesh, be.tri);
        double hloc = tr.parent_edge_length(s);
        for (int q = 0; q < qr.size(); ++q) {
            double t = qr.points[q].x;
            double te = seg.t0 + t * (seg.t1 - seg.t0);
            ShapeValues sv = eval_basis(V, edge_ref_point(be, te));
            for (int l = 0; l < sv.count; ++l) dn[l] = dot(g.grad(sv.grad[l]), be.normal);
            SegShape ms = eval_basis(lambda, t);
            double w = gamma * hloc * qr.weights[q] * seg.length;
            for (int i = 0; i < sv.count; ++i) {
                int gi = V.cell_dof(be.tri, i);
                for (int j = 0; j < sv.count; ++j) out.uu.add(gi, V.cell_dof(be.tri, j), w * dn[j] * dn[i]);
                for (int lm = 0; lm < ms.count; ++lm) out.ulam.add(gi, lambda.seg_dof(s, lm), w * ms.value[lm] * dn[i]);
            }
            for (int lm = 0; lm < ms.count; ++lm) {
                int gm = lambda.seg_dof(s, lm);
                for (int j = 0; j < sv.count; ++j) out.lamu.add(gm, V.cell_dof(be.tri, j), w * dn[j] * ms.value[lm]);
                for (int ln = 0; ln < ms.count; ++ln)
                    out.lamlam.add(gm, lambda.seg_dof(s, ln), w * ms.value[ln] * ms.value[lm]);
            }
        }
    }
    return out;
}

/// Coefficients of a P1-cont function re-expressed in the P2-disc space on
/// the same trace mesh (nodal values at t = 0, 1/2, 1 of every segment).
inline std::vector<double> embed_p1cont_in_p2disc(const MultSpace& p1, const MultSpace& p2,
                                                  const std::vector<double>& coeffs) {
    if (p1.kind != MultKind::P1Cont || p2.kind != MultKind::P2Disc || p1.trace != p2.trace)
        throw UnsupportedConfiguration("embed_p1cont_in_p2disc: incompatible spaces");
    std::vector<double> out(p2.n_dofs, 0.0);
    for (int s = 0; s < p1.trace->n_segments(); ++s) {
        double v0 = coeffs[p1.seg_dof(s, 0)];
        double v1 = coeffs[p1.seg_dof(s, 1)];
        out[p2.seg_dof(s, 0)] = v0;
        out[p2.seg_dof(s, 1)] = 0.5 * (v0 + v1);
        out[p2.seg_dof(s, 2)] = v1;
    }
    return out;
}

/// Largest generalized eigenvalue relating the projection-distance form
/// ||lambda - pi_L lambda||^2_{L_h} to the jump stabiliser, computed on the
/// orthogonal complement of the jump stabiliser's kernel. Returns +inf if the
/// kernels do not match (the bound would not exist).
inline double norm_equivalence_bound(const MultSpace& lambda, const MultSpace& stable) {
    Eigen::MatrixXd Q1 = assemble_projection_stab(lambda, stable, 1.0).dense();
    Eigen::MatrixXd Q2 = assemble_jump_stab(lambda, 1.0).dense();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Q2);
    const Eigen::VectorXd& ev = es.eigenvalues();
    double cut = 1e-10 * ev(ev.size() - 1);
    int first = 0;
    while (first < ev.size() && ev(first) <= cut) ++first;
    // kernel directions of Q2 must carry no Q1 energy
    for (int i = 0; i < first; ++i) {
        Eigen::VectorXd v = es.eigenvectors().col(i);
        if (v.dot(Q1 * v) > 1e-8 * Q1.norm()) return std::numeric_limits<double>::infinity();
    }
    int nk = static_cast<int>(ev.size()) - first;
    Eigen::MatrixXd W(ev.size(), nk);
    for (int i = 0; i < nk; ++i) W.col(i) = es.eigenvectors().col(first + i) / std::sqrt(ev(first + i));
    Eigen::MatrixXd T = W.transpose() * Q1 * W;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> et(0.5 * (T + T.transpose()));
    return et.eigenvalues().maxCoeff();
}

}  // namespace lmstab
