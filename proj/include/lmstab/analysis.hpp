#pragma once

#include <numbers>

#include "lmstab/solver.hpp"

namespace lmstab {

/// Errors of one run: H1 seminorm and L2 norm over the domain, multiplier
/// error in the ||.||_{-1/2,h} trace norm (NaN for the multiplier-free
/// Nitsche variants).
struct ErrorRecord {
    int n = 0;
    double h = 0.0;
    int n_dofs = 0;
    double err_h1 = 0.0;
    double err_l2 = 0.0;
    double err_mult = std::numeric_limits<double>::quiet_NaN();
    MethodSpec spec;
};

/// Manufactured problem of the numerical study:
///   u(x,y) = cos(pi x) cos(pi y) / (2 pi^2) + 0.25 x (1-x) y (1-y)
/// with Dirichlet data on y = 0 and y = 1 and Neumann data on x = 0 and x = 1.
inline ProblemData exact_solution() {
    constexpr double pi = std::numbers::pi;
    ProblemData d;
    d.exact_u = [=](Vec2 p) {
        return std::cos(pi * p.x) * std::cos(pi * p.y) / (2 * pi * pi) + 0.25 * p.x * (1 - p.x) * p.y * (1 - p.y);
    };
    d.exact_grad = [=](Vec2 p) {
        return Vec2{-std::sin(pi * p.x) * std::cos(pi * p.y) / (2 * pi) + 0.25 * (1 - 2 * p.x) * p.y * (1 - p.y),
                    -std::cos(pi * p.x) * std::sin(pi * p.y) / (2 * pi) + 0.25 * p.x * (1 - p.x) * (1 - 2 * p.y)};
    };
    d.f = [=](Vec2 p) {
        return std::cos(pi * p.x) * std::cos(pi * p.y) + 0.5 * (p.x * (1 - p.x) + p.y * (1 - p.y));
    };
    d.dirichlet = d.exact_u;
    d.neumann = [grad = d.exact_grad](Vec2 p, Vec2 nrm) { return dot(grad(p), nrm); };
    d.has_exact = true;
    return d;
}

/// Globally linear solution for patch tests; every consistent variant must
/// reproduce it to solver accuracy.
inline ProblemData linear_patch_data(double a = 0.7, double b = 2.0, double c = -0.5) {
    ProblemData d;
    d.exact_u = [=](Vec2 p) { return a + b * p.x + c * p.y; };
    d.exact_grad = [=](Vec2) { return Vec2{b, c}; };
    d.f = [](Vec2) { return 0.0; };
    d.dirichlet = d.exact_u;
    d.neumann = [=](Vec2, Vec2 nrm) { return b * nrm.x + c * nrm.y; };
    d.has_exact = true;
    return d;
}

/// Nodal interpolant coefficients of a scalar field.
inline Eigen::VectorXd interpolate(const FeSpace& V, const ScalarField& u) {
    Eigen::VectorXd c(V.n_dofs);
    for (int i = 0; i < V.n_dofs; ++i) c[i] = u(V.dof_point(i));
    return c;
}

inline ErrorRecord compute_errors(const SolutionFields& sol, const ProblemData& data, const MethodSpec& spec,
                                  const TriMesh& mesh, const MethodSetup& setup) {
    if (!data.has_exact) throw std::invalid_argument("compute_errors: problem data carries no exact solution");
    ErrorRecord rec;
    rec.n = mesh.n;
    rec.h = mesh.h;
    rec.spec = spec;
    rec.n_dofs = setup.primal.n_dofs + setup.n_lambda();

    const FeSpace& V = setup.primal;
    QuadRule qr = gauss_triangle_composite(2 * V.degree + 4);
    double h1 = 0.0, l2 = 0.0;
    for (int t = 0; t < mesh.n_triangles(); ++t) {
        ElementGeom g = element_geometry(mesh, t);
        for (int q = 0; q < qr.size(); ++q) {
            ShapeValues sv = eval_basis(V, qr.points[q]);
            double uh = 0.0;
            Vec2 gh{0, 0};
            for (int l = 0; l < sv.count; ++l) {
                double cl = sol.u[V.cell_dof(t, l)];
                uh += cl * sv.value[l];
                gh = gh + cl * g.grad(sv.grad[l]);
            }
            Vec2 p = g.map(qr.points[q]);
            double w = qr.weights[q] * g.det;
            Vec2 de = data.exact_grad(p) - gh;
            double ue = data.exact_u(p) - uh;
            h1 += w * dot(de, de);
            l2 += w * ue * ue;
        }
    }
    rec.err_h1 = std::sqrt(h1);
    rec.err_l2 = std::sqrt(l2);

    if (setup.mult && sol.lambda.size() > 0) {
        const MultSpace& M = *setup.mult;
        const TraceMesh& tr = *M.trace;
        QuadRule qs = gauss_segment(std::min(2 * V.degree + 4, 9));
        double em = 0.0;
        std::vector<double> lam(sol.lambda.data(), sol.lambda.data() + sol.lambda.size());
        for (int s = 0; s < tr.n_segments(); ++s) {
            const TraceSegment& seg = tr.segments[s];
            const BoundaryEdge& be = tr.mesh->boundary_edges[seg.parent_edge];
            double hw = tr.parent_edge_length(s);
            for (int q = 0; q < qs.size(); ++q) {
                double t = qs.points[q].x;
                Vec2 p = tr.segment_point(s, t);
                double diff = data.exact_flux(p, be.normal) - eval_mult(M, lam, s, t);
                em += qs.weights[q] * seg.length * hw * diff * diff;
            }
        }
        rec.err_mult = std::sqrt(em);
    }
    return rec;
}

struct RateSummary {
    double slope_h1 = 0.0;
    double slope_l2 = 0.0;
    double slope_mult = std::numeric_limits<double>::quiet_NaN();
};

// Least-squares slope of log(err) against log(h).
inline double loglog_slope(const std::vector<double>& h, const std::vector<double>& err) {
    const int n = static_cast<int>(h.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int i = 0; i < n; ++i) {
        double x = std::log(h[i]), y = std::log(err[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

inline RateSummary estimate_rates(const std::vector<ErrorRecord>& records) {
    if (records.size() < 3) throw std::invalid_argument("estimate_rates: need at least 3 records");
    std::vector<double> h, e1, e2, em;
    bool mult_ok = true;
    for (size_t i = 0; i < records.size(); ++i) {
        if (i > 0 && !(records[i].h < records[i - 1].h))
            throw std::invalid_argument("estimate_rates: h must be strictly decreasing");
        h.push_back(records[i].h);
        e1.push_back(records[i].err_h1);
        e2.push_back(records[i].err_l2);
        em.push_back(records[i].err_mult);
        mult_ok = mult_ok && std::isfinite(records[i].err_mult) && records[i].err_mult > 0;
    }
    RateSummary r;
    r.slope_h1 = loglog_slope(h, e1);
    r.slope_l2 = loglog_slope(h, e2);
    if (mult_ok) r.slope_mult = loglog_slope(h, em);
    return r;
}

/// One row of the Barbosa-Hughes-to-Nitsche limit table.
struct SweepRow {
    double gamma = 0.0;
    double dist_l2 = std::numeric_limits<double>::quiet_NaN();  // ||u_BH(gamma) - u_Nitsche||_{L2}
    double pivot_ratio = std::numeric_limits<double>::quiet_NaN();
    SolveStatus status = SolveStatus::Ok;
    bool near_singular = false;  // an eigenvalue crossed zero within the last step
};

/// Sweeps a Barbosa-Hughes variant over the given penalty values on one mesh
/// and measures the L2 distance to the penalty-free Nitsche method of the
/// same symmetry. Singular solves are rows, not failures. A row is flagged
/// near-singular when the system passed through a singular configuration
/// since the previous gamma: for the symmetric variant this is certified by a
/// change of matrix inertia (the boundary modes of the two Dirichlet
/// components cross zero in pairs here, so the determinant sign alone is
/// blind); for the nonsymmetric variant a determinant sign flip is used.
inline std::vector<SweepRow> gamma_sweep(Variant bh_variant, int degree, int n, const std::vector<double>& gammas,
                                         const ProblemData& data) {
    if (bh_variant != Variant::BarbosaHughesSym && bh_variant != Variant::BarbosaHughesNonsym)
        throw std::invalid_argument("gamma_sweep: base method must be a Barbosa-Hughes variant");
    const bool symmetric = bh_variant == Variant::BarbosaHughesSym;
    const Variant nit = symmetric ? Variant::NitscheSym : Variant::NitscheNonsym;

    TriMesh mesh = build_unit_square_mesh(n);
    MethodSpec nit_spec = MethodSpec::make(nit, degree, 1.0, n);
    MethodSetup nit_setup = setup_method(mesh, nit_spec);
    SolutionFields ref = solve(assemble_system(nit_spec, mesh, nit_setup, data));
    if (!ref.ok()) throw std::runtime_error("gamma_sweep: reference Nitsche solve failed");
    Eigen::SparseMatrix<double> mass = assemble_mass(nit_setup.primal).compressed();

    std::vector<SweepRow> rows;
    int last_sign = 0;
    int last_inertia = -1;
    for (double g : gammas) {
        MethodSpec spec = MethodSpec::make(bh_variant, degree, g, n);
        MethodSetup setup = setup_method(mesh, spec);
        SaddleSystem sys = assemble_system(spec, mesh, setup, data);
        SolutionFields sol = solve(sys);
        SweepRow row;
        row.gamma = g;
        row.status = sol.status;
        if (sol.diag.pivot_max > 0) row.pivot_ratio = sol.diag.pivot_min / sol.diag.pivot_max;
        if (symmetric) {
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Eigen::MatrixXd(sys.matrix), Eigen::EigenvaluesOnly);
            int neg = static_cast<int>((es.eigenvalues().array() < 0.0).count());
            if (last_inertia >= 0 && neg != last_inertia) row.near_singular = true;
            last_inertia = neg;
        } else if (sol.ok()) {
            if (last_sign != 0 && sol.diag.det_sign != 0 && sol.diag.det_sign != last_sign) row.near_singular = true;
            last_sign = sol.diag.det_sign;
        }
        if (sol.ok()) {
            Eigen::VectorXd d = sol.u - ref.u;
            row.dist_l2 = std::sqrt(d.dot(mass * d));
        }
        rows.push_back(row);
    }
    return rows;
}

}  // namespace lmstab
