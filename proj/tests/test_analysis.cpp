#include <catch2/catch_amalgamated.hpp>
#include <random>

#include "lmstab/analysis.hpp"

using namespace lmstab;

TEST_CASE("manufactured solution values") {
    ProblemData d = exact_solution();
    CHECK(d.exact_u({0.5, 0.5}) == Catch::Approx(1.0 / 64).margin(1e-15));
    CHECK(d.f({0.5, 0.5}) == Catch::Approx(0.25).margin(1e-15));
    // multiplier on the bottom side: lambda = -grad(u).(0,-1) = du/dy
    CHECK(d.exact_flux({0.5, 0.0}, {0, -1}) == Catch::Approx(0.0625).margin(1e-15));
    // Dirichlet trace is the solution's trace
    CHECK(d.dirichlet({0.25, 0.0}) == Catch::Approx(d.exact_u({0.25, 0.0})).margin(1e-15));
}

TEST_CASE("manufactured solution is self-consistent") {
    ProblemData d = exact_solution();
    std::mt19937 rng(23);
    std::uniform_real_distribution<double> uni(0.1, 0.9);
    const double h = 1e-5;
    for (int trial = 0; trial < 20; ++trial) {
        Vec2 p{uni(rng), uni(rng)};
        // gradient against central differences
        double gx = (d.exact_u({p.x + h, p.y}) - d.exact_u({p.x - h, p.y})) / (2 * h);
        double gy = (d.exact_u({p.x, p.y + h}) - d.exact_u({p.x, p.y - h})) / (2 * h);
        CHECK(d.exact_grad(p).x == Catch::Approx(gx).margin(1e-8));
        CHECK(d.exact_grad(p).y == Catch::Approx(gy).margin(1e-8));
        // f = -laplace(u) against the 5-point stencil
        double lap = (d.exact_u({p.x + h, p.y}) + d.exact_u({p.x - h, p.y}) + d.exact_u({p.x, p.y + h}) +
                      d.exact_u({p.x, p.y - h}) - 4 * d.exact_u(p)) /
                     (h * h);
        CHECK(d.f(p) == Catch::Approx(-lap).margin(1e-5));
        // Neumann data is the outward flux on the vertical sides
        CHECK(d.neumann({0.0, p.y}, {-1, 0}) == Catch::Approx(-d.exact_grad({0.0, p.y}).x).margin(1e-14));
    }
}

TEST_CASE("errors of the nodal interpolant behave like interpolation theory") {
    ProblemData d = exact_solution();
    MethodSpec spec = MethodSpec::make(Variant::StablePair, 1, 1.0, 16);
    double prev = 0.0;
    for (int n : {16, 32}) {
        spec.n = n;
        TriMesh mesh = build_unit_square_mesh(n);
        MethodSetup setup = setup_method(mesh, spec);
        SolutionFields fake;
        fake.u = interpolate(setup.primal, d.exact_u);
        fake.lambda = Eigen::VectorXd::Zero(setup.n_lambda());
        ErrorRecord rec = compute_errors(fake, d, spec, mesh, setup);
        CHECK(rec.err_h1 > 0.0);
        CHECK(rec.err_h1 < 2.0 * mesh.h);
        if (prev > 0.0) CHECK(prev / rec.err_h1 == Catch::Approx(2.0).epsilon(0.15));
        prev = rec.err_h1;
    }
}

TEST_CASE("error of the zero solution is the norm of u") {
    ProblemData d = exact_solution();
    MethodSpec spec = MethodSpec::make(Variant::NitscheSym, 1, 1.0, 8);
    TriMesh mesh = build_unit_square_mesh(8);
    MethodSetup setup = setup_method(mesh, spec);
    SolutionFields zero;
    zero.u = Eigen::VectorXd::Zero(setup.primal.n_dofs);
    ErrorRecord rec = compute_errors(zero, d, spec, mesh, setup);

    // independent fine-quadrature oracle on a 64x64 grid of sub-cells
    QuadRule q = gauss_triangle(6);
    double l2 = 0.0;
    const int N = 64;
    for (int j = 0; j < N; ++j) {
        for (int i = 0; i < N; ++i) {
            Vec2 a{static_cast<double>(i) / N, static_cast<double>(j) / N};
            const std::array<std::array<Vec2, 3>, 2> tris = {
                {{a, {a.x + 1.0 / N, a.y}, {a.x + 1.0 / N, a.y + 1.0 / N}},
                 {a, {a.x + 1.0 / N, a.y + 1.0 / N}, {a.x, a.y + 1.0 / N}}}};
            for (const auto& t : tris)
                for (int qp = 0; qp < q.size(); ++qp) {
                    Vec2 p = t[0] + q.points[qp].x * (t[1] - t[0]) + q.points[qp].y * (t[2] - t[0]);
                    double v = d.exact_u(p);
                    l2 += q.weights[qp] / (N * N) * v * v;
                }
        }
    }
    CHECK(rec.err_l2 == Catch::Approx(std::sqrt(l2)).margin(1e-8));
    CHECK(std::isnan(rec.err_mult));  // Nitsche has no multiplier
}

TEST_CASE("patch data evaluated exactly") {
    ProblemData lin = linear_patch_data();
    MethodSpec spec = MethodSpec::make(Variant::StablePair, 1, 1.0, 8);
    TriMesh mesh = build_unit_square_mesh(8);
    MethodSetup setup = setup_method(mesh, spec);
    SolutionFields exact;
    exact.u = interpolate(setup.primal, lin.exact_u);
    const MultSpace& M = *setup.mult;
    exact.lambda = Eigen::VectorXd::Zero(M.n_dofs);
    const TraceMesh& tr = *M.trace;
    for (int s = 0; s < tr.n_segments(); ++s) {
        const auto& be = mesh.boundary_edges[tr.segments[s].parent_edge];
        for (int l = 0; l < M.dofs_per_seg; ++l)
            exact.lambda[M.seg_dof(s, l)] = lin.exact_flux(tr.segment_point(s, 0.5), be.normal);
    }
    ErrorRecord rec = compute_errors(exact, lin, spec, mesh, setup);
    CHECK(rec.err_h1 < 1e-10);
    CHECK(rec.err_l2 < 1e-10);
    CHECK(rec.err_mult < 1e-10);

    ProblemData no_exact;
    no_exact.f = lin.f;
    CHECK_THROWS_AS(compute_errors(exact, no_exact, spec, mesh, setup), std::invalid_argument);
}

TEST_CASE("rate estimation") {
    auto synth = [](double alpha) {
        std::vector<ErrorRecord> recs;
        for (int n : {8, 16, 32}) {
            ErrorRecord r;
            r.n = n;
            r.h = 1.0 / n;
            r.err_h1 = std::pow(r.h, alpha);
            r.err_l2 = std::pow(r.h, 2 * alpha);
            r.err_mult = r.err_h1;
            recs.push_back(r);
        }
        return recs;
    };
    CHECK(estimate_rates(synth(1.0)).slope_h1 == Catch::Approx(1.0).margin(1e-12));
    CHECK(estimate_rates(synth(1.0)).slope_l2 == Catch::Approx(2.0).margin(1e-12));
    CHECK(estimate_rates(synth(2.0)).slope_h1 == Catch::Approx(2.0).margin(1e-12));

    auto two = synth(1.0);
    two.pop_back();
    CHECK_THROWS_AS(estimate_rates(two), std::invalid_argument);
    auto bad = synth(1.0);
    std::swap(bad[0], bad[2]);
    CHECK_THROWS_AS(estimate_rates(bad), std::invalid_argument);
}

TEST_CASE("projection-stabilised convergence smoke run") {
    ProblemData data = exact_solution();
    std::vector<ErrorRecord> recs;
    for (int n : {8, 16, 32}) {
        MethodSpec spec = MethodSpec::make(Variant::ProjectionStab, 1, 1.0, n);
        TriMesh mesh = build_unit_square_mesh(n);
        MethodSetup setup = setup_method(mesh, spec);
        SolutionFields sol = solve(assemble_system(spec, mesh, setup, data));
        REQUIRE(sol.ok());
        recs.push_back(compute_errors(sol, data, spec, mesh, setup));
        // H1 error is monotone under refinement
        if (recs.size() > 1) CHECK(recs.back().err_h1 < recs[recs.size() - 2].err_h1);
    }
    RateSummary r = estimate_rates(recs);
    CHECK(r.slope_h1 > 0.85);
    CHECK(r.slope_h1 < 1.15);
    CHECK(r.slope_l2 > 1.7);
}

TEST_CASE("gamma sweep is deterministic and rejects non-BH bases") {
    ProblemData data = exact_solution();
    CHECK_THROWS_AS(gamma_sweep(Variant::NitscheSym, 1, 8, {1.0}, data), std::invalid_argument);
    auto a = gamma_sweep(Variant::BarbosaHughesNonsym, 1, 8, {10.0, 100.0}, data);
    auto b = gamma_sweep(Variant::BarbosaHughesNonsym, 1, 8, {10.0, 100.0}, data);
    REQUIRE(a.size() == 2);
    CHECK(a[0].dist_l2 == b[0].dist_l2);
    CHECK(a[1].dist_l2 == b[1].dist_l2);
    CHECK(a[1].dist_l2 < a[0].dist_l2);
    CHECK(a[0].status == SolveStatus::Ok);
}
