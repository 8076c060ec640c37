#include <catch2/catch_amalgamated.hpp>

#include "lmstab/analysis.hpp"

using namespace lmstab;

// Independent re-integration oracle: own shape functions, own mapping code,
// Gauss rules at double the assembly degree. Dense output.
namespace oracle {

struct Shape {
    std::array<double, 6> v{};
    std::array<Vec2, 6> g{};
    int count = 0;
};

Shape shape(int k, double x, double y) {
    Shape s;
    double z = 1.0 - x - y;
    if (k == 1) {
        s.count = 3;
        s.v = {z, x, y};
        s.g = {Vec2{-1, -1}, Vec2{1, 0}, Vec2{0, 1}};
        return s;
    }
    s.count = 6;
    s.v = {z * (2 * z - 1), x * (2 * x - 1), y * (2 * y - 1), 4 * z * x, 4 * x * y, 4 * y * z};
    s.g[0] = {1 - 4 * z, 1 - 4 * z};
    s.g[1] = {4 * x - 1, 0};
    s.g[2] = {0, 4 * y - 1};
    s.g[3] = {4 * (z - x), -4 * x};
    s.g[4] = {4 * y, 4 * x};
    s.g[5] = {-4 * y, 4 * (z - y)};
    return s;
}

// 1D shape on [0,1] per multiplier kind
std::vector<double> seg_shape(MultKind kind, double t) {
    switch (kind) {
        case MultKind::P0Disc: return {1.0};
        case MultKind::P1Cont: return {1 - t, t};
        case MultKind::P2Disc: return {(1 - t) * (1 - 2 * t), 4 * t * (1 - t), t * (2 * t - 1)};
    }
    return {};
}

Eigen::MatrixXd stiffness(const TriMesh& m, const FeSpace& V) {
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(V.n_dofs, V.n_dofs);
    QuadRule q = gauss_triangle(std::min(2 * stiffness_quad_degree(V.degree) + 1, 6));
    for (int t = 0; t < m.n_triangles(); ++t) {
        Vec2 p0 = m.node(m.triangles[t].v[0]);
        Vec2 p1 = m.node(m.triangles[t].v[1]);
        Vec2 p2 = m.node(m.triangles[t].v[2]);
        double j00 = p1.x - p0.x, j01 = p2.x - p0.x, j10 = p1.y - p0.y, j11 = p2.y - p0.y;
        double det = j00 * j11 - j01 * j10;
        for (int qp = 0; qp < q.size(); ++qp) {
            Shape s = shape(V.degree, q.points[qp].x, q.points[qp].y);
            std::array<Vec2, 6> pg;
            for (int l = 0; l < s.count; ++l)
                pg[l] = {(j11 * s.g[l].x - j10 * s.g[l].y) / det, (-j01 * s.g[l].x + j00 * s.g[l].y) / det};
            for (int i = 0; i < s.count; ++i)
                for (int j = 0; j < s.count; ++j)
                    A(V.cell_dof(t, i), V.cell_dof(t, j)) += q.weights[qp] * det * dot(pg[i], pg[j]);
        }
    }
    return A;
}

// trace values of the primal basis along a boundary edge at arc parameter t
Shape edge_shape(const TriMesh& m, const FeSpace& V, const BoundaryEdge& be, double t) {
    static constexpr std::array<Vec2, 3> ref{Vec2{0, 0}, Vec2{1, 0}, Vec2{0, 1}};
    Vec2 rp = (1.0 - t) * ref[be.la] + t * ref[be.lb];
    return shape(V.degree, rp.x, rp.y);
}

Eigen::MatrixXd coupling(const TriMesh& m, const FeSpace& V, const MultSpace& M) {
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(M.n_dofs, V.n_dofs);
    const TraceMesh& tr = *M.trace;
    QuadRule q = gauss_segment(9);
    for (int s = 0; s < tr.n_segments(); ++s) {
        const auto& seg = tr.segments[s];
        const auto& be = m.boundary_edges[seg.parent_edge];
        for (int qp = 0; qp < q.size(); ++qp) {
            double t = q.points[qp].x;
            Shape ps = edge_shape(m, V, be, seg.t0 + t * (seg.t1 - seg.t0));
            auto ms = seg_shape(M.kind, t);
            for (size_t lm = 0; lm < ms.size(); ++lm)
                for (int j = 0; j < ps.count; ++j)
                    B(M.seg_dof(s, static_cast<int>(lm)), V.cell_dof(be.tri, j)) +=
                        q.weights[qp] * seg.length * ms[lm] * ps.v[j];
        }
    }
    return B;
}

Eigen::MatrixXd mult_mass(const MultSpace& M, int h_exp) {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(M.n_dofs, M.n_dofs);
    const TraceMesh& tr = *M.trace;
    QuadRule q = gauss_segment(9);
    for (int s = 0; s < tr.n_segments(); ++s) {
        double hw = std::pow(tr.parent_edge_length(s), h_exp);
        for (int qp = 0; qp < q.size(); ++qp) {
            auto ms = seg_shape(M.kind, q.points[qp].x);
            for (size_t i = 0; i < ms.size(); ++i)
                for (size_t j = 0; j < ms.size(); ++j)
                    out(M.seg_dof(s, static_cast<int>(i)), M.seg_dof(s, static_cast<int>(j))) +=
                        q.weights[qp] * tr.segments[s].length * hw * ms[i] * ms[j];
        }
    }
    return out;
}

}  // namespace oracle

TEST_CASE("P1 stiffness on the reference triangle") {
    TriMesh m;
    m.n = 1;
    m.nodes = {{0, 0}, {1, 0}, {0, 1}};
    m.triangles = {{{0, 1, 2}}};
    build_connectivity(m);
    m.h = std::sqrt(2.0);
    auto V = build_primal_space(m, 1);
    Eigen::MatrixXd A = assemble_stiffness(V).dense();
    Eigen::Matrix3d want;
    want << 1, -0.5, -0.5, -0.5, 0.5, 0, -0.5, 0, 0.5;
    CHECK((A - want).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("global stiffness on the 1x1 mesh") {
    auto m = build_unit_square_mesh(1);
    Eigen::MatrixXd A = assemble_stiffness(build_primal_space(m, 1)).dense();
    Eigen::Matrix4d want;
    // nodes (0,0),(1,0),(0,1),(1,1); both elements are right isosceles
    want << 1, -0.5, -0.5, 0,
            -0.5, 1, 0, -0.5,
            -0.5, 0, 1, -0.5,
            0, -0.5, -0.5, 1;
    CHECK((A - want).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("stiffness row sums vanish and the matrix is symmetric") {
    for (int k : {1, 2}) {
        auto m = build_unit_square_mesh(3);
        Eigen::MatrixXd A = assemble_stiffness(build_primal_space(m, k)).dense();
        CHECK(A.rowwise().sum().cwiseAbs().maxCoeff() < 1e-13);
        CHECK((A - A.transpose()).cwiseAbs().maxCoeff() < 1e-14);
    }
}

TEST_CASE("coupling entries against closed forms") {
    auto m = build_unit_square_mesh(4);
    auto V = build_primal_space(m, 1);

    // P0 on the primal trace: hat rising over one whole segment integrates to l/2
    auto tr1 = extract_trace_mesh(m, {Side::Bottom}, 1);
    auto p0 = build_multiplier_space(tr1, MultKind::P0Disc);
    Eigen::MatrixXd B1 = assemble_coupling(V, p0).dense();
    int hat = 2;  // node (0.5, 0), right endpoint of segment 1
    CHECK(B1(1, hat) == Catch::Approx(0.25 / 2).margin(1e-14));

    // refined P0: the two sub-segment entries against the same hat sum to l/2
    auto tr2 = extract_trace_mesh(m, {Side::Bottom}, 2);
    auto p0r = build_multiplier_space(tr2, MultKind::P0Disc);
    Eigen::MatrixXd B2 = assemble_coupling(V, p0r).dense();
    CHECK(B2(2, hat) + B2(3, hat) == Catch::Approx(0.25 / 2).margin(1e-14));

    // constant multiplier against v = 1 reproduces the component measure
    Eigen::VectorXd ones = Eigen::VectorXd::Ones(V.n_dofs);
    CHECK((B1 * ones).sum() == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("assembled operators match the independent oracle") {
    auto m = build_unit_square_mesh(2);
    for (int k : {1, 2}) {
        auto V = build_primal_space(m, k);
        Eigen::MatrixXd A = assemble_stiffness(V).dense();
        CHECK((A - oracle::stiffness(m, V)).cwiseAbs().maxCoeff() < 1e-12);

        for (auto [kind, factor] : {std::pair{MultKind::P0Disc, 2}, {MultKind::P1Cont, 1}, {MultKind::P2Disc, 1}}) {
            auto tr = extract_trace_mesh(m, dirichlet_sides(), factor);
            auto M = build_multiplier_space(tr, kind);
            CHECK((assemble_coupling(V, M).dense() - oracle::coupling(m, V, M)).cwiseAbs().maxCoeff() < 1e-12);
            CHECK((assemble_mult_mass(M, 1).dense() - oracle::mult_mass(M, 1)).cwiseAbs().maxCoeff() < 1e-12);
            CHECK((assemble_mult_mass(M, 0).dense() - oracle::mult_mass(M, 0)).cwiseAbs().maxCoeff() < 1e-12);
        }
    }
}

TEST_CASE("load vector") {
    auto m = build_unit_square_mesh(4);
    auto V = build_primal_space(m, 1);
    auto tr = extract_trace_mesh(m, dirichlet_sides(), 1);
    auto M = build_multiplier_space(tr, MultKind::P0Disc);

    ProblemData unit;
    unit.f = [](Vec2) { return 1.0; };
    unit.dirichlet = [](Vec2) { return 0.0; };
    unit.neumann = [](Vec2, Vec2) { return 0.0; };
    Eigen::VectorXd rhs = assemble_load(V, &M, unit);
    CHECK(rhs.head(V.n_dofs).sum() == Catch::Approx(1.0).margin(1e-12));
    CHECK(rhs.tail(M.n_dofs).cwiseAbs().maxCoeff() < 1e-15);

    ProblemData gc = unit;
    gc.dirichlet = [](Vec2) { return 3.0; };
    Eigen::VectorXd rhs2 = assemble_load(V, &M, gc);
    for (int s = 0; s < M.n_dofs; ++s) CHECK(rhs2[V.n_dofs + s] == Catch::Approx(3.0 * 0.25).margin(1e-13));

    // determinism on the manufactured data
    auto m16 = build_unit_square_mesh(16);
    auto V16 = build_primal_space(m16, 2);
    auto tr16 = extract_trace_mesh(m16, dirichlet_sides(), 1);
    auto M16 = build_multiplier_space(tr16, MultKind::P2Disc);
    ProblemData paper = exact_solution();
    Eigen::VectorXd a = assemble_load(V16, &M16, paper);
    Eigen::VectorXd b = assemble_load(V16, &M16, paper);
    CHECK(a.allFinite());
    CHECK(std::memcmp(a.data(), b.data(), sizeof(double) * a.size()) == 0);
}

TEST_CASE("Nitsche boundary terms") {
    auto m = build_unit_square_mesh(8);
    auto V = build_primal_space(m, 1);
    ProblemData lin = linear_patch_data();

    auto sym = assemble_nitsche(V, true, lin);
    Eigen::MatrixXd S = sym.matrix.dense();
    Eigen::MatrixXd A = assemble_stiffness(V).dense() + S;
    CHECK((A - A.transpose()).cwiseAbs().maxCoeff() < 1e-14);

    // patch test: the nonsymmetric method reproduces a global linear solution
    MethodSpec spec = MethodSpec::make(Variant::NitscheNonsym, 1, 1.0, 8);
    TriMesh mesh = build_unit_square_mesh(8);
    MethodSetup setup = setup_method(mesh, spec);
    SolutionFields sol = solve(assemble_system(spec, mesh, setup, lin));
    REQUIRE(sol.ok());
    Eigen::VectorXd interp = interpolate(setup.primal, lin.exact_u);
    CHECK((sol.u - interp).cwiseAbs().maxCoeff() < 1e-10);

    // a basis function supported away from the Dirichlet boundary sees no
    // boundary terms at all
    auto m4 = build_unit_square_mesh(4);
    auto V4 = build_primal_space(m4, 1);
    auto nit = assemble_nitsche(V4, false, lin);
    Eigen::MatrixXd N = nit.matrix.dense();
    int center = 2 * 5 + 2;  // node (0.5, 0.5)
    CHECK(N.row(center).cwiseAbs().maxCoeff() == 0.0);
    CHECK(N.col(center).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("CooMatrix contract") {
    CooMatrix c(2, 2);
    c.add(0, 0, 1.0);
    c.add(0, 0, 2.0);  // duplicates sum on compression
    c.add(1, 0, -1.0);
    CHECK_THROWS_AS(c.add(2, 0, 1.0), std::out_of_range);
    CHECK_THROWS_AS(c.add(0, -1, 1.0), std::out_of_range);
    auto s = c.compressed();
    CHECK(s.coeff(0, 0) == 3.0);
    CHECK(s.coeff(1, 0) == -1.0);
    CHECK(s.isCompressed());
}
