#pragma once

#include "lmstab/analysis.hpp"

namespace lmstab {

struct DegenerateCut : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class CutClass { Inside1, Inside2, Cut };

/// One background triangle intersected by the interface x = x0: the interface
/// segment and the triangulated sub-polygons on either side.
struct CutElement {
    int tri = -1;
    std::array<Vec2, 2> interface{};  // endpoints of Gamma cap K, on the element boundary
    double interface_length = 0.0;
    std::vector<std::array<Vec2, 3>> sub1;  // K cap {x < x0}
    std::vector<std::array<Vec2, 3>> sub2;  // K cap {x > x0}
    double area1 = 0.0;
    double area2 = 0.0;
};

/// Interior face of the cut band (shared by two cut elements); the multiplier
/// jump penalty acts here.
struct BandFace {
    std::array<int, 2> nodes;
    std::array<int, 2> cut_ids;  // indices into CutGeometry::cut_elements
    double length = 0.0;
};

struct CutGeometry {
    double x0 = 0.5;
    std::vector<CutClass> element_class;  // per background triangle
    std::vector<int> cut_index;           // triangle -> cut element index, or -1
    std::vector<CutElement> cut_elements;
    std::vector<BandFace> band_faces;

    int n_cut() const { return static_cast<int>(cut_elements.size()); }
};

inline double poly_area(const std::array<Vec2, 3>& t) {
    return 0.5 * std::abs((t[1].x - t[0].x) * (t[2].y - t[0].y) - (t[2].x - t[0].x) * (t[1].y - t[0].y));
}

/// Classifies the mesh against the vertical interface x = x0 and decomposes
/// every cut triangle into exact sub-triangles. The interface must keep a
/// distance > 1e-9 from all mesh nodes.
inline CutGeometry classify_and_cut(const TriMesh& mesh, double x0) {
    for (const Vec2& p : mesh.nodes)
        if (std::abs(p.x - x0) <= 1e-9)
            throw DegenerateCut("classify_and_cut: interface passes through a mesh vertical grid line");

    CutGeometry geo;
    geo.x0 = x0;
    geo.element_class.resize(mesh.n_triangles());
    geo.cut_index.assign(mesh.n_triangles(), -1);

    for (int t = 0; t < mesh.n_triangles(); ++t) {
        const auto& tr = mesh.triangles[t];
        int n_left = 0;
        for (int v : tr.v)
            if (mesh.node(v).x < x0) ++n_left;
        if (n_left == 3) {
            geo.element_class[t] = CutClass::Inside1;
            continue;
        }
        if (n_left == 0) {
            geo.element_class[t] = CutClass::Inside2;
            continue;
        }
        geo.element_class[t] = CutClass::Cut;

        // lone vertex a on one side, b/c on the other
        int la = -1;
        const bool lone_left = (n_left == 1);
        for (int l = 0; l < 3; ++l) {
            bool left = mesh.node(tr.v[l]).x < x0;
            if (left == lone_left) la = l;
        }
        Vec2 a = mesh.node(tr.v[la]);
        Vec2 b = mesh.node(tr.v[(la + 1) % 3]);
        Vec2 c = mesh.node(tr.v[(la + 2) % 3]);
        auto cut_point = [x0](Vec2 p, Vec2 q) {
            double s = (x0 - p.x) / (q.x - p.x);
            return Vec2{x0, p.y + s * (q.y - p.y)};
        };
        Vec2 pab = cut_point(a, b);
        Vec2 pac = cut_point(a, c);

        CutElement ce;
        ce.tri = t;
        ce.interface = {pab, pac};
        ce.interface_length = norm(pac - pab);
        std::vector<std::array<Vec2, 3>> lone{{a, pab, pac}};
        std::vector<std::array<Vec2, 3>> quad{{pab, b, c}, {pab, c, pac}};
        if (lone_left) {
            ce.sub1 = lone;
            ce.sub2 = quad;
        } else {
            ce.sub1 = quad;
            ce.sub2 = lone;
        }
        for (const auto& s : ce.sub1) ce.area1 += poly_area(s);
        for (const auto& s : ce.sub2) ce.area2 += poly_area(s);
        geo.cut_index[t] = geo.n_cut();
        geo.cut_elements.push_back(std::move(ce));
    }

    for (const auto& f : mesh.interior_faces) {
        int c0 = geo.cut_index[f.tris[0]];
        int c1 = geo.cut_index[f.tris[1]];
        if (c0 >= 0 && c1 >= 0)
            geo.band_faces.push_back({f.v, {c0, c1}, norm(mesh.node(f.v[1]) - mesh.node(f.v[0]))});
    }
    return geo;
}

/// P1 spaces on the two overlapping subtriangulations (dofs doubled on the
/// cut band) plus one P0 multiplier dof per cut element. Outer-boundary nodes
/// are eliminated (u = 0 is imposed strongly there).
struct InterfaceSpaces {
    std::vector<int> dof1;  // background node -> V1 dof, or -1
    std::vector<int> dof2;
    int n1 = 0;
    int n2 = 0;
    int n_lambda = 0;

    int n_u() const { return n1 + n2; }
};

inline InterfaceSpaces build_interface_spaces(const TriMesh& mesh, const CutGeometry& geo) {
    InterfaceSpaces sp;
    sp.dof1.assign(mesh.n_nodes(), -1);
    sp.dof2.assign(mesh.n_nodes(), -1);
    sp.n_lambda = geo.n_cut();
    std::vector<char> in1(mesh.n_nodes(), 0), in2(mesh.n_nodes(), 0);
    for (int t = 0; t < mesh.n_triangles(); ++t) {
        bool t1 = geo.element_class[t] != CutClass::Inside2;
        bool t2 = geo.element_class[t] != CutClass::Inside1;
        for (int v : mesh.triangles[t].v) {
            if (t1) in1[v] = 1;
            if (t2) in2[v] = 1;
        }
    }
    auto on_outer_boundary = [&mesh](int v) {
        Vec2 p = mesh.node(v);
        return p.x == 0.0 || p.x == 1.0 || p.y == 0.0 || p.y == 1.0;
    };
    for (int v = 0; v < mesh.n_nodes(); ++v) {
        if (on_outer_boundary(v)) continue;
        if (in1[v]) sp.dof1[v] = sp.n1++;
        if (in2[v]) sp.dof2[v] = sp.n2++;
    }
    return sp;
}

/// Transmission problem data: -Laplace(u_i) = f in Omega_i, u = 0 on the
/// outer boundary, continuity of value and flux across the interface.
struct InterfaceData {
    ScalarField f;
    ScalarField exact_u;
    VectorField exact_grad;
    bool has_exact = false;
};

inline InterfaceData interface_exact_solution() {
    constexpr double pi = std::numbers::pi;
    InterfaceData d;
    d.exact_u = [=](Vec2 p) { return std::sin(pi * p.x) * std::sin(pi * p.y); };
    d.exact_grad = [=](Vec2 p) {
        return Vec2{pi * std::cos(pi * p.x) * std::sin(pi * p.y), pi * std::sin(pi * p.x) * std::cos(pi * p.y)};
    };
    d.f = [=](Vec2 p) { return 2 * pi * pi * std::sin(pi * p.x) * std::sin(pi * p.y); };
    d.has_exact = true;
    return d;
}

inline InterfaceData interface_zero_data() {
    InterfaceData d;
    d.exact_u = [](Vec2) { return 0.0; };
    d.exact_grad = [](Vec2) { return Vec2{0, 0}; };
    d.f = [](Vec2) { return 0.0; };
    d.has_exact = true;
    return d;
}

namespace detail {

// physical P1 gradients of a background triangle (constant)
inline std::array<Vec2, 3> p1_gradients(const ElementGeom& g) {
    return {g.grad({-1, -1}), g.grad({1, 0}), g.grad({0, 1})};
}

// P1 shape values of a background triangle at a physical point.
inline std::array<double, 3> parent_values(const ElementGeom& g, Vec2 p) {
    Vec2 d = p - g.a;
    double xi = (g.j11 * d.x - g.j01 * d.y) / g.det;
    double eta = (-g.j10 * d.x + g.j00 * d.y) / g.det;
    return {1.0 - xi - eta, xi, eta};
}

}  // namespace detail

/// Assembles the unfitted saddle system
///   [[A, B^T], [B, -S]]
/// with A the broken stiffness over the cut quadrature, B the interface
/// coupling <lambda, v1 - v2> and S the face-jump stabiliser on the cut band.
inline SaddleSystem assemble_interface_system(const TriMesh& mesh, const CutGeometry& geo,
                                              const InterfaceSpaces& sp, double gamma, const InterfaceData& data) {
    if (gamma <= 0) throw std::invalid_argument("assemble_interface_system: gamma must be positive");
    const int n_u = sp.n_u();
    const int n_total = n_u + sp.n_lambda;
    CooMatrix full(n_total, n_total);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n_total);

    QuadRule qv = gauss_triangle(4);
    QuadRule qs = gauss_segment(4);

    // volume terms, per side
    for (int side = 0; side < 2; ++side) {
        const std::vector<int>& dof = (side == 0) ? sp.dof1 : sp.dof2;
        const int offset = (side == 0) ? 0 : sp.n1;
        const CutClass skip = (side == 0) ? CutClass::Inside2 : CutClass::Inside1;
        for (int t = 0; t < mesh.n_triangles(); ++t) {
            if (geo.element_class[t] == skip) continue;
            ElementGeom g = element_geometry(mesh, t);
            std::array<Vec2, 3> grad = detail::p1_gradients(g);
            std::array<int, 3> gd;
            for (int l = 0; l < 3; ++l) {
                int v = mesh.triangles[t].v[l];
                gd[l] = dof[v] >= 0 ? offset + dof[v] : -1;
            }
            const bool cut = geo.element_class[t] == CutClass::Cut;
            const std::vector<std::array<Vec2, 3>> whole{{mesh.node(mesh.triangles[t].v[0]),
                                                          mesh.node(mesh.triangles[t].v[1]),
                                                          mesh.node(mesh.triangles[t].v[2])}};
            const auto& pieces = cut ? ((side == 0) ? geo.cut_elements[geo.cut_index[t]].sub1
                                                    : geo.cut_elements[geo.cut_index[t]].sub2)
                                     : whole;
            for (const auto& piece : pieces) {
                double area = poly_area(piece);
                if (area == 0.0) continue;
                // stiffness: P1 gradients are constant on the parent element
                for (int i = 0; i < 3; ++i)
                    for (int j = 0; j < 3; ++j)
                        if (gd[i] >= 0 && gd[j] >= 0) full.add(gd[i], gd[j], area * dot(grad[i], grad[j]));
                for (int q = 0; q < qv.size(); ++q) {
                    Vec2 r = qv.points[q];
                    Vec2 p = piece[0] + r.x * (piece[1] - piece[0]) + r.y * (piece[2] - piece[0]);
                    auto vals = detail::parent_values(g, p);
                    double w = 2.0 * area * qv.weights[q] * data.f(p);
                    for (int i = 0; i < 3; ++i)
                        if (gd[i] >= 0) rhs[gd[i]] += w * vals[i];
                }
            }
        }
    }

    // interface coupling: one P0 multiplier row per cut element
    for (int c = 0; c < geo.n_cut(); ++c) {
        const CutElement& ce = geo.cut_elements[c];
        ElementGeom g = element_geometry(mesh, ce.tri);
        const int row = n_u + c;
        for (int q = 0; q < qs.size(); ++q) {
            double t = qs.points[q].x;
            Vec2 p = (1.0 - t) * ce.interface[0] + t * ce.interface[1];
            auto vals = detail::parent_values(g, p);
            double w = qs.weights[q] * ce.interface_length;
            for (int l = 0; l < 3; ++l) {
                int v = mesh.triangles[ce.tri].v[l];
                if (sp.dof1[v] >= 0) {
                    full.add(row, sp.dof1[v], w * vals[l]);
                    full.add(sp.dof1[v], row, w * vals[l]);
                }
                if (sp.dof2[v] >= 0) {
                    full.add(row, sp.n1 + sp.dof2[v], -w * vals[l]);
                    full.add(sp.n1 + sp.dof2[v], row, -w * vals[l]);
                }
            }
        }
    }

    // face-jump stabiliser, -S in the multiplier block
    for (const BandFace& f : geo.band_faces) {
        double w = gamma * f.length * f.length;  // h_face * |F|
        int r0 = n_u + f.cut_ids[0], r1 = n_u + f.cut_ids[1];
        full.add(r0, r0, -w);
        full.add(r1, r1, -w);
        full.add(r0, r1, w);
        full.add(r1, r0, w);
    }

    SaddleSystem sys;
    sys.n_u = n_u;
    sys.n_lambda = sp.n_lambda;
    sys.matrix = full.compressed();
    sys.rhs = std::move(rhs);
    return sys;
}

/// Broken errors of an unfitted solve: H1/L2 per subdomain on the cut
/// quadrature, multiplier error in ||h^(1/2) . ||_{L2(Gamma)}.
inline ErrorRecord compute_interface_errors(const TriMesh& mesh, const CutGeometry& geo, const InterfaceSpaces& sp,
                                            const SolutionFields& sol, const InterfaceData& data) {
    if (!data.has_exact) throw std::invalid_argument("compute_interface_errors: no exact solution");
    ErrorRecord rec;
    rec.n = mesh.n;
    rec.h = mesh.h;
    rec.n_dofs = sp.n_u() + sp.n_lambda;

    QuadRule qv = gauss_triangle(6);
    double h1 = 0.0, l2 = 0.0;
    for (int side = 0; side < 2; ++side) {
        const std::vector<int>& dof = (side == 0) ? sp.dof1 : sp.dof2;
        const int offset = (side == 0) ? 0 : sp.n1;
        const CutClass skip = (side == 0) ? CutClass::Inside2 : CutClass::Inside1;
        for (int t = 0; t < mesh.n_triangles(); ++t) {
            if (geo.element_class[t] == skip) continue;
            ElementGeom g = element_geometry(mesh, t);
            std::array<Vec2, 3> grad = detail::p1_gradients(g);
            std::array<double, 3> coeff{};
            Vec2 gh{0, 0};
            for (int l = 0; l < 3; ++l) {
                int v = mesh.triangles[t].v[l];
                coeff[l] = dof[v] >= 0 ? sol.u[offset + dof[v]] : 0.0;
                gh = gh + coeff[l] * grad[l];
            }
            const bool cut = geo.element_class[t] == CutClass::Cut;
            const std::vector<std::array<Vec2, 3>> whole{{mesh.node(mesh.triangles[t].v[0]),
                                                          mesh.node(mesh.triangles[t].v[1]),
                                                          mesh.node(mesh.triangles[t].v[2])}};
            const auto& pieces = cut ? ((side == 0) ? geo.cut_elements[geo.cut_index[t]].sub1
                                                    : geo.cut_elements[geo.cut_index[t]].sub2)
                                     : whole;
            for (const auto& piece : pieces) {
                double area = poly_area(piece);
                for (int q = 0; q < qv.size(); ++q) {
                    Vec2 r = qv.points[q];
                    Vec2 p = piece[0] + r.x * (piece[1] - piece[0]) + r.y * (piece[2] - piece[0]);
                    auto vals = detail::parent_values(g, p);
                    double uh = coeff[0] * vals[0] + coeff[1] * vals[1] + coeff[2] * vals[2];
                    double w = 2.0 * area * qv.weights[q];
                    Vec2 de = data.exact_grad(p) - gh;
                    double ue = data.exact_u(p) - uh;
                    h1 += w * dot(de, de);
                    l2 += w * ue * ue;
                }
            }
        }
    }
    rec.err_h1 = std::sqrt(h1);
    rec.err_l2 = std::sqrt(l2);

    QuadRule qs = gauss_segment(6);
    double em = 0.0;
    for (int c = 0; c < geo.n_cut(); ++c) {
        const CutElement& ce = geo.cut_elements[c];
        double lam_h = sol.lambda[c];
        for (int q = 0; q < qs.size(); ++q) {
            double t = qs.points[q].x;
            Vec2 p = (1.0 - t) * ce.interface[0] + t * ce.interface[1];
            double lam = -data.exact_grad(p).x;  // flux across x = x0, normal +e_x out of Omega_1
            double diff = lam - lam_h;
            em += qs.weights[q] * ce.interface_length * mesh.h * diff * diff;
        }
    }
    rec.err_mult = std::sqrt(em);
    return rec;
}

struct InterfaceResult {
    SolutionFields sol;
    ErrorRecord record;
};

inline InterfaceResult solve_interface(const TriMesh& mesh, double x0, double gamma, const InterfaceData& data) {
    CutGeometry geo = classify_and_cut(mesh, x0);
    InterfaceSpaces sp = build_interface_spaces(mesh, geo);
    SaddleSystem sys = assemble_interface_system(mesh, geo, sp, gamma, data);
    InterfaceResult res;
    res.sol = solve(sys);
    if (res.sol.ok() && data.has_exact) res.record = compute_interface_errors(mesh, geo, sp, res.sol, data);
    res.record.n = mesh.n;
    res.record.h = mesh.h;
    res.record.n_dofs = sp.n_u() + sp.n_lambda;
    return res;
}

}  // namespace lmstab
