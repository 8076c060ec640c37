#pragma once

#include <Eigen/SparseLU>
#include <limits>
#include <memory>
#include <optional>
#include <string>

#include "lmstab/stabilization.hpp"

namespace lmstab {

enum class Variant {
    StablePair,
    ProjectionStab,
    JumpStab,
    BarbosaHughesNonsym,
    BarbosaHughesSym,
    NitscheNonsym,
    NitscheSym,
};

inline const char* variant_name(Variant v) {
    switch (v) {
        case Variant::StablePair: return "stable";
        case Variant::ProjectionStab: return "projection";
        case Variant::JumpStab: return "jump";
        case Variant::BarbosaHughesNonsym: return "bh-nonsym";
        case Variant::BarbosaHughesSym: return "bh-sym";
        case Variant::NitscheNonsym: return "nitsche-nonsym";
        case Variant::NitscheSym: return "nitsche-sym";
    }
    return "?";
}

inline bool variant_has_multiplier(Variant v) {
    return v != Variant::NitscheNonsym && v != Variant::NitscheSym;
}

inline bool variant_uses_gamma(Variant v) {
    return v == Variant::ProjectionStab || v == Variant::JumpStab || v == Variant::BarbosaHughesNonsym ||
           v == Variant::BarbosaHughesSym;
}

/// Full description of one method run: variant, primal degree, multiplier
/// kind, stabilisation weight and mesh subdivisions.
struct MethodSpec {
    Variant variant = Variant::ProjectionStab;
    int degree = 1;
    MultKind mult_kind = MultKind::P0Disc;
    double gamma = 1.0;
    int n = 8;

    /// Section-5 catalogue: Lambda_h^1 = P0 on the half-size trace mesh,
    /// Lambda_h^2 = P2-disc on the primal trace mesh, L_h^k = P1-cont.
    static MethodSpec make(Variant v, int degree, double gamma, int n) {
        MethodSpec s;
        s.variant = v;
        s.degree = degree;
        s.gamma = gamma;
        s.n = n;
        s.mult_kind = (v == Variant::StablePair) ? MultKind::P1Cont
                      : (degree == 1)            ? MultKind::P0Disc
                                                 : MultKind::P2Disc;
        return s;
    }

    int mult_refine_factor() const { return mult_kind == MultKind::P0Disc ? 2 : 1; }

    void validate() const {
        if (degree != 1 && degree != 2) throw std::invalid_argument("MethodSpec: degree must be 1 or 2");
        if (n < 1) throw std::invalid_argument("MethodSpec: n must be >= 1");
        if (gamma < 0) throw std::invalid_argument("MethodSpec: gamma must be >= 0");
        if (variant == Variant::StablePair && mult_kind != MultKind::P1Cont)
            throw std::invalid_argument("MethodSpec: the stable pair requires P1-cont multipliers");
        if (variant_uses_gamma(variant) && gamma <= 0)
            throw std::invalid_argument("MethodSpec: stabilised variants require gamma > 0");
    }
};

/// Spaces owned by one method run. Trace meshes are heap-held so the
/// multiplier spaces' back references stay valid across moves.
struct MethodSetup {
    FeSpace primal;
    std::unique_ptr<TraceMesh> mult_trace;
    std::unique_ptr<TraceMesh> stable_trace;
    std::optional<MultSpace> mult;    // Lambda_h (or L_h for the stable pair)
    std::optional<MultSpace> stable;  // L_h backing the projection stabiliser

    int n_lambda() const { return mult ? mult->n_dofs : 0; }
};

inline MethodSetup setup_method(const TriMesh& mesh, const MethodSpec& spec) {
    spec.validate();
    MethodSetup s;
    s.primal = build_primal_space(mesh, spec.degree);
    if (variant_has_multiplier(spec.variant)) {
        s.mult_trace = std::make_unique<TraceMesh>(extract_trace_mesh(mesh, dirichlet_sides(), spec.mult_refine_factor()));
        s.mult = build_multiplier_space(*s.mult_trace, spec.mult_kind);
    }
    if (spec.variant == Variant::ProjectionStab) {
        s.stable_trace = std::make_unique<TraceMesh>(extract_trace_mesh(mesh, dirichlet_sides(), 1));
        s.stable = build_multiplier_space(*s.stable_trace, MultKind::P1Cont);
    }
    return s;
}

/// Assembled block system [[A, B_up^T], [B_lo, -S]] (a single block for the
/// Nitsche variants) together with its right hand side.
struct SaddleSystem {
    Eigen::SparseMatrix<double> matrix;
    Eigen::VectorXd rhs;
    int n_u = 0;
    int n_lambda = 0;
};

namespace detail {

inline void add_block(CooMatrix& full, const CooMatrix& blk, int row0, int col0, double sign) {
    for (const auto& t : blk.triplets) full.add(row0 + t.row(), col0 + t.col(), sign * t.value());
}

// B^T placed in the (u, lambda) block.
inline void add_block_t(CooMatrix& full, const CooMatrix& blk, int row0, int col0, double sign) {
    for (const auto& t : blk.triplets) full.add(row0 + t.col(), col0 + t.row(), sign * t.value());
}

}  // namespace detail

/// Composes the method's saddle-point system. Sign conventions: the symmetric
/// variants use [+b(lambda,v), +b(mu,u), -s]; nonsymmetric Barbosa-Hughes uses
/// [+b(lambda,v), -b(u,mu), +gamma<h(lambda+dn u),(mu+dn v)>], which flips the
/// sign of the multiplier data term as well.
inline SaddleSystem assemble_system(const MethodSpec& spec, const TriMesh& mesh, const MethodSetup& setup,
                                    const ProblemData& data) {
    spec.validate();
    const FeSpace& V = setup.primal;
    const int n_u = V.n_dofs;
    const int n_l = setup.n_lambda();

    SaddleSystem sys;
    sys.n_u = n_u;
    sys.n_lambda = n_l;

    CooMatrix A = assemble_stiffness(V);
    CooMatrix full(n_u + n_l, n_u + n_l);
    detail::add_block(full, A, 0, 0, 1.0);
    Eigen::VectorXd rhs = assemble_load(V, setup.mult ? &*setup.mult : nullptr, data);

    switch (spec.variant) {
        case Variant::NitscheNonsym:
        case Variant::NitscheSym: {
            NitscheTerms nit = assemble_nitsche(V, spec.variant == Variant::NitscheSym, data);
            detail::add_block(full, nit.matrix, 0, 0, 1.0);
            rhs.head(n_u) += nit.rhs;
            break;
        }
        case Variant::StablePair: {
            CooMatrix B = assemble_coupling(V, *setup.mult);
            detail::add_block_t(full, B, 0, n_u, 1.0);
            detail::add_block(full, B, n_u, 0, 1.0);
            break;
        }
        case Variant::ProjectionStab:
        case Variant::JumpStab: {
            CooMatrix B = assemble_coupling(V, *setup.mult);
            detail::add_block_t(full, B, 0, n_u, 1.0);
            detail::add_block(full, B, n_u, 0, 1.0);
            CooMatrix S = (spec.variant == Variant::ProjectionStab)
                              ? assemble_projection_stab(*setup.mult, *setup.stable, spec.gamma)
                              : assemble_jump_stab(*setup.mult, spec.gamma);
            detail::add_block(full, S, n_u, n_u, -1.0);
            break;
        }
        case Variant::BarbosaHughesSym:
        case Variant::BarbosaHughesNonsym: {
            const bool sym = spec.variant == Variant::BarbosaHughesSym;
            CooMatrix B = assemble_coupling(V, *setup.mult);
            BhBlocks bh = assemble_bh_stab(V, *setup.mult, spec.gamma);
            const double sb = sym ? -1.0 : 1.0;  // sign of the residual penalty
            detail::add_block(full, bh.uu, 0, 0, sb);
            detail::add_block(full, bh.ulam, 0, n_u, sb);
            detail::add_block(full, bh.lamu, n_u, 0, sb);
            detail::add_block(full, bh.lamlam, n_u, n_u, sb);
            detail::add_block_t(full, B, 0, n_u, 1.0);
            if (sym) {
                detail::add_block(full, B, n_u, 0, 1.0);
            } else {
                detail::add_block(full, B, n_u, 0, -1.0);
                rhs.tail(n_l) *= -1.0;
            }
            break;
        }
    }

    sys.matrix = full.compressed();
    sys.rhs = std::move(rhs);
    return sys;
}

enum class SolveStatus { Ok, Singular, ResidualFailure };

inline const char* solve_status_name(SolveStatus s) {
    switch (s) {
        case SolveStatus::Ok: return "ok";
        case SolveStatus::Singular: return "singular";
        case SolveStatus::ResidualFailure: return "residual";
    }
    return "?";
}

struct SolveDiagnostics {
    double pivot_min = 0.0;
    double pivot_max = 0.0;
    double log_abs_det = 0.0;
    int det_sign = 0;
    double rel_residual = std::numeric_limits<double>::quiet_NaN();
};

struct SolutionFields {
    Eigen::VectorXd u;
    Eigen::VectorXd lambda;
    SolveStatus status = SolveStatus::Ok;
    SolveDiagnostics diag;

    bool ok() const { return status == SolveStatus::Ok; }
};

namespace detail {

// SparseLU keeps the U diagonal inside its protected supernodal store; this
// mirrors Eigen's own absDeterminant() traversal to read the pivots back.
class DiagnosticLU : public Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> {
  public:
    std::pair<double, double> pivot_range() const {
        double lo = std::numeric_limits<double>::infinity();
        double hi = 0.0;
        for (Eigen::Index j = 0; j < cols(); ++j) {
            for (SCMatrix::InnerIterator it(m_Lstore, j); it; ++it) {
                if (it.row() == j) {
                    double a = std::abs(it.value());
                    lo = std::min(lo, a);
                    hi = std::max(hi, a);
                    break;
                }
            }
        }
        return {lo, hi};
    }
};

}  // namespace detail

inline constexpr double kPivotDropTol = 1e-13;      // pivot_min < tol * pivot_max flags SingularSystem
inline constexpr double kResidualTol = 1e-10;       // relative residual bound on success

/// Direct sparse LU solve with one step of iterative refinement. Near-singular
/// factorisations are a reportable outcome, not an exception: the gamma sweep
/// consumes them as data.
inline SolutionFields solve(const SaddleSystem& sys) {
    SolutionFields out;
    detail::DiagnosticLU lu;
    lu.analyzePattern(sys.matrix);
    lu.factorize(sys.matrix);
    if (lu.info() != Eigen::Success) {
        out.status = SolveStatus::Singular;
        return out;
    }
    auto [pmin, pmax] = lu.pivot_range();
    out.diag.pivot_min = pmin;
    out.diag.pivot_max = pmax;
    out.diag.log_abs_det = lu.logAbsDeterminant();
    out.diag.det_sign = static_cast<int>(lu.signDeterminant());
    if (pmin < kPivotDropTol * pmax) {
        out.status = SolveStatus::Singular;
        return out;
    }
    Eigen::VectorXd x = lu.solve(sys.rhs);
    x += lu.solve(sys.rhs - sys.matrix * x);
    double bnorm = sys.rhs.norm();
    out.diag.rel_residual = bnorm > 0 ? (sys.matrix * x - sys.rhs).norm() / bnorm : (sys.matrix * x).norm();
    if (!std::isfinite(out.diag.rel_residual) || out.diag.rel_residual > kResidualTol) {
        out.status = SolveStatus::ResidualFailure;
        return out;
    }
    out.u = x.head(sys.n_u);
    out.lambda = x.tail(sys.n_lambda);
    return out;
}

/// Discrete inf-sup constant: beta_h = sqrt of the smallest generalized
/// eigenvalue of (B M_V^{-1} B^T + S) x = beta^2 M_L x, all dense. S may be
/// empty (0x0) for the unstabilised constant.
inline double compute_infsup(const Eigen::MatrixXd& B, const Eigen::MatrixXd& S, const Eigen::MatrixXd& M_V,
                             const Eigen::MatrixXd& M_L) {
    Eigen::LLT<Eigen::MatrixXd> mlt(M_L);
    if (mlt.info() != Eigen::Success) throw std::invalid_argument("compute_infsup: M_L must be positive definite");
    Eigen::LLT<Eigen::MatrixXd> mvt(M_V);
    if (mvt.info() != Eigen::Success) throw std::invalid_argument("compute_infsup: M_V must be positive definite");
    Eigen::MatrixXd G = B * mvt.solve(B.transpose());
    if (S.size() > 0) G += S;
    G = 0.5 * (G + G.transpose());
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(G, M_L);
    double lam = ges.eigenvalues().minCoeff();
    return std::sqrt(std::max(lam, 0.0));
}

/// ||.||_{1,h} norm matrix: stiffness + h^{-1}-weighted Dirichlet boundary mass.
inline Eigen::MatrixXd primal_norm_matrix(const FeSpace& V) {
    return assemble_stiffness(V).dense() + assemble_boundary_mass(V, -1).dense();
}

}  // namespace lmstab
