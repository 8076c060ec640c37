#pragma once

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "lmstab/unfitted.hpp"

namespace lmstab {

/// Parsed experiment configuration; one subcommand per run.
struct RunConfig {
    std::string subcommand;  // solve | converge | infsup | gamma-sweep | unfitted | equivalence
    std::string method = "projection";
    int degree = 1;
    std::vector<int> levels;
    int n = 0;  // single-mesh subcommands; gamma-sweep defaults to 20
    double gamma = 1.0;
    double x0 = 0.5137;
    std::string data = "paper";  // paper | linear
    std::string pair = "p1-p0refined";
    bool stabilized = false;
    std::vector<double> gammas;
    std::string output;  // CSV path; empty writes to stdout
    unsigned seed = 0;   // reserved for randomised studies
};

inline Variant parse_method(const std::string& name) {
    for (Variant v : {Variant::StablePair, Variant::ProjectionStab, Variant::JumpStab, Variant::BarbosaHughesNonsym,
                      Variant::BarbosaHughesSym, Variant::NitscheNonsym, Variant::NitscheSym})
        if (name == variant_name(v)) return v;
    throw std::invalid_argument("unknown method: " + name);
}

namespace detail {

inline std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.12e", v);
    return buf;
}

inline void write_out(const std::string& text, const std::string& path) {
    if (path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::invalid_argument("cannot open output path: " + path);
    os << text;
    if (!os) throw std::invalid_argument("cannot write output path: " + path);
}

inline ProblemData select_data(const RunConfig& cfg) {
    if (cfg.data == "paper") return exact_solution();
    if (cfg.data == "linear") return linear_patch_data();
    throw std::invalid_argument("unknown data set: " + cfg.data);
}

inline void require_levels(const RunConfig& cfg) {
    if (cfg.levels.empty()) throw std::invalid_argument("levels are required");
    for (size_t i = 1; i < cfg.levels.size(); ++i)
        if (cfg.levels[i] <= cfg.levels[i - 1]) throw std::invalid_argument("levels must be strictly increasing");
}

inline void error_row(std::ostringstream& csv, ErrorRecord& rec, const SolutionFields& sol) {
    csv << rec.n << "," << fmt(rec.h) << "," << rec.n_dofs << "," << fmt(rec.err_h1) << "," << fmt(rec.err_l2) << ","
        << fmt(rec.err_mult) << "," << solve_status_name(sol.status) << "\n";
}

inline int run_fitted(const RunConfig& cfg, bool single) {
    Variant variant = parse_method(cfg.method);
    ProblemData data = select_data(cfg);
    std::vector<int> levels = cfg.levels;
    if (single) {
        if (cfg.n < 1) throw std::invalid_argument("solve requires --n");
        levels = {cfg.n};
    } else {
        require_levels(cfg);
    }
    std::ostringstream csv;
    csv << "n,h,dofs,err_h1,err_l2,err_mult,status\n";
    std::vector<ErrorRecord> recs;
    bool failed = false;
    for (int n : levels) {
        MethodSpec spec = MethodSpec::make(variant, cfg.degree, cfg.gamma, n);
        TriMesh mesh = build_unit_square_mesh(n);
        MethodSetup setup = setup_method(mesh, spec);
        SolutionFields sol = solve(assemble_system(spec, mesh, setup, data));
        ErrorRecord rec;
        if (sol.ok()) {
            rec = compute_errors(sol, data, spec, mesh, setup);
        } else {
            rec.n = n;
            rec.h = mesh.h;
            rec.n_dofs = setup.primal.n_dofs + setup.n_lambda();
            failed = true;
        }
        error_row(csv, rec, sol);
        if (sol.ok()) recs.push_back(rec);
    }
    if (!single && recs.size() >= 3) {
        RateSummary rates = estimate_rates(recs);
        csv << "slope_h1=" << fmt(rates.slope_h1) << "\n";
        csv << "slope_l2=" << fmt(rates.slope_l2) << "\n";
    }
    write_out(csv.str(), cfg.output);
    return failed ? 2 : 0;
}

inline int run_infsup(const RunConfig& cfg) {
    require_levels(cfg);
    std::ostringstream csv;
    csv << "n,h,beta,status\n";
    for (int n : cfg.levels) {
        TriMesh mesh = build_unit_square_mesh(n);
        FeSpace V = build_primal_space(mesh, 1);
        int factor;
        MultKind kind;
        if (cfg.pair == "p1-p0refined") {
            factor = 2;
            kind = MultKind::P0Disc;
        } else if (cfg.pair == "p1-p0") {
            factor = 1;
            kind = MultKind::P0Disc;
        } else if (cfg.pair == "p1-p1cont") {
            factor = 1;
            kind = MultKind::P1Cont;
        } else {
            throw std::invalid_argument("unknown pair: " + cfg.pair);
        }
        TraceMesh tr = extract_trace_mesh(mesh, dirichlet_sides(), factor);
        MultSpace mult = build_multiplier_space(tr, kind);
        Eigen::MatrixXd B = assemble_coupling(V, mult).dense();
        Eigen::MatrixXd MV = primal_norm_matrix(V);
        Eigen::MatrixXd ML = assemble_mult_mass(mult, 1).dense();
        Eigen::MatrixXd S;
        if (cfg.stabilized && kind == MultKind::P0Disc) {
            TraceMesh ltr = extract_trace_mesh(mesh, dirichlet_sides(), 1);
            MultSpace L = build_multiplier_space(ltr, MultKind::P1Cont);
            S = assemble_projection_stab(mult, L, cfg.gamma).dense();
        }
        double beta = compute_infsup(B, S, MV, ML);
        csv << n << "," << fmt(mesh.h) << "," << fmt(beta) << ",ok\n";
    }
    write_out(csv.str(), cfg.output);
    return 0;
}

inline int run_gamma_sweep(const RunConfig& cfg) {
    Variant variant = parse_method(cfg.method);
    if (variant != Variant::BarbosaHughesSym && variant != Variant::BarbosaHughesNonsym)
        throw std::invalid_argument("gamma-sweep requires a Barbosa-Hughes method");
    if (cfg.gammas.empty()) throw std::invalid_argument("gamma-sweep requires gamma values");
    const int n = cfg.n > 0 ? cfg.n : 20;
    std::vector<SweepRow> rows = gamma_sweep(variant, cfg.degree, n, cfg.gammas, select_data(cfg));
    std::ostringstream csv;
    csv << "gamma,dist_l2,pivot_ratio,status\n";
    for (const SweepRow& r : rows) {
        const char* status = r.status != SolveStatus::Ok ? solve_status_name(r.status)
                             : r.near_singular           ? "near-singular"
                                                         : "ok";
        csv << fmt(r.gamma) << "," << fmt(r.dist_l2) << "," << fmt(r.pivot_ratio) << "," << status << "\n";
    }
    write_out(csv.str(), cfg.output);
    return 0;
}

inline int run_unfitted(const RunConfig& cfg) {
    require_levels(cfg);
    InterfaceData data = interface_exact_solution();
    std::ostringstream csv;
    csv << "n,h,dofs,err_h1,err_l2,err_mult,status\n";
    std::vector<ErrorRecord> recs;
    bool failed = false;
    for (int n : cfg.levels) {
        TriMesh mesh = build_unit_square_mesh(n);
        InterfaceResult r = solve_interface(mesh, cfg.x0, cfg.gamma, data);
        error_row(csv, r.record, r.sol);
        if (r.sol.ok())
            recs.push_back(r.record);
        else
            failed = true;
    }
    if (recs.size() >= 3) {
        RateSummary rates = estimate_rates(recs);
        csv << "slope_h1=" << fmt(rates.slope_h1) << "\n";
        csv << "slope_l2=" << fmt(rates.slope_l2) << "\n";
    }
    write_out(csv.str(), cfg.output);
    return failed ? 2 : 0;
}

inline int run_equivalence(const RunConfig& cfg) {
    require_levels(cfg);
    std::ostringstream csv;
    csv << "n,h,eig_max,status\n";
    for (int n : cfg.levels) {
        TriMesh mesh = build_unit_square_mesh(n);
        TraceMesh tr = extract_trace_mesh(mesh, dirichlet_sides(), 2);
        MultSpace mult = build_multiplier_space(tr, MultKind::P0Disc);
        TraceMesh ltr = extract_trace_mesh(mesh, dirichlet_sides(), 1);
        MultSpace L = build_multiplier_space(ltr, MultKind::P1Cont);
        csv << n << "," << fmt(mesh.h) << "," << fmt(norm_equivalence_bound(mult, L)) << ",ok\n";
    }
    write_out(csv.str(), cfg.output);
    return 0;
}

}  // namespace detail

/// Runs one experiment. Exit codes: 0 success, 1 bad configuration,
/// 2 numerical failure. Identical configs produce byte-identical CSV.
inline int run(const RunConfig& cfg) {
    try {
        if (cfg.gamma < 0) throw std::invalid_argument("gamma must be >= 0");
        if (cfg.subcommand == "solve") return detail::run_fitted(cfg, true);
        if (cfg.subcommand == "converge") return detail::run_fitted(cfg, false);
        if (cfg.subcommand == "infsup") return detail::run_infsup(cfg);
        if (cfg.subcommand == "gamma-sweep") return detail::run_gamma_sweep(cfg);
        if (cfg.subcommand == "unfitted") return detail::run_unfitted(cfg);
        if (cfg.subcommand == "equivalence") return detail::run_equivalence(cfg);
        throw std::invalid_argument("unknown subcommand: " + cfg.subcommand);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error=config," << e.what() << "\n";
        return 1;
    } catch (const UnsupportedConfiguration& e) {
        std::cerr << "error=config," << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error=numerical," << e.what() << "\n";
        return 2;
    }
}

}  // namespace lmstab
