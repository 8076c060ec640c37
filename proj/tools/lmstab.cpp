// Experiment driver: weak boundary conditions with stabilised Lagrange
// multipliers, Nitsche methods and the unfitted interface solver.

#include <CLI11.hpp>

#include "lmstab/driver.hpp"

int main(int argc, char** argv) {
    CLI::App app{"stabilised Lagrange multiplier studies on the unit square"};
    app.require_subcommand(1);

    lmstab::RunConfig cfg;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--out", cfg.output, "CSV output path (default: stdout)");
        sub->add_option("--seed", cfg.seed, "seed, reserved for randomised studies");
    };
    auto add_method = [&](CLI::App* sub) {
        sub->add_option("--method", cfg.method,
                        "stable | projection | jump | bh-nonsym | bh-sym | nitsche-nonsym | nitsche-sym");
        sub->add_option("--degree", cfg.degree, "primal polynomial degree (1 or 2)");
        sub->add_option("--gamma", cfg.gamma, "stabilisation parameter");
        sub->add_option("--data", cfg.data, "paper | linear (patch test data)");
    };

    CLI::App* solve = app.add_subcommand("solve", "solve one mesh level and report errors");
    add_method(solve);
    solve->add_option("--n", cfg.n, "subdivisions per side")->required();
    add_common(solve);

    CLI::App* conv = app.add_subcommand("converge", "convergence study over mesh levels");
    add_method(conv);
    conv->add_option("--levels", cfg.levels, "mesh levels, e.g. 8,16,32,64")->required()->delimiter(',');
    add_common(conv);

    CLI::App* infsup = app.add_subcommand("infsup", "discrete inf-sup constants over mesh levels");
    infsup->add_option("--pair", cfg.pair, "p1-p0refined | p1-p0 | p1-p1cont");
    infsup->add_option("--levels", cfg.levels, "mesh levels")->required()->delimiter(',');
    infsup->add_option("--stabilized", cfg.stabilized, "add the projection stabiliser to the pencil");
    infsup->add_option("--gamma", cfg.gamma, "stabiliser weight");
    add_common(infsup);

    CLI::App* sweep = app.add_subcommand("gamma-sweep", "Barbosa-Hughes penalty sweep against Nitsche");
    sweep->add_option("--method", cfg.method, "bh-nonsym | bh-sym");
    sweep->add_option("--degree", cfg.degree, "primal polynomial degree");
    sweep->add_option("--n", cfg.n, "mesh subdivisions (default 20)");
    sweep->add_option("--gammas", cfg.gammas, "penalty values, e.g. 10,100,1000")->delimiter(',');
    double range[3] = {0, 0, 0};
    CLI::Option* range_opt = sweep->add_option("--gamma-range", range, "lo:hi:step")->delimiter(':');
    sweep->add_option("--data", cfg.data, "paper | linear");
    add_common(sweep);

    CLI::App* unfitted = app.add_subcommand("unfitted", "unfitted interface transmission study");
    unfitted->add_option("--levels", cfg.levels, "mesh levels")->required()->delimiter(',');
    unfitted->add_option("--x0", cfg.x0, "interface abscissa");
    unfitted->add_option("--gamma", cfg.gamma, "face-jump stabiliser weight");
    add_common(unfitted);

    CLI::App* equiv = app.add_subcommand("equivalence", "projection-vs-jump stabiliser eigenvalue bound");
    equiv->add_option("--levels", cfg.levels, "mesh levels")->required()->delimiter(',');
    add_common(equiv);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;  // bad configuration
    }

    cfg.subcommand = app.get_subcommands().front()->get_name();
    if (cfg.subcommand == "gamma-sweep" && range_opt->count() > 0) {
        if (range[2] <= 0 || range[1] < range[0]) {
            std::cerr << "error=config,bad --gamma-range\n";
            return 1;
        }
        cfg.gammas.clear();
        for (double g = range[0]; g <= range[1] + 1e-12; g += range[2]) cfg.gammas.push_back(g);
    }
    if (cfg.subcommand == "gamma-sweep" && cfg.method == "projection") cfg.method = "bh-nonsym";

    return lmstab::run(cfg);
}
