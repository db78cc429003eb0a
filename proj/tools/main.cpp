#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "lbsurv/commands.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Length-biased survival estimation from prevalent cohort data"};
    app.require_subcommand(1);

    std::string scenario_path, in_path, fit_path, out_path, cens_path, study_path, mode = "plugin";
    double level = 0.95, t = 1.0, tol = 1e-10, tstar = 0.0;
    long max_iter = 100000;
    int k = 0, reps = 20, paths = 2000, count = 200;
    std::uint64_t seed = 0;
    bool extended = false, seed_given = false;

    auto add_seed = [&](CLI::App* cmd) {
        cmd->add_option("--seed", seed, "random seed")->each([&](const std::string&) {
            seed_given = true;
        });
    };

    auto* sim = app.add_subcommand("simulate", "draw a cohort from a scenario");
    sim->add_option("--scenario", scenario_path, "scenario JSON")->required();
    sim->add_option("--out", out_path, "output cohort CSV")->required();
    sim->add_flag("--extended", extended, "emit a,r,c,v,delta");
    add_seed(sim);

    auto* fit = app.add_subcommand("fit", "NPMLE of the length-biased distribution");
    fit->add_option("--in", in_path, "cohort CSV")->required();
    fit->add_option("--out", out_path, "fit CSV")->required();
    fit->add_option("--tol", tol, "EM convergence tolerance");
    fit->add_option("--max-iter", max_iter, "EM iteration cap");
    add_seed(fit);

    auto* band = app.add_subcommand("band", "pointwise confidence band");
    band->add_option("--in", in_path, "cohort CSV")->required();
    band->add_option("--fit", fit_path, "fit CSV")->required();
    band->add_option("--out", out_path, "band CSV")->required();
    band->add_option("--level", level, "confidence level");
    band->add_option("--mode", mode, "plugin or oracle");
    band->add_option("--paths", paths, "simulated limit paths");
    band->add_option("--tstar", tstar, "upper end of the band grid");
    band->add_option("--scenario", scenario_path, "generating models (oracle mode)");
    add_seed(band);

    auto* diag = app.add_subcommand("diag", "censoring diagnostics at a time point");
    diag->add_option("--cens", cens_path, "censoring model JSON")->required();
    diag->add_option("--t", t, "time point")->required();
    add_seed(diag);

    auto* master = app.add_subcommand("check-master", "numeric identity check");
    master->add_option("--scenario", scenario_path, "scenario JSON")->required();
    master->add_option("--k", k, "cohort size override");
    master->add_option("--reps", reps, "replicates");
    add_seed(master);

    auto* study = app.add_subcommand("study", "Monte Carlo metrics over scenarios");
    study->add_option("--spec", study_path, "study JSON")->required();
    study->add_option("--out", out_path, "metrics CSV")->required();
    add_seed(study);

    auto* oracle = app.add_subcommand("oracle-compare", "EM vs exhaustive search on tiny cohorts");
    oracle->add_option("--count", count, "number of random cohorts");
    add_seed(oracle);

    CLI11_PARSE(app, argc, argv);

    std::optional<std::uint64_t> seed_opt;
    if (seed_given) seed_opt = seed;

    if (sim->parsed())
        return lbsurv::cmd_simulate(scenario_path, out_path, seed_opt, extended, std::cout, std::cerr);
    if (fit->parsed()) return lbsurv::cmd_fit(in_path, out_path, tol, max_iter, std::cout, std::cerr);
    if (band->parsed())
        return lbsurv::cmd_band(in_path, fit_path, out_path, level, mode, paths, seed, tstar,
                                scenario_path, std::cout, std::cerr);
    if (diag->parsed()) return lbsurv::cmd_diag(cens_path, t, std::cout, std::cerr);
    if (master->parsed())
        return lbsurv::cmd_check_master(scenario_path, k, reps, seed_opt, std::cout, std::cerr);
    if (study->parsed()) return lbsurv::cmd_study(study_path, out_path, seed_opt, std::cout, std::cerr);
    if (oracle->parsed()) return lbsurv::cmd_oracle_compare(count, seed, std::cout, std::cerr);
    return 2;
}
