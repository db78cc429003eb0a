#include "lbsurv/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <ostream>
#include <vector>

#include "lbsurv/asymptotics.hpp"
#include "lbsurv/estimator.hpp"
#include "lbsurv/io.hpp"
#include "lbsurv/quadrature.hpp"
#include "lbsurv/simulate.hpp"

namespace lbsurv {

namespace {

double bisect_median(const std::function<double(double)>& cdf, double hi) {
    double lo = 0.0;
    for (int i = 0; i < 200; ++i) {
        double mid = 0.5 * (lo + hi);
        (cdf(mid) < 0.5 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double se_of(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    double m = mean_of(v), s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

// sup_t |Ghat - G| over the fitted support, checking both sides of each jump
double sup_error(const MassFunction& ghat, const LifetimeModel& truth) {
    double sup = 0.0, cum = 0.0;
    for (std::size_t j = 0; j < ghat.size(); ++j) {
        double g = truth.length_biased_cdf(ghat.support()[j]);
        sup = std::max(sup, std::abs(cum - g)); // left limit of Ghat
        cum += ghat.masses()[j];
        sup = std::max(sup, std::abs(cum - g));
    }
    return sup;
}

} // namespace

double lifetime_median(const LifetimeModel& model) {
    return bisect_median([&](double x) { return model.cdf(x); }, upper_support_bound(model));
}

double length_biased_median(const LifetimeModel& model) {
    return bisect_median([&](double x) { return model.length_biased_cdf(x); },
                         upper_support_bound(model));
}

std::string resolve_output_path(const std::string& path) {
    const char* dir = std::getenv("LBSURV_OUT_DIR");
    if (!dir || *dir == '\0' || path.find('/') != std::string::npos) return path;
    std::string d(dir);
    if (d.back() != '/') d += '/';
    return d + path;
}

int cmd_simulate(const std::string& scenario_path, const std::string& out_path,
                 std::optional<std::uint64_t> seed, bool extended, std::ostream& out,
                 std::ostream& err) {
    try {
        Scenario sc = read_scenario_file(scenario_path);
        if (seed) sc.seed = *seed;
        sc.validate();
        Rng rng = make_stream(sc.seed, 0);
        std::string path = resolve_output_path(out_path);
        std::vector<std::string> comments{"# seed = " + std::to_string(sc.seed)};
        if (extended) {
            write_sim_csv(path, draw_cohort_full(sc, rng), comments);
        } else {
            write_cohort_csv(path, draw_cohort(sc, rng), comments);
        }
        out << path << "\n";
        return 0;
    } catch (const std::exception& e) {
        err << "simulate: " << e.what() << "\n";
        return 1;
    }
}

int cmd_fit(const std::string& in_path, const std::string& out_path, double tol, long max_iter,
            std::ostream& out, std::ostream& err) {
    try {
        std::vector<CohortRecord> cohort = read_cohort_csv(in_path);
        FitConfig config;
        config.tol = tol;
        config.max_iter = max_iter;
        FitResult fit = fit_npmle(cohort, config);
        std::string path = resolve_output_path(out_path);
        write_fit_csv(path, fit,
                      {"# p_hat = " + format_double(fit.p_hat),
                       "# iterations = " + std::to_string(fit.iterations),
                       "# converged = " + std::string(fit.converged ? "true" : "false")});
        out << path << "\n";
        if (!fit.converged) {
            err << "fit: not converged after " << fit.iterations
                << " iterations (last change " << format_double(fit.final_change) << ")\n";
            return 1;
        }
        return 0;
    } catch (const std::exception& e) {
        err << "fit: " << e.what() << "\n";
        return 1;
    }
}

int cmd_band(const std::string& in_path, const std::string& fit_path, const std::string& out_path,
             double level, const std::string& mode, int paths, std::uint64_t seed, double tstar,
             const std::string& scenario_path, std::ostream& out, std::ostream& err) {
    try {
        std::vector<CohortRecord> cohort = read_cohort_csv(in_path);
        MassFunction ghat = read_fit_csv(fit_path);
        FitResult fit{ghat, 0.0, 0, 0.0, {}, true, 0};
        int m = 0;
        for (const auto& rec : cohort) m += rec.delta;
        fit.p_hat = static_cast<double>(m) / static_cast<double>(cohort.size());

        OperatorMode op_mode;
        if (mode == "plugin") op_mode = OperatorMode::Plugin;
        else if (mode == "oracle") op_mode = OperatorMode::Oracle;
        else throw std::runtime_error("mode must be plugin or oracle");

        BandResult band;
        if (op_mode == OperatorMode::Oracle) {
            if (scenario_path.empty())
                throw std::runtime_error("oracle mode needs --scenario for the generating models");
            Scenario sc = read_scenario_file(scenario_path);
            band = confidence_band(fit, cohort, level, op_mode, paths, seed, tstar, &sc.lifetime,
                                   &sc.censoring, sc.scheme);
        } else {
            band = confidence_band(fit, cohort, level, op_mode, paths, seed, tstar);
        }
        std::string path = resolve_output_path(out_path);
        write_band_csv(path, band,
                       {"# seed = " + std::to_string(seed), "# level = " + format_double(level),
                        "# mode = " + mode, "# paths = " + std::to_string(band.paths)});
        out << path << "\n";
        return 0;
    } catch (const std::exception& e) {
        err << "band: " << e.what() << "\n";
        return 1;
    }
}

int cmd_diag(const std::string& cens_path, double t, std::ostream& out, std::ostream& err) {
    try {
        CensoringModel cens = read_censoring_file(cens_path);
        out << "alpha=" << format_double(alpha(cens, t)) << "\n";
        out << "beta=" << format_double(beta(cens)) << "\n";
        bool member = in_J(cens, t);
        out << "in_J=" << (member ? "true" : "false") << "\n";
        out << "lambda=" << (member ? format_double(lambda_bound(cens, t)) : "nan") << "\n";
        return 0;
    } catch (const std::exception& e) {
        err << "diag: " << e.what() << "\n";
        return 1;
    }
}

int cmd_check_master(const std::string& scenario_path, int k, int reps,
                     std::optional<std::uint64_t> seed, std::ostream& out, std::ostream& err) {
    try {
        Scenario sc = read_scenario_file(scenario_path);
        if (k > 0) sc.k = k;
        if (seed) sc.seed = *seed;
        sc.validate();
        FitConfig config;
        config.tol = 1e-14; // the identity check needs a tight score fixed point
        config.max_iter = 1000000;
        double worst = 0.0;
        for (int rep = 1; rep <= reps; ++rep) {
            Rng rng = make_stream(sc.seed, static_cast<std::uint64_t>(rep));
            std::vector<CohortRecord> cohort = draw_cohort(sc, rng);
            FitResult fit = fit_npmle(cohort, config);
            if (!fit.converged) {
                err << "check-master: replicate " << rep << " did not converge\n";
                return 1;
            }
            MasterCheck check = master_residual(cohort, fit, sc.lifetime, sc.censoring);
            worst = std::max(worst, check.residual);
        }
        out << "max_residual=" << format_double(worst) << "\n";
        return 0;
    } catch (const std::exception& e) {
        err << "check-master: " << e.what() << "\n";
        return 1;
    }
}

namespace {

Scenario scaled_scenario(const Scenario& tmpl, int k) {
    Scenario sc = tmpl;
    sc.k = k;
    if (sc.scheme != Scheme::I) {
        sc.n = static_cast<int>(std::lround(static_cast<double>(tmpl.n) / tmpl.k * k));
        sc.m = k - sc.n;
    }
    return sc;
}

struct CoverageOracle {
    double t_med = 0.0;
    std::size_t med_index = 0;
    double q_lo = 0.0;
    double q_hi = 0.0;
};

// 95% oracle quantiles of the limit process U at the true G-median, shared by
// every replicate of a coverage cell.
CoverageOracle coverage_oracle(const Scenario& sc, std::uint64_t seed, int paths) {
    CoverageOracle co;
    co.t_med = length_biased_median(sc.lifetime);
    std::vector<double> grid;
    const int cells = 200;
    for (int i = 1; i <= cells; ++i)
        grid.push_back(co.t_med * 1.5 * static_cast<double>(i) / cells);
    auto it = std::lower_bound(grid.begin(), grid.end(), co.t_med);
    if (it == grid.end() || std::abs(*it - co.t_med) > 1e-12 * co.t_med)
        it = grid.insert(it, co.t_med);
    co.med_index = static_cast<std::size_t>(it - grid.begin());

    LimitInputs in = limit_inputs_truth(sc.lifetime, sc.censoring, grid);
    GridOperator op = build_F_limit(in, ModelCensCurve(sc.censoring));
    Rng rng = make_stream(seed, 0);
    Eigen::MatrixXd upaths = simulate_limit(op, in, sc.scheme, paths, rng);
    std::vector<double> u(upaths.col(static_cast<Eigen::Index>(co.med_index)).data(),
                          upaths.col(static_cast<Eigen::Index>(co.med_index)).data() + paths);
    std::sort(u.begin(), u.end());
    auto pick = [&](double q) {
        double pos = q * static_cast<double>(u.size() - 1);
        std::size_t lo = static_cast<std::size_t>(pos);
        double frac = pos - static_cast<double>(lo);
        return lo + 1 < u.size() ? u[lo] * (1.0 - frac) + u[lo + 1] * frac : u.back();
    };
    co.q_lo = pick(0.025);
    co.q_hi = pick(0.975);
    return co;
}

} // namespace

int cmd_study(const std::string& study_path, const std::string& out_path,
              std::optional<std::uint64_t> seed, std::ostream& out, std::ostream& err) {
    try {
        StudySpec spec = read_study_file(study_path);
        if (seed) spec.seed = *seed;

        CsvTable table;
        table.comments = {"# seed = " + std::to_string(spec.seed)};
        table.header = {"scenario", "k", "metric", "replicates", "mean", "median", "se"};

        std::vector<std::string> failures;
        for (std::size_t si = 0; si < spec.scenarios.size(); ++si) {
            for (std::size_t ki = 0; ki < spec.k_values.size(); ++ki) {
                Scenario sc = scaled_scenario(spec.scenarios[si].scenario, spec.k_values[ki]);
                std::uint64_t cell = (static_cast<std::uint64_t>(si) << 32) |
                                     (static_cast<std::uint64_t>(ki) << 20);

                CoverageOracle co;
                bool need_cov = std::find(spec.metrics.begin(), spec.metrics.end(),
                                          StudyMetric::Coverage) != spec.metrics.end();
                if (need_cov) co = coverage_oracle(sc, spec.seed ^ cell, 2000);
                double true_median = lifetime_median(sc.lifetime);

                std::vector<std::vector<double>> values(spec.metrics.size());
                for (int rep = 1; rep <= spec.replicates; ++rep) {
                    std::uint64_t stream = cell | static_cast<std::uint64_t>(rep);
                    try {
                        Rng rng = make_stream(spec.seed, stream);
                        std::vector<CohortRecord> cohort = draw_cohort(sc, rng);
                        FitResult fit = fit_npmle(cohort);
                        if (!fit.converged) throw std::runtime_error("fit did not converge");
                        for (std::size_t mi = 0; mi < spec.metrics.size(); ++mi) {
                            switch (spec.metrics[mi]) {
                                case StudyMetric::SupError:
                                    values[mi].push_back(sup_error(fit.ghat, sc.lifetime));
                                    break;
                                case StudyMetric::Coverage: {
                                    double g = sc.lifetime.length_biased_cdf(co.t_med);
                                    double u = std::sqrt(static_cast<double>(sc.k)) *
                                               (fit.ghat.cdf(co.t_med) - g);
                                    values[mi].push_back(u >= co.q_lo && u <= co.q_hi ? 1.0 : 0.0);
                                    break;
                                }
                                case StudyMetric::MedianRatio:
                                    values[mi].push_back(survival_median(km_naive(cohort)) /
                                                         true_median);
                                    break;
                            }
                        }
                    } catch (const std::exception& e) {
                        failures.push_back(spec.scenarios[si].name + "/k=" +
                                           std::to_string(sc.k) + "/stream=" +
                                           std::to_string(stream) + ": " + e.what());
                    }
                }
                if (!failures.empty()) continue;
                for (std::size_t mi = 0; mi < spec.metrics.size(); ++mi) {
                    const auto& v = values[mi];
                    table.rows.push_back({spec.scenarios[si].name, std::to_string(sc.k),
                                          metric_name(spec.metrics[mi]),
                                          std::to_string(v.size()), format_double(mean_of(v)),
                                          format_double(median_of(v)), format_double(se_of(v))});
                }
            }
        }
        if (!failures.empty()) {
            err << "study: aborted, failing replicate streams:\n";
            for (const auto& f : failures) err << "  " << f << "\n";
            return 1;
        }
        std::string path = resolve_output_path(out_path);
        write_csv(path, table);
        out << path << "\n";
        return 0;
    } catch (const std::exception& e) {
        err << "study: " << e.what() << "\n";
        return 1;
    }
}

int cmd_oracle_compare(int count, std::uint64_t seed, std::ostream& out, std::ostream& err) {
    try {
        const std::vector<double> pool{1.0, 2.0, 3.0};
        Rng rng = make_stream(seed, 0);
        std::uniform_int_distribution<int> ksize(2, 6), pick(0, 2);
        std::bernoulli_distribution uncensored(0.6);
        double worst = 0.0;
        for (int c = 0; c < count; ++c) {
            std::vector<CohortRecord> cohort;
            int k = ksize(rng);
            for (int i = 0; i < k; ++i) {
                double t = pool[static_cast<std::size_t>(pick(rng))];
                cohort.push_back({t / 2, t / 2, uncensored(rng) ? 1 : 0});
            }
            FitConfig config;
            config.tol = 1e-12;
            FitResult fit = fit_npmle(cohort, config);
            MassFunction oracle = brute_force_npmle(cohort, 1e-3);
            double dist = 0.0;
            for (double t : pool)
                dist = std::max(dist, std::abs(fit.ghat.cdf(t) - oracle.cdf(t)));
            worst = std::max(worst, dist);
        }
        out << "max_distance=" << format_double(worst) << "\n";
        return worst <= 2e-3 ? 0 : 1;
    } catch (const std::exception& e) {
        err << "oracle-compare: " << e.what() << "\n";
        return 1;
    }
}

} // namespace lbsurv
