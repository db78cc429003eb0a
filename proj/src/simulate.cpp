#include "lbsurv/simulate.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace lbsurv {

void Scenario::validate() const {
    if (k < 1) throw std::invalid_argument("scenario: k >= 1 required");
    if (scheme == Scheme::II || scheme == Scheme::III) {
        if (m < 0 || n < 0 || m + n != k)
            throw std::invalid_argument("scenario: scheme ii/iii requires m + n = k");
    }
}

double draw_length_biased(const LifetimeModel& model, Rng& rng) {
    return model.sample_length_biased(rng);
}

namespace {

SimRecord draw_scheme_i_record(const LifetimeModel& lifetime, const CensoringModel& cens, Rng& rng) {
    double x = lifetime.sample_length_biased(rng);
    double a = std::uniform_real_distribution<double>(0.0, x)(rng);
    double r = x - a;
    double c = cens.sample(rng);
    double v = std::min(r, c);
    int delta = r <= c ? 1 : 0;
    return {a, r, c, v, delta};
}

} // namespace

std::vector<SimRecord> draw_cohort_full(const Scenario& scenario, Rng& rng) {
    scenario.validate();
    std::vector<SimRecord> out;
    out.reserve(static_cast<std::size_t>(scenario.k));
    switch (scenario.scheme) {
        case Scheme::I: {
            for (int i = 0; i < scenario.k; ++i)
                out.push_back(draw_scheme_i_record(scenario.lifetime, scenario.censoring, rng));
            break;
        }
        case Scheme::II: {
            const int cap = 100000;
            for (int attempt = 0; attempt < cap; ++attempt) {
                out.clear();
                int censored = 0;
                for (int i = 0; i < scenario.k; ++i) {
                    out.push_back(draw_scheme_i_record(scenario.lifetime, scenario.censoring, rng));
                    censored += 1 - out.back().delta;
                }
                if (censored == scenario.n) return out;
            }
            throw std::runtime_error("scheme ii: resampling cap exceeded without matching censored count");
        }
        case Scheme::III: {
            // m fully observed, n censored at recruitment; the censored values
            // a = u * x with u ~ Unif(0,1) realize multiplicative censoring.
            for (int i = 0; i < scenario.m; ++i) {
                double x = scenario.lifetime.sample_length_biased(rng);
                double a = std::uniform_real_distribution<double>(0.0, x)(rng);
                out.push_back({a, x - a, std::numeric_limits<double>::infinity(), x - a, 1});
            }
            for (int i = 0; i < scenario.n; ++i) {
                double x = scenario.lifetime.sample_length_biased(rng);
                double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
                out.push_back({u * x, x - u * x, 0.0, 0.0, 0});
            }
            break;
        }
    }
    return out;
}

std::vector<CohortRecord> draw_cohort(const Scenario& scenario, Rng& rng) {
    auto full = draw_cohort_full(scenario, rng);
    std::vector<CohortRecord> out;
    out.reserve(full.size());
    for (const auto& rec : full) out.push_back(rec.observed());
    return out;
}

std::vector<CohortRecord> draw_cohort(const Scenario& scenario) {
    Rng rng = make_stream(scenario.seed, 0);
    return draw_cohort(scenario, rng);
}

std::vector<CohortRecord> draw_cohort_incident_rejection(const LifetimeModel& model,
                                                         const CensoringModel& cens, double window,
                                                         double onset_rate, Rng& rng) {
    double mu = model.mean();
    if (!(window >= 20.0 * mu))
        throw std::invalid_argument("incident rejection oracle: window >= 20 * mean lifetime required");
    if (mu / window < 1e-4)
        throw std::invalid_argument("incident rejection oracle: acceptance rate below 1e-4");

    // Stationary onsets on [0, window); recruit at calendar time `window` and
    // keep subjects whose lifetime covers the recruitment instant.
    long n_onsets = std::poisson_distribution<long>(onset_rate * window)(rng);
    std::uniform_real_distribution<double> unif(0.0, window);
    std::vector<CohortRecord> out;
    for (long i = 0; i < n_onsets; ++i) {
        double onset = unif(rng);
        double x = model.sample(rng);
        double a = window - onset;
        if (x < a) continue; // failed before recruitment
        double r = x - a;
        double c = cens.sample(rng);
        out.push_back({a, std::min(r, c), r <= c ? 1 : 0});
    }
    return out;
}

std::pair<double, double> covariance_check(const std::vector<SimRecord>& cohort) {
    std::size_t n = 0;
    double sa = 0, sr = 0, sc = 0;
    for (const auto& rec : cohort) {
        if (!std::isfinite(rec.c)) continue;
        sa += rec.a;
        sr += rec.r;
        sc += rec.c;
        ++n;
    }
    if (n < 2) throw std::invalid_argument("covariance_check: need at least two records with finite c");
    double ma = sa / n, mr = sr / n, mc = sc / n;
    double vaa = 0, vrr = 0, var_ar = 0, cov_xy = 0;
    for (const auto& rec : cohort) {
        if (!std::isfinite(rec.c)) continue;
        double da = rec.a - ma, dr = rec.r - mr, dc = rec.c - mc;
        vaa += da * da;
        vrr += dr * dr;
        var_ar += da * dr;
        cov_xy += (da + dr) * (da + dc);
    }
    double denom = static_cast<double>(n - 1);
    double sigma_a2 = vaa / denom;
    double sigma_r = std::sqrt(vrr / denom);
    double cov_ar = var_ar / denom;
    double rho = cov_ar / (std::sqrt(sigma_a2) * sigma_r);
    double lhs = cov_xy / denom;
    double rhs = sigma_a2 * (1.0 + rho * sigma_r / std::sqrt(sigma_a2));
    return {lhs, rhs};
}

} // namespace lbsurv
