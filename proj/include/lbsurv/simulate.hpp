#pragma once

#include <cstdint>
#include <vector>

#include "lbsurv/models.hpp"
#include "lbsurv/rng.hpp"

namespace lbsurv {

/// One observed subject of a prevalent cohort: current age a, observed
/// follow-up v = min(r, c), and censoring indicator delta (1 if r <= c).
struct CohortRecord {
    double a;
    double v;
    int delta;
};

/// Extended simulation record retaining both the residual lifetime r and the
/// residual censoring time c (c may be +inf).
struct SimRecord {
    double a;
    double r;
    double c;
    double v;
    int delta;

    CohortRecord observed() const { return {a, v, delta}; }
};

enum class Scheme { I, II, III };

struct Scenario {
    LifetimeModel lifetime;
    CensoringModel censoring;
    int k = 0;
    Scheme scheme = Scheme::I;
    std::uint64_t seed = 0;
    int m = -1; // scheme ii/iii: fixed uncensored count, m + n = k
    int n = -1; // scheme ii/iii: fixed censored count

    void validate() const;
};

/// Sample the length-biased lifetime X ~ g.
double draw_length_biased(const LifetimeModel& model, Rng& rng);

/// Draw a full cohort with r and c retained. Scheme ii resamples scheme-i
/// cohorts until the censored count equals n (capped at 1e5 attempts).
std::vector<SimRecord> draw_cohort_full(const Scenario& scenario, Rng& rng);

/// Observable cohort (a, v, delta).
std::vector<CohortRecord> draw_cohort(const Scenario& scenario, Rng& rng);
std::vector<CohortRecord> draw_cohort(const Scenario& scenario); // stream from scenario.seed

/// Oracle generator: simulates an incident population with stationary onsets
/// over a calendar window and keeps subjects alive at recruitment. Exists to
/// validate draw_cohort; onset_rate is the incidence intensity per time unit.
/// Requires window >= 20 * mean lifetime.
std::vector<CohortRecord> draw_cohort_incident_rejection(const LifetimeModel& model,
                                                         const CensoringModel& cens, double window,
                                                         double onset_rate, Rng& rng);

/// Sample check of Cov(X, Y) = sigma_A^2 (1 + rho_{A,R} sigma_R / sigma_A)
/// with X = A + R, Y = A + C. Returns {lhs, rhs} from sample moments.
/// Records with non-finite c are rejected.
std::pair<double, double> covariance_check(const std::vector<SimRecord>& cohort);

} // namespace lbsurv
