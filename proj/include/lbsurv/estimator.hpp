#pragma once

#include <optional>
#include <vector>

#include "lbsurv/mass_function.hpp"
#include "lbsurv/simulate.hpp"

namespace lbsurv {

struct FitConfig {
    double tol = 1e-10;      // sup-norm change of the mass vector
    long max_iter = 100000;
    std::optional<MassFunction> init; // default: uniform over the support
};

struct FitResult {
    MassFunction ghat;
    double p_hat = 0.0; // uncensored fraction m/k
    long iterations = 0;
    double final_change = 0.0;
    std::vector<double> loglik_trace;
    bool converged = false;
    int boundary_points = 0; // support points whose fitted mass fell below 1e-12
};

/// Distinct observed values with uncensored/censored multiplicities; ties merged.
struct SupportCounts {
    std::vector<double> t;
    std::vector<int> uncensored;
    std::vector<int> censored;
    int m = 0;
    int n = 0;
    int k = 0;
};

SupportCounts support_counts(const std::vector<CohortRecord>& cohort);

/// Log of the unconditional likelihood of G given the cohort:
/// sum of delta * log dG(x) + (1 - delta) * log sum_{t_j >= y} w_j / t_j.
/// Returns -inf when an uncensored value carries no mass or a censored value
/// exceeds all supported mass.
double log_likelihood(const MassFunction& g, const std::vector<CohortRecord>& cohort);

/// One EM/self-consistency update of the mass vector; never decreases the
/// log-likelihood. G must be strictly positive on the observed support.
MassFunction em_step(const MassFunction& g, const std::vector<CohortRecord>& cohort);

/// Unconditional NPMLE via EM fixed-point iteration on the score equation.
FitResult fit_npmle(const std::vector<CohortRecord>& cohort, const FitConfig& config = {});

/// Sup-norm defect of the score equation at G (0 exactly at the NPMLE).
double score_residual(const MassFunction& g, const std::vector<CohortRecord>& cohort);

/// Exhaustive simplex-grid maximizer of the likelihood, for h <= 4 distinct
/// values; testing oracle. Ties broken toward the lexicographically smallest
/// mass vector.
MassFunction brute_force_npmle(const std::vector<CohortRecord>& cohort, double grid_step = 1e-3);

/// NPMLE of the unbiased survivor function: S_U(t) = fhat(t) / fhat(0) with
/// fhat the residual density of ghat.
StepFunction unbiased_survival(const FitResult& fit);
StepFunction unbiased_survival(const MassFunction& ghat);

/// Classical product-limit survival curve on the pairs (a + v, delta);
/// biased comparator only. Deaths precede censorings at tied times.
StepFunction km_naive(const std::vector<CohortRecord>& cohort);

} // namespace lbsurv
