#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "lbsurv/estimator.hpp"
#include "lbsurv/simulate.hpp"

using namespace lbsurv;

namespace {

std::vector<CohortRecord> uncensored(std::initializer_list<double> xs) {
    std::vector<CohortRecord> out;
    for (double x : xs) out.push_back({x / 2, x / 2, 1});
    return out;
}

CohortRecord censored_at(double y) { return {y / 2, y / 2, 0}; }

} // namespace

TEST_CASE("log-likelihood closed cases") {
    // all uncensored with empirical masses: sum of log(count/k)
    std::vector<CohortRecord> cohort = uncensored({1.0, 1.0, 2.0});
    MassFunction emp({1.0, 2.0}, {2.0 / 3.0, 1.0 / 3.0});
    CHECK(log_likelihood(emp, cohort) ==
          doctest::Approx(2 * std::log(2.0 / 3.0) + std::log(1.0 / 3.0)).epsilon(1e-12));

    std::vector<CohortRecord> mixed = uncensored({1.0});
    mixed.push_back(censored_at(2.0));
    MassFunction half({1.0, 2.0}, {0.5, 0.5});
    CHECK(log_likelihood(half, mixed) == doctest::Approx(std::log(1.0 / 8.0)).epsilon(1e-12));

    std::vector<CohortRecord> beyond = uncensored({1.0});
    beyond.push_back(censored_at(5.0));
    CHECK(log_likelihood(MassFunction({1.0}, {1.0}), beyond) ==
          -std::numeric_limits<double>::infinity());
}

TEST_CASE("em step on uncensored data is the empirical fixed point") {
    std::vector<CohortRecord> cohort = uncensored({1.0, 2.0, 2.0, 3.0});
    MassFunction start({1.0, 2.0, 3.0}, {1.0 / 3, 1.0 / 3, 1.0 / 3});
    MassFunction one = em_step(start, cohort);
    CHECK(one.masses()[0] == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(one.masses()[1] == doctest::Approx(0.50).epsilon(1e-14));
    CHECK(one.masses()[2] == doctest::Approx(0.25).epsilon(1e-14));
    MassFunction two = em_step(one, cohort);
    for (std::size_t j = 0; j < 3; ++j)
        CHECK(two.masses()[j] == doctest::Approx(one.masses()[j]).epsilon(1e-14));
}

TEST_CASE("fit closed cases") {
    FitResult plain = fit_npmle(uncensored({1.0, 2.0, 3.0}));
    CHECK(plain.converged);
    CHECK(plain.p_hat == 1.0);
    for (double w : plain.ghat.masses()) CHECK(w == doctest::Approx(1.0 / 3).epsilon(1e-12));

    std::vector<CohortRecord> mixed = uncensored({1.0});
    mixed.push_back(censored_at(2.0));
    FitResult half = fit_npmle(mixed);
    CHECK(half.converged);
    CHECK(half.p_hat == 0.5);
    CHECK(half.ghat.masses()[0] == doctest::Approx(0.5).epsilon(1e-8));
    CHECK(half.ghat.masses()[1] == doctest::Approx(0.5).epsilon(1e-8));

    // all censored: maximum sits on the boundary, point mass at the largest value
    std::vector<CohortRecord> all_cens{censored_at(1.0), censored_at(2.0)};
    FitResult degen = fit_npmle(all_cens);
    CHECK(degen.converged);
    CHECK(degen.ghat.masses()[0] < 1e-4);
    CHECK(degen.ghat.masses()[1] == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("log-likelihood trace never decreases") {
    Scenario sc{LifetimeModel::exponential(1.0), CensoringModel::exponential(1.0), 300, Scheme::I,
                77, -1, -1};
    FitResult fit = fit_npmle(draw_cohort(sc));
    REQUIRE(fit.converged);
    for (std::size_t i = 1; i < fit.loglik_trace.size(); ++i)
        CHECK(fit.loglik_trace[i] >= fit.loglik_trace[i - 1] - 1e-10);
}

TEST_CASE("score residual") {
    std::vector<CohortRecord> cohort = uncensored({1.0, 2.0, 2.0});
    MassFunction emp({1.0, 2.0}, {1.0 / 3, 2.0 / 3});
    CHECK(score_residual(emp, cohort) == 0.0);

    Scenario sc{LifetimeModel::exponential(1.0), CensoringModel::exponential(1.0), 200, Scheme::I,
                5, -1, -1};
    std::vector<CohortRecord> sim = draw_cohort(sc);
    FitResult fit = fit_npmle(sim);
    REQUIRE(fit.converged);
    CHECK(score_residual(fit.ghat, sim) <= 1e-8);

    SupportCounts sup = support_counts(sim);
    std::vector<double> w(sup.t.size(), 1.0 / static_cast<double>(sup.t.size()));
    CHECK(score_residual(MassFunction(sup.t, w), sim) > 0.0);
}

TEST_CASE("brute force oracle") {
    std::vector<CohortRecord> mixed = uncensored({1.0});
    mixed.push_back(censored_at(2.0));
    MassFunction brute = brute_force_npmle(mixed, 1e-3);
    CHECK(brute.cdf(1.0) == doctest::Approx(0.5).epsilon(1e-9));

    MassFunction plain = brute_force_npmle(uncensored({1.0, 2.0, 2.0}), 1e-3);
    CHECK(plain.cdf(1.0) == doctest::Approx(1.0 / 3).epsilon(2e-3));

    std::vector<CohortRecord> wide = uncensored({1.0, 2.0, 3.0, 4.0, 5.0});
    CHECK_THROWS(brute_force_npmle(wide, 1e-3));

    // spot agreement with the EM fit on a handful of tiny cohorts
    Rng rng = make_stream(23, 0);
    std::uniform_int_distribution<int> pick(0, 2);
    std::bernoulli_distribution obs(0.5);
    const std::vector<double> pool{1.0, 2.0, 3.0};
    for (int rep = 0; rep < 20; ++rep) {
        std::vector<CohortRecord> cohort;
        for (int i = 0; i < 5; ++i) {
            double t = pool[static_cast<std::size_t>(pick(rng))];
            cohort.push_back({t / 2, t / 2, obs(rng) ? 1 : 0});
        }
        FitConfig config;
        config.tol = 1e-12;
        FitResult fit = fit_npmle(cohort, config);
        MassFunction oracle = brute_force_npmle(cohort, 1e-3);
        for (double t : pool) CHECK(std::abs(fit.ghat.cdf(t) - oracle.cdf(t)) <= 2e-3);
    }
}

TEST_CASE("unbiased survival transform") {
    MassFunction ghat({1.0, 2.0}, {0.5, 0.5});
    StepFunction su = unbiased_survival(ghat);
    CHECK(su(0.5) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(su(1.0) == doctest::Approx(1.0 / 3).epsilon(1e-14));
    CHECK(su(2.0) == 0.0);

    StepFunction point = unbiased_survival(MassFunction({3.0}, {1.0}));
    CHECK(point(2.9) == 1.0);
    CHECK(point(3.0) == 0.0);

    MassFunction round = bias(unbias(ghat));
    CHECK(round.masses()[0] == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("naive product-limit comparator") {
    StepFunction km = km_naive(uncensored({1.0, 2.0, 3.0, 3.0}));
    CHECK(km(1.0) == doctest::Approx(0.75).epsilon(1e-14));
    CHECK(km(2.5) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(km(3.0) == 0.0);

    std::vector<CohortRecord> single{censored_at(2.0)};
    StepFunction flat = km_naive(single);
    CHECK(flat(1.9) == 1.0);
    CHECK(flat(2.0) == 1.0);
}
