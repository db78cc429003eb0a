#include <doctest.h>

#include <cmath>
#include <limits>

#include "lbsurv/distributions.hpp"
#include "lbsurv/mass_function.hpp"
#include "lbsurv/models.hpp"
#include "lbsurv/quadrature.hpp"
#include "lbsurv/rng.hpp"

using namespace lbsurv;

TEST_CASE("length-biased density closed forms") {
    LifetimeModel exp1 = LifetimeModel::exponential(1.0);
    CHECK(length_biased_density(exp1, 1.0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
    CHECK(length_biased_density(exp1, 0.0) == 0.0);
    CHECK(length_biased_density(LifetimeModel::weibull(2.0, 1.0), 0.0) == 0.0);

    // mean of g is E[X^2]/mu = 2 for Exp(1)
    double mean_g = adaptive_simpson([&](double x) { return x * length_biased_density(exp1, x); },
                                     0.0, upper_support_bound(exp1), 1e-10);
    CHECK(mean_g == doctest::Approx(2.0).epsilon(1e-6));
}

TEST_CASE("density normalization across families") {
    for (const LifetimeModel& m : {LifetimeModel::exponential(0.7), LifetimeModel::weibull(1.7, 2.0),
                                   LifetimeModel::gamma(2.5, 1.3)}) {
        double hi = upper_support_bound(m);
        double total = adaptive_simpson([&](double x) { return length_biased_density(m, x); }, 0.0,
                                        hi, 1e-10);
        CHECK(total == doctest::Approx(1.0).epsilon(1e-6));
        double first = adaptive_simpson([&](double x) { return x * length_biased_density(m, x); },
                                        0.0, hi, 1e-10);
        CHECK(first == doctest::Approx(m.second_moment() / m.mean()).epsilon(1e-6));
    }
}

TEST_CASE("residual density of a mass function") {
    MassFunction point({2.0}, {1.0});
    CHECK(residual_density(point, 1.0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(residual_density(point, 3.0) == 0.0);

    MassFunction two({1.0, 2.0}, {0.5, 0.5});
    CHECK(residual_density(two, 0.0) == doctest::Approx(0.75).epsilon(1e-15));
    // non-increasing, right-continuous, integrates to 1 as an exact step sum
    CHECK(residual_density(two, 0.5) >= residual_density(two, 1.0));
    CHECK(residual_density(two, 1.0) == doctest::Approx(0.25).epsilon(1e-15));
    double integral = 1.0 * 0.75 + 1.0 * 0.25; // cells (0,1], (1,2]
    CHECK(integral == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("unbias and bias transforms") {
    MassFunction g({1.0, 2.0}, {0.5, 0.5});
    MassFunction f = unbias(g);
    CHECK(f.masses()[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
    CHECK(f.masses()[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-14));

    MassFunction point({3.0}, {1.0});
    CHECK(unbias(point).masses()[0] == 1.0);

    Rng rng = make_stream(7, 0);
    std::uniform_real_distribution<double> unif(0.1, 1.0);
    for (int rep = 0; rep < 100; ++rep) {
        std::vector<double> t, w;
        double pos = 0.0, total = 0.0;
        for (int j = 0; j < 5; ++j) {
            pos += unif(rng);
            t.push_back(pos);
            w.push_back(unif(rng));
            total += w.back();
        }
        for (double& x : w) x /= total;
        MassFunction gg(t, w);
        MassFunction round = bias(unbias(gg));
        for (std::size_t j = 0; j < gg.size(); ++j)
            CHECK(round.masses()[j] == doctest::Approx(gg.masses()[j]).epsilon(1e-12));
    }
}

TEST_CASE("p and the observed-subpopulation densities") {
    LifetimeModel exp1 = LifetimeModel::exponential(1.0);
    CensoringModel cexp = CensoringModel::exponential(1.0);

    double p = p_uncensored(exp1, cexp);
    CHECK(p == doctest::Approx(0.5).epsilon(1e-6));

    double hi = upper_support_bound(exp1);
    double gtot = adaptive_simpson([&](double t) { return gstar_density(exp1, cexp, t, p); }, 0.0,
                                   hi, 1e-9);
    CHECK(gtot == doctest::Approx(1.0).epsilon(1e-6));
    double ftot = adaptive_simpson([&](double t) { return fstar_density(exp1, cexp, t, p); }, 0.0,
                                   hi, 1e-9);
    CHECK(ftot == doctest::Approx(1.0).epsilon(1e-6));

    // gstar * p / g equals alpha(t) = (1 - e^{-t})/t for Exp(1) censoring
    for (double t : {0.5, 1.0, 2.0, 4.0}) {
        double lhs = gstar_density(exp1, cexp, t, p) * p / length_biased_density(exp1, t);
        CHECK(lhs == doctest::Approx((1.0 - std::exp(-t)) / t).epsilon(1e-10));
    }
}

TEST_CASE("no censoring gives p = 1 and gstar = g") {
    LifetimeModel m = LifetimeModel::gamma(2.0, 1.0);
    CensoringModel none = CensoringModel::none();
    double p = p_uncensored(m, none);
    CHECK(p == doctest::Approx(1.0).epsilon(1e-8));
    for (double t : {0.5, 1.5, 3.0})
        CHECK(gstar_density(m, none, t, 1.0) ==
              doctest::Approx(length_biased_density(m, t)).epsilon(1e-10));
    CHECK_THROWS(fstar_density(m, none, 1.0, 1.0));
}

TEST_CASE("multiplicative censoring leaves gstar and fstar unchanged") {
    LifetimeModel m = LifetimeModel::exponential(1.0);
    CensoringModel mult = CensoringModel::multiplicative(0.4, std::numeric_limits<double>::infinity());
    double p = p_uncensored(m, mult);
    CHECK(p == doctest::Approx(0.4).epsilon(1e-8));
    for (double t : {0.3, 1.0, 2.5}) {
        CHECK(gstar_density(m, mult, t, p) ==
              doctest::Approx(length_biased_density(m, t)).epsilon(1e-10));
        CHECK(fstar_density(m, mult, t, p) ==
              doctest::Approx(residual_density(m, t)).epsilon(1e-10));
    }
}

TEST_CASE("all-censoring model is rejected") {
    CHECK_THROWS(CensoringModel::multiplicative(0.0, 1.0));
    CHECK_THROWS(p_uncensored(LifetimeModel::exponential(1.0),
                              CensoringModel::multiplicative(1e-300, 1.0)));
}
