#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "lbsurv/asymptotics.hpp"
#include "lbsurv/distributions.hpp"
#include "lbsurv/estimator.hpp"
#include "lbsurv/simulate.hpp"

using namespace lbsurv;

namespace {

FitResult tight_fit(const std::vector<CohortRecord>& cohort, double tol = 1e-12) {
    FitConfig config;
    config.tol = tol;
    config.max_iter = 1000000;
    FitResult fit = fit_npmle(cohort, config);
    REQUIRE(fit.converged);
    return fit;
}

double solve_alpha_level(const CensoringModel& cens, double target) {
    double lo = 1e-9, hi = 1e4;
    for (int i = 0; i < 200; ++i) {
        double mid = 0.5 * (lo + hi);
        (alpha(cens, mid) > target ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

} // namespace

TEST_CASE("alpha and beta") {
    CensoringModel cexp = CensoringModel::exponential(1.0);
    CHECK(alpha(cexp, 1.0) == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-12));
    CHECK(beta(cexp) == 0.0);

    CensoringModel za = CensoringModel::zero_atom(0.3, 2.0);
    CHECK(beta(za) == doctest::Approx(0.3).epsilon(1e-14));
    CHECK(alpha(za, 1e-6) == doctest::Approx(0.7).epsilon(1e-6));

    Rng rng = make_stream(41, 0);
    std::uniform_real_distribution<double> unif(0.1, 3.0);
    for (int rep = 0; rep < 50; ++rep) {
        CensoringModel m = rep % 2 ? CensoringModel::exponential(unif(rng))
                                   : CensoringModel::zero_atom(0.3 * unif(rng) / 3.0, unif(rng));
        CHECK(alpha(m, 2.0) <= alpha(m, 1.0) + 1e-14);
    }
}

TEST_CASE("membership in J") {
    CHECK(in_J(CensoringModel::exponential(1.0), 5.0)); // beta = 0
    // F_C(t) < 1/2 is sufficient
    CensoringModel za = CensoringModel::zero_atom(0.2, 1.0);
    double t_half = 0.3; // F_C(0.3) = 0.2 + 0.8(1 - e^-0.3) ~ 0.41 < 1/2
    CHECK(za.cdf(t_half) < 0.5);
    CHECK(in_J(za, t_half));
    // beta = 0.01 with F_C(t) = 0.98: (2/0.02 - 1/0.99) * 0.01 < 1
    CensoringModel small = CensoringModel::zero_atom(0.01, 1.0);
    double t98 = -std::log((1.0 - 0.98) / 0.99); // F_C(t98) = 0.98
    CHECK(small.cdf(t98) == doctest::Approx(0.98).epsilon(1e-12));
    CHECK(in_J(small, t98));
}

TEST_CASE("lambda bound") {
    // beta = 0, alpha = 1: no censoring at all
    CHECK(lambda_bound(CensoringModel::none(), 3.0) == doctest::Approx(1.0).epsilon(1e-12));
    // beta = 0, alpha(b) = 1/2 for Uniform(0, b) censoring
    CHECK(lambda_bound(CensoringModel::uniform(1.0), 1.0) == doctest::Approx(3.0).epsilon(1e-12));
    // beta = 0.01, alpha = 0.02
    CensoringModel small = CensoringModel::zero_atom(0.01, 1.0);
    double t = solve_alpha_level(small, 0.02);
    CHECK(alpha(small, t) == doctest::Approx(0.02).epsilon(1e-9));
    double c = 2.0 / 0.02 - 1.0 / 0.99;
    CHECK(lambda_bound(small, t) == doctest::Approx(c / (1.0 - c * 0.01)).epsilon(1e-6));
    CHECK_THROWS(lambda_bound(small, 1e9)); // alpha -> 0, far outside J

    CHECK(lambda_hat(small, t, 0.5, 0.4) ==
          doctest::Approx((0.5 / 0.6) * lambda_bound(small, t)).epsilon(1e-12));
}

TEST_CASE("step censoring curve and exact cell integrals") {
    StepCensCurve curve(StepFunction(1.0, {1.0, 2.0}, {0.5, 0.0}));
    CHECK(curve.cdf(0.5) == 0.0);
    CHECK(curve.cdf(1.0) == doctest::Approx(0.5));
    CHECK(curve.cdf_left(1.0) == 0.0);
    CHECK(curve.cdf_left(1.5) == doctest::Approx(0.5));
    CHECK(curve.cum_survival(1.5) == doctest::Approx(1.25));
    CHECK(curve.cum_survival(3.0) == doctest::Approx(1.5));
    CHECK(curve.alpha_at(2.0) == doctest::Approx(0.75));
    // atoms at 1 and 2 with mass 1/2 each; open interval (0,2) sees only the first
    CHECK(curve.integrate_linear(0.0, 2.0, 1.0, 0.0) == doctest::Approx(0.5));
    CHECK(curve.integrate_linear(0.0, 2.0, 0.0, 1.0) == doctest::Approx(1.0 * 0.5));
    CHECK(curve.integrate_linear(0.0, 2.5, 0.0, 1.0) == doctest::Approx(1.0 * 0.5 + 2.0 * 0.5));

    ModelCensCurve mexp{CensoringModel::exponential(1.0)};
    double a = 0.3, b = 1.7;
    double mass = std::exp(-a) - std::exp(-b);
    double first = (a + 1) * std::exp(-a) - (b + 1) * std::exp(-b);
    CHECK(mexp.integrate_linear(a, b, 1.0, 0.0) == doctest::Approx(mass).epsilon(1e-12));
    CHECK(mexp.integrate_linear(a, b, 0.0, 1.0) == doctest::Approx(first).epsilon(1e-12));
}

TEST_CASE("product-limit censoring estimate") {
    // failure leaves the risk set at 0.25, the remaining subject censors at 0.5
    std::vector<CohortRecord> cohort{{0.25, 0.25, 1}, {0.5, 0.5, 0}};
    StepCensCurve curve = censoring_product_limit(cohort);
    CHECK(curve.cdf(0.3) == 0.0);
    CHECK(curve.cdf_left(0.5) == 0.0);
    CHECK(curve.cdf(0.5) == doctest::Approx(1.0)); // last at risk censored
    // all uncensored: S_C stays 1
    std::vector<CohortRecord> none{{0.5, 0.5, 1}, {1.0, 1.0, 1}};
    StepCensCurve flat = censoring_product_limit(none);
    CHECK(flat.cdf(10.0) == 0.0);
    CHECK(flat.cum_survival(3.0) == doctest::Approx(3.0));
}

TEST_CASE("grid operator basics") {
    Eigen::MatrixXd id = Eigen::MatrixXd::Identity(3, 3);
    GridOperator op({1.0, 2.0, 3.0}, id);
    CHECK(op.operator_norm() == doctest::Approx(1.0));
    CHECK(op.inverse_norm() == doctest::Approx(1.0));
    CHECK(op.condition_estimate() == doctest::Approx(1.0));
    Eigen::VectorXd v(3);
    v << 1, 2, 3;
    CHECK((op.solve(v) - v).cwiseAbs().maxCoeff() == doctest::Approx(0.0));

    Eigen::MatrixXd sing = Eigen::MatrixXd::Zero(2, 2);
    sing(0, 0) = 1.0;
    GridOperator bad({1.0, 2.0}, sing);
    CHECK_THROWS(bad.solve(Eigen::VectorXd::Ones(2)));
}

TEST_CASE("no censoring reduces the operators to the identity") {
    Scenario sc{LifetimeModel::exponential(1.0), CensoringModel::none(), 300, Scheme::I, 51, -1, -1};
    std::vector<CohortRecord> cohort = draw_cohort(sc);
    FitResult fit = tight_fit(cohort);
    double tstar = fit.ghat.support()[250];
    GridOperator fk = build_Fk(cohort, fit, OperatorMode::Oracle, tstar, &sc.lifetime, &sc.censoring);
    Eigen::MatrixXd diff = fk.matrix() - Eigen::MatrixXd::Identity(fk.matrix().rows(), fk.matrix().cols());
    CHECK(diff.cwiseAbs().maxCoeff() < 1e-12);

    LimitInputs in = limit_inputs_truth(sc.lifetime, sc.censoring, fk.grid());
    GridOperator fl = build_F_limit(in, ModelCensCurve(sc.censoring));
    Eigen::MatrixXd diff2 = fl.matrix() - Eigen::MatrixXd::Identity(fl.matrix().rows(), fl.matrix().cols());
    CHECK(diff2.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("norm bounds on the finite-k operator") {
    LifetimeModel exp1 = LifetimeModel::exponential(1.0);
    CensoringModel za = CensoringModel::zero_atom(0.2, 1.0);
    Scenario sc{exp1, za, 2000, Scheme::I, 61, -1, -1};
    std::vector<CohortRecord> cohort = draw_cohort(sc);
    FitResult fit = tight_fit(cohort);

    double tstar = 1.0;
    REQUIRE(in_J(za, tstar));
    double p = p_uncensored(exp1, za);
    GridOperator fk = build_Fk(cohort, fit, OperatorMode::Oracle, tstar, &exp1, &za);

    double bound = std::abs(fit.p_hat - p) / (1.0 - p) + (1.0 - fit.p_hat) / (1.0 - p);
    Rng rng = make_stream(62, 0);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    for (int rep = 0; rep < 100; ++rep) {
        Eigen::VectorXd u(fk.matrix().rows());
        for (Eigen::Index i = 0; i < u.size(); ++i) u[i] = unif(rng);
        double ratio = fk.apply(u).cwiseAbs().maxCoeff() / u.cwiseAbs().maxCoeff();
        CHECK(ratio <= bound + 1e-9);
    }

    double lam_hat = lambda_hat(za, tstar, p, fit.p_hat);
    double denom = 1.0 - lam_hat * std::abs(fit.p_hat - p) / (1.0 - p);
    REQUIRE(denom > 0);
    double inv_bound = lam_hat / denom;
    CHECK(fk.inverse_norm_estimate(100, rng) <= inv_bound * 1.05);
}

TEST_CASE("master equation is an identity") {
    LifetimeModel exp1 = LifetimeModel::exponential(1.0);

    // p = 1: reduces to U = W_X
    Scenario plain{exp1, CensoringModel::none(), 150, Scheme::I, 71, -1, -1};
    std::vector<CohortRecord> pc = draw_cohort(plain);
    MasterCheck trivial = master_residual(pc, tight_fit(pc, 1e-14), exp1, plain.censoring);
    CHECK(trivial.residual < 1e-10);
    CHECK(trivial.p_truth == doctest::Approx(1.0));

    CensoringModel cexp = CensoringModel::exponential(1.0);
    for (int k : {50, 120}) {
        Scenario sc{exp1, cexp, k, Scheme::I, 72, -1, -1};
        std::vector<CohortRecord> cohort = draw_cohort(sc);
        MasterCheck check = master_residual(cohort, tight_fit(cohort, 1e-14), exp1, cexp);
        CHECK(check.residual <= 1e-8);
        CHECK(check.grid_size > 0);
    }
}

TEST_CASE("finite-k operator approaches the limit operator") {
    LifetimeModel exp1 = LifetimeModel::exponential(1.0);
    CensoringModel cexp = CensoringModel::exponential(1.0);
    double tstar = 2.0;
    auto discrepancy = [&](int k, std::uint64_t seed) {
        Scenario sc{exp1, cexp, k, Scheme::I, seed, -1, -1};
        std::vector<CohortRecord> cohort = draw_cohort(sc);
        FitResult fit = tight_fit(cohort);
        GridOperator fk = build_Fk(cohort, fit, OperatorMode::Oracle, tstar, &exp1, &cexp);
        LimitInputs in = limit_inputs_truth(exp1, cexp, fk.grid());
        GridOperator fl = build_F_limit(in, ModelCensCurve(cexp));
        Eigen::VectorXd u(fk.matrix().rows());
        for (Eigen::Index i = 0; i < u.size(); ++i) u[i] = std::sin(fk.grid()[static_cast<std::size_t>(i)]);
        return (fk.apply(u) - fl.apply(u)).cwiseAbs().maxCoeff();
    };
    auto median3 = [&](int k) {
        std::vector<double> d{discrepancy(k, 81), discrepancy(k, 82), discrepancy(k, 83)};
        std::sort(d.begin(), d.end());
        return d[1];
    };
    CHECK(median3(3200) < median3(200));
}

TEST_CASE("multiplicative censoring collapses the limit operator to p I + (1-p) A_f") {
    LifetimeModel exp1 = LifetimeModel::exponential(1.0);
    std::vector<double> grid;
    for (int i = 1; i <= 60; ++i) grid.push_back(0.05 * i);
    double inf = std::numeric_limits<double>::infinity();

    auto a_part = [&](double p) {
        CensoringModel mult = CensoringModel::multiplicative(p, inf);
        LimitInputs in = limit_inputs_truth(exp1, mult, grid);
        GridOperator op = build_F_limit(in, ModelCensCurve(mult));
        Eigen::MatrixXd id = Eigen::MatrixXd::Identity(op.matrix().rows(), op.matrix().cols());
        return Eigen::MatrixXd((op.matrix() - p * id) / (1.0 - p));
    };
    Eigen::MatrixXd a1 = a_part(0.7);
    Eigen::MatrixXd a2 = a_part(0.3);
    CHECK((a1 - a2).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("limit process simulation") {
    LifetimeModel exp1 = LifetimeModel::exponential(1.0);

    SUBCASE("p = 1 gives a Brownian bridge in G") {
        std::vector<double> grid;
        for (int i = 1; i <= 40; ++i) grid.push_back(0.1 * i);
        LimitInputs in = limit_inputs_truth(exp1, CensoringModel::none(), grid);
        GridOperator op = build_F_limit(in, ModelCensCurve(CensoringModel::none()));
        Rng rng = make_stream(91, 0);
        Eigen::MatrixXd paths = simulate_limit(op, in, Scheme::I, 4000, rng);
        for (std::size_t i : {10u, 20u, 30u}) {
            Eigen::Index col = static_cast<Eigen::Index>(i);
            double mean = paths.col(col).mean();
            double var = (paths.col(col).array() - mean).square().sum() / (paths.rows() - 1);
            double g = in.G[i];
            CHECK(std::abs(var - g * (1.0 - g)) < 0.10 * g * (1.0 - g));
            double se = std::sqrt(var / static_cast<double>(paths.rows()));
            CHECK(std::abs(mean) < 4.0 * se);
        }
    }

    SUBCASE("scheme ii V has no extra drift variance") {
        CensoringModel cexp = CensoringModel::exponential(1.0);
        std::vector<double> grid;
        for (int i = 1; i <= 30; ++i) grid.push_back(0.1 * i);
        LimitInputs in = limit_inputs_truth(exp1, cexp, grid);
        Rng r1 = make_stream(92, 0), r2 = make_stream(92, 1);
        const int n = 4000;
        Eigen::MatrixXd v1(n, 30), v2(n, 30);
        for (int s = 0; s < n; ++s) {
            v1.row(s) = compose_V(in, Scheme::I, r1).transpose();
            v2.row(s) = compose_V(in, Scheme::II, r2).transpose();
        }
        for (Eigen::Index c = 0; c < 30; ++c) {
            double var_i = (v1.col(c).array() - v1.col(c).mean()).square().sum() / (n - 1);
            double var_ii = (v2.col(c).array() - v2.col(c).mean()).square().sum() / (n - 1);
            CHECK(var_ii <= var_i * 1.10 + 0.01);
        }
    }

    SUBCASE("scheme iii refuses p <= 0.59") {
        CensoringModel mult = CensoringModel::multiplicative(0.5, std::numeric_limits<double>::infinity());
        std::vector<double> grid{0.5, 1.0, 1.5};
        LimitInputs in = limit_inputs_truth(exp1, mult, grid);
        Rng rng = make_stream(93, 0);
        CHECK_THROWS(compose_V(in, Scheme::III, rng));
        CensoringModel ok = CensoringModel::multiplicative(0.7, std::numeric_limits<double>::infinity());
        LimitInputs in2 = limit_inputs_truth(exp1, ok, grid);
        CHECK_NOTHROW(compose_V(in2, Scheme::III, rng));
    }
}

TEST_CASE("band grid construction") {
    std::vector<double> support{0.5, 1.0, 2.0, 5.0};
    std::vector<double> grid = band_grid(support, 2.5, 200);
    CHECK(grid.size() >= 200);
    double prev = 0.0;
    for (double s : grid) {
        CHECK(s > prev);
        prev = s;
    }
    CHECK(std::find(grid.begin(), grid.end(), 2.0) != grid.end());
    CHECK(grid.back() <= 2.5);
    CHECK_THROWS(band_grid(support, 0.1, 10));
}

TEST_CASE("confidence bands") {
    LifetimeModel exp1 = LifetimeModel::exponential(1.0);

    SUBCASE("invariants and plugin mode") {
        Scenario sc{exp1, CensoringModel::exponential(1.0), 400, Scheme::I, 95, -1, -1};
        std::vector<CohortRecord> cohort = draw_cohort(sc);
        FitResult fit = tight_fit(cohort);
        BandResult band = confidence_band(fit, cohort, 0.95, OperatorMode::Plugin, 500, 7);
        for (std::size_t i = 0; i < band.grid.size(); ++i) {
            CHECK(band.lo_G[i] >= 0.0);
            CHECK(band.hi_G[i] <= 1.0);
            CHECK(band.lo_G[i] <= band.G[i]);
            CHECK(band.G[i] <= band.hi_G[i]);
            CHECK(band.lo_S[i] <= band.S_U[i]);
            CHECK(band.S_U[i] <= band.hi_S[i]);
            CHECK(band.se[i] >= 0.0);
        }
    }

    SUBCASE("p = 1 bands match classical empirical-cdf bands") {
        Scenario sc{exp1, CensoringModel::none(), 3000, Scheme::I, 96, -1, -1};
        std::vector<CohortRecord> cohort = draw_cohort(sc);
        FitResult fit = tight_fit(cohort);
        BandResult band = confidence_band(fit, cohort, 0.95, OperatorMode::Oracle, 2000, 8, 0.0,
                                          &sc.lifetime, &sc.censoring);
        std::size_t mid = band.grid.size() / 2;
        double g = band.G[mid];
        double classical = 2.0 * 1.959964 * std::sqrt(g * (1.0 - g) / 3000.0);
        double width = band.hi_G[mid] - band.lo_G[mid];
        CHECK(std::abs(width - classical) / classical < 0.10);
    }

    SUBCASE("width shrinks like 1/sqrt(k)") {
        auto width_at = [&](int k, std::uint64_t seed) {
            Scenario sc{exp1, CensoringModel::exponential(1.0), k, Scheme::I, seed, -1, -1};
            std::vector<CohortRecord> cohort = draw_cohort(sc);
            FitResult fit = tight_fit(cohort);
            BandResult band = confidence_band(fit, cohort, 0.95, OperatorMode::Oracle, 1000, 9, 1.0,
                                              &sc.lifetime, &sc.censoring);
            std::size_t mid = band.grid.size() / 2;
            return band.hi_G[mid] - band.lo_G[mid];
        };
        double ratio = width_at(4000, 97) / width_at(1000, 98);
        CHECK(ratio == doctest::Approx(0.5).epsilon(0.2));
    }
}
