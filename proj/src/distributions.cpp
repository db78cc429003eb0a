#include "lbsurv/distributions.hpp"

#include <cmath>
#include <stdexcept>

#include "lbsurv/quadrature.hpp"

namespace lbsurv {

double length_biased_density(const LifetimeModel& model, double x) {
    double mu = model.mean();
    if (!std::isfinite(mu) || mu <= 0) throw std::invalid_argument("lifetime model has invalid mean");
    if (x <= 0) return 0.0;
    return x * model.density(x) / mu;
}

double residual_density(const LifetimeModel& model, double t) {
    if (t < 0) return 0.0;
    return model.survival(t) / model.mean();
}

double residual_density(const MassFunction& g, double t) {
    if (t < 0) t = 0.0;
    return g.tail_over_t(t);
}

double p_uncensored(const LifetimeModel& model, const CensoringModel& cens) {
    double upper = upper_support_bound(model);
    if (cens.family() == CensoringFamily::None) return 1.0;
    // multiplicative censoring has alpha(x) constant below tau, so p is exact
    // whenever tau covers the lifetime support
    if (cens.family() == CensoringFamily::Multiplicative && cens.params()[1] >= upper) {
        double p = cens.params()[0];
        if (p <= 1e-12) throw std::invalid_argument("censoring model censors everything (p = 0)");
        return p;
    }
    auto integrand = [&](double x) {
        if (x <= 0) return 0.0;
        double alpha = cens.cum_survival(x) / x;
        return alpha * length_biased_density(model, x);
    };
    double p = adaptive_simpson(integrand, 0.0, upper, 1e-8);
    if (p <= 1e-12) throw std::invalid_argument("censoring model censors everything (p = 0)");
    return std::min(p, 1.0);
}

double gstar_density(const LifetimeModel& model, const CensoringModel& cens, double t, double p) {
    if (t <= 0) return 0.0;
    double alpha = cens.cum_survival(t) / t;
    return length_biased_density(model, t) * alpha / p;
}

double gstar_density(const LifetimeModel& model, const CensoringModel& cens, double t) {
    return gstar_density(model, cens, t, p_uncensored(model, cens));
}

double fstar_density(const LifetimeModel& model, const CensoringModel& cens, double t, double p) {
    if (p >= 1.0 - 1e-14) throw std::invalid_argument("no censored subpopulation (p = 1)");
    if (t <= 0) return 0.0;
    return model.survival(t) * cens.cdf(t) / (model.mean() * (1.0 - p));
}

double fstar_density(const LifetimeModel& model, const CensoringModel& cens, double t) {
    return fstar_density(model, cens, t, p_uncensored(model, cens));
}

} // namespace lbsurv
