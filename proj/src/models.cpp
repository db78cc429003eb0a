#include "lbsurv/models.hpp"

#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace lbsurv {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

void require(bool cond, const char* msg) {
    if (!cond) throw std::invalid_argument(msg);
}
} // namespace

LifetimeModel::LifetimeModel(LifetimeFamily family, std::vector<double> params)
    : family_(family), params_(std::move(params)) {
    switch (family_) {
        case LifetimeFamily::Exponential:
            require(params_.size() == 1 && params_[0] > 0, "exponential lifetime: rate > 0 required");
            break;
        case LifetimeFamily::Weibull:
        case LifetimeFamily::Gamma:
            require(params_.size() == 2 && params_[0] > 0 && params_[1] > 0,
                    "two positive parameters required");
            break;
    }
}

double LifetimeModel::density(double x) const {
    if (x < 0) return 0.0;
    switch (family_) {
        case LifetimeFamily::Exponential: {
            double r = params_[0];
            return r * std::exp(-r * x);
        }
        case LifetimeFamily::Weibull: {
            double k = params_[0], lam = params_[1];
            if (x == 0) return k > 1 ? 0.0 : (k == 1 ? 1.0 / lam : kInf);
            double z = x / lam;
            return (k / lam) * std::pow(z, k - 1) * std::exp(-std::pow(z, k));
        }
        case LifetimeFamily::Gamma: {
            double a = params_[0], r = params_[1];
            if (x == 0) return a > 1 ? 0.0 : (a == 1 ? r : kInf);
            return std::pow(r, a) * std::pow(x, a - 1) * std::exp(-r * x) / std::tgamma(a);
        }
    }
    return 0.0;
}

double LifetimeModel::cdf(double x) const {
    if (x <= 0) return 0.0;
    switch (family_) {
        case LifetimeFamily::Exponential:
            return -std::expm1(-params_[0] * x);
        case LifetimeFamily::Weibull:
            return -std::expm1(-std::pow(x / params_[1], params_[0]));
        case LifetimeFamily::Gamma:
            return boost::math::gamma_p(params_[0], params_[1] * x);
    }
    return 0.0;
}

double LifetimeModel::mean() const {
    switch (family_) {
        case LifetimeFamily::Exponential:
            return 1.0 / params_[0];
        case LifetimeFamily::Weibull:
            return params_[1] * std::tgamma(1.0 + 1.0 / params_[0]);
        case LifetimeFamily::Gamma:
            return params_[0] / params_[1];
    }
    return 0.0;
}

double LifetimeModel::second_moment() const {
    switch (family_) {
        case LifetimeFamily::Exponential:
            return 2.0 / (params_[0] * params_[0]);
        case LifetimeFamily::Weibull:
            return params_[1] * params_[1] * std::tgamma(1.0 + 2.0 / params_[0]);
        case LifetimeFamily::Gamma:
            return params_[0] * (params_[0] + 1.0) / (params_[1] * params_[1]);
    }
    return 0.0;
}

double LifetimeModel::sample(Rng& rng) const {
    switch (family_) {
        case LifetimeFamily::Exponential:
            return std::exponential_distribution<double>(params_[0])(rng);
        case LifetimeFamily::Weibull:
            return std::weibull_distribution<double>(params_[0], params_[1])(rng);
        case LifetimeFamily::Gamma:
            return std::gamma_distribution<double>(params_[0], 1.0 / params_[1])(rng);
    }
    return 0.0;
}

double LifetimeModel::sample_length_biased(Rng& rng) const {
    // x f_U(x) / mu has an exact representation for each family:
    //   Exponential(r):   Gamma(2, r)
    //   Gamma(a, r):      Gamma(a + 1, r)
    //   Weibull(k, lam):  lam * V^(1/k) with V ~ Gamma(1 + 1/k, 1)
    switch (family_) {
        case LifetimeFamily::Exponential:
            return std::gamma_distribution<double>(2.0, 1.0 / params_[0])(rng);
        case LifetimeFamily::Gamma:
            return std::gamma_distribution<double>(params_[0] + 1.0, 1.0 / params_[1])(rng);
        case LifetimeFamily::Weibull: {
            double k = params_[0], lam = params_[1];
            double v = std::gamma_distribution<double>(1.0 + 1.0 / k, 1.0)(rng);
            return lam * std::pow(v, 1.0 / k);
        }
    }
    return 0.0;
}

double LifetimeModel::length_biased_cdf(double x) const {
    if (x <= 0) return 0.0;
    switch (family_) {
        case LifetimeFamily::Exponential:
            return boost::math::gamma_p(2.0, params_[0] * x);
        case LifetimeFamily::Gamma:
            return boost::math::gamma_p(params_[0] + 1.0, params_[1] * x);
        case LifetimeFamily::Weibull: {
            double k = params_[0], lam = params_[1];
            return boost::math::gamma_p(1.0 + 1.0 / k, std::pow(x / lam, k));
        }
    }
    return 0.0;
}

std::string LifetimeModel::family_name() const {
    switch (family_) {
        case LifetimeFamily::Exponential: return "exponential";
        case LifetimeFamily::Weibull: return "weibull";
        case LifetimeFamily::Gamma: return "gamma";
    }
    return "";
}

CensoringModel::CensoringModel(CensoringFamily family, std::vector<double> params)
    : family_(family), params_(std::move(params)) {
    switch (family_) {
        case CensoringFamily::None:
            require(params_.empty(), "none censoring takes no parameters");
            break;
        case CensoringFamily::Exponential:
            require(params_.size() == 1 && params_[0] > 0, "exponential censoring: rate > 0 required");
            break;
        case CensoringFamily::Uniform:
            require(params_.size() == 1 && params_[0] > 0, "uniform censoring: b > 0 required");
            break;
        case CensoringFamily::ZeroAtom:
            require(params_.size() == 2 && params_[0] >= 0 && params_[0] < 1 && params_[1] > 0,
                    "zero_atom censoring: beta in [0,1) and rate > 0 required");
            break;
        case CensoringFamily::Multiplicative:
            require(params_.size() == 2 && params_[0] > 0 && params_[0] <= 1 && params_[1] > 0,
                    "multiplicative censoring: p in (0,1] and tau > 0 required");
            break;
    }
}

double CensoringModel::cdf(double t) const {
    if (t < 0) return 0.0;
    switch (family_) {
        case CensoringFamily::None:
            return 0.0;
        case CensoringFamily::Exponential:
            return -std::expm1(-params_[0] * t);
        case CensoringFamily::Uniform:
            return t >= params_[0] ? 1.0 : t / params_[0];
        case CensoringFamily::ZeroAtom: {
            double beta = params_[0], r = params_[1];
            return beta - (1.0 - beta) * std::expm1(-r * t);
        }
        case CensoringFamily::Multiplicative:
            return t >= params_[1] ? 1.0 : 1.0 - params_[0];
    }
    return 0.0;
}

double CensoringModel::cdf_left(double t) const {
    if (t <= 0) return 0.0;
    switch (family_) {
        case CensoringFamily::Multiplicative:
            return t > params_[1] ? 1.0 : 1.0 - params_[0];
        default:
            return cdf(t);
    }
}

double CensoringModel::cum_survival(double t) const {
    if (t <= 0) return 0.0;
    switch (family_) {
        case CensoringFamily::None:
            return t;
        case CensoringFamily::Exponential:
            return -std::expm1(-params_[0] * t) / params_[0];
        case CensoringFamily::Uniform: {
            double b = params_[0];
            return t >= b ? 0.5 * b : t - 0.5 * t * t / b;
        }
        case CensoringFamily::ZeroAtom: {
            double beta = params_[0], r = params_[1];
            return -(1.0 - beta) * std::expm1(-r * t) / r;
        }
        case CensoringFamily::Multiplicative:
            return params_[0] * std::min(t, params_[1]);
    }
    return 0.0;
}

std::vector<std::pair<double, double>> CensoringModel::interior_atoms() const {
    if (family_ == CensoringFamily::Multiplicative && std::isfinite(params_[1]) && params_[0] > 0)
        return {{params_[1], params_[0]}};
    return {};
}

double CensoringModel::sample(Rng& rng) const {
    switch (family_) {
        case CensoringFamily::None:
            return kInf;
        case CensoringFamily::Exponential:
            return std::exponential_distribution<double>(params_[0])(rng);
        case CensoringFamily::Uniform:
            return std::uniform_real_distribution<double>(0.0, params_[0])(rng);
        case CensoringFamily::ZeroAtom: {
            double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
            if (u < params_[0]) return 0.0;
            return std::exponential_distribution<double>(params_[1])(rng);
        }
        case CensoringFamily::Multiplicative: {
            double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
            return u < params_[0] ? params_[1] : 0.0;
        }
    }
    return kInf;
}

std::string CensoringModel::family_name() const {
    switch (family_) {
        case CensoringFamily::None: return "none";
        case CensoringFamily::Exponential: return "exponential";
        case CensoringFamily::Uniform: return "uniform";
        case CensoringFamily::ZeroAtom: return "zero_atom";
        case CensoringFamily::Multiplicative: return "multiplicative";
    }
    return "";
}

} // namespace lbsurv
