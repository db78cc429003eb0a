#pragma once

#include <string>
#include <utility>
#include <vector>

#include "lbsurv/rng.hpp"

namespace lbsurv {

enum class LifetimeFamily { Exponential, Weibull, Gamma };

/// Parametric lifetime family for the unbiased failure time.
/// Exponential(rate), Weibull(shape, scale), Gamma(shape, rate).
class LifetimeModel {
public:
    LifetimeModel(LifetimeFamily family, std::vector<double> params);

    static LifetimeModel exponential(double rate) { return {LifetimeFamily::Exponential, {rate}}; }
    static LifetimeModel weibull(double shape, double scale) { return {LifetimeFamily::Weibull, {shape, scale}}; }
    static LifetimeModel gamma(double shape, double rate) { return {LifetimeFamily::Gamma, {shape, rate}}; }

    LifetimeFamily family() const { return family_; }
    const std::vector<double>& params() const { return params_; }

    double density(double x) const;
    double cdf(double x) const;
    double survival(double x) const { return 1.0 - cdf(x); }
    double mean() const;
    double second_moment() const;

    /// Draw from the unbiased density f_U.
    double sample(Rng& rng) const;

    /// Draw from the length-biased density x f_U(x) / mu. Exact gamma-transform
    /// representations exist for all three families, so no rejection loop is needed.
    double sample_length_biased(Rng& rng) const;

    /// CDF of the length-biased distribution (closed form per family).
    double length_biased_cdf(double x) const;

    std::string family_name() const;

private:
    LifetimeFamily family_;
    std::vector<double> params_;
};

enum class CensoringFamily { None, Exponential, Uniform, ZeroAtom, Multiplicative };

/// Residual censoring time distribution F_C on [0, inf).
///   none:            C == +inf, no censoring
///   exponential:     rate lambda
///   uniform:         Uniform on [0, b]
///   zero_atom:       mass beta at 0 plus (1 - beta) * Exponential(rate)
///   multiplicative:  F_C = 1 - p on [0, tau), 1 at tau (tau may be +inf)
class CensoringModel {
public:
    CensoringModel(CensoringFamily family, std::vector<double> params);

    static CensoringModel none() { return {CensoringFamily::None, {}}; }
    static CensoringModel exponential(double rate) { return {CensoringFamily::Exponential, {rate}}; }
    static CensoringModel uniform(double b) { return {CensoringFamily::Uniform, {b}}; }
    static CensoringModel zero_atom(double beta, double rate) { return {CensoringFamily::ZeroAtom, {beta, rate}}; }
    static CensoringModel multiplicative(double p, double tau) { return {CensoringFamily::Multiplicative, {p, tau}}; }

    CensoringFamily family() const { return family_; }
    const std::vector<double>& params() const { return params_; }

    double cdf(double t) const;
    double cdf_left(double t) const;
    double survival(double t) const { return 1.0 - cdf(t); }

    /// Integrated survival  int_0^t S_C(s) ds, closed form per family.
    double cum_survival(double t) const;

    /// beta = F_C(0), the censoring mass at zero.
    double atom_at_zero() const { return cdf(0.0); }

    /// Point masses of F_C located strictly inside (0, inf): (location, mass) pairs.
    std::vector<std::pair<double, double>> interior_atoms() const;

    bool is_multiplicative() const { return family_ == CensoringFamily::Multiplicative; }

    /// Draw a censoring time; may be +inf.
    double sample(Rng& rng) const;

    std::string family_name() const;

private:
    CensoringFamily family_;
    std::vector<double> params_;
};

} // namespace lbsurv
