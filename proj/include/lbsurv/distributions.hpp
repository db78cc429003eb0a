#pragma once

#include "lbsurv/mass_function.hpp"
#include "lbsurv/models.hpp"

namespace lbsurv {

/// Length-biased density g(x) = x f_U(x) / mu_U; zero for x <= 0.
double length_biased_density(const LifetimeModel& model, double x);

/// Residual lifetime density of the model: f(t) = S_U(t) / mu_U.
double residual_density(const LifetimeModel& model, double t);

/// Residual lifetime density of a discrete G: sum over support points above t of w_j / t_j.
double residual_density(const MassFunction& g, double t);

/// p = P(R <= C), computed as the integral of alpha(x) against g
/// by adaptive quadrature (tolerance 1e-8). Throws if the model censors everything.
double p_uncensored(const LifetimeModel& model, const CensoringModel& cens);

/// Density of the observed failure time among uncensored subjects:
/// g*(t) = g(t) * alpha(t) / p with alpha(t) = t^{-1} int_0^t S_C.
double gstar_density(const LifetimeModel& model, const CensoringModel& cens, double t);
double gstar_density(const LifetimeModel& model, const CensoringModel& cens, double t, double p);

/// Density of the observed censoring time among censored subjects:
/// f*(t) = S_U(t) F_C(t) / (mu_U (1 - p)). Throws when p == 1.
double fstar_density(const LifetimeModel& model, const CensoringModel& cens, double t);
double fstar_density(const LifetimeModel& model, const CensoringModel& cens, double t, double p);

} // namespace lbsurv
