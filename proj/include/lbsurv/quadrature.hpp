#pragma once

#include <functional>

namespace lbsurv {
class LifetimeModel;

/// Adaptive Simpson integration of f over [a, b] to absolute tolerance tol.
double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol);

/// Upper truncation point T with lifetime survival S_U(T) below eps; used to
/// reduce integrals over [0, inf) involving the lifetime density to [0, T].
double upper_support_bound(const LifetimeModel& model, double eps = 1e-14);

} // namespace lbsurv
