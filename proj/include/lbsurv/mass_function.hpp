#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace lbsurv {

/// Discrete distribution on strictly ascending positive support points.
/// Immutable after construction; masses are positive and sum to 1 (within 1e-12,
/// renormalized on construction).
class MassFunction {
public:
    MassFunction(std::vector<double> support, std::vector<double> masses);

    const std::vector<double>& support() const { return support_; }
    const std::vector<double>& masses() const { return masses_; }
    std::size_t size() const { return support_.size(); }

    /// Distribution function: sum of masses at points <= t.
    double cdf(double t) const;

    /// Tail sum of w_j / t_j over support points strictly above t.
    /// This is the residual lifetime density f(t) when the mass function is G.
    double tail_over_t(double t) const;

    /// Tail sum of w_j / t_j over support points >= t (left limit of the above).
    double tail_over_t_incl(double t) const;

    /// Largest support point.
    double max_support() const { return support_.back(); }

private:
    std::vector<double> support_;
    std::vector<double> masses_;
};

/// Length-bias transform on discrete masses: w_j -> w_j * t_j, normalized.
MassFunction bias(const MassFunction& f);

/// Inverse transform: w_j -> w_j / t_j, normalized. bias(unbias(g)) == g.
MassFunction unbias(const MassFunction& g);

/// Right-continuous step function: value(t) = values[i] for t in [knots[i], knots[i+1]),
/// initial_value for t < knots[0].
class StepFunction {
public:
    StepFunction(double initial_value, std::vector<double> knots, std::vector<double> values);

    double operator()(double t) const;
    const std::vector<double>& knots() const { return knots_; }
    const std::vector<double>& values() const { return values_; }
    double initial_value() const { return initial_; }

private:
    double initial_;
    std::vector<double> knots_;
    std::vector<double> values_;
};

/// Smallest knot t with S(t) <= 0.5 for a non-increasing survival step function.
double survival_median(const StepFunction& s);

} // namespace lbsurv
