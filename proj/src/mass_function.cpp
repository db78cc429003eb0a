#include "lbsurv/mass_function.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace lbsurv {

MassFunction::MassFunction(std::vector<double> support, std::vector<double> masses)
    : support_(std::move(support)), masses_(std::move(masses)) {
    if (support_.empty() || support_.size() != masses_.size())
        throw std::invalid_argument("MassFunction: support and masses must be nonempty and equal length");
    for (std::size_t i = 0; i < support_.size(); ++i) {
        if (!(support_[i] > 0.0) || !std::isfinite(support_[i]))
            throw std::invalid_argument("MassFunction: support points must be positive and finite");
        if (i > 0 && !(support_[i] > support_[i - 1]))
            throw std::invalid_argument("MassFunction: support must be strictly ascending");
        if (!(masses_[i] >= 0.0) || !std::isfinite(masses_[i]))
            throw std::invalid_argument("MassFunction: masses must be nonnegative and finite");
    }
    double total = std::accumulate(masses_.begin(), masses_.end(), 0.0);
    if (std::abs(total - 1.0) > 1e-12) {
        if (std::abs(total - 1.0) > 1e-6)
            throw std::invalid_argument("MassFunction: masses must sum to 1");
        for (double& m : masses_) m /= total;
    }
}

double MassFunction::cdf(double t) const {
    double s = 0.0;
    for (std::size_t i = 0; i < support_.size() && support_[i] <= t; ++i) s += masses_[i];
    return s;
}

double MassFunction::tail_over_t(double t) const {
    double s = 0.0;
    for (std::size_t i = support_.size(); i-- > 0 && support_[i] > t;) s += masses_[i] / support_[i];
    return s;
}

double MassFunction::tail_over_t_incl(double t) const {
    double s = 0.0;
    for (std::size_t i = support_.size(); i-- > 0 && support_[i] >= t;) s += masses_[i] / support_[i];
    return s;
}

MassFunction bias(const MassFunction& f) {
    std::vector<double> w(f.size());
    double total = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        w[i] = f.masses()[i] * f.support()[i];
        total += w[i];
    }
    for (double& x : w) x /= total;
    return MassFunction(f.support(), w);
}

MassFunction unbias(const MassFunction& g) {
    std::vector<double> w(g.size());
    double total = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        w[i] = g.masses()[i] / g.support()[i];
        total += w[i];
    }
    for (double& x : w) x /= total;
    return MassFunction(g.support(), w);
}

StepFunction::StepFunction(double initial_value, std::vector<double> knots, std::vector<double> values)
    : initial_(initial_value), knots_(std::move(knots)), values_(std::move(values)) {
    if (knots_.size() != values_.size())
        throw std::invalid_argument("StepFunction: knots and values must have equal length");
    if (!std::is_sorted(knots_.begin(), knots_.end()))
        throw std::invalid_argument("StepFunction: knots must be ascending");
}

double StepFunction::operator()(double t) const {
    auto it = std::upper_bound(knots_.begin(), knots_.end(), t);
    if (it == knots_.begin()) return initial_;
    return values_[static_cast<std::size_t>(it - knots_.begin()) - 1];
}

double survival_median(const StepFunction& s) {
    if (s.initial_value() <= 0.5) return 0.0;
    for (std::size_t i = 0; i < s.knots().size(); ++i)
        if (s.values()[i] <= 0.5) return s.knots()[i];
    return std::numeric_limits<double>::infinity();
}

} // namespace lbsurv
