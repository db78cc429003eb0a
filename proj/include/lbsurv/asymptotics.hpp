#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "lbsurv/estimator.hpp"
#include "lbsurv/models.hpp"
#include "lbsurv/simulate.hpp"

namespace lbsurv {

/// alpha(t) = (1/t) int_0^t S_C, evaluated from the family's closed-form
/// integrated survival; alpha(0+) = 1 - beta.
double alpha(const CensoringModel& cens, double t);

/// beta = F_C(0), censoring mass at zero.
double beta(const CensoringModel& cens);

/// t belongs to the set J: (2/alpha(t) - 1/(1-beta)) * beta < 1.
bool in_J(const CensoringModel& cens, double t);

/// lambda(t) = (2/alpha - 1/(1-beta)) / (1 - (2/alpha - 1/(1-beta)) beta).
double lambda_bound(const CensoringModel& cens, double t);

/// Finite-k inverse-norm bound factor: ((1-p)/(1-p_hat)) * lambda(t).
double lambda_hat(const CensoringModel& cens, double t, double p, double p_hat);

/// Censoring distribution as seen by the operator machinery: only the cdf (with
/// left limits) and the integrated survival are needed; cell integrals of
/// linear integrands follow exactly by parts.
class CensCurve {
public:
    virtual ~CensCurve() = default;
    virtual double cdf(double t) const = 0;
    virtual double cdf_left(double t) const = 0;
    virtual double cum_survival(double t) const = 0;

    double alpha_at(double t) const;

    /// int over the open interval (a,b) of (c0 + c1 y) dF_C(y), exact:
    /// c0 (F(b-) - F(a)) + c1 (b F(b-) - a F(a) - int_a^b F dy).
    double integrate_linear(double a, double b, double c0, double c1) const;
};

class ModelCensCurve final : public CensCurve {
public:
    explicit ModelCensCurve(CensoringModel model) : model_(std::move(model)) {}
    double cdf(double t) const override { return model_.cdf(t); }
    double cdf_left(double t) const override { return model_.cdf_left(t); }
    double cum_survival(double t) const override { return model_.cum_survival(t); }

private:
    CensoringModel model_;
};

/// Step survival curve (e.g. a product-limit estimate of S_C).
class StepCensCurve final : public CensCurve {
public:
    explicit StepCensCurve(StepFunction survival);
    double cdf(double t) const override;
    double cdf_left(double t) const override;
    double cum_survival(double t) const override;

private:
    StepFunction surv_;
    std::vector<double> cum_; // integrated survival at each knot
};

/// Product-limit estimate of the residual censoring survival S_C from the
/// pairs (v, 1 - delta): censoring is the event, failures censor it.
StepCensCurve censoring_product_limit(const std::vector<CohortRecord>& cohort);

/// Dense discretization of a linear operator acting on step functions over a
/// fixed grid (values at grid points). Immutable after build.
class GridOperator {
public:
    GridOperator(std::vector<double> grid, Eigen::MatrixXd mat);

    const std::vector<double>& grid() const { return grid_; }
    const Eigen::MatrixXd& matrix() const { return mat_; }
    std::size_t size() const { return grid_.size(); }

    Eigen::VectorXd apply(const Eigen::VectorXd& u) const { return mat_ * u; }
    Eigen::VectorXd solve(const Eigen::VectorXd& v) const;

    /// Induced sup-norm: max absolute row sum.
    double operator_norm() const;
    /// Exact sup-norm of the inverse (via the computed inverse).
    double inverse_norm() const;
    /// Monte Carlo lower estimate: max ||solve(v)|| over random unit-norm v.
    double inverse_norm_estimate(int samples, Rng& rng) const;
    /// ||A|| * ||A^-1|| in the sup norm.
    double condition_estimate() const;

private:
    void ensure_lu() const;
    std::vector<double> grid_;
    Eigen::MatrixXd mat_;
    mutable std::optional<Eigen::PartialPivLU<Eigen::MatrixXd>> lu_;
    mutable std::optional<Eigen::MatrixXd> inv_;
};

/// Raw ingredients of the discretized operator
///   u -> diag*u + cg1 * int alpha du + cg2 * int yI_u(y) d[(f(t)/f(y)-1) F_C(y)].
/// fcell[i] is the step value of f on [s_i, s_{i+1}) with s_0 = 0 (so fcell has
/// grid.size()+1 entries and fcell[0] = f(0)); all but the last must be > 0.
struct OperatorSpec {
    std::vector<double> grid;
    std::vector<double> fcell;
    std::vector<double> alpha;
    double diag = 0.0;
    double coef_g1 = 1.0;
    double coef_g2 = 1.0;
};

GridOperator build_operator(const OperatorSpec& spec, const CensCurve& cens);

/// Step values of the residual density of g on the cells induced by grid:
/// entry i is sum over support points strictly above s_i of w/t (s_0 = 0).
std::vector<double> fcell_values(const MassFunction& g, const std::vector<double>& grid);

/// Self-consistent step-function truth on a grid: masses gamma from the true
/// length-biased cdf with the upper tail lumped at the last grid point, and
/// G*, F*, f, p all *defined* from gamma so that relations (length-bias,
/// uncensored-subpopulation, censored-residual) hold exactly in the discrete
/// world. This is what makes the master equation an exact identity.
struct DiscreteTruth {
    std::vector<double> grid;
    std::vector<double> gamma;
    std::vector<double> alpha;
    std::vector<double> G;
    std::vector<double> Gstar;
    std::vector<double> Fstar;
    std::vector<double> fcell;
    double p = 1.0;
};

DiscreteTruth discretize_truth(const LifetimeModel& lifetime, const CensoringModel& cens,
                               std::vector<double> grid);

/// Continuum truth (or plug-in estimates) evaluated at grid points, for the
/// limit operator and the Gaussian limit process.
struct LimitInputs {
    std::vector<double> grid;
    std::vector<double> alpha;
    std::vector<double> fcell;  // size grid+1, see OperatorSpec
    std::vector<double> G;
    std::vector<double> Gstar;
    std::vector<double> Fstar;
    std::vector<double> Flife;  // residual-lifetime cdf, used by scheme iii
    double p = 1.0;
};

LimitInputs limit_inputs_truth(const LifetimeModel& lifetime, const CensoringModel& cens,
                               const std::vector<double>& grid);
LimitInputs limit_inputs_plugin(const FitResult& fit, const std::vector<CohortRecord>& cohort,
                                const std::vector<double>& grid);

/// Distinct support points up to tstar, augmented to at least min_points by
/// splitting the largest gaps.
std::vector<double> band_grid(const std::vector<double>& support, double tstar,
                              std::size_t min_points = 200);

enum class OperatorMode { Oracle, Plugin };

/// Finite-k operator H_k + G_{k,1} + G_{k,2} on the grid up to tstar.
/// Oracle mode takes the generating models (true p, alpha, censoring cdf);
/// plugin mode substitutes p_hat and the product-limit censoring estimate.
GridOperator build_Fk(const std::vector<CohortRecord>& cohort, const FitResult& fit,
                      OperatorMode mode, double tstar,
                      const LifetimeModel* lifetime = nullptr,
                      const CensoringModel* cens = nullptr);

/// Limit operator G_1 + G_2 from truth or plug-in inputs.
GridOperator build_F_limit(const LimitInputs& inputs, const CensCurve& cens);

struct MasterCheck {
    double residual = 0.0;
    double p_hat = 0.0;
    double p_truth = 0.0;
    std::size_t grid_size = 0;
};

/// Sup over the observed support of |F_k(U)(t) - V(t)| with the step-function
/// truth of discretize_truth; an algebraic identity, so the result is at
/// numerical round-off scale when the fit is tight.
MasterCheck master_residual(const std::vector<CohortRecord>& cohort, const FitResult& fit,
                            const LifetimeModel& lifetime, const CensoringModel& cens);

/// One draw of the limit process V on the grid (two Brownian bridges plus an
/// independent normal; scheme ii drops the normal, scheme iii uses (G, F)).
Eigen::VectorXd compose_V(const LimitInputs& inputs, Scheme scheme, Rng& rng);

/// Paths of U = F^{-1}(V); rows are paths. Scheme iii requires p > 0.59.
Eigen::MatrixXd simulate_limit(const GridOperator& op, const LimitInputs& inputs, Scheme scheme,
                               int paths, Rng& rng);

struct BandResult {
    std::vector<double> grid;
    std::vector<double> G;
    std::vector<double> se;
    std::vector<double> lo_G;
    std::vector<double> hi_G;
    std::vector<double> S_U;
    std::vector<double> lo_S;
    std::vector<double> hi_S;
    int paths = 0;
};

/// Pointwise level-confidence band for G (and for S_U by pushing each
/// simulated perturbation through the unbias transform). tstar <= 0 selects
/// the 0.9 quantile of ghat. Oracle mode requires the generating models.
BandResult confidence_band(const FitResult& fit, const std::vector<CohortRecord>& cohort,
                           double level, OperatorMode mode, int paths = 2000,
                           std::uint64_t seed = 0, double tstar = 0.0,
                           const LifetimeModel* lifetime = nullptr,
                           const CensoringModel* cens = nullptr, Scheme scheme = Scheme::I);

} // namespace lbsurv
