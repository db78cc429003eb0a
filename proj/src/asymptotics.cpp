#include "lbsurv/asymptotics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "lbsurv/distributions.hpp"
#include "lbsurv/quadrature.hpp"

namespace lbsurv {

double alpha(const CensoringModel& cens, double t) {
    if (!(t > 0)) throw std::invalid_argument("alpha: t > 0 required");
    return cens.cum_survival(t) / t;
}

double beta(const CensoringModel& cens) { return cens.atom_at_zero(); }

namespace {
double lambda_core(double a, double b) {
    // (2/alpha - 1/(1-beta)) and the induced bound; caller checks membership in J
    return 2.0 / a - 1.0 / (1.0 - b);
}
} // namespace

bool in_J(const CensoringModel& cens, double t) {
    double b = beta(cens);
    if (b >= 1.0) return false;
    return lambda_core(alpha(cens, t), b) * b < 1.0;
}

double lambda_bound(const CensoringModel& cens, double t) {
    if (!in_J(cens, t)) throw std::invalid_argument("lambda_bound: t outside the set J");
    double b = beta(cens);
    double c = lambda_core(alpha(cens, t), b);
    return c / (1.0 - c * b);
}

double lambda_hat(const CensoringModel& cens, double t, double p, double p_hat) {
    if (p_hat >= 1.0) throw std::invalid_argument("lambda_hat: p_hat < 1 required");
    return (1.0 - p) / (1.0 - p_hat) * lambda_bound(cens, t);
}

double CensCurve::alpha_at(double t) const {
    return t > 0 ? cum_survival(t) / t : 1.0 - cdf(0.0);
}

double CensCurve::integrate_linear(double a, double b, double c0, double c1) const {
    if (!(b > a)) return 0.0;
    double fb = cdf_left(b);
    double fa = cdf(a);
    double int_f = (b - a) - (cum_survival(b) - cum_survival(a));
    return c0 * (fb - fa) + c1 * (b * fb - a * fa - int_f);
}

StepCensCurve::StepCensCurve(StepFunction survival) : surv_(std::move(survival)) {
    const auto& kn = surv_.knots();
    cum_.resize(kn.size());
    double acc = kn.empty() ? 0.0 : kn.front() * surv_.initial_value();
    for (std::size_t i = 0; i < kn.size(); ++i) {
        if (i > 0) acc += (kn[i] - kn[i - 1]) * surv_.values()[i - 1];
        cum_[i] = acc;
    }
}

double StepCensCurve::cdf(double t) const { return 1.0 - surv_(t); }

double StepCensCurve::cdf_left(double t) const {
    const auto& kn = surv_.knots();
    auto it = std::lower_bound(kn.begin(), kn.end(), t); // first knot >= t
    if (it == kn.begin()) return 1.0 - surv_.initial_value();
    return 1.0 - surv_.values()[static_cast<std::size_t>(it - kn.begin()) - 1];
}

double StepCensCurve::cum_survival(double t) const {
    if (t <= 0) return 0.0;
    const auto& kn = surv_.knots();
    auto it = std::upper_bound(kn.begin(), kn.end(), t); // first knot > t
    if (it == kn.begin()) return t * surv_.initial_value();
    std::size_t i = static_cast<std::size_t>(it - kn.begin()) - 1;
    return cum_[i] + (t - kn[i]) * surv_.values()[i];
}

StepCensCurve censoring_product_limit(const std::vector<CohortRecord>& cohort) {
    if (cohort.empty()) throw std::invalid_argument("censoring_product_limit: empty cohort");
    std::vector<std::pair<double, int>> obs; // (v, censoring observed)
    obs.reserve(cohort.size());
    for (const auto& rec : cohort) obs.emplace_back(rec.v, 1 - rec.delta);
    std::sort(obs.begin(), obs.end());

    std::vector<double> knots, values;
    double s = 1.0;
    std::size_t i = 0;
    long at_risk = static_cast<long>(obs.size());
    while (i < obs.size()) {
        double t = obs[i].first;
        long events = 0, leaving = 0;
        while (i < obs.size() && obs[i].first == t) {
            events += obs[i].second;
            ++leaving;
            ++i;
        }
        if (events > 0) s *= 1.0 - static_cast<double>(events) / static_cast<double>(at_risk);
        knots.push_back(t);
        values.push_back(s);
        at_risk -= leaving;
    }
    return StepCensCurve(StepFunction(1.0, std::move(knots), std::move(values)));
}

GridOperator::GridOperator(std::vector<double> grid, Eigen::MatrixXd mat)
    : grid_(std::move(grid)), mat_(std::move(mat)) {
    if (grid_.empty() || mat_.rows() != static_cast<Eigen::Index>(grid_.size()) ||
        mat_.cols() != mat_.rows())
        throw std::invalid_argument("GridOperator: square matrix matching the grid required");
}

void GridOperator::ensure_lu() const {
    if (lu_) return;
    lu_.emplace(mat_);
    // rcond() can miss exact singularity, so also inspect the LU pivots.
    Eigen::VectorXd piv = lu_->matrixLU().diagonal().cwiseAbs();
    double pivot_ratio = piv.maxCoeff() > 0 ? piv.minCoeff() / piv.maxCoeff() : 0.0;
    if (!(lu_->rcond() > 1e-14) || !(pivot_ratio > 1e-14)) {
        double rc = std::min(lu_->rcond(), pivot_ratio);
        double cond = rc > 0 ? 1.0 / rc : std::numeric_limits<double>::infinity();
        lu_.reset();
        throw std::runtime_error("GridOperator: singular coefficient table (condition estimate " +
                                 std::to_string(cond) + ")");
    }
}

Eigen::VectorXd GridOperator::solve(const Eigen::VectorXd& v) const {
    ensure_lu();
    return lu_->solve(v);
}

double GridOperator::operator_norm() const {
    return mat_.cwiseAbs().rowwise().sum().maxCoeff();
}

double GridOperator::inverse_norm() const {
    ensure_lu();
    if (!inv_) inv_ = lu_->inverse();
    return inv_->cwiseAbs().rowwise().sum().maxCoeff();
}

double GridOperator::inverse_norm_estimate(int samples, Rng& rng) const {
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    double best = 0.0;
    Eigen::VectorXd v(mat_.rows());
    for (int s = 0; s < samples; ++s) {
        for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = unif(rng);
        double norm = v.cwiseAbs().maxCoeff();
        if (norm <= 0) continue;
        best = std::max(best, solve(v).cwiseAbs().maxCoeff() / norm);
    }
    return best;
}

double GridOperator::condition_estimate() const { return operator_norm() * inverse_norm(); }

namespace {

struct CellTables {
    // F_C integrals over open cells (s_i, s_{i+1}) with s_0 = 0
    std::vector<double> A;   // int dF_C
    std::vector<double> B;   // int y dF_C
    std::vector<double> cd;  // cdf at grid points (index 1..N, 0 unused)
    std::vector<double> cl;  // left-limit cdf at grid points
};

CellTables make_cell_tables(const std::vector<double>& s, const CensCurve& cens) {
    std::size_t n = s.size();
    CellTables t;
    t.A.resize(n);
    t.B.resize(n);
    t.cd.resize(n + 1, 0.0);
    t.cl.resize(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double lo = i == 0 ? 0.0 : s[i - 1];
        t.A[i] = cens.integrate_linear(lo, s[i], 1.0, 0.0);
        t.B[i] = cens.integrate_linear(lo, s[i], 0.0, 1.0);
        t.cd[i + 1] = cens.cdf(s[i]);
        t.cl[i + 1] = cens.cdf_left(s[i]);
    }
    return t;
}

// Apply diag*u + cg1 * int alpha du + cg2 * G2(u) at every grid point; O(N).
// See OperatorSpec for conventions: u is a step function with values u[l] on
// [s_l, s_{l+1}), zero before s_1, and constant u[N] beyond s_N.
Eigen::VectorXd apply_spec(const OperatorSpec& spec, const CellTables& tab, const Eigen::VectorXd& u) {
    const auto& s = spec.grid;
    const auto& f = spec.fcell; // f[i] on cell [s_i, s_{i+1}), f[0] on (0, s_1)
    std::size_t n = s.size();

    // Tail sums C_i of the inner integral beyond the current cell.
    std::vector<double> c(n, 0.0);
    c[n - 1] = u[static_cast<Eigen::Index>(n) - 1] / s[n - 1];
    for (std::size_t i = n - 1; i-- > 0;)
        c[i] = c[i + 1] + u[static_cast<Eigen::Index>(i)] * (1.0 / s[i] - 1.0 / s[i + 1]);

    // y * int_{y<=z} u(z)/z^2 dz at grid points; continuous across cells, and
    // from the left-hand cell the value collapses to s_l * C_{l-1}.
    std::vector<double> yi(n + 1, 0.0);
    for (std::size_t l = 1; l <= n; ++l) yi[l] = s[l - 1] * c[l - 1];

    Eigen::VectorXd out(n);
    double g1 = 0.0, p_cum = 0.0, q_cum = 0.0, u_prev = 0.0;
    for (std::size_t l = 1; l <= n; ++l) {
        double ul = u[static_cast<Eigen::Index>(l) - 1];
        g1 += spec.alpha[l - 1] * (ul - u_prev);
        u_prev = ul;

        // cell (s_{l-1}, s_l): integrand a + b*y with a = u_{l-1}, b = C - u_{l-1}/s_l
        double a_cell = l == 1 ? 0.0 : u[static_cast<Eigen::Index>(l) - 2];
        double b_cell = c[l - 1] - a_cell / s[l - 1];
        double cell = a_cell * tab.A[l - 1] + b_cell * tab.B[l - 1];
        p_cum += cell / f[l - 1];
        q_cum += cell;
        if (l >= 2) {
            // interior atom of the bracket at s_{l-1}
            p_cum += yi[l - 1] * (tab.cd[l - 1] / f[l - 1] - tab.cl[l - 1] / f[l - 2]);
            q_cum += yi[l - 1] * (tab.cd[l - 1] - tab.cl[l - 1]);
        }
        // atom at the evaluation point s_l itself, with f(t)/f(t) := 1
        double tail_atom = yi[l] * tab.cl[l] * (1.0 - f[l] / f[l - 1]);
        double g2 = f[l] * p_cum - q_cum + tail_atom;
        out[static_cast<Eigen::Index>(l) - 1] = spec.diag * ul + spec.coef_g1 * g1 + spec.coef_g2 * g2;
    }
    return out;
}

} // namespace

GridOperator build_operator(const OperatorSpec& spec, const CensCurve& cens) {
    std::size_t n = spec.grid.size();
    if (n == 0) throw std::invalid_argument("build_operator: empty grid");
    if (spec.fcell.size() != n + 1 || spec.alpha.size() != n)
        throw std::invalid_argument("build_operator: fcell needs grid+1 entries, alpha needs grid entries");
    double prev = 0.0;
    for (double s : spec.grid) {
        if (!(s > prev)) throw std::invalid_argument("build_operator: grid must be ascending and positive");
        prev = s;
    }
    for (std::size_t i = 0; i < n; ++i)
        if (!(spec.fcell[i] > 0.0))
            throw std::invalid_argument("build_operator: f must be positive below the last grid point");

    CellTables tab = make_cell_tables(spec.grid, cens);
    Eigen::MatrixXd mat(n, n);
    Eigen::VectorXd basis = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    for (std::size_t j = 0; j < n; ++j) {
        basis[static_cast<Eigen::Index>(j)] = 1.0;
        mat.col(static_cast<Eigen::Index>(j)) = apply_spec(spec, tab, basis);
        basis[static_cast<Eigen::Index>(j)] = 0.0;
    }
    return GridOperator(spec.grid, std::move(mat));
}

std::vector<double> fcell_values(const MassFunction& g, const std::vector<double>& grid) {
    std::vector<double> f(grid.size() + 1);
    f[0] = g.tail_over_t(0.0);
    for (std::size_t i = 0; i < grid.size(); ++i) f[i + 1] = g.tail_over_t(grid[i]);
    return f;
}

DiscreteTruth discretize_truth(const LifetimeModel& lifetime, const CensoringModel& cens,
                               std::vector<double> grid) {
    std::size_t n = grid.size();
    if (n == 0) throw std::invalid_argument("discretize_truth: empty grid");
    DiscreteTruth tr;
    tr.grid = std::move(grid);
    tr.gamma.resize(n);
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        double gi = lifetime.length_biased_cdf(tr.grid[i]) - acc;
        acc += gi;
        tr.gamma[i] = gi;
        acc = lifetime.length_biased_cdf(tr.grid[i]); // avoid drift
    }
    // lump the tail at the last point so the step truth is a distribution
    double head = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) head += tr.gamma[i];
    tr.gamma[n - 1] = 1.0 - head;

    tr.alpha.resize(n);
    tr.p = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        tr.alpha[i] = cens.cum_survival(tr.grid[i]) / tr.grid[i];
        tr.p += tr.alpha[i] * tr.gamma[i];
    }

    tr.G.resize(n);
    tr.Gstar.resize(n);
    double cg = 0.0, cs = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        cg += tr.gamma[i];
        cs += tr.alpha[i] * tr.gamma[i] / tr.p;
        tr.G[i] = cg;
        tr.Gstar[i] = cs;
    }

    tr.fcell.assign(n + 1, 0.0);
    for (std::size_t i = n; i-- > 0;) tr.fcell[i] = tr.fcell[i + 1] + tr.gamma[i] / tr.grid[i];

    tr.Fstar.assign(n, 0.0);
    if (tr.p < 1.0) {
        double cum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double lo = i == 0 ? 0.0 : tr.grid[i - 1];
            double int_fc = (tr.grid[i] - lo) - (cens.cum_survival(tr.grid[i]) - cens.cum_survival(lo));
            cum += tr.fcell[i] * int_fc / (1.0 - tr.p);
            tr.Fstar[i] = cum;
        }
    }
    return tr;
}

std::vector<double> band_grid(const std::vector<double>& support, double tstar,
                              std::size_t min_points) {
    std::vector<double> pts;
    for (double s : support)
        if (s <= tstar) pts.push_back(s);
    if (pts.empty()) throw std::invalid_argument("band_grid: no support points at or below tstar");
    if (tstar < support.back() && tstar > pts.back()) pts.push_back(tstar);
    while (pts.size() < min_points) {
        // split the widest gap (counting the leading gap from 0)
        double best_gap = pts[0];
        std::size_t best_at = 0; // insert before index best_at
        for (std::size_t i = 1; i < pts.size(); ++i) {
            double gap = pts[i] - pts[i - 1];
            if (gap > best_gap) {
                best_gap = gap;
                best_at = i;
            }
        }
        double lo = best_at == 0 ? 0.0 : pts[best_at - 1];
        double mid = lo + best_gap / 2.0;
        pts.insert(pts.begin() + static_cast<std::ptrdiff_t>(best_at), mid);
    }
    return pts;
}

namespace {

std::vector<double> alpha_on_grid(const CensCurve& curve, const std::vector<double>& grid) {
    std::vector<double> a(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) a[i] = curve.alpha_at(grid[i]);
    return a;
}

} // namespace

GridOperator build_Fk(const std::vector<CohortRecord>& cohort, const FitResult& fit,
                      OperatorMode mode, double tstar, const LifetimeModel* lifetime,
                      const CensoringModel* cens) {
    std::vector<double> grid = band_grid(fit.ghat.support(), tstar);
    OperatorSpec spec;
    spec.grid = grid;
    spec.fcell = fcell_values(fit.ghat, grid);
    double p_hat = fit.p_hat;
    if (mode == OperatorMode::Oracle) {
        if (!lifetime || !cens)
            throw std::invalid_argument("build_Fk: oracle mode requires the generating models");
        ModelCensCurve curve(*cens);
        spec.alpha = alpha_on_grid(curve, grid);
        double p = cens->family() == CensoringFamily::None ? 1.0 : p_uncensored(*lifetime, *cens);
        if (p >= 1.0) {
            spec.diag = 0.0;
            spec.coef_g1 = spec.coef_g2 = 1.0;
        } else {
            spec.diag = (p_hat - p) / (1.0 - p);
            spec.coef_g1 = spec.coef_g2 = (1.0 - p_hat) / (1.0 - p);
        }
        return build_operator(spec, curve);
    }
    StepCensCurve curve = censoring_product_limit(cohort);
    spec.alpha = alpha_on_grid(curve, grid);
    spec.diag = 0.0;
    spec.coef_g1 = spec.coef_g2 = 1.0;
    return build_operator(spec, curve);
}

GridOperator build_F_limit(const LimitInputs& inputs, const CensCurve& cens) {
    OperatorSpec spec;
    spec.grid = inputs.grid;
    spec.fcell = inputs.fcell;
    spec.alpha = inputs.alpha;
    spec.diag = 0.0;
    spec.coef_g1 = spec.coef_g2 = 1.0;
    return build_operator(spec, cens);
}

LimitInputs limit_inputs_truth(const LifetimeModel& lifetime, const CensoringModel& cens,
                               const std::vector<double>& grid) {
    LimitInputs in;
    in.grid = grid;
    std::size_t n = grid.size();
    ModelCensCurve curve(cens);
    in.alpha = alpha_on_grid(curve, grid);
    in.p = cens.family() == CensoringFamily::None ? 1.0 : p_uncensored(lifetime, cens);

    double mu = lifetime.mean();
    in.fcell.resize(n + 1);
    in.fcell[0] = 1.0 / mu;
    for (std::size_t i = 0; i < n; ++i) in.fcell[i + 1] = lifetime.survival(grid[i]) / mu;

    in.G.resize(n);
    for (std::size_t i = 0; i < n; ++i) in.G[i] = lifetime.length_biased_cdf(grid[i]);

    in.Gstar.resize(n);
    in.Fstar.assign(n, 0.0);
    in.Flife.resize(n);
    double cg = 0.0, cf = 0.0, cl = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double lo = i == 0 ? 0.0 : grid[i - 1];
        cg += adaptive_simpson(
            [&](double x) { return x <= 0 ? 0.0 : length_biased_density(lifetime, x) * curve.alpha_at(x); },
            lo, grid[i], 1e-12);
        in.Gstar[i] = std::min(cg / in.p, 1.0);
        cl += adaptive_simpson([&](double y) { return lifetime.survival(y) / mu; }, lo, grid[i], 1e-12);
        in.Flife[i] = std::min(cl, 1.0);
        if (in.p < 1.0) {
            cf += adaptive_simpson(
                [&](double y) { return lifetime.survival(y) * cens.cdf(y) / (mu * (1.0 - in.p)); },
                lo, grid[i], 1e-12);
            in.Fstar[i] = std::min(cf, 1.0);
        }
    }
    return in;
}

LimitInputs limit_inputs_plugin(const FitResult& fit, const std::vector<CohortRecord>& cohort,
                                const std::vector<double>& grid) {
    LimitInputs in;
    in.grid = grid;
    std::size_t n = grid.size();
    in.p = fit.p_hat;
    if (!(in.p > 0)) throw std::invalid_argument("limit_inputs_plugin: no uncensored observations");
    StepCensCurve curve = censoring_product_limit(cohort);
    in.alpha = alpha_on_grid(curve, grid);
    in.fcell = fcell_values(fit.ghat, grid);

    in.G.resize(n);
    for (std::size_t i = 0; i < n; ++i) in.G[i] = fit.ghat.cdf(grid[i]);

    // G* plug-in: cumulative alpha-weighted masses, monotonized and clipped
    const auto& supp = fit.ghat.support();
    const auto& w = fit.ghat.masses();
    in.Gstar.resize(n);
    double cum = 0.0, run_max = 0.0;
    std::size_t j = 0;
    for (std::size_t i = 0; i < n; ++i) {
        while (j < supp.size() && supp[j] <= grid[i]) {
            cum += curve.alpha_at(supp[j]) * w[j] / in.p;
            ++j;
        }
        run_max = std::max(run_max, cum);
        in.Gstar[i] = std::min(run_max, 1.0);
    }

    in.Fstar.assign(n, 0.0);
    in.Flife.resize(n);
    double cf = 0.0, cl = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double lo = i == 0 ? 0.0 : grid[i - 1];
        double len = grid[i] - lo;
        cl += in.fcell[i] * len;
        in.Flife[i] = std::min(cl, 1.0);
        if (in.p < 1.0) {
            double int_fc = len - (curve.cum_survival(grid[i]) - curve.cum_survival(lo));
            cf += in.fcell[i] * int_fc / (1.0 - in.p);
            in.Fstar[i] = std::min(cf, 1.0);
        }
    }
    return in;
}

namespace {

// Brownian bridge sampled sequentially at non-decreasing points q in [0,1].
std::vector<double> sample_bridge(const std::vector<double>& q, Rng& rng) {
    std::normal_distribution<double> norm(0.0, 1.0);
    std::vector<double> b(q.size());
    double prev_q = 0.0, prev_b = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) {
        double qi = std::clamp(q[i], 0.0, 1.0);
        if (qi <= prev_q) {
            b[i] = prev_b;
            continue;
        }
        if (qi >= 1.0) {
            b[i] = 0.0;
        } else {
            double scale = (1.0 - qi) / (1.0 - prev_q);
            double mean = prev_b * scale;
            double var = (qi - prev_q) * scale;
            b[i] = mean + std::sqrt(var) * norm(rng);
        }
        prev_q = qi;
        prev_b = b[i];
    }
    return b;
}

// The f-weighted bridge term of V / W_{m,n}: for each l,
//   f_l * sum_{i<l} E_i (1/f_i - 1/f_{i-1}) + E_l (1 - f_l / f_{l-1}),
// which is f(t) int_(0,t] E(y) d(1/f(y)) with the boundary ratio f(t)/f(t) := 1.
std::vector<double> fweighted_sum(const std::vector<double>& fcell, const std::vector<double>& e) {
    std::size_t n = e.size();
    std::vector<double> out(n);
    double cum = 0.0;
    for (std::size_t l = 1; l <= n; ++l) {
        if (l >= 2) cum += e[l - 2] * (1.0 / fcell[l - 1] - 1.0 / fcell[l - 2]);
        out[l - 1] = fcell[l] * cum + e[l - 1] * (1.0 - fcell[l] / fcell[l - 1]);
    }
    return out;
}

} // namespace

Eigen::VectorXd compose_V(const LimitInputs& in, Scheme scheme, Rng& rng) {
    std::size_t n = in.grid.size();
    double p = in.p;
    if (scheme == Scheme::III && !(p > 0.59))
        throw std::invalid_argument(
            "compose_V: scheme iii limit requires p > 0.59 for the operator to be invertible");

    const std::vector<double>& q1 = scheme == Scheme::III ? in.G : in.Gstar;
    const std::vector<double>& q2 = scheme == Scheme::III ? in.Flife : in.Fstar;

    std::vector<double> b1 = p > 0 ? sample_bridge(q1, rng) : std::vector<double>(n, 0.0);
    Eigen::VectorXd v(n);
    if (p < 1.0) {
        std::vector<double> b2 = sample_bridge(q2, rng);
        std::vector<double> bridge_term = fweighted_sum(in.fcell, b2);
        double z = scheme == Scheme::I ? std::normal_distribution<double>(0.0, 1.0)(rng) : 0.0;
        double zc = p * std::sqrt(p / (1.0 - p)) * z;
        for (std::size_t l = 0; l < n; ++l)
            v[static_cast<Eigen::Index>(l)] = std::sqrt(p) * b1[l] +
                                              std::sqrt(1.0 - p) * bridge_term[l] +
                                              zc * (in.Gstar[l] - in.G[l]);
    } else {
        for (std::size_t l = 0; l < n; ++l) v[static_cast<Eigen::Index>(l)] = b1[l];
    }
    return v;
}

Eigen::MatrixXd simulate_limit(const GridOperator& op, const LimitInputs& inputs, Scheme scheme,
                               int paths, Rng& rng) {
    if (paths < 1) throw std::invalid_argument("simulate_limit: paths >= 1 required");
    if (inputs.grid != op.grid())
        throw std::invalid_argument("simulate_limit: operator and inputs use different grids");
    Eigen::MatrixXd out(paths, static_cast<Eigen::Index>(inputs.grid.size()));
    for (int s = 0; s < paths; ++s) out.row(s) = op.solve(compose_V(inputs, scheme, rng)).transpose();
    return out;
}

MasterCheck master_residual(const std::vector<CohortRecord>& cohort, const FitResult& fit,
                            const LifetimeModel& lifetime, const CensoringModel& cens) {
    const std::vector<double>& grid = fit.ghat.support();
    std::size_t n = grid.size();
    DiscreteTruth tr = discretize_truth(lifetime, cens, grid);

    OperatorSpec spec;
    spec.grid = grid;
    spec.fcell = fcell_values(fit.ghat, grid);
    spec.alpha = tr.alpha;
    double k = static_cast<double>(cohort.size());
    double p_hat = fit.p_hat;
    if (tr.p >= 1.0) {
        spec.diag = 0.0;
        spec.coef_g1 = spec.coef_g2 = 1.0;
    } else {
        spec.diag = (p_hat - tr.p) / (1.0 - tr.p);
        spec.coef_g1 = spec.coef_g2 = (1.0 - p_hat) / (1.0 - tr.p);
    }
    ModelCensCurve curve(cens);
    GridOperator op = build_operator(spec, curve);

    Eigen::VectorXd u(n);
    for (std::size_t l = 0; l < n; ++l)
        u[static_cast<Eigen::Index>(l)] = std::sqrt(k) * (fit.ghat.cdf(grid[l]) - tr.G[l]);

    // empirical cdfs of the uncensored and censored values at grid points
    std::vector<double> xs, ys;
    for (const auto& rec : cohort) (rec.delta == 1 ? xs : ys).push_back(rec.a + rec.v);
    std::sort(xs.begin(), xs.end());
    std::sort(ys.begin(), ys.end());
    double m = static_cast<double>(xs.size()), nn = static_cast<double>(ys.size());

    std::vector<double> wx(n, 0.0), wy(n, 0.0);
    for (std::size_t l = 0; l < n; ++l) {
        if (m > 0) {
            double gm = static_cast<double>(std::upper_bound(xs.begin(), xs.end(), grid[l]) - xs.begin()) / m;
            wx[l] = std::sqrt(m) * (gm - tr.Gstar[l]);
        }
        if (nn > 0) {
            double fn = static_cast<double>(std::upper_bound(ys.begin(), ys.end(), grid[l]) - ys.begin()) / nn;
            wy[l] = std::sqrt(nn) * (fn - tr.Fstar[l]);
        }
    }

    std::vector<double> bridge_term = fweighted_sum(spec.fcell, wy);
    double drift = tr.p < 1.0 ? std::sqrt(k) * (p_hat - tr.p) / (1.0 - tr.p) : 0.0;
    Eigen::VectorXd v(n);
    for (std::size_t l = 0; l < n; ++l)
        v[static_cast<Eigen::Index>(l)] = std::sqrt(p_hat) * wx[l] +
                                          std::sqrt(1.0 - p_hat) * bridge_term[l] +
                                          drift * (tr.Gstar[l] - tr.G[l]);

    MasterCheck check;
    check.residual = (op.apply(u) - v).cwiseAbs().maxCoeff();
    check.p_hat = p_hat;
    check.p_truth = tr.p;
    check.grid_size = n;
    return check;
}

namespace {

double quantile_of(std::vector<double> vals, double q) {
    std::sort(vals.begin(), vals.end());
    double pos = q * static_cast<double>(vals.size() - 1);
    std::size_t lo = static_cast<std::size_t>(pos);
    if (lo + 1 >= vals.size()) return vals.back();
    double frac = pos - static_cast<double>(lo);
    return vals[lo] * (1.0 - frac) + vals[lo + 1] * frac;
}

} // namespace

BandResult confidence_band(const FitResult& fit, const std::vector<CohortRecord>& cohort,
                           double level, OperatorMode mode, int paths, std::uint64_t seed,
                           double tstar, const LifetimeModel* lifetime, const CensoringModel* cens,
                           Scheme scheme) {
    if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("confidence_band: level in (0,1)");
    if (paths < 100) throw std::invalid_argument("confidence_band: at least 100 paths required");
    const auto& supp = fit.ghat.support();
    if (tstar <= 0.0) {
        tstar = supp.front();
        for (double s : supp)
            if (s < supp.back() && fit.ghat.cdf(s) <= 0.9) tstar = s;
    }

    std::vector<double> grid = band_grid(supp, tstar);
    GridOperator op = [&] {
        try {
            return build_Fk(cohort, fit, mode, tstar, lifetime, cens);
        } catch (const std::runtime_error& err) {
            throw std::runtime_error(std::string(err.what()) +
                                     " (plug-in operator not invertible: try oracle mode or a larger cohort)");
        }
    }();

    LimitInputs in;
    if (mode == OperatorMode::Oracle) {
        if (!lifetime || !cens)
            throw std::invalid_argument("confidence_band: oracle mode requires the generating models");
        in = limit_inputs_truth(*lifetime, *cens, grid);
    } else {
        in = limit_inputs_plugin(fit, cohort, grid);
    }

    // Fk and the limit operator share the grid; use Fk's matrix for the solve
    // in plugin mode (they coincide) and the oracle limit operator otherwise.
    GridOperator limit_op = mode == OperatorMode::Oracle
                                ? build_F_limit(in, ModelCensCurve(*cens))
                                : std::move(op);

    Rng rng = make_stream(seed, 1);
    Eigen::MatrixXd upaths = simulate_limit(limit_op, in, scheme, paths, rng);

    std::size_t n = grid.size();
    double k = static_cast<double>(cohort.size());
    double sqrtk = std::sqrt(k);
    double gamma = 1.0 - level;

    BandResult band;
    band.grid = grid;
    band.paths = paths;
    band.G.resize(n);
    band.se.resize(n);
    band.lo_G.resize(n);
    band.hi_G.resize(n);
    band.S_U.resize(n);
    band.lo_S.resize(n);
    band.hi_S.resize(n);

    // survival push-forward of each perturbed mass vector through unbias
    const auto& fc = fcell_values(fit.ghat, grid);
    Eigen::MatrixXd spaths(paths, static_cast<Eigen::Index>(n));
    for (int s = 0; s < paths; ++s) {
        // perturbed tails: f_pert(s_l) = fhat(s_l) + sum_{j>l} dU_j / (sqrt(k) s_j)
        double tail = 0.0;
        std::vector<double> fp(n + 1);
        for (std::size_t j = n; j-- > 0;) {
            double du = upaths(s, static_cast<Eigen::Index>(j)) -
                        (j > 0 ? upaths(s, static_cast<Eigen::Index>(j) - 1) : 0.0);
            fp[j + 1] = fc[j + 1] + tail;
            tail += du / (sqrtk * grid[j]);
        }
        fp[0] = fc[0] + tail;
        for (std::size_t l = 0; l < n; ++l)
            spaths(s, static_cast<Eigen::Index>(l)) = fp[0] > 0 ? fp[l + 1] / fp[0] : 0.0;
    }

    for (std::size_t l = 0; l < n; ++l) {
        Eigen::Index col = static_cast<Eigen::Index>(l);
        std::vector<double> ucol(upaths.col(col).data(), upaths.col(col).data() + paths);
        std::vector<double> scol(spaths.col(col).data(), spaths.col(col).data() + paths);
        double mean = 0.0;
        for (double x : ucol) mean += x;
        mean /= static_cast<double>(paths);
        double var = 0.0;
        for (double x : ucol) var += (x - mean) * (x - mean);
        var /= static_cast<double>(paths - 1);

        double g = fit.ghat.cdf(grid[l]);
        double su = fc[0] > 0 ? fc[l + 1] / fc[0] : 0.0;
        band.G[l] = g;
        band.se[l] = std::sqrt(var) / sqrtk;
        band.lo_G[l] = std::clamp(std::min(g, g + quantile_of(ucol, gamma / 2) / sqrtk), 0.0, 1.0);
        band.hi_G[l] = std::clamp(std::max(g, g + quantile_of(ucol, 1.0 - gamma / 2) / sqrtk), 0.0, 1.0);
        band.S_U[l] = su;
        band.lo_S[l] = std::clamp(std::min(su, quantile_of(scol, gamma / 2)), 0.0, 1.0);
        band.hi_S[l] = std::clamp(std::max(su, quantile_of(scol, 1.0 - gamma / 2)), 0.0, 1.0);
    }
    return band;
}

} // namespace lbsurv
