#include "lbsurv/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

namespace lbsurv {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Per-support working data for the EM loop, resolved against a fixed support.
struct Workspace {
    std::vector<double> t;
    std::vector<int> cu;          // uncensored multiplicity at t[j]
    std::vector<int> cens_idx;    // for each censored record: first j with t[j] >= y
    int k = 0;

    static Workspace build(const std::vector<double>& support, const std::vector<CohortRecord>& cohort) {
        Workspace ws;
        ws.t = support;
        ws.cu.assign(support.size(), 0);
        ws.k = static_cast<int>(cohort.size());
        for (const auto& rec : cohort) {
            double val = rec.a + rec.v;
            if (rec.delta == 1) {
                auto it = std::lower_bound(ws.t.begin(), ws.t.end(), val);
                if (it == ws.t.end() || *it != val)
                    throw std::invalid_argument("estimator: uncensored value missing from support");
                ws.cu[static_cast<std::size_t>(it - ws.t.begin())]++;
            } else {
                auto it = std::lower_bound(ws.t.begin(), ws.t.end(), val);
                ws.cens_idx.push_back(static_cast<int>(it - ws.t.begin()));
            }
        }
        return ws;
    }
};

// Suffix sums fincl[j] = sum_{l >= j} w[l] / t[l]; fincl[h] = 0.
void fill_fincl(const Workspace& ws, const std::vector<double>& w, std::vector<double>& fincl) {
    std::size_t h = ws.t.size();
    fincl.assign(h + 1, 0.0);
    for (std::size_t j = h; j-- > 0;) fincl[j] = fincl[j + 1] + w[j] / ws.t[j];
}

// One self-consistency update; returns sup-norm change. `next` may alias nothing.
double em_update(const Workspace& ws, const std::vector<double>& w, std::vector<double>& next,
                 std::vector<double>& fincl, std::vector<double>& addr) {
    std::size_t h = ws.t.size();
    fill_fincl(ws, w, fincl);
    addr.assign(h, 0.0);
    for (int idx : ws.cens_idx) {
        if (idx >= static_cast<int>(h) || fincl[static_cast<std::size_t>(idx)] <= 0.0)
            throw std::runtime_error("estimator: censored value has zero residual mass");
        addr[static_cast<std::size_t>(idx)] += 1.0 / fincl[static_cast<std::size_t>(idx)];
    }
    next.resize(h);
    double run = 0.0, total = 0.0, change = 0.0;
    for (std::size_t j = 0; j < h; ++j) {
        run += addr[j];
        next[j] = (ws.cu[j] + run * w[j] / ws.t[j]) / ws.k;
        total += next[j];
    }
    for (std::size_t j = 0; j < h; ++j) {
        next[j] /= total;
        change = std::max(change, std::abs(next[j] - w[j]));
    }
    return change;
}

double loglik_counts(const Workspace& ws, const std::vector<double>& w, std::vector<double>& fincl) {
    fill_fincl(ws, w, fincl);
    double ll = 0.0;
    for (std::size_t j = 0; j < ws.t.size(); ++j) {
        if (ws.cu[j] > 0) {
            if (w[j] <= 0.0) return kNegInf;
            ll += ws.cu[j] * std::log(w[j]);
        }
    }
    for (int idx : ws.cens_idx) {
        double f = idx < static_cast<int>(ws.t.size()) ? fincl[static_cast<std::size_t>(idx)] : 0.0;
        if (f <= 0.0) return kNegInf;
        ll += std::log(f);
    }
    return ll;
}

} // namespace

SupportCounts support_counts(const std::vector<CohortRecord>& cohort) {
    if (cohort.empty()) throw std::invalid_argument("estimator: empty cohort");
    std::vector<double> vals;
    vals.reserve(cohort.size());
    for (const auto& rec : cohort) {
        if (!(rec.a > 0) || !(rec.v >= 0) || (rec.delta != 0 && rec.delta != 1))
            throw std::invalid_argument("estimator: invalid cohort record");
        vals.push_back(rec.a + rec.v);
    }
    std::sort(vals.begin(), vals.end());
    vals.erase(std::unique(vals.begin(), vals.end()), vals.end());

    SupportCounts sc;
    sc.t = vals;
    sc.uncensored.assign(vals.size(), 0);
    sc.censored.assign(vals.size(), 0);
    sc.k = static_cast<int>(cohort.size());
    for (const auto& rec : cohort) {
        auto it = std::lower_bound(vals.begin(), vals.end(), rec.a + rec.v);
        std::size_t j = static_cast<std::size_t>(it - vals.begin());
        if (rec.delta == 1) {
            sc.uncensored[j]++;
            sc.m++;
        } else {
            sc.censored[j]++;
            sc.n++;
        }
    }
    return sc;
}

double log_likelihood(const MassFunction& g, const std::vector<CohortRecord>& cohort) {
    double ll = 0.0;
    for (const auto& rec : cohort) {
        double val = rec.a + rec.v;
        if (rec.delta == 1) {
            auto it = std::lower_bound(g.support().begin(), g.support().end(), val);
            if (it == g.support().end() || *it != val) return kNegInf;
            double w = g.masses()[static_cast<std::size_t>(it - g.support().begin())];
            if (w <= 0.0) return kNegInf;
            ll += std::log(w);
        } else {
            double f = g.tail_over_t_incl(val);
            if (f <= 0.0) return kNegInf;
            ll += std::log(f);
        }
    }
    return ll;
}

MassFunction em_step(const MassFunction& g, const std::vector<CohortRecord>& cohort) {
    Workspace ws = Workspace::build(g.support(), cohort);
    std::vector<double> next, fincl, addr;
    em_update(ws, g.masses(), next, fincl, addr);
    return MassFunction(g.support(), next);
}

FitResult fit_npmle(const std::vector<CohortRecord>& cohort, const FitConfig& config) {
    if (config.tol <= 0 || config.max_iter < 1)
        throw std::invalid_argument("fit_npmle: tol > 0 and max_iter >= 1 required");
    SupportCounts sc = support_counts(cohort);
    Workspace ws = Workspace::build(sc.t, cohort);

    std::size_t h = sc.t.size();
    std::vector<double> w;
    if (config.init) {
        if (config.init->support() != sc.t)
            throw std::invalid_argument("fit_npmle: custom init must live on the observed support");
        w = config.init->masses();
    } else {
        w.assign(h, 1.0 / static_cast<double>(h));
    }

    std::vector<double> next, fincl, addr;
    FitResult result{MassFunction(sc.t, w), 0.0, 0, 0.0, {}, false, 0};
    result.p_hat = static_cast<double>(sc.m) / sc.k;
    result.loglik_trace.push_back(loglik_counts(ws, w, fincl));

    for (long iter = 1; iter <= config.max_iter; ++iter) {
        double change = em_update(ws, w, next, fincl, addr);
        w.swap(next);
        result.iterations = iter;
        result.final_change = change;
        result.loglik_trace.push_back(loglik_counts(ws, w, fincl));
        if (change <= config.tol) {
            result.converged = true;
            break;
        }
    }
    for (double wj : w)
        if (wj < 1e-12) result.boundary_points++;
    result.ghat = MassFunction(sc.t, w);
    return result;
}

double score_residual(const MassFunction& g, const std::vector<CohortRecord>& cohort) {
    Workspace ws = Workspace::build(g.support(), cohort);
    std::vector<double> next, fincl, addr;
    // The score defect at support point j is exactly the one-step EM change
    // before renormalization; compute it without the normalizing division.
    std::size_t h = ws.t.size();
    fill_fincl(ws, g.masses(), fincl);
    addr.assign(h, 0.0);
    for (int idx : ws.cens_idx) {
        if (idx >= static_cast<int>(h) || fincl[static_cast<std::size_t>(idx)] <= 0.0)
            throw std::runtime_error("estimator: censored value has zero residual mass");
        addr[static_cast<std::size_t>(idx)] += 1.0 / fincl[static_cast<std::size_t>(idx)];
    }
    double run = 0.0, res = 0.0;
    for (std::size_t j = 0; j < h; ++j) {
        run += addr[j];
        double rhs = (ws.cu[j] + run * g.masses()[j] / ws.t[j]) / ws.k;
        res = std::max(res, std::abs(g.masses()[j] - rhs));
    }
    return res;
}

MassFunction brute_force_npmle(const std::vector<CohortRecord>& cohort, double grid_step) {
    SupportCounts sc = support_counts(cohort);
    std::size_t h = sc.t.size();
    if (h > 4) throw std::invalid_argument("brute_force_npmle: refused for more than 4 distinct values");
    long steps = std::lround(1.0 / grid_step);

    auto eval = [&](const std::vector<double>& w) {
        double ll = 0.0;
        std::vector<double> fincl(h + 1, 0.0);
        for (std::size_t j = h; j-- > 0;) fincl[j] = fincl[j + 1] + w[j] / sc.t[j];
        for (std::size_t j = 0; j < h; ++j) {
            if (sc.uncensored[j] > 0) {
                if (w[j] <= 0.0) return kNegInf;
                ll += sc.uncensored[j] * std::log(w[j]);
            }
            if (sc.censored[j] > 0) {
                if (fincl[j] <= 0.0) return kNegInf;
                ll += sc.censored[j] * std::log(fincl[j]);
            }
        }
        return ll;
    };

    std::vector<double> w(h), best(h);
    double best_ll = kNegInf;
    std::vector<long> idx(h, 0);
    // Lexicographic enumeration of integer compositions of `steps` into h parts.
    std::function<void(std::size_t, long)> recurse = [&](std::size_t j, long rem) {
        if (j + 1 == h) {
            w[j] = rem * grid_step;
            double ll = eval(w);
            if (ll > best_ll) {
                best_ll = ll;
                best = w;
            }
            return;
        }
        for (long i = 0; i <= rem; ++i) {
            w[j] = i * grid_step;
            recurse(j + 1, rem - i);
        }
    };
    recurse(0, steps);
    if (best_ll == kNegInf) throw std::runtime_error("brute_force_npmle: no feasible mass vector");
    // Drop exact zeros only if a positive-mass MassFunction is representable;
    // keep zeros as tiny masses is not allowed, so filter the support.
    std::vector<double> supp, mass;
    for (std::size_t j = 0; j < h; ++j) {
        if (best[j] > 0.0) {
            supp.push_back(sc.t[j]);
            mass.push_back(best[j]);
        }
    }
    return MassFunction(supp, mass);
}

StepFunction unbiased_survival(const MassFunction& ghat) {
    std::size_t h = ghat.size();
    std::vector<double> suffix(h + 1, 0.0);
    for (std::size_t j = h; j-- > 0;) suffix[j] = suffix[j + 1] + ghat.masses()[j] / ghat.support()[j];
    double f0 = suffix[0];
    std::vector<double> values(h);
    for (std::size_t j = 0; j < h; ++j) values[j] = suffix[j + 1] / f0;
    return StepFunction(1.0, ghat.support(), values);
}

StepFunction unbiased_survival(const FitResult& fit) { return unbiased_survival(fit.ghat); }

StepFunction km_naive(const std::vector<CohortRecord>& cohort) {
    if (cohort.empty()) throw std::invalid_argument("km_naive: empty cohort");
    std::vector<std::pair<double, int>> obs;
    obs.reserve(cohort.size());
    for (const auto& rec : cohort) obs.emplace_back(rec.a + rec.v, rec.delta);
    std::sort(obs.begin(), obs.end());

    std::vector<double> knots, values;
    double s = 1.0;
    std::size_t i = 0;
    long at_risk = static_cast<long>(obs.size());
    while (i < obs.size()) {
        double t = obs[i].first;
        long deaths = 0, leaving = 0;
        while (i < obs.size() && obs[i].first == t) {
            deaths += obs[i].second;
            ++leaving;
            ++i;
        }
        if (deaths > 0) s *= 1.0 - static_cast<double>(deaths) / static_cast<double>(at_risk);
        knots.push_back(t);
        values.push_back(s);
        at_risk -= leaving;
    }
    return StepFunction(1.0, std::move(knots), std::move(values));
}

} // namespace lbsurv
