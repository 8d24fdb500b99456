#pragma once

// One-dimensional Gaussian mixture fitting.
//
// fit_em runs expectation-maximization with k-means++-style seeding and
// restarts; select_order_bic scans orders 1..p_max and keeps the order
// maximizing the penalized log-likelihood
//     loglik(p) - 0.5 * log(n) * (3p - 1),
// where 3p - 1 is the free parameter count of a p-component mixture.
// All randomness flows from the seed carried in EmConfig, so a fit is a
// deterministic function of (sample, order, config).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "ok/errors.hpp"
#include "ok/math.hpp"
#include "ok/rng.hpp"

namespace ok::mixture {

struct GaussianMixture {
    std::vector<double> weights;    // positive, sum to 1 within 1e-12
    std::vector<double> means;
    std::vector<double> variances;  // all >= the fitting floor

    int order() const { return static_cast<int>(weights.size()); }
    bool operator==(const GaussianMixture&) const = default;
};

struct EmConfig {
    double tol = 1e-8;          // stop when loglik improvement drops below
    int max_iter = 500;
    int restarts = 5;
    double var_floor_rel = 1e-6;   // floor = max(rel * sample variance, abs)
    double var_floor_abs = 1e-12;
    std::uint64_t seed = 0x5eedf00dULL;
};

struct FitResult {
    GaussianMixture mixture;
    double loglik = 0.0;            // equals log_likelihood(mixture, sample)
    int n_iter = 0;
    bool converged = false;
    bool degenerate = false;        // all-identical sample, order 1
    std::vector<double> trace;      // loglik before each update; nondecreasing
};

struct OrderSelection {
    FitResult fit;
    int best_order = 1;
    std::vector<double> bic_trace;  // penalized loglik for orders 1..p_max
};

inline double density(const GaussianMixture& m, double x) {
    double s = 0.0;
    for (int k = 0; k < m.order(); ++k) {
        s += m.weights[k] * std::exp(math::log_normal_pdf(x, m.means[k], m.variances[k]));
    }
    return s;
}

// Sum over points of log f(x_i), log-sum-exp stabilized per point.
inline double log_likelihood(const GaussianMixture& m, std::span<const double> xs) {
    if (xs.empty()) throw EmptySample("log_likelihood: empty sample");
    const int p = m.order();
    std::vector<double> lw(p), half_inv_var(p), mu(p);
    for (int k = 0; k < p; ++k) {
        lw[k] = std::log(m.weights[k]) - 0.5 * (math::kLogTwoPi + std::log(m.variances[k]));
        half_inv_var[k] = 0.5 / m.variances[k];
        mu[k] = m.means[k];
    }
    double total = 0.0;
    for (double x : xs) {
        double best = -std::numeric_limits<double>::infinity();
        for (int k = 0; k < p; ++k) {
            const double d = x - mu[k];
            const double a = lw[k] - d * d * half_inv_var[k];
            if (a > best) best = a;
        }
        double s = 0.0;
        for (int k = 0; k < p; ++k) {
            const double d = x - mu[k];
            s += std::exp(lw[k] - d * d * half_inv_var[k] - best);
        }
        total += best + std::log(s);
    }
    return total;
}

inline std::vector<double> sample(const GaussianMixture& m, std::size_t n, std::uint64_t seed) {
    std::vector<double> cum(m.weights.size());
    double acc = 0.0;
    for (std::size_t k = 0; k < m.weights.size(); ++k) {
        acc += m.weights[k];
        cum[k] = acc;
    }
    rng::Rng gen(rng::derive(seed, 0x6d69785fULL));
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double u = gen.uniform() * acc;  // acc ~ 1, guards rounding
        std::size_t k = 0;
        while (k + 1 < cum.size() && u >= cum[k]) ++k;
        out[i] = m.means[k] + std::sqrt(m.variances[k]) * gen.normal();
    }
    return out;
}

namespace detail {

struct SampleStats {
    double mean = 0.0;
    double variance = 0.0;  // MLE (divide by n)
};

inline SampleStats sample_stats(std::span<const double> xs) {
    double s = 0.0;
    for (double x : xs) s += x;
    const double mean = s / static_cast<double>(xs.size());
    double v = 0.0;
    for (double x : xs) v += (x - mean) * (x - mean);
    return {mean, v / static_cast<double>(xs.size())};
}

// k-means++-style seeding followed by one hard-assignment pass.
inline GaussianMixture seed_mixture(std::span<const double> xs, int order, double var_floor,
                                    double fallback_var, rng::Rng& gen) {
    const std::size_t n = xs.size();
    std::vector<double> centers;
    centers.reserve(order);
    centers.push_back(xs[gen.below(n)]);
    std::vector<double> d2(n);
    for (int j = 1; j < order; ++j) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (double c : centers) best = std::min(best, (xs[i] - c) * (xs[i] - c));
            d2[i] = best;
            total += best;
        }
        if (total <= 0.0) {
            centers.push_back(xs[gen.below(n)]);
            continue;
        }
        double u = gen.uniform() * total;
        std::size_t pick = n - 1;
        for (std::size_t i = 0; i < n; ++i) {
            u -= d2[i];
            if (u <= 0.0) {
                pick = i;
                break;
            }
        }
        centers.push_back(xs[pick]);
    }

    GaussianMixture m;
    m.weights.assign(order, 0.0);
    m.means.assign(order, 0.0);
    m.variances.assign(order, 0.0);
    std::vector<std::size_t> count(order, 0);
    std::vector<double> sum(order, 0.0), sumsq(order, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        int best = 0;
        double bestd = std::numeric_limits<double>::infinity();
        for (int k = 0; k < order; ++k) {
            const double d = (xs[i] - centers[k]) * (xs[i] - centers[k]);
            if (d < bestd) {
                bestd = d;
                best = k;
            }
        }
        ++count[best];
        sum[best] += xs[i];
        sumsq[best] += xs[i] * xs[i];
    }
    for (int k = 0; k < order; ++k) {
        if (count[k] == 0) {
            m.weights[k] = 1.0 / static_cast<double>(n);
            m.means[k] = centers[k];
            m.variances[k] = std::max(fallback_var, var_floor);
        } else {
            const double ck = static_cast<double>(count[k]);
            m.weights[k] = ck / static_cast<double>(n);
            m.means[k] = sum[k] / ck;
            m.variances[k] = std::max(sumsq[k] / ck - m.means[k] * m.means[k], var_floor);
        }
    }
    double wsum = 0.0;
    for (double w : m.weights) wsum += w;
    for (double& w : m.weights) w /= wsum;
    return m;
}

// One EM run from a given start. Returns the trace of logliks (entry t is the
// likelihood of the parameters *before* update t), mutating m to the final fit.
inline void em_iterate(std::span<const double> xs, GaussianMixture& m, double var_floor,
                       const EmConfig& cfg, std::vector<double>& trace, bool& converged) {
    const std::size_t n = xs.size();
    const int p = m.order();
    std::vector<double> lw(p), half_inv_var(p), resp(p);
    std::vector<double> nk(p), sx(p), sxx(p);
    trace.clear();
    converged = false;
    double prev = -std::numeric_limits<double>::infinity();
    for (int it = 0; it < cfg.max_iter; ++it) {
        for (int k = 0; k < p; ++k) {
            lw[k] = std::log(m.weights[k]) -
                    0.5 * (math::kLogTwoPi + std::log(m.variances[k]));
            half_inv_var[k] = 0.5 / m.variances[k];
            nk[k] = sx[k] = sxx[k] = 0.0;
        }
        double ll = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double x = xs[i];
            double best = -std::numeric_limits<double>::infinity();
            for (int k = 0; k < p; ++k) {
                const double d = x - m.means[k];
                const double a = lw[k] - d * d * half_inv_var[k];
                resp[k] = a;
                if (a > best) best = a;
            }
            double denom = 0.0;
            for (int k = 0; k < p; ++k) {
                resp[k] = std::exp(resp[k] - best);
                denom += resp[k];
            }
            ll += best + std::log(denom);
            const double inv = 1.0 / denom;
            for (int k = 0; k < p; ++k) {
                const double r = resp[k] * inv;
                nk[k] += r;
                sx[k] += r * x;
                sxx[k] += r * x * x;
            }
        }
        trace.push_back(ll);
        if (ll - prev < cfg.tol) {
            converged = true;
            break;
        }
        prev = ll;
        double wsum = 0.0;
        for (int k = 0; k < p; ++k) {
            if (nk[k] > 1e-12) {
                m.means[k] = sx[k] / nk[k];
                m.variances[k] =
                    std::max(sxx[k] / nk[k] - m.means[k] * m.means[k], var_floor);
            } else {
                m.variances[k] = var_floor;  // collapsed component, keep old mean
            }
            m.weights[k] = std::max(nk[k] / static_cast<double>(n), 1e-12);
            wsum += m.weights[k];
        }
        for (int k = 0; k < p; ++k) m.weights[k] /= wsum;
    }
}

}  // namespace detail

inline FitResult fit_em(std::span<const double> xs, int order, const EmConfig& cfg = {}) {
    if (xs.empty()) throw EmptySample("fit_em: empty sample");
    if (order < 1) throw InvalidOrder("fit_em: order must be >= 1");
    if (xs.size() < static_cast<std::size_t>(order)) {
        throw InvalidOrder("fit_em: sample smaller than requested order");
    }
    const auto stats = detail::sample_stats(xs);
    const double var_floor = std::max(cfg.var_floor_rel * stats.variance, cfg.var_floor_abs);

    if (stats.variance == 0.0) {
        // Every observation identical: no spread to fit.
        if (order > 1) throw DegenerateSample("fit_em: constant sample, order > 1");
        FitResult r;
        r.mixture = {{1.0}, {stats.mean}, {var_floor}};
        r.loglik = log_likelihood(r.mixture, xs);
        r.converged = true;
        r.degenerate = true;
        r.trace = {r.loglik};
        return r;
    }

    FitResult best;
    best.loglik = -std::numeric_limits<double>::infinity();
    // Order 1 has a unique optimum reached after one update; restarts add nothing.
    const int restarts = order == 1 ? 1 : std::max(cfg.restarts, 1);
    for (int r = 0; r < restarts; ++r) {
        rng::Rng gen(rng::derive(cfg.seed, 0xe3fULL, static_cast<std::uint64_t>(order),
                                 static_cast<std::uint64_t>(r)));
        GaussianMixture m =
            detail::seed_mixture(xs, order, var_floor, stats.variance, gen);
        std::vector<double> trace;
        bool converged = false;
        detail::em_iterate(xs, m, var_floor, cfg, trace, converged);
        const double ll = log_likelihood(m, xs);
        if (ll > best.loglik) {
            best.mixture = std::move(m);
            best.loglik = ll;
            best.n_iter = static_cast<int>(trace.size());
            best.converged = converged;
            best.trace = std::move(trace);
        }
    }
    return best;
}

inline OrderSelection select_order_bic(std::span<const double> xs, int p_max,
                                       const EmConfig& cfg = {}) {
    if (p_max < 1) throw InvalidRange("select_order_bic: p_max must be >= 1");
    if (xs.empty()) throw EmptySample("select_order_bic: empty sample");
    if (xs.size() < static_cast<std::size_t>(p_max)) {
        throw InvalidOrder("select_order_bic: sample smaller than p_max");
    }
    const double logn = std::log(static_cast<double>(xs.size()));
    OrderSelection sel;
    sel.bic_trace.reserve(p_max);
    double best = -std::numeric_limits<double>::infinity();
    for (int p = 1; p <= p_max; ++p) {
        FitResult fit;
        try {
            fit = fit_em(xs, p, cfg);
        } catch (const DegenerateSample&) {
            // Constant sample: only order 1 is fittable, keep it and stop scanning.
            sel.bic_trace.resize(p_max, -std::numeric_limits<double>::infinity());
            break;
        }
        const double value = fit.loglik - 0.5 * logn * (3.0 * p - 1.0);
        sel.bic_trace.push_back(value);
        if (value > best) {  // strict: ties resolve to the smaller order
            best = value;
            sel.best_order = p;
            sel.fit = std::move(fit);
        }
    }
    return sel;
}

}  // namespace ok::mixture
