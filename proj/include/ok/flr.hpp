#pragma once
// One-vs-group fitted log-likelihood-ratio testing on Gaussian mixtures.
//
// For a case sample y and one control sample x_k the statistic is
//     value = pooled_loglik - case_loglik - control_loglik
// where each log-likelihood comes from an independently BIC-selected mixture
// fit (case alone, control alone, concatenation).  Against a group of K
// controls, the raw p-value is the fraction of per-control statistics at
// least log(1 - c0); the cross-validated p-value bootstraps one replica per
// control from its fitted mixture and compares replica p-values with the
// case's.  select_c0 minimises p_raw(c0) + p_cv(c0) over a uniform grid,
// computing statistics once and sweeping only the threshold.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "ok/errors.hpp"
#include "ok/mixture.hpp"
#include "ok/rng.hpp"
#include "ok/spectrum.hpp"

namespace ok::flr {

struct FlrStat {
    double value = 0.0;  // pooled_loglik - case_loglik - control_loglik
    double case_loglik = 0.0;
    double control_loglik = 0.0;
    double pooled_loglik = 0.0;
    int case_order = 1;
    int control_order = 1;
    int pooled_order = 1;
};

struct FlrResult {
    double p_raw = 1.0;
    double p_cv = 1.0;
    double c0 = 0.0;
    std::vector<FlrStat> per_control_stats;
};

// log(1 - c0), the acceptance threshold for the statistic.
inline double flr_threshold(double c0) {
    if (!(c0 > 0.0) || !(c0 < 1.0)) throw InvalidC0("flr: c0 must lie strictly in (0, 1)");
    return std::log1p(-c0);
}

namespace detail {

// Caches the per-control fits so that repeated statistics against the same
// control group (case, bootstrap replicas, grid sweeps) pay for them once.
class FlrEngine {
  public:
    struct Fit {
        double loglik = 0.0;
        int order = 1;
        mixture::GaussianMixture mixture;
    };

    FlrEngine(const std::vector<std::vector<double>>& controls, int p_max,
              const mixture::EmConfig& em, int order_override)
        : controls_(controls), p_max_(p_max), em_(em), order_override_(order_override) {
        if (controls_.empty()) throw EmptySample("flr: control group is empty");
        control_fits_.reserve(controls_.size());
        for (const auto& c : controls_) control_fits_.push_back(fit(c));
    }

    std::size_t size() const { return controls_.size(); }
    const std::vector<double>& control(std::size_t k) const { return controls_[k]; }
    const Fit& control_fit(std::size_t k) const { return control_fits_[k]; }

    Fit fit(std::span<const double> xs) const {
        if (xs.empty()) throw EmptySample("flr: empty sample");
        if (order_override_ > 0) {
            auto r = mixture::fit_em(xs, order_override_, em_);
            return {r.loglik, order_override_, std::move(r.mixture)};
        }
        auto sel = mixture::select_order_bic(xs, p_max_, em_);
        return {sel.fit.loglik, sel.best_order, std::move(sel.fit.mixture)};
    }

    FlrStat stat(std::span<const double> case_sample, const Fit& case_fit,
                 std::size_t k) const {
        std::vector<double> pooled;
        pooled.reserve(case_sample.size() + controls_[k].size());
        pooled.insert(pooled.end(), case_sample.begin(), case_sample.end());
        pooled.insert(pooled.end(), controls_[k].begin(), controls_[k].end());
        const Fit pf = fit(pooled);
        FlrStat s;
        s.case_loglik = case_fit.loglik;
        s.control_loglik = control_fits_[k].loglik;
        s.pooled_loglik = pf.loglik;
        s.case_order = case_fit.order;
        s.control_order = control_fits_[k].order;
        s.pooled_order = pf.order;
        s.value = s.pooled_loglik - s.case_loglik - s.control_loglik;
        return s;
    }

    std::vector<FlrStat> stats(std::span<const double> case_sample) const {
        const Fit cf = fit(case_sample);
        std::vector<FlrStat> out;
        out.reserve(size());
        for (std::size_t k = 0; k < size(); ++k) out.push_back(stat(case_sample, cf, k));
        return out;
    }

    // Statistic values of one bootstrap replica per control (replica b), each
    // evaluated against the full control group.  Replica seeds depend on the
    // control's content, not its position, so permuting the control group
    // permutes replicas exactly.
    std::vector<std::vector<double>> bootstrap_values(std::uint64_t seed, int b) const {
        std::vector<std::vector<double>> out;
        out.reserve(size());
        for (std::size_t k = 0; k < size(); ++k) {
            const std::uint64_t replica_seed =
                rng::derive(seed, 0xb0075ULL, rng::hash_doubles(controls_[k]),
                            static_cast<std::uint64_t>(b));
            const std::vector<double> replica =
                mixture::sample(control_fits_[k].mixture, controls_[k].size(), replica_seed);
            const Fit rf = fit(replica);
            std::vector<double> values;
            values.reserve(size());
            for (std::size_t j = 0; j < size(); ++j)
                values.push_back(stat(replica, rf, j).value);
            out.push_back(std::move(values));
        }
        return out;
    }

  private:
    std::vector<std::vector<double>> controls_;
    int p_max_;
    mixture::EmConfig em_;
    int order_override_;
    std::vector<Fit> control_fits_;
};

inline double fraction_at_least(std::span<const double> values, double threshold) {
    std::size_t hits = 0;
    for (double v : values)
        if (v >= threshold) ++hits;
    return static_cast<double>(hits) / static_cast<double>(values.size());
}

inline std::vector<double> stat_values(std::span<const FlrStat> stats) {
    std::vector<double> v;
    v.reserve(stats.size());
    for (const auto& s : stats) v.push_back(s.value);
    return v;
}

// p_cv at one threshold from precomputed statistic pools: the fraction of
// replicas whose p_raw is at most the case's, averaged over replica rounds.
inline double cv_from_pools(std::span<const double> case_values,
                            const std::vector<std::vector<std::vector<double>>>& boot_values,
                            double threshold) {
    const double case_p = fraction_at_least(case_values, threshold);
    double total = 0.0;
    std::size_t count = 0;
    for (const auto& round : boot_values) {
        for (const auto& replica : round) {
            if (fraction_at_least(replica, threshold) <= case_p) total += 1.0;
            ++count;
        }
    }
    return total / static_cast<double>(count);
}

}  // namespace detail

// The pairwise statistic: three independent fits (case, control, pooled),
// each BIC-selected over orders 1..p_max, or forced to order_override > 0.
inline FlrStat flr_statistic(std::span<const double> case_sample,
                             std::span<const double> control_sample, int p_max = 9,
                             const mixture::EmConfig& em = {}, int order_override = 0) {
    const std::vector<std::vector<double>> controls{
        std::vector<double>(control_sample.begin(), control_sample.end())};
    detail::FlrEngine engine(controls, p_max, em, order_override);
    return engine.stat(case_sample, engine.fit(case_sample), 0);
}

// Raw p-value: fraction of controls whose statistic reaches log(1 - c0).
inline FlrResult flr_pvalue(std::span<const double> case_sample,
                            const std::vector<std::vector<double>>& controls, double c0,
                            int p_max = 9, const mixture::EmConfig& em = {},
                            int order_override = 0) {
    const double t = flr_threshold(c0);
    detail::FlrEngine engine(controls, p_max, em, order_override);
    FlrResult r;
    r.c0 = c0;
    r.per_control_stats = engine.stats(case_sample);
    r.p_raw = detail::fraction_at_least(detail::stat_values(r.per_control_stats), t);
    r.p_cv = 1.0;
    return r;
}

// Cross-validated p-value: per control, draw n_bootstrap replicas from its
// fitted mixture, score each replica's p_raw against the full group, and
// report the fraction at most the case's p_raw (averaged over replicas).
inline double bootstrap_cv_pvalue(std::span<const double> case_sample,
                                  const std::vector<std::vector<double>>& controls, double c0,
                                  int p_max, const mixture::EmConfig& em, std::uint64_t seed,
                                  int n_bootstrap = 1, int order_override = 0) {
    const double t = flr_threshold(c0);
    if (n_bootstrap < 1) throw InvalidRange("flr: n_bootstrap must be >= 1");
    detail::FlrEngine engine(controls, p_max, em, order_override);
    const std::vector<double> case_values =
        detail::stat_values(engine.stats(case_sample));
    std::vector<std::vector<std::vector<double>>> boot;
    boot.reserve(static_cast<std::size_t>(n_bootstrap));
    for (int b = 0; b < n_bootstrap; ++b) boot.push_back(engine.bootstrap_values(seed, b));
    return detail::cv_from_pools(case_values, boot, t);
}

// Minimise p_raw(c0) + p_cv(c0) over a uniform grid on [c_min, c_max].
// Statistics and bootstrap pools are computed once; only the threshold
// sweeps.  Ties resolve toward the smaller c0.
inline FlrResult select_c0(std::span<const double> case_sample,
                           const std::vector<std::vector<double>>& controls,
                           double c_min = 0.5, double c_max = 0.999, int grid_size = 50,
                           int p_max = 9, const mixture::EmConfig& em = {},
                           std::uint64_t seed = 0xf185eedULL, int n_bootstrap = 1,
                           int order_override = 0) {
    if (!(c_min > 0.0) || !(c_max < 1.0) || !(c_min < c_max))
        throw InvalidRange("flr: require 0 < c_min < c_max < 1");
    if (grid_size < 2) throw InvalidRange("flr: grid_size must be >= 2");
    if (n_bootstrap < 1) throw InvalidRange("flr: n_bootstrap must be >= 1");

    detail::FlrEngine engine(controls, p_max, em, order_override);
    std::vector<FlrStat> case_stats = engine.stats(case_sample);
    const std::vector<double> case_values = detail::stat_values(case_stats);
    std::vector<std::vector<std::vector<double>>> boot;
    boot.reserve(static_cast<std::size_t>(n_bootstrap));
    for (int b = 0; b < n_bootstrap; ++b) boot.push_back(engine.bootstrap_values(seed, b));

    FlrResult best;
    double best_objective = std::numeric_limits<double>::infinity();
    const double step = (c_max - c_min) / static_cast<double>(grid_size - 1);
    for (int i = 0; i < grid_size; ++i) {
        const double c0 = c_min + static_cast<double>(i) * step;
        const double t = flr_threshold(c0);
        const double p_raw = detail::fraction_at_least(case_values, t);
        const double p_cv = detail::cv_from_pools(case_values, boot, t);
        if (p_raw + p_cv < best_objective) {
            best_objective = p_raw + p_cv;
            best.p_raw = p_raw;
            best.p_cv = p_cv;
            best.c0 = c0;
        }
    }
    best.per_control_stats = std::move(case_stats);
    return best;
}

// Bundled knobs for the per-region study driver.
struct FlrStudyConfig {
    double c_min = 0.5;
    double c_max = 0.999;
    int grid_size = 50;
    int p_max = 9;
    mixture::EmConfig em{};
    std::uint64_t seed = 0xf185eedULL;
    int n_bootstrap = 1;
    int order_override = 0;
};

// Apply select_c0 independently to every region of a band-power study.  The
// same root seed is passed to every region; replica seeds mix in the control
// rows' content, so region results depend only on the rows themselves and
// permuting regions permutes the output exactly.
inline std::vector<FlrResult> flr_study(const BandPowerMatrix& case_matrix,
                                        const std::vector<BandPowerMatrix>& controls,
                                        const FlrStudyConfig& config = {}) {
    if (controls.empty()) throw EmptySample("flr_study: control group is empty");
    for (const auto& m : controls) {
        if (m.n_regions != case_matrix.n_regions)
            throw ShapeMismatch("flr_study: control region count differs from case");
    }
    std::vector<FlrResult> out;
    out.reserve(case_matrix.n_regions);
    for (std::size_t a = 0; a < case_matrix.n_regions; ++a) {
        const std::span<const double> row = case_matrix.region_row(a);
        std::vector<std::vector<double>> control_rows;
        control_rows.reserve(controls.size());
        for (const auto& m : controls) {
            const std::span<const double> r = m.region_row(a);
            control_rows.emplace_back(r.begin(), r.end());
        }
        out.push_back(select_c0(row, control_rows, config.c_min, config.c_max,
                                config.grid_size, config.p_max, config.em, config.seed,
                                config.n_bootstrap, config.order_override));
    }
    return out;
}

// Similarity between two samples for clustering backends: exp(min(value, 0)),
// i.e. the fitted likelihood ratio capped at one.  Identical samples score 1;
// strongly separated samples score near 0.
inline double flr_similarity(std::span<const double> a, std::span<const double> b,
                             int p_max = 9, mixture::EmConfig em = {},
                             std::uint64_t seed = 0) {
    if (seed != 0) em.seed = seed;
    const FlrStat s = flr_statistic(a, b, p_max, em);
    return std::exp(std::min(s.value, 0.0));
}

// Adapter with the pairwise-test call shape used by the clustering module.
inline auto flr_pair_test(int p_max = 4, mixture::EmConfig em = {}) {
    return [p_max, em](std::span<const double> a, std::span<const double> b,
                       std::uint64_t seed) { return flr_similarity(a, b, p_max, em, seed); };
}

}  // namespace ok::flr
