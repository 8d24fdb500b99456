#pragma once

// Multiple-testing correction and detection metrics.
//
// bh_adjust implements the Benjamini-Hochberg step-up adjustment: sort raw
// p-values ascending, scale p_(i) by m/i, then enforce monotonicity by a
// running minimum from the largest rank down, clamping at 1.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "ok/errors.hpp"

namespace ok::correction {

inline std::vector<double> bh_adjust(std::span<const double> raw) {
    for (double p : raw) {
        if (!(p >= 0.0 && p <= 1.0)) throw OutOfRange("bh_adjust: p-value outside [0, 1]");
    }
    const std::size_t m = raw.size();
    if (m == 0) return {};
    std::vector<std::size_t> idx(m);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return raw[a] < raw[b]; });
    std::vector<double> adjusted(m);
    double running = 1.0;
    for (std::size_t r = m; r > 0; --r) {
        const std::size_t i = idx[r - 1];
        // Ratio first: m/r >= 1 exactly, so scaled >= raw even after rounding.
        const double scaled = raw[i] * (static_cast<double>(m) / static_cast<double>(r));
        running = std::min(running, std::min(scaled, 1.0));
        adjusted[i] = running;
    }
    return adjusted;
}

struct Metrics {
    std::size_t true_positives = 0;
    std::size_t false_positives = 0;
    std::size_t false_negatives = 0;
    std::size_t true_negatives = 0;
    std::optional<double> precision;         // absent when nothing was claimed
    std::optional<double> recall;            // absent when nothing is truly positive
    std::map<double, double> f_scores;       // keyed by w; entry absent when undefined
};

// claims[i]: the instance was flagged; truth[i]: the alternative is really true.
// F_w = (1 + w^2) / (w^2 / recall + 1 / precision), following the convention
// where w > 1 weights recall higher. Undefined whenever precision or recall
// is missing or zero.
inline Metrics compute_metrics(const std::vector<bool>& claims, const std::vector<bool>& truth,
                               std::span<const double> weights) {
    if (claims.size() != truth.size()) {
        throw ShapeMismatch("compute_metrics: claims/truth length mismatch");
    }
    Metrics m;
    for (std::size_t i = 0; i < claims.size(); ++i) {
        if (claims[i] && truth[i]) ++m.true_positives;
        else if (claims[i] && !truth[i]) ++m.false_positives;
        else if (!claims[i] && truth[i]) ++m.false_negatives;
        else ++m.true_negatives;
    }
    const std::size_t claimed = m.true_positives + m.false_positives;
    const std::size_t positives = m.true_positives + m.false_negatives;
    if (claimed > 0) {
        m.precision = static_cast<double>(m.true_positives) / static_cast<double>(claimed);
    }
    if (positives > 0) {
        m.recall = static_cast<double>(m.true_positives) / static_cast<double>(positives);
    }
    const bool usable = m.precision && m.recall && *m.precision > 0.0 && *m.recall > 0.0;
    for (double w : weights) {
        if (!usable) continue;
        const double w2 = w * w;
        m.f_scores[w] = (1.0 + w2) / (w2 / *m.recall + 1.0 / *m.precision);
    }
    return m;
}

inline const std::vector<double>& default_f_weights() {
    static const std::vector<double> w = {0.5, 1.0, 2.0};
    return w;
}

}  // namespace ok::correction
