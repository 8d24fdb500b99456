#pragma once

// Two-sample Anderson-Darling rank statistic (Scholz-Stephens k-sample form
// specialized to k = 2, midrank tie handling) with permutation p-values, and
// the one-vs-K aggregates built on it:
//
//   pad   - mean of the K case-vs-control pairwise p-values
//   cpad  - one-out-of-K cross-validated calibration of pad
//   pmad  - case vs random subsets of the pooled control epochs
//   adm   - the test applied to epoch means (a nonparametric mean-shift test)
//
// All permutation p-values use the add-one estimator
//   p = (1 + #{permutation statistics >= observed}) / (1 + n_perm),
// so p is never exactly zero. When the number of distinct group assignments
// of the pooled sample is at most n_perm, every assignment is enumerated
// once instead of sampling; the add-one form is kept, with the identity
// assignment among the enumerated ones. Comparisons against the observed
// statistic use a small relative tolerance so assignments that are tied by
// symmetry (e.g. mirror-image placements) count as ties despite rounding.
//
// Seeds for the aggregate tests are derived from the content of each sample
// pair, not from positions, so exchangeability properties (swapping two
// controls) hold exactly, not merely in distribution.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "ok/errors.hpp"
#include "ok/rng.hpp"

namespace ok {

struct AdOutcome {
    double statistic = 0.0;
    double p_value = 1.0;
    long n_perm = 0;  // permutations actually used (all assignments when enumerating)
};

enum class OkAdMethod { Pad, Cpad, Pmad, Adm };

struct OkAdResult {
    OkAdMethod method = OkAdMethod::Pad;
    double p_value = 1.0;
    std::vector<double> components;
};

inline constexpr int kDefaultNPerm = 999;

namespace detail {

// Pooled two-sample data reduced to dense ranks over the distinct values.
struct Pooled {
    std::vector<int> rank;  // dense rank in [0, L) of each pooled slot
    std::vector<int> mult;  // multiplicity of each distinct value
    int n1 = 0;
    int n2 = 0;
};

inline Pooled pool_ranks(std::span<const double> x, std::span<const double> y) {
    Pooled p;
    p.n1 = static_cast<int>(x.size());
    p.n2 = static_cast<int>(y.size());
    const int n = p.n1 + p.n2;
    std::vector<double> values;
    values.reserve(n);
    values.insert(values.end(), x.begin(), x.end());
    values.insert(values.end(), y.begin(), y.end());
    std::vector<double> sorted = values;
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    p.mult.assign(sorted.size(), 0);
    p.rank.resize(n);
    for (int i = 0; i < n; ++i) {
        const auto it = std::lower_bound(sorted.begin(), sorted.end(), values[i]);
        const int r = static_cast<int>(it - sorted.begin());
        p.rank[i] = r;
        ++p.mult[r];
    }
    return p;
}

// Tie-adjusted A2_akN for k = 2 from per-distinct-value counts of sample 1.
// f1[j] = number of sample-1 observations equal to the j-th distinct value.
inline double ad2_from_counts(const std::vector<int>& mult, const std::vector<int>& f1,
                              int n1, int n2) {
    const int L = static_cast<int>(mult.size());
    if (L <= 1) return 0.0;  // all pooled values identical
    const double N = static_cast<double>(n1) + static_cast<double>(n2);
    double inner1 = 0.0;
    double inner2 = 0.0;
    double m1 = 0.0;  // cumulative count of sample 1 strictly before value j
    double b = 0.0;   // cumulative pooled count strictly before value j
    for (int j = 0; j < L; ++j) {
        const double lj = mult[j];
        const double g1 = f1[j];
        const double g2 = lj - g1;
        const double mt1 = m1 + 0.5 * g1;
        const double mt2 = (b - m1) + 0.5 * g2;
        const double bt = b + 0.5 * lj;
        const double denom = bt * (N - bt) - 0.25 * N * lj;
        const double d1 = N * mt1 - n1 * bt;
        const double d2 = N * mt2 - n2 * bt;
        inner1 += lj * d1 * d1 / denom;
        inner2 += lj * d2 * d2 / denom;
        m1 += g1;
        b += lj;
    }
    return (N - 1.0) / (N * N) * (inner1 / n1 + inner2 / n2);
}

// Tie-safe ">= observed" comparison: mirror-symmetric assignments are exact
// ties mathematically but may round differently term by term.
inline bool counts_as_ge(double stat, double observed) {
    return stat >= observed - 1e-9 * (1.0 + std::abs(observed));
}

// C(n, k) if it is <= cap, otherwise any value > cap.
inline long long capped_binomial(int n, int k, long long cap) {
    if (k < 0 || k > n) return 0;
    k = std::min(k, n - k);
    long long c = 1;
    for (int i = 1; i <= k; ++i) {
        c = c * (n - k + i) / i;  // exact: prefix products are binomials
        if (c > cap) return cap + 1;
    }
    return c;
}

}  // namespace detail

// The k=2 Anderson-Darling rank statistic of the pooled order; invariant
// under any strictly increasing transform applied to both samples jointly.
inline double ad2_statistic(std::span<const double> x, std::span<const double> y) {
    if (x.empty() || y.empty()) throw EmptySample("ad2_statistic: empty sample");
    const detail::Pooled p = detail::pool_ranks(x, y);
    std::vector<int> f1(p.mult.size(), 0);
    for (int i = 0; i < p.n1; ++i) ++f1[p.rank[i]];
    return detail::ad2_from_counts(p.mult, f1, p.n1, p.n2);
}

// Permutation p-value for the two-sample statistic. Enumerates all distinct
// group assignments when there are at most n_perm of them; otherwise samples
// n_perm uniform relabelings. Deterministic given the seed.
inline AdOutcome ad2_pvalue(std::span<const double> x, std::span<const double> y,
                            int n_perm, std::uint64_t seed) {
    if (n_perm < 99) throw InvalidRange("ad2_pvalue: n_perm must be >= 99");
    if (x.empty() || y.empty()) throw EmptySample("ad2_pvalue: empty sample");
    const detail::Pooled p = detail::pool_ranks(x, y);
    const int n = p.n1 + p.n2;
    const int L = static_cast<int>(p.mult.size());
    std::vector<int> f1(L, 0);
    for (int i = 0; i < p.n1; ++i) ++f1[p.rank[i]];
    AdOutcome out;
    out.statistic = detail::ad2_from_counts(p.mult, f1, p.n1, p.n2);

    const long long total = detail::capped_binomial(n, p.n1, n_perm);
    long count = 0;
    if (total <= n_perm) {
        // Exhaustive: walk all combinations of slot positions for group 1.
        std::vector<int> pick(p.n1);
        for (int i = 0; i < p.n1; ++i) pick[i] = i;
        for (;;) {
            std::fill(f1.begin(), f1.end(), 0);
            for (int i : pick) ++f1[p.rank[i]];
            const double s = detail::ad2_from_counts(p.mult, f1, p.n1, p.n2);
            if (detail::counts_as_ge(s, out.statistic)) ++count;
            int i = p.n1 - 1;
            while (i >= 0 && pick[i] == n - p.n1 + i) --i;
            if (i < 0) break;
            ++pick[i];
            for (int j = i + 1; j < p.n1; ++j) pick[j] = pick[j - 1] + 1;
        }
        out.n_perm = static_cast<long>(total);
    } else {
        rng::Rng gen(seed);
        std::vector<int> slots = p.rank;
        for (int rep = 0; rep < n_perm; ++rep) {
            // Partial Fisher-Yates: the first n1 slots form group 1.
            for (int i = 0; i < p.n1; ++i) {
                const auto j = i + static_cast<int>(gen.below(static_cast<std::uint64_t>(n - i)));
                std::swap(slots[i], slots[j]);
            }
            std::fill(f1.begin(), f1.end(), 0);
            for (int i = 0; i < p.n1; ++i) ++f1[slots[i]];
            const double s = detail::ad2_from_counts(p.mult, f1, p.n1, p.n2);
            if (detail::counts_as_ge(s, out.statistic)) ++count;
        }
        out.n_perm = n_perm;
    }
    out.p_value = (1.0 + count) / (1.0 + static_cast<double>(out.n_perm));
    return out;
}

namespace detail {

inline constexpr std::uint64_t kPairStream = 0xadf2ULL;

// Content-derived seed for one case-vs-control test.
inline std::uint64_t pair_seed(std::uint64_t seed, std::span<const double> a,
                               std::span<const double> b) {
    return rng::derive(seed, kPairStream, rng::hash_doubles(a), rng::hash_doubles(b));
}

inline double mean_of(std::span<const double> xs) {
    double s = 0.0;
    for (double v : xs) s += v;
    return s / static_cast<double>(xs.size());
}

}  // namespace detail

// Average of the K case-vs-control p-values.
inline OkAdResult pad(std::span<const double> kase, const std::vector<std::vector<double>>& controls,
                      int n_perm, std::uint64_t seed) {
    if (controls.empty()) throw InvalidRange("pad: need at least one control");
    OkAdResult r;
    r.method = OkAdMethod::Pad;
    r.components.reserve(controls.size());
    double sum = 0.0;
    for (const auto& ctrl : controls) {
        const double p = ad2_pvalue(kase, ctrl, n_perm, detail::pair_seed(seed, kase, ctrl)).p_value;
        r.components.push_back(p);
        sum += p;
    }
    r.p_value = sum / static_cast<double>(controls.size());
    return r;
}

// One-out-of-K calibration: each control is scored by pad against the other
// K-1 controls; the result is the fraction of those K scores at most the
// case's own pad score (small = the case is more extreme than nearly all
// controls). literal_ge flips the comparison to ">=".
inline OkAdResult cpad(std::span<const double> kase, const std::vector<std::vector<double>>& controls,
                       int n_perm, std::uint64_t seed, bool literal_ge = false) {
    const std::size_t k = controls.size();
    if (k < 2) throw InvalidRange("cpad: need at least two controls");
    const double q_case = pad(kase, controls, n_perm, seed).p_value;
    OkAdResult r;
    r.method = OkAdMethod::Cpad;
    r.components.reserve(k);
    int hits = 0;
    for (std::size_t i = 0; i < k; ++i) {
        std::vector<std::vector<double>> rest;
        rest.reserve(k - 1);
        for (std::size_t j = 0; j < k; ++j) {
            if (j != i) rest.push_back(controls[j]);
        }
        const double q = pad(controls[i], rest, n_perm, seed).p_value;
        r.components.push_back(q);
        if (literal_ge ? (q >= q_case) : (q <= q_case)) ++hits;
    }
    r.p_value = static_cast<double>(hits) / static_cast<double>(k);
    return r;
}

// Pooled-permutation variant: the case is tested against n_subsets random
// subsets of the pooled control epochs, each subset the size of one control
// sample (the first control's epoch count); the p-values are averaged.
// n_subsets == 0 uses the case epoch count. The pool is sorted before
// drawing, so the result is invariant under any reordering of the controls.
inline OkAdResult pmad(std::span<const double> kase, const std::vector<std::vector<double>>& controls,
                       int n_subsets, std::uint64_t seed, int n_perm = kDefaultNPerm) {
    if (controls.empty()) throw InvalidRange("pmad: need at least one control");
    if (kase.empty()) throw EmptySample("pmad: empty case sample");
    const std::size_t subset_size = controls.front().size();
    std::vector<double> pool;
    for (const auto& ctrl : controls) pool.insert(pool.end(), ctrl.begin(), ctrl.end());
    if (pool.size() < subset_size || subset_size == 0) {
        throw InvalidRange("pmad: pooled controls smaller than the subset size");
    }
    std::sort(pool.begin(), pool.end());
    const int s = n_subsets > 0 ? n_subsets : static_cast<int>(kase.size());
    const std::uint64_t base =
        rng::derive(seed, 0xad9dULL, rng::hash_doubles(kase), rng::hash_doubles(pool));
    OkAdResult r;
    r.method = OkAdMethod::Pmad;
    r.components.reserve(s);
    double sum = 0.0;
    std::vector<int> idx(pool.size());
    std::vector<double> subset(subset_size);
    for (int rep = 0; rep < s; ++rep) {
        rng::Rng gen(rng::derive(base, static_cast<std::uint64_t>(rep)));
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
        for (std::size_t i = 0; i < subset_size; ++i) {
            const auto j = i + gen.below(idx.size() - i);
            std::swap(idx[i], idx[j]);
            subset[i] = pool[idx[i]];
        }
        const double p =
            ad2_pvalue(kase, subset, n_perm, detail::pair_seed(seed, kase, subset)).p_value;
        r.components.push_back(p);
        sum += p;
    }
    r.p_value = sum / static_cast<double>(s);
    return r;
}

// Mean-shift variant: the case epoch mean (a singleton sample) is tested
// against the K control epoch means. With K + 1 <= n_perm + 1 placements the
// permutation distribution is enumerated exactly.
inline OkAdResult adm(std::span<const double> case_row, const std::vector<std::vector<double>>& control_rows,
                      int n_perm, std::uint64_t seed) {
    if (control_rows.size() < 2) throw InvalidRange("adm: need at least two controls");
    if (case_row.empty()) throw EmptySample("adm: empty case sample");
    const std::vector<double> case_mean{detail::mean_of(case_row)};
    std::vector<double> control_means;
    control_means.reserve(control_rows.size());
    for (const auto& row : control_rows) {
        if (row.empty()) throw EmptySample("adm: empty control sample");
        control_means.push_back(detail::mean_of(row));
    }
    const AdOutcome o =
        ad2_pvalue(case_mean, control_means, n_perm, detail::pair_seed(seed, case_mean, control_means));
    OkAdResult r;
    r.method = OkAdMethod::Adm;
    r.p_value = o.p_value;
    r.components = {o.p_value};
    return r;
}

}  // namespace ok
