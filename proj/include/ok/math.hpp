#pragma once

// Small numeric helpers shared across modules: Gaussian log-density,
// log-sum-exp, the regularized lower incomplete gamma (for chi-squared CDFs)
// and a one-sample Kolmogorov-Smirnov test.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "ok/errors.hpp"

namespace ok::math {

constexpr double kLogTwoPi = 1.8378770664093454836;

// log N(x | mean, variance); variance must be positive.
inline double log_normal_pdf(double x, double mean, double variance) {
    const double d = x - mean;
    return -0.5 * (kLogTwoPi + std::log(variance) + d * d / variance);
}

inline double log_sum_exp(std::span<const double> xs) {
    double m = -std::numeric_limits<double>::infinity();
    for (double v : xs) m = std::max(m, v);
    if (!std::isfinite(m)) return m;  // all -inf (or a nan propagates)
    double s = 0.0;
    for (double v : xs) s += std::exp(v - m);
    return m + std::log(s);
}

// Regularized lower incomplete gamma P(a, x), via series (x < a+1) or
// continued fraction. Classic Lentz / power-series evaluation, ~1e-14.
inline double reg_lower_gamma(double a, double x) {
    if (!(a > 0.0) || x < 0.0) throw InvalidRange("reg_lower_gamma domain");
    if (x == 0.0) return 0.0;
    const double lg = std::lgamma(a);
    if (x < a + 1.0) {
        double ap = a;
        double sum = 1.0 / a;
        double del = sum;
        for (int i = 0; i < 500; ++i) {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if (std::fabs(del) < std::fabs(sum) * 1e-16) break;
        }
        return sum * std::exp(-x + a * std::log(x) - lg);
    }
    // Continued fraction for Q(a, x), then P = 1 - Q.
    const double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= 500; ++i) {
        const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < 1e-16) break;
    }
    const double q = std::exp(-x + a * std::log(x) - lg) * h;
    return 1.0 - q;
}

// CDF of chi-squared with df degrees of freedom.
inline double chi_squared_cdf(double x, double df) {
    if (x <= 0.0) return 0.0;
    return reg_lower_gamma(0.5 * df, 0.5 * x);
}

// Kolmogorov survival function Q(lambda) = 2 sum (-1)^{j-1} exp(-2 j^2 l^2).
inline double kolmogorov_q(double lambda) {
    if (lambda < 1e-10) return 1.0;
    double sum = 0.0;
    double sign = 1.0;
    for (int j = 1; j <= 100; ++j) {
        const double term = std::exp(-2.0 * lambda * lambda * j * j);
        sum += sign * term;
        if (term < 1e-16) break;
        sign = -sign;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

struct KsResult {
    double statistic = 0.0;  // sup |F_n - F|
    double p_value = 1.0;    // asymptotic, Stephens' small-sample correction
};

// One-sample KS test of xs against a continuous CDF.
inline KsResult ks_test(std::span<const double> xs, const std::function<double(double)>& cdf) {
    if (xs.empty()) throw EmptySample("ks_test: empty sample");
    std::vector<double> sorted(xs.begin(), xs.end());
    std::sort(sorted.begin(), sorted.end());
    const double n = static_cast<double>(sorted.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        const double f = cdf(sorted[i]);
        d = std::max(d, std::fabs(f - static_cast<double>(i) / n));
        d = std::max(d, std::fabs(static_cast<double>(i + 1) / n - f));
    }
    const double rn = std::sqrt(n);
    const double lambda = (rn + 0.12 + 0.11 / rn) * d;
    return {d, kolmogorov_q(lambda)};
}

}  // namespace ok::math
