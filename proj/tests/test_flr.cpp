#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "ok/flr.hpp"
#include "ok/math.hpp"
#include "ok/rng.hpp"
#include "ok/spectrum.hpp"

using ok::flr::FlrResult;
using ok::flr::FlrStat;
using ok::mixture::EmConfig;

namespace reference {

// Closed-form order-1 Gaussian MLE log-likelihood.
double normal_mle_loglik(const std::vector<double>& xs) {
    const double n = static_cast<double>(xs.size());
    const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
    double v = 0.0;
    for (double x : xs) v += (x - mean) * (x - mean);
    v /= n;
    double s = 0.0;
    for (double x : xs) s += ok::math::log_normal_pdf(x, mean, v);
    return s;
}

// p_raw recomputed from a statistic vector at threshold log(1 - c0).
double p_raw_at(const std::vector<FlrStat>& stats, double c0) {
    const double t = std::log1p(-c0);
    std::size_t hits = 0;
    for (const auto& s : stats)
        if (s.value >= t) ++hits;
    return static_cast<double>(hits) / static_cast<double>(stats.size());
}

std::vector<double> gaussian_sample(std::size_t n, double mean, double sd,
                                    std::uint64_t seed) {
    ok::rng::Rng gen(seed);
    std::vector<double> out(n);
    for (auto& x : out) x = mean + sd * gen.normal();
    return out;
}

std::vector<double> bimodal_sample(std::size_t half, double gap, std::uint64_t seed) {
    auto xs = gaussian_sample(half, 0.0, 1.0, seed);
    const auto more = gaussian_sample(half, gap, 1.0, seed + 1);
    xs.insert(xs.end(), more.begin(), more.end());
    return xs;
}

}  // namespace reference

namespace {

EmConfig tight_config(int restarts = 1) {
    EmConfig em;
    em.tol = 1e-9;
    em.restarts = restarts;
    return em;
}

void check_identity(const FlrStat& s) {
    CHECK(s.value ==
          Catch::Approx(s.pooled_loglik - s.case_loglik - s.control_loglik).margin(1e-9));
}

ok::BandPowerMatrix matrix_from_rows(const std::vector<std::vector<double>>& rows) {
    ok::BandPowerMatrix m;
    m.n_regions = rows.size();
    m.n_epochs = rows.front().size();
    for (const auto& r : rows) m.values.insert(m.values.end(), r.begin(), r.end());
    return m;
}

}  // namespace

TEST_CASE("flr statistic: identical samples score zero at a common order") {
    const EmConfig em = tight_config(3);

    // Seeds where BIC agrees on order 1 for case, control, and pool.
    for (std::uint64_t seed : {12ULL, 14ULL, 15ULL}) {
        const auto y = reference::gaussian_sample(200, 0.0, 1.0, seed);
        const FlrStat s = ok::flr::flr_statistic(y, y, 3, em);
        check_identity(s);
        REQUIRE(s.case_order == 1);
        REQUIRE(s.control_order == 1);
        REQUIRE(s.pooled_order == 1);
        CHECK(std::fabs(s.value) <= 1e-6);
        CHECK(s.case_loglik == Catch::Approx(s.control_loglik).margin(1e-12));
    }

    // Forced common order keeps the cancellation for any order.
    const auto uni = reference::gaussian_sample(150, 2.0, 0.7, 31);
    const FlrStat forced1 = ok::flr::flr_statistic(uni, uni, 1, em, 1);
    CHECK(std::fabs(forced1.value) <= 1e-6);
    for (std::uint64_t seed : {100ULL, 104ULL, 108ULL, 112ULL}) {
        const auto bi = reference::bimodal_sample(100, 6.0, seed);
        const FlrStat forced2 = ok::flr::flr_statistic(bi, bi, 2, em, 2);
        check_identity(forced2);
        CHECK(std::fabs(forced2.value) <= 1e-6);
    }

    // When the pooled fit picks a higher order the premise fails and the
    // value may be positive; the decomposition identity must still hold.
    const auto y13 = reference::gaussian_sample(200, 0.0, 1.0, 13);
    const FlrStat mixed = ok::flr::flr_statistic(y13, y13, 3, em);
    check_identity(mixed);
    if (mixed.pooled_order != mixed.case_order) CHECK(mixed.value > 0.0);
}

TEST_CASE("flr statistic: well-separated samples score strongly negative") {
    const EmConfig em = tight_config(3);
    const auto y = reference::gaussian_sample(200, 0.0, 1.0, 21);
    const auto x = reference::gaussian_sample(200, 10.0, 1.0, 22);
    const FlrStat s = ok::flr::flr_statistic(y, x, 4, em);

    check_identity(s);
    CHECK(s.value < -50.0);
    // The pooled two-component fit pays one bit (log 2) per observation for
    // the component labels: value is near -(n_case + n_control) * log 2.
    CHECK(s.value == Catch::Approx(-400.0 * std::log(2.0)).margin(20.0));
    CHECK(s.case_order == 1);
    CHECK(s.control_order == 1);
    CHECK(s.pooled_order == 2);

    // Marginal order-1 logliks equal the closed-form Gaussian MLE values.
    CHECK(s.case_loglik == Catch::Approx(reference::normal_mle_loglik(y)).margin(1e-7));
    CHECK(s.control_loglik == Catch::Approx(reference::normal_mle_loglik(x)).margin(1e-7));
}

TEST_CASE("flr statistic: null pairs stay near zero") {
    const EmConfig em = tight_config();

    SECTION("forced order 1 keeps the value in the likelihood-ratio range") {
        for (int rep = 0; rep < 60; ++rep) {
            const auto y = reference::gaussian_sample(200, 0.0, 1.0, 1000 + 2 * rep);
            const auto x = reference::gaussian_sample(200, 0.0, 1.0, 1001 + 2 * rep);
            const FlrStat s = ok::flr::flr_statistic(y, x, 1, em, 1);
            check_identity(s);
            REQUIRE(s.value <= 1e-6);
            REQUIRE(s.value >= -20.0);
        }
    }

    SECTION("BIC-selected orders mostly agree and then keep the value nonpositive") {
        const EmConfig em2 = tight_config(2);
        int common = 0;
        for (int rep = 0; rep < 10; ++rep) {
            const auto y = reference::gaussian_sample(200, 0.0, 1.0, 7000 + 2 * rep);
            const auto x = reference::gaussian_sample(200, 0.0, 1.0, 7001 + 2 * rep);
            const FlrStat s = ok::flr::flr_statistic(y, x, 2, em2);
            check_identity(s);
            if (s.case_order == 1 && s.control_order == 1 && s.pooled_order == 1) {
                ++common;
                CHECK(s.value <= 1e-6);
                CHECK(s.value >= -20.0);
            }
        }
        CHECK(common >= 6);
    }
}

TEST_CASE("flr statistic: forced common order keeps the value nonpositive") {
    const EmConfig em = tight_config();
    for (int rep = 0; rep < 50; ++rep) {
        const std::uint64_t base = 20000 + 10 * rep;
        std::vector<double> y, x;
        switch (rep % 3) {
            case 0:
                y = reference::gaussian_sample(120, 0.0, 1.0, base);
                x = reference::gaussian_sample(90, 0.5, 2.0, base + 1);
                break;
            case 1:
                y = reference::bimodal_sample(60, 4.0, base);
                x = reference::gaussian_sample(100, 2.0, 1.5, base + 2);
                break;
            default:
                y = reference::gaussian_sample(80, -1.0, 0.5, base);
                for (auto& v : y) v = std::exp(v);
                x = reference::gaussian_sample(80, -1.0, 0.5, base + 3);
                for (auto& v : x) v = std::exp(v);
                break;
        }
        const FlrStat s = ok::flr::flr_statistic(y, x, 1, em, 1);
        check_identity(s);
        REQUIRE(s.value <= 1e-6);
    }

    const EmConfig em5 = tight_config(5);
    for (int rep = 0; rep < 12; ++rep) {
        const auto y = reference::bimodal_sample(150, 6.0, 3000 + 4 * rep);
        const auto x = reference::bimodal_sample(150, 6.0, 3002 + 4 * rep);
        const FlrStat s = ok::flr::flr_statistic(y, x, 2, em5, 2);
        REQUIRE(s.value <= 1e-6);
    }
}

TEST_CASE("flr statistic: doubled null statistic matches the chi-squared law", "[calibration]") {
    const EmConfig em = tight_config();
    std::vector<double> doubled;
    doubled.reserve(300);
    for (int rep = 0; rep < 300; ++rep) {
        const auto y = reference::gaussian_sample(500, 0.0, 1.0, 50000 + 2 * rep);
        const auto x = reference::gaussian_sample(500, 0.0, 1.0, 50001 + 2 * rep);
        doubled.push_back(-2.0 * ok::flr::flr_statistic(y, x, 1, em, 1).value);
    }
    const auto two = ok::math::ks_test(
        doubled, [](double v) { return ok::math::chi_squared_cdf(v, 2.0); });
    CHECK(two.p_value > 0.01);

    // Negative control: the same statistics are far from chi-squared(5).
    const auto five = ok::math::ks_test(
        doubled, [](double v) { return ok::math::chi_squared_cdf(v, 5.0); });
    CHECK(five.p_value < 1e-10);
}

TEST_CASE("flr pvalue: threshold limits, recomputation, and validation") {
    const EmConfig em = tight_config();
    const auto y = reference::gaussian_sample(100, 0.0, 1.0, 555);
    std::vector<std::vector<double>> controls;
    for (int k = 0; k < 8; ++k)
        controls.push_back(reference::gaussian_sample(100, 0.0, 1.0, 600 + k));

    const FlrResult near_one = ok::flr::flr_pvalue(y, controls, 1.0 - 1e-12, 1, em, 1);
    CHECK(near_one.p_raw == 1.0);
    const FlrResult near_zero = ok::flr::flr_pvalue(y, controls, 1e-12, 1, em, 1);
    CHECK(near_zero.p_raw == 0.0);

    const FlrResult mid = ok::flr::flr_pvalue(y, controls, 0.8, 1, em, 1);
    REQUIRE(mid.per_control_stats.size() == 8);
    CHECK(mid.p_raw == reference::p_raw_at(mid.per_control_stats, 0.8));
    CHECK(mid.p_cv == 1.0);  // untouched by the raw-only call
    for (const auto& s : mid.per_control_stats) check_identity(s);

    // Per-control statistics equal the standalone pairwise calls exactly.
    for (int k = 0; k < 3; ++k) {
        const FlrStat solo = ok::flr::flr_statistic(y, controls[k], 1, em, 1);
        CHECK(mid.per_control_stats[k].value == solo.value);
        CHECK(mid.per_control_stats[k].pooled_loglik == solo.pooled_loglik);
    }

    CHECK_THROWS_AS(ok::flr::flr_pvalue(y, controls, 0.0, 1, em, 1), ok::InvalidC0);
    CHECK_THROWS_AS(ok::flr::flr_pvalue(y, controls, 1.0, 1, em, 1), ok::InvalidC0);
    CHECK_THROWS_AS(ok::flr::flr_pvalue(y, controls, -0.2, 1, em, 1), ok::InvalidC0);
    CHECK_THROWS_AS(ok::flr::flr_pvalue(y, {}, 0.5, 1, em, 1), ok::EmptySample);
    CHECK_THROWS_AS(ok::flr::flr_pvalue({}, controls, 0.5, 1, em, 1), ok::EmptySample);
}

TEST_CASE("flr pvalue: nondecreasing in the critical value") {
    const EmConfig em = tight_config();
    const auto y = reference::gaussian_sample(80, 0.1, 1.1, 42);
    std::vector<std::vector<double>> controls;
    for (int k = 0; k < 12; ++k)
        controls.push_back(reference::gaussian_sample(80, 0.0, 1.0, 4300 + k));

    const FlrResult base = ok::flr::flr_pvalue(y, controls, 0.5, 1, em, 1);
    double prev = -1.0;
    for (int i = 0; i < 50; ++i) {
        const double c0 = 0.01 + 0.98 * i / 49.0;
        const double p = reference::p_raw_at(base.per_control_stats, c0);
        REQUIRE(p >= prev);
        prev = p;
        // The recomputation matches a fresh call at this threshold.
        if (i % 16 == 0)
            CHECK(p == ok::flr::flr_pvalue(y, controls, c0, 1, em, 1).p_raw);
    }
}

TEST_CASE("flr pvalue: null calibration tracks the critical value", "[calibration]") {
    const EmConfig em = tight_config();
    std::vector<std::vector<double>> controls;
    for (int k = 0; k < 200; ++k)
        controls.push_back(reference::gaussian_sample(500, 0.0, 1.0, 40000 + k));

    // A typical case draw: p_raw lands within 0.05 of c0 itself.
    const auto typical = reference::gaussian_sample(500, 0.0, 1.0, 70004);
    const FlrResult r = ok::flr::flr_pvalue(typical, controls, 0.5, 1, em, 1);
    for (double c0 : {0.5, 0.75, 0.9}) {
        const double p = reference::p_raw_at(r.per_control_stats, c0);
        CHECK(std::fabs(p - c0) <= 0.05);
    }

    // Averaged over case draws the deviation is well inside the band even
    // though single atypical cases can stray beyond it.
    for (double c0 : {0.5, 0.9}) {
        double total = 0.0;
        for (int cs = 0; cs < 20; ++cs) {
            const auto y = reference::gaussian_sample(500, 0.0, 1.0, 70000 + cs);
            const FlrResult rr = ok::flr::flr_pvalue(y, controls, c0, 1, em, 1);
            total += rr.p_raw - c0;
        }
        CHECK(std::fabs(total / 20.0) <= 0.05);
    }
}

TEST_CASE("bootstrap cv pvalue: determinism, lattice, and permutation invariance") {
    const EmConfig em = tight_config();
    const auto y = reference::gaussian_sample(50, 0.0, 1.0, 999);
    std::vector<std::vector<double>> controls;
    for (int k = 0; k < 7; ++k)
        controls.push_back(reference::gaussian_sample(50, 0.0, 1.0, 1100 + k));

    const double p1 = ok::flr::bootstrap_cv_pvalue(y, controls, 0.8, 1, em, 55, 1, 1);
    const double p2 = ok::flr::bootstrap_cv_pvalue(y, controls, 0.8, 1, em, 55, 1, 1);
    CHECK(p1 == p2);
    CHECK(p1 * 7.0 == Catch::Approx(std::round(p1 * 7.0)).margin(1e-12));
    CHECK(p1 >= 0.0);
    CHECK(p1 <= 1.0);

    // Replica seeds follow control content, so reordering the control group
    // cannot change the answer.
    std::vector<std::vector<double>> permuted{controls[3], controls[0], controls[5],
                                              controls[1], controls[6], controls[4],
                                              controls[2]};
    CHECK(ok::flr::bootstrap_cv_pvalue(y, permuted, 0.8, 1, em, 55, 1, 1) == p1);

    // Averaging three replica rounds lands on the 1/21 lattice.
    const double p3 = ok::flr::bootstrap_cv_pvalue(y, controls, 0.8, 1, em, 55, 3, 1);
    CHECK(p3 * 21.0 == Catch::Approx(std::round(p3 * 21.0)).margin(1e-12));
    CHECK(ok::flr::bootstrap_cv_pvalue(y, controls, 0.8, 1, em, 55, 3, 1) == p3);

    // A single control yields a single indicator.
    const std::vector<std::vector<double>> one{controls[0]};
    const double single = ok::flr::bootstrap_cv_pvalue(y, one, 0.8, 1, em, 9, 1, 1);
    CHECK((single == 0.0 || single == 1.0));

    CHECK_THROWS_AS(ok::flr::bootstrap_cv_pvalue(y, controls, 0.8, 1, em, 55, 0, 1),
                    ok::InvalidRange);
    CHECK_THROWS_AS(ok::flr::bootstrap_cv_pvalue(y, controls, 1.2, 1, em, 55, 1, 1),
                    ok::InvalidC0);
}

TEST_CASE("bootstrap cv pvalue: in-group case scores high", "[calibration]") {
    const EmConfig em = tight_config();
    double total = 0.0;
    double lowest = 1.0;
    for (int rep = 0; rep < 10; ++rep) {
        std::vector<std::vector<double>> controls;
        for (int k = 0; k < 10; ++k)
            controls.push_back(reference::gaussian_sample(60, 0.0, 1.0, 100000 + 100 * rep + k));

        // The case IS control 1's sample: its self-pair statistic is exactly
        // zero, so its raw p-value is guaranteed at least 1/K.
        const FlrResult raw = ok::flr::flr_pvalue(controls[0], controls, 0.9, 1, em, 1);
        REQUIRE(raw.p_raw >= 0.1);
        CHECK(raw.per_control_stats[0].value == Catch::Approx(0.0).margin(1e-6));

        const double p = ok::flr::bootstrap_cv_pvalue(controls[0], controls, 0.9, 1, em,
                                                      4242 + rep, 1, 1);
        total += p;
        lowest = std::min(lowest, p);
    }
    CHECK(total / 10.0 >= 0.55);
    CHECK(lowest >= 0.25);
}

TEST_CASE("select c0: tie-break toward the smallest grid point") {
    const EmConfig em = tight_config();
    // Both controls sit far from the case and from each other: every case
    // statistic is far below every threshold, so the objective is zero on
    // the whole grid and the tie resolves to c_min.
    const std::vector<std::vector<double>> controls{
        reference::gaussian_sample(50, 0.0, 0.1, 881),
        reference::gaussian_sample(50, 100.0, 0.1, 882)};
    const auto far_case = reference::gaussian_sample(50, 50.0, 0.1, 883);

    const FlrResult r = ok::flr::select_c0(far_case, controls, 0.5, 0.999, 50, 1, em, 99, 1, 1);
    CHECK(r.c0 == 0.5);
    CHECK(r.p_raw == 0.0);
    CHECK(r.p_cv == 0.0);
    REQUIRE(r.per_control_stats.size() == 2);
    CHECK(r.per_control_stats[0].value < -100.0);
    CHECK(r.per_control_stats[1].value < -100.0);
}

TEST_CASE("select c0: grid endpoints, recomputation, and validation") {
    const EmConfig em = tight_config();
    const auto y = reference::gaussian_sample(60, 0.0, 1.0, 321);
    std::vector<std::vector<double>> controls;
    for (int k = 0; k < 5; ++k)
        controls.push_back(reference::gaussian_sample(60, 0.0, 1.0, 400 + k));

    SECTION("grid_size 2 evaluates exactly the two endpoints") {
        const FlrResult r = ok::flr::select_c0(y, controls, 0.5, 0.999, 2, 1, em, 11, 1, 1);
        CHECK((r.c0 == 0.5 || r.c0 == 0.999));
    }

    SECTION("the reused-statistics sweep equals fresh per-threshold calls") {
        const double c_min = 0.5, c_max = 0.99;
        const int grid = 7;
        const FlrResult r = ok::flr::select_c0(y, controls, c_min, c_max, grid, 1, em,
                                               12345, 1, 1);
        double best = std::numeric_limits<double>::infinity();
        double best_c0 = -1.0;
        for (int i = 0; i < grid; ++i) {
            const double c0 = c_min + i * (c_max - c_min) / (grid - 1);
            const double p_raw = ok::flr::flr_pvalue(y, controls, c0, 1, em, 1).p_raw;
            const double p_cv =
                ok::flr::bootstrap_cv_pvalue(y, controls, c0, 1, em, 12345, 1, 1);
            if (p_raw + p_cv < best) {
                best = p_raw + p_cv;
                best_c0 = c0;
            }
        }
        CHECK(r.c0 == best_c0);
        CHECK(r.p_raw + r.p_cv == best);
        CHECK(r.p_raw == ok::flr::flr_pvalue(y, controls, r.c0, 1, em, 1).p_raw);
        CHECK(r.p_cv == ok::flr::bootstrap_cv_pvalue(y, controls, r.c0, 1, em, 12345, 1, 1));
        CHECK(r.p_raw == reference::p_raw_at(r.per_control_stats, r.c0));
    }

    SECTION("determinism") {
        const FlrResult a = ok::flr::select_c0(y, controls, 0.5, 0.999, 25, 1, em, 7, 1, 1);
        const FlrResult b = ok::flr::select_c0(y, controls, 0.5, 0.999, 25, 1, em, 7, 1, 1);
        CHECK(a.c0 == b.c0);
        CHECK(a.p_raw == b.p_raw);
        CHECK(a.p_cv == b.p_cv);
    }

    SECTION("validation") {
        CHECK_THROWS_AS(ok::flr::select_c0(y, controls, 0.0, 0.9, 10, 1, em, 1, 1, 1),
                        ok::InvalidRange);
        CHECK_THROWS_AS(ok::flr::select_c0(y, controls, 0.5, 1.0, 10, 1, em, 1, 1, 1),
                        ok::InvalidRange);
        CHECK_THROWS_AS(ok::flr::select_c0(y, controls, 0.9, 0.5, 10, 1, em, 1, 1, 1),
                        ok::InvalidRange);
        CHECK_THROWS_AS(ok::flr::select_c0(y, controls, 0.5, 0.9, 1, 1, em, 1, 1, 1),
                        ok::InvalidRange);
        CHECK_THROWS_AS(ok::flr::select_c0(y, controls, 0.5, 0.9, 10, 1, em, 1, 0, 1),
                        ok::InvalidRange);
    }
}

TEST_CASE("select c0: control permutation leaves the selection unchanged") {
    const EmConfig em = tight_config();
    const auto y = reference::gaussian_sample(50, 0.0, 1.0, 999);
    std::vector<std::vector<double>> controls;
    for (int k = 0; k < 6; ++k)
        controls.push_back(reference::gaussian_sample(50, 0.0, 1.0, 1100 + k));
    const std::vector<std::size_t> order{3, 0, 5, 1, 4, 2};
    std::vector<std::vector<double>> permuted;
    for (std::size_t i : order) permuted.push_back(controls[i]);

    const FlrResult a = ok::flr::select_c0(y, controls, 0.5, 0.99, 9, 1, em, 55, 1, 1);
    const FlrResult b = ok::flr::select_c0(y, permuted, 0.5, 0.99, 9, 1, em, 55, 1, 1);
    CHECK(a.c0 == b.c0);
    CHECK(a.p_raw == b.p_raw);
    CHECK(a.p_cv == b.p_cv);
    for (std::size_t i = 0; i < order.size(); ++i)
        CHECK(b.per_control_stats[i].value == a.per_control_stats[order[i]].value);
}

TEST_CASE("flr study: single-region reduction and region independence") {
    const EmConfig em = tight_config();
    ok::flr::FlrStudyConfig cfg;
    cfg.c_min = 0.5;
    cfg.c_max = 0.99;
    cfg.grid_size = 9;
    cfg.p_max = 1;
    cfg.em = em;
    cfg.seed = 314;
    cfg.order_override = 1;

    std::vector<std::vector<double>> case_rows;
    std::vector<std::vector<std::vector<double>>> control_rows(4);
    for (int a = 0; a < 3; ++a) {
        case_rows.push_back(reference::gaussian_sample(40, 0.2 * a, 1.0, 80000 + a));
        for (int k = 0; k < 4; ++k)
            control_rows[k].push_back(
                reference::gaussian_sample(40, 0.0, 1.0, 81000 + 10 * a + k));
    }
    const ok::BandPowerMatrix case_matrix = matrix_from_rows(case_rows);
    std::vector<ok::BandPowerMatrix> controls;
    for (const auto& rows : control_rows) controls.push_back(matrix_from_rows(rows));

    const auto results = ok::flr::flr_study(case_matrix, controls, cfg);
    REQUIRE(results.size() == 3);

    SECTION("each region equals a standalone selection on its rows") {
        for (int a = 0; a < 3; ++a) {
            std::vector<std::vector<double>> rows;
            for (int k = 0; k < 4; ++k) rows.push_back(control_rows[k][a]);
            const FlrResult solo =
                ok::flr::select_c0(case_rows[a], rows, cfg.c_min, cfg.c_max, cfg.grid_size,
                                   cfg.p_max, cfg.em, cfg.seed, cfg.n_bootstrap,
                                   cfg.order_override);
            CHECK(results[a].c0 == solo.c0);
            CHECK(results[a].p_raw == solo.p_raw);
            CHECK(results[a].p_cv == solo.p_cv);
        }
    }

    SECTION("permuting regions permutes the output exactly") {
        const std::vector<std::size_t> perm{2, 0, 1};
        std::vector<std::vector<double>> case_permuted;
        std::vector<std::vector<std::vector<double>>> control_permuted(4);
        for (std::size_t a : perm) {
            case_permuted.push_back(case_rows[a]);
            for (int k = 0; k < 4; ++k) control_permuted[k].push_back(control_rows[k][a]);
        }
        std::vector<ok::BandPowerMatrix> pc;
        for (const auto& rows : control_permuted) pc.push_back(matrix_from_rows(rows));
        const auto permuted = ok::flr::flr_study(matrix_from_rows(case_permuted), pc, cfg);
        for (std::size_t i = 0; i < perm.size(); ++i) {
            CHECK(permuted[i].c0 == results[perm[i]].c0);
            CHECK(permuted[i].p_raw == results[perm[i]].p_raw);
            CHECK(permuted[i].p_cv == results[perm[i]].p_cv);
        }
    }

    SECTION("a case identical to the single control accepts everywhere") {
        const auto self = ok::flr::flr_study(case_matrix, {case_matrix}, cfg);
        for (const auto& r : self) CHECK(r.p_raw == 1.0);
    }

    SECTION("shape and emptiness validation") {
        ok::BandPowerMatrix two_regions = matrix_from_rows(
            {case_rows[0], case_rows[1]});
        CHECK_THROWS_AS(ok::flr::flr_study(case_matrix, {two_regions}, cfg),
                        ok::ShapeMismatch);
        CHECK_THROWS_AS(ok::flr::flr_study(case_matrix, {}, cfg), ok::EmptySample);
    }
}

TEST_CASE("flr similarity: identity, separation, and near-symmetry") {
    const EmConfig em = tight_config(2);
    const auto y = reference::gaussian_sample(100, 0.0, 1.0, 42);
    const auto near = reference::gaussian_sample(100, 0.0, 1.0, 44);
    const auto far = reference::gaussian_sample(100, 8.0, 1.0, 43);

    const double self = ok::flr::flr_similarity(y, y, 2, em);
    CHECK(self <= 1.0);
    CHECK(self >= 1.0 - 1e-9);

    CHECK(ok::flr::flr_similarity(y, far, 2, em) < 1e-30);

    const double ab = ok::flr::flr_similarity(y, near, 2, em);
    const double ba = ok::flr::flr_similarity(near, y, 2, em);
    CHECK(ab > 0.0);
    CHECK(ab <= 1.0);
    CHECK(ab == Catch::Approx(ba).margin(1e-9));

    // The pair-test adapter forwards to the same computation.
    auto test = ok::flr::flr_pair_test(2, em);
    CHECK(test(y, near, 77) == ok::flr::flr_similarity(y, near, 2, em, 77));
}
