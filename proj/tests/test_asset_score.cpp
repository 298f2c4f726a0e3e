#include "doctest.h"

#include <cmath>

#include "m2ad/asset_score.hpp"
#include "m2ad/errors.hpp"
#include "m2ad/rng.hpp"
#include "m2ad/stats.hpp"
#include "support.hpp"

using namespace m2ad;

namespace {

SensorMeta meta_of(const std::string& system, const std::string& name,
                   const std::string& summary) {
    return {name, system, summary, TailMode::two_sided, {}};
}

} // namespace

TEST_SUITE_BEGIN("asset_score");

TEST_CASE("hierarchical weights follow the system/sensor/summary tree") {
    // Two systems; system A has 3 sensors x 6 summaries -> 1/36 per channel.
    std::vector<SensorMeta> meta;
    for (int s = 0; s < 3; ++s) {
        for (int m = 0; m < 6; ++m) {
            meta.push_back(meta_of("A", "sens" + std::to_string(s),
                                   "sum" + std::to_string(m)));
        }
    }
    meta.push_back(meta_of("B", "b1", "current"));
    const auto w = default_weights(meta, WeightMode::hierarchical);
    for (std::size_t k = 0; k + 1 < w.size(); ++k) {
        CHECK(w[k] == doctest::Approx(1.0 / 36.0).epsilon(1e-12));
    }
    // Lone sensor in system B: 1/(2 * 1 * 1).
    CHECK(w.back() == doctest::Approx(0.5).epsilon(1e-12));
    double total = 0.0;
    for (double v : w) total += v;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("single system with one summary per sensor collapses to uniform") {
    std::vector<SensorMeta> meta;
    for (int s = 0; s < 4; ++s) {
        meta.push_back(meta_of("sys", "s" + std::to_string(s), "value"));
    }
    const auto w = default_weights(meta, WeightMode::hierarchical);
    for (double v : w) CHECK(v == doctest::Approx(0.25).epsilon(1e-12));

    const auto u = default_weights(meta, WeightMode::uniform);
    for (double v : u) CHECK(v == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("uniform weights with five sensors") {
    std::vector<SensorMeta> meta;
    for (int s = 0; s < 5; ++s) {
        meta.push_back(meta_of("sys", "s" + std::to_string(s), "value"));
    }
    for (double v : default_weights(meta, WeightMode::uniform)) {
        CHECK(v == doctest::Approx(0.2).epsilon(1e-12));
    }
}

TEST_CASE("fisher score definition cases") {
    CHECK(fisher_score_step(std::vector<double>{std::exp(-1.0)},
                            std::vector<double>{1.0}) == doctest::Approx(2.0));
    CHECK(fisher_score_step(std::vector<double>{0.01, 1.0},
                            std::vector<double>{0.5, 0.5}) ==
          doctest::Approx(-std::log(0.01)).epsilon(1e-12));
    CHECK(fisher_score_step(std::vector<double>{1.0, 1.0, 1.0},
                            std::vector<double>{0.2, 0.3, 0.5}) ==
          doctest::Approx(0.0));
    CHECK_THROWS_AS(fisher_score_step(std::vector<double>{0.0},
                                      std::vector<double>{1.0}),
                    ArgumentError);
}

TEST_CASE("fisher score renormalizes weights over available sensors") {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    // Sensor 0 missing; remaining weight mass rescales to the full total.
    const double s = fisher_score_step(std::vector<double>{nan, 0.1},
                                       std::vector<double>{0.5, 0.5});
    CHECK(s == doctest::Approx(-2.0 * std::log(0.1)).epsilon(1e-12));
    // Every sensor missing: score is missing.
    CHECK(std::isnan(fisher_score_step(std::vector<double>{nan, nan},
                                       std::vector<double>{0.5, 0.5})));
}

TEST_CASE("lowering any p-value never lowers the score") {
    Rng rng(5);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> p(4), lam(4);
        for (std::size_t k = 0; k < 4; ++k) {
            p[k] = rng.uniform(0.001, 1.0);
            lam[k] = rng.uniform(0.0, 1.0);
        }
        const double base = fisher_score_step(p, lam);
        const std::size_t k = rng.index(4);
        p[k] *= rng.uniform(0.01, 1.0);
        CHECK(fisher_score_step(p, lam) >= base - 1e-12);
    }
}

TEST_CASE("moment matching plug-in and sampling oracle") {
    {
        // Alternating 4 +- a with a^2 = 8*(n-1)/n gives mean 4, variance 8.
        const std::size_t n = 60;
        const double a = std::sqrt(8.0 * static_cast<double>(n - 1) /
                                   static_cast<double>(n));
        std::vector<double> scores(n);
        for (std::size_t i = 0; i < n; ++i) {
            scores[i] = 4.0 + (i % 2 == 0 ? a : -a);
        }
        const auto [alpha, theta] = fit_gamma_moments(scores);
        CHECK(alpha == doctest::Approx(2.0).epsilon(1e-9));
        CHECK(theta == doctest::Approx(2.0).epsilon(1e-9));
    }
    {
        Rng rng(2024);
        std::vector<double> draws(100000);
        for (double& d : draws) d = testsupport::gamma_draw(rng, 3.0, 1.5);
        const auto [alpha, theta] = fit_gamma_moments(draws);
        CHECK(alpha > 2.85);
        CHECK(alpha < 3.15);
        CHECK(theta > 1.4);
        CHECK(theta < 1.6);
    }
    CHECK_THROWS_AS(fit_gamma_moments(std::vector<double>(50, 3.0)), NumericError);
    CHECK_THROWS_AS(fit_gamma_moments(std::vector<double>(10, 1.0)), ArgumentError);
}

TEST_CASE("calibration self-consistency on gamma scores") {
    Rng rng(31);
    std::vector<double> scores(100000);
    for (double& s : scores) s = testsupport::gamma_draw(rng, 2.0, 2.0);

    const auto cal = calibrate(scores, {1.0}, 0.01);
    CHECK(cal.alpha > 0.0);
    CHECK(cal.theta > 0.0);
    // Round trip through the CDF pins the threshold.
    CHECK(stats::gamma_cdf(cal.alpha, cal.theta, cal.gamma_threshold) ==
          doctest::Approx(0.99).epsilon(1e-8));

    std::size_t above = 0;
    for (double s : scores) {
        if (s > cal.gamma_threshold) ++above;
    }
    const double rate = static_cast<double>(above) / static_cast<double>(scores.size());
    CHECK(rate > 0.007);
    CHECK(rate < 0.013);
}

TEST_CASE("significance 0.5 lands near the sample median") {
    Rng rng(77);
    std::vector<double> scores(50000);
    for (double& s : scores) s = testsupport::gamma_draw(rng, 4.0, 1.0);
    const auto cal = calibrate(scores, {1.0}, 0.5);
    const double med = stats::median(scores);
    CHECK(std::abs(cal.gamma_threshold - med) / med < 0.05);
}

TEST_CASE("calibrate rejects degenerate significance") {
    std::vector<double> scores(40, 1.0);
    scores[0] = 2.0;
    CHECK_THROWS_AS(calibrate(scores, {1.0}, 0.0), ArgumentError);
    CHECK_THROWS_AS(calibrate(scores, {1.0}, 1.0), ArgumentError);
}

TEST_CASE("flag strictness and missing handling") {
    AssetCalibration cal;
    cal.weights = {1.0};
    cal.alpha = 1.0;
    cal.theta = 1.0;
    cal.significance = 0.01;
    cal.gamma_threshold = 3.0;

    const double nan = std::numeric_limits<double>::quiet_NaN();
    const std::vector<double> s = {1.0, 5.0, 1.0, 3.0, nan};
    const auto z = flag(s, cal);
    CHECK(z == std::vector<std::uint8_t>{0, 1, 0, 0, 0});
}

TEST_CASE("scaling all weights rescales scores but not flags") {
    Rng rng(15);
    const std::size_t d = 3;
    const std::size_t n = 2000;
    Matrix pvals(n, d);
    for (std::size_t t = 0; t < n; ++t) {
        for (std::size_t k = 0; k < d; ++k) pvals(t, k) = rng.uniform();
    }
    const std::vector<double> lam = {0.2, 0.5, 0.3};
    std::vector<double> lam_scaled = lam;
    for (double& w : lam_scaled) w *= 4.0;

    const auto s1 = fisher_score(pvals, lam);
    const auto s2 = fisher_score(pvals, lam_scaled);
    for (std::size_t t = 0; t < n; ++t) {
        CHECK(s2[t] == doctest::Approx(4.0 * s1[t]).epsilon(1e-9));
    }

    const auto cal1 = calibrate(s1, lam, 0.05);
    const auto cal2 = calibrate(s2, lam_scaled, 0.05);
    CHECK(flag(s1, cal1) == flag(s2, cal2));
}

TEST_CASE("classical fisher recovery under independence") {
    // lambda_k = 1 with independent uniform p-values gives chi-square(2d).
    Rng rng(91);
    const std::size_t d = 6;
    const std::size_t n = 100000;
    std::vector<double> scores(n);
    std::vector<double> p(d), lam(d, 1.0);
    for (std::size_t t = 0; t < n; ++t) {
        for (std::size_t k = 0; k < d; ++k) p[k] = rng.uniform();
        scores[t] = fisher_score_step(p, lam);
    }
    const double ks = testsupport::ks_statistic(scores, [&](double x) {
        return stats::gamma_cdf(static_cast<double>(d), 2.0, x);
    });
    CHECK(ks < 0.02);
}

TEST_CASE("event extraction and gap merging") {
    const std::vector<std::uint8_t> z = {0, 1, 1, 0, 1};
    const std::vector<double> s = {0.1, 5.0, 7.0, 0.2, 4.0};
    {
        const auto events = extract_events(z, s, 0);
        REQUIRE(events.size() == 2);
        CHECK(events[0].start == 1);
        CHECK(events[0].end == 2);
        CHECK(events[0].peak_score == doctest::Approx(7.0));
        CHECK(events[0].peak_index == 2);
        CHECK(events[1].start == 4);
        CHECK(events[1].end == 4);
    }
    {
        const auto events = extract_events(z, s, 1);
        REQUIRE(events.size() == 1);
        CHECK(events[0].start == 1);
        CHECK(events[0].end == 4);
        CHECK(events[0].peak_score == doctest::Approx(7.0));
    }
    CHECK(extract_events(std::vector<std::uint8_t>(5, 0), s, 0).empty());
}

TEST_SUITE_END();
