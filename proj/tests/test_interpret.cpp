#include "doctest.h"

#include <cmath>

#include "m2ad/asset_score.hpp"
#include "m2ad/errors.hpp"
#include "m2ad/interpret.hpp"

using namespace m2ad;

TEST_SUITE_BEGIN("interpret");

TEST_CASE("two-sensor share split") {
    const std::vector<double> p = {1e-6, 0.5};
    const std::vector<double> lam = {0.5, 0.5};
    const double s = fisher_score_step(p, lam);
    const auto ranking = contributions(p, lam, s);
    REQUIRE(ranking.size() == 2);
    // ln(1e6) / (ln(1e6) + ln 2) = 0.95222...
    CHECK(ranking.ranked[0].sensor == 0);
    CHECK(ranking.ranked[0].share == doctest::Approx(0.9522).epsilon(1e-3));
    CHECK(ranking.ranked[1].share == doctest::Approx(0.0478).epsilon(1e-2));
}

TEST_CASE("single sensor takes the whole share") {
    const std::vector<double> p = {0.01};
    const std::vector<double> lam = {1.0};
    const auto ranking = contributions(p, lam, fisher_score_step(p, lam));
    REQUIRE(ranking.size() == 1);
    CHECK(ranking.ranked[0].share == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("ties break to the lowest sensor index") {
    const std::vector<double> p = {0.2, 0.2, 0.2};
    const std::vector<double> lam = {1.0, 1.0, 1.0};
    const auto ranking = contributions(p, lam, fisher_score_step(p, lam));
    CHECK(ranking.ranked[0].sensor == 0);
    CHECK(ranking.ranked[1].sensor == 1);
    CHECK(ranking.ranked[2].sensor == 2);
    for (const auto& c : ranking.ranked) {
        CHECK(c.share == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    }
}

TEST_CASE("shares sum to one and scale with lambda cancels") {
    const std::vector<double> p = {0.03, 0.4, 0.9, 0.25};
    const std::vector<double> lam = {0.1, 0.2, 0.3, 0.4};
    std::vector<double> lam_scaled = lam;
    for (double& w : lam_scaled) w *= 7.5;

    const auto r1 = contributions(p, lam, fisher_score_step(p, lam));
    const auto r2 = contributions(p, lam_scaled, fisher_score_step(p, lam_scaled));
    double total = 0.0;
    for (std::size_t i = 0; i < r1.size(); ++i) {
        total += r1.ranked[i].share;
        CHECK(r1.ranked[i].sensor == r2.ranked[i].sensor);
        CHECK(r1.ranked[i].share == doctest::Approx(r2.ranked[i].share).epsilon(1e-12));
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("lowering a p-value never drops that sensor's rank") {
    const std::vector<double> lam = {0.25, 0.25, 0.25, 0.25};
    std::vector<double> p = {0.3, 0.2, 0.5, 0.05};
    const auto rank_of = [&](const std::vector<double>& pv, std::size_t sensor) {
        const auto r = contributions(pv, lam, fisher_score_step(pv, lam));
        for (std::size_t i = 0; i < r.size(); ++i) {
            if (r.ranked[i].sensor == sensor) return i;
        }
        return r.size();
    };
    const std::size_t before = rank_of(p, 2);
    p[2] = 0.01;
    const std::size_t after = rank_of(p, 2);
    CHECK(after <= before);
}

TEST_CASE("zero score is not explainable") {
    const std::vector<double> p = {1.0, 1.0};
    const std::vector<double> lam = {0.5, 0.5};
    CHECK_THROWS_AS(contributions(p, lam, 0.0), ArgumentError);
}

TEST_CASE("top_k truncation and metadata attachment") {
    const std::vector<SensorMeta> meta = {
        {"m1", "monitron", "temp", TailMode::two_sided, {}},
        {"m2", "monitron", "vel", TailMode::two_sided, {}},
        {"a1", "amperage", "current", TailMode::two_sided, {}},
    };
    const std::vector<double> p = {0.5, 1e-4, 0.2};
    const std::vector<double> lam = {1.0, 1.0, 1.0};
    const auto ranking = contributions(p, lam, fisher_score_step(p, lam));

    const auto top5 = top_k(ranking, meta, 5);
    REQUIRE(top5.size() == 3);
    CHECK(top5[0].sensor == "m2");
    CHECK(top5[0].system == "monitron");
    CHECK(top5[0].share > top5[1].share);
    CHECK(top5[1].share > top5[2].share);

    const auto top1 = top_k(ranking, meta, 1);
    REQUIRE(top1.size() == 1);
    CHECK(top1[0].sensor == "m2");
}

TEST_SUITE_END();
