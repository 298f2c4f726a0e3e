#include "doctest.h"

#include <set>

#include "m2ad/errors.hpp"
#include "m2ad/evaluation.hpp"
#include "m2ad/rng.hpp"

using namespace m2ad;

namespace {

constexpr std::int64_t kDay = 86400;

LabeledInterval iv(std::int64_t a, std::int64_t b) {
    return {a, b, IntervalKind::anomaly, "sig"};
}

} // namespace

TEST_SUITE_BEGIN("evaluation");

TEST_CASE("detection overlap cases") {
    {
        const auto c = match_detection(std::vector{iv(5, 10)}, std::vector{iv(8, 12)});
        CHECK(c.tp == 1);
        CHECK(c.fp == 0);
        CHECK(c.fn == 0);
    }
    {
        const auto c = match_detection(std::vector{iv(5, 10)}, std::vector{iv(20, 25)});
        CHECK(c.tp == 0);
        CHECK(c.fp == 1);
        CHECK(c.fn == 1);
    }
    {
        const auto c = match_detection(std::vector<LabeledInterval>{},
                                       std::vector{iv(1, 2)});
        CHECK(c.tp == 0);
        CHECK(c.fp == 0);
        CHECK(c.fn == 1);
    }
    {
        // One detection spanning two truths detects both, no fp.
        const auto c = match_detection(std::vector{iv(0, 100)},
                                       std::vector{iv(5, 10), iv(50, 60)});
        CHECK(c.tp == 2);
        CHECK(c.fp == 0);
        CHECK(c.fn == 0);
    }
}

TEST_CASE("predictive lead window cases") {
    const auto wo = std::vector{LabeledInterval{30 * kDay, 31 * kDay,
                                                IntervalKind::work_order, "sig"}};
    {
        // Ends day 25, order day 30: within [23, 29] days.
        const auto c = match_predictive(std::vector{iv(24 * kDay, 25 * kDay)}, wo,
                                        1 * kDay, 7 * kDay);
        CHECK(c.tp == 1);
        CHECK(c.fp == 0);
        CHECK(c.fn == 0);
    }
    {
        // Half-day lead is below lead_min.
        const auto c = match_predictive(
            std::vector{iv(29 * kDay, 29 * kDay + kDay / 2)}, wo, 1 * kDay, 7 * kDay);
        CHECK(c.tp == 0);
        CHECK(c.fp == 1);
        CHECK(c.fn == 1);
    }
    {
        // Ten-day lead is above lead_max.
        const auto c = match_predictive(std::vector{iv(19 * kDay, 20 * kDay)}, wo,
                                        1 * kDay, 7 * kDay);
        CHECK(c.tp == 0);
        CHECK(c.fp == 1);
        CHECK(c.fn == 1);
    }
    CHECK_THROWS_AS(match_predictive({}, wo, 7 * kDay, 1 * kDay), ArgumentError);
}

TEST_CASE("aggregate pooled scores") {
    {
        MatchCounts c;
        c.tp = 1;
        c.fp = 1;
        c.fn = 1;
        const std::vector<std::pair<std::string, MatchCounts>> in = {{"a", c}};
        const auto r = aggregate(in);
        CHECK(*r.precision == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(*r.recall == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(*r.f1 == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(*r.f05 == doctest::Approx(0.5).epsilon(1e-12));
    }
    {
        // P = 1, R = 0.5 -> F0.5 = 1.25*0.5/(0.25+0.5).
        MatchCounts c;
        c.tp = 1;
        c.fp = 0;
        c.fn = 1;
        const std::vector<std::pair<std::string, MatchCounts>> in = {{"a", c}};
        const auto r = aggregate(in);
        CHECK(*r.precision == doctest::Approx(1.0));
        CHECK(*r.recall == doctest::Approx(0.5));
        CHECK(*r.f05 == doctest::Approx(1.25 * 0.5 / 0.75).epsilon(1e-12));
    }
    {
        MatchCounts c;
        const std::vector<std::pair<std::string, MatchCounts>> in = {{"a", c}};
        const auto r = aggregate(in);
        CHECK_FALSE(r.precision.has_value());
        CHECK_FALSE(r.recall.has_value());
    }
}

TEST_CASE("pooling across signals matches summed counts") {
    MatchCounts a;
    a.tp = 2;
    a.fp = 1;
    a.fn = 0;
    MatchCounts b;
    b.tp = 0;
    b.fp = 0;
    b.fn = 3;
    const std::vector<std::pair<std::string, MatchCounts>> in = {{"a", a}, {"b", b}};
    const auto r = aggregate(in);
    CHECK(r.tp == 2);
    CHECK(r.fp == 1);
    CHECK(r.fn == 3);
    CHECK(*r.precision == doctest::Approx(2.0 / 3.0));
    CHECK(*r.recall == doctest::Approx(0.4));
}

TEST_CASE("brute-force oracle equivalence on random instances") {
    Rng rng(1234);
    for (int trial = 0; trial < 1000; ++trial) {
        const auto draw = [&](std::size_t max_n) {
            std::vector<LabeledInterval> out;
            const std::size_t n = rng.index(max_n + 1);
            for (std::size_t i = 0; i < n; ++i) {
                const std::int64_t a = static_cast<std::int64_t>(rng.index(50));
                const std::int64_t len = static_cast<std::int64_t>(rng.index(10));
                out.push_back(iv(a, a + len));
            }
            return out;
        };
        const auto detected = draw(6);
        const auto truth = draw(6);

        // Independent route: explicit membership sets.
        std::set<std::size_t> hit_truth, hit_det;
        for (std::size_t i = 0; i < detected.size(); ++i) {
            for (std::size_t j = 0; j < truth.size(); ++j) {
                const bool overlap = !(detected[i].end < truth[j].start ||
                                       truth[j].end < detected[i].start);
                if (overlap) {
                    hit_truth.insert(j);
                    hit_det.insert(i);
                }
            }
        }
        const auto c = match_detection(detected, truth);
        CHECK(c.tp == hit_truth.size());
        CHECK(c.fn == truth.size() - hit_truth.size());
        CHECK(c.fp == detected.size() - hit_det.size());
        CHECK(c.tp + c.fn == truth.size());
    }
}

TEST_CASE("widening a detection never loses true positives") {
    Rng rng(77);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<LabeledInterval> detected = {
            iv(static_cast<std::int64_t>(rng.index(40)),
               static_cast<std::int64_t>(rng.index(40)) + 40)};
        std::vector<LabeledInterval> truth;
        for (int j = 0; j < 4; ++j) {
            const std::int64_t a = static_cast<std::int64_t>(rng.index(100));
            truth.push_back(iv(a, a + static_cast<std::int64_t>(rng.index(8))));
        }
        const auto before = match_detection(detected, truth);
        detected[0].start -= 5;
        detected[0].end += 5;
        const auto after = match_detection(detected, truth);
        CHECK(after.tp >= before.tp);
    }
}

TEST_CASE("f0.5 favors precision exactly when precision leads") {
    Rng rng(99);
    for (int trial = 0; trial < 500; ++trial) {
        MatchCounts c;
        c.tp = 1 + rng.index(20);
        c.fp = rng.index(20);
        c.fn = rng.index(20);
        const std::vector<std::pair<std::string, MatchCounts>> in = {{"s", c}};
        const auto r = aggregate(in);
        if (r.f1 && r.f05) {
            if (*r.precision >= *r.recall) {
                CHECK(*r.f05 >= *r.f1 - 1e-12);
            } else {
                CHECK(*r.f05 <= *r.f1 + 1e-12);
            }
        }
    }
}

TEST_SUITE_END();
