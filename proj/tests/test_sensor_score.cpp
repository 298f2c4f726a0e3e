#include "doctest.h"

#include <cmath>

#include "m2ad/errors.hpp"
#include "m2ad/rng.hpp"
#include "m2ad/sensor_score.hpp"
#include "m2ad/stats.hpp"
#include "support.hpp"

using namespace m2ad;

namespace {

std::vector<double> normal_sample(std::uint64_t seed, std::size_t n, double mean,
                                  double stdev) {
    Rng rng(seed);
    std::vector<double> xs(n);
    for (double& x : xs) x = rng.normal(mean, stdev);
    return xs;
}

std::vector<double> bimodal_sample(std::uint64_t seed, std::size_t n) {
    // Half N(0, 0.1^2), half N(10, 0.1^2).
    Rng rng(seed);
    std::vector<double> xs(n);
    for (double& x : xs) {
        x = rng.uniform() < 0.5 ? rng.normal(0.0, 0.1) : rng.normal(10.0, 0.1);
    }
    return xs;
}

double gmm_draw(Rng& rng, const GmmModel& model) {
    const double u = rng.uniform();
    double acc = 0.0;
    for (const auto& c : model.components) {
        acc += c.weight;
        if (u <= acc) return rng.normal(c.mean, c.stdev);
    }
    return rng.normal(model.components.back().mean, model.components.back().stdev);
}

} // namespace

TEST_SUITE_BEGIN("sensor_score");

TEST_CASE("single-component fit recovers a standard normal") {
    const auto xs = normal_sample(42, 10000, 0.0, 1.0);
    const auto model = em_fit(xs, 1);
    REQUIRE(model.component_count() == 1);
    CHECK(model.components[0].mean > -0.05);
    CHECK(model.components[0].mean < 0.05);
    CHECK(model.components[0].stdev > 0.95);
    CHECK(model.components[0].stdev < 1.05);
    CHECK(model.converged);
}

TEST_CASE("two-component fit recovers a well-separated mixture") {
    const auto xs = bimodal_sample(7, 10000);
    const auto model = em_fit(xs, 2, {.seed = 3});
    REQUIRE(model.component_count() == 2);
    CHECK(std::abs(model.components[0].mean - 0.0) < 0.05);
    CHECK(std::abs(model.components[1].mean - 10.0) < 0.05);
    CHECK(std::abs(model.components[0].weight - 0.5) < 0.05);
    CHECK(std::abs(model.components[1].weight - 0.5) < 0.05);
}

TEST_CASE("constant data clamps to the stdev floor") {
    const std::vector<double> xs(64, 2.5);
    const auto model = em_fit(xs, 1);
    CHECK(model.components[0].mean == doctest::Approx(2.5));
    CHECK(model.components[0].stdev == doctest::Approx(1e-6));
    CHECK_THROWS_AS(em_fit(xs, 2), NumericError);
}

TEST_CASE("sample-count precondition") {
    const std::vector<double> xs(15, 1.0);
    CHECK_THROWS_AS(em_fit(xs, 2), ArgumentError);
    CHECK_THROWS_AS(em_fit(std::vector<double>{}, 1), ArgumentError);
}

TEST_CASE("log-likelihood never decreases across EM iterations") {
    const auto xs = bimodal_sample(100, 2000);
    for (std::size_t m : {2, 3}) {
        const auto model = em_fit(xs, m, {.seed = 9});
        for (std::size_t i = 1; i < model.ll_trace.size(); ++i) {
            CHECK(model.ll_trace[i] >= model.ll_trace[i - 1] -
                                           1e-8 * std::abs(model.ll_trace[i - 1]));
        }
    }
}

TEST_CASE("bic parameter counts and model selection") {
    const auto unimodal = normal_sample(11, 10000, 0.0, 1.0);
    const auto bimodal = bimodal_sample(12, 10000);

    const auto uni1 = em_fit(unimodal, 1);
    const auto uni2 = em_fit(unimodal, 2, {.seed = 1});
    CHECK(bic(uni1, unimodal) < bic(uni2, unimodal));

    const auto bi1 = em_fit(bimodal, 1);
    const auto bi2 = em_fit(bimodal, 2, {.seed = 1});
    CHECK(bic(bi2, bimodal) < bic(bi1, bimodal));

    // k = 3m - 1: recover it from the BIC identity at two sample sizes.
    const double ll = gmm_log_likelihood(uni1, unimodal);
    const double k1 = (bic(uni1, unimodal) + 2.0 * ll) /
                      std::log(static_cast<double>(unimodal.size()));
    CHECK(k1 == doctest::Approx(2.0).epsilon(1e-9));
    const double ll2 = gmm_log_likelihood(uni2, unimodal);
    const double k2 = (bic(uni2, unimodal) + 2.0 * ll2) /
                      std::log(static_cast<double>(unimodal.size()));
    CHECK(k2 == doctest::Approx(5.0).epsilon(1e-9));
}

TEST_CASE("select_components picks by bic with ties to smaller m") {
    const auto unimodal = normal_sample(21, 6000, 0.0, 1.0);
    const auto pick_uni = select_components(unimodal, 3, {.seed = 5});
    CHECK(pick_uni.chosen == 1);

    const auto bimodal = bimodal_sample(22, 6000);
    const auto pick_bi = select_components(bimodal, 3, {.seed = 5});
    CHECK(pick_bi.chosen == 2);

    const auto single = select_components(unimodal, 1, {.seed = 5});
    const auto direct = em_fit(unimodal, 1, {.seed = 5});
    CHECK(single.chosen == 1);
    CHECK(single.model.components[0].mean ==
          doctest::Approx(direct.components[0].mean).epsilon(1e-12));
}

TEST_CASE("mixture cdf symmetry and reference point") {
    GmmModel std_normal;
    std_normal.components = {{1.0, 0.0, 1.0}};
    CHECK(gmm_cdf(std_normal, 0.0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(gmm_cdf(std_normal, 1.96) == doctest::Approx(0.9750).epsilon(1e-4));

    GmmModel symmetric;
    symmetric.components = {{0.5, -3.0, 0.7}, {0.5, 3.0, 0.7}};
    CHECK(gmm_cdf(symmetric, 0.0) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("cdf is monotone") {
    const auto xs = bimodal_sample(31, 2000);
    const auto model = em_fit(xs, 2, {.seed = 2});
    Rng rng(5);
    for (int i = 0; i < 500; ++i) {
        const double a = rng.uniform(-5.0, 15.0);
        const double b = rng.uniform(-5.0, 15.0);
        const double lo = std::min(a, b);
        const double hi = std::max(a, b);
        CHECK(gmm_cdf(model, lo) <= gmm_cdf(model, hi) + 1e-15);
    }
}

TEST_CASE("p-value tail modes and clamping") {
    GmmModel model;
    model.components = {{1.0, 0.0, 1.0}};

    model.tail_mode = TailMode::two_sided;
    CHECK(p_value(model, 0.0) == doctest::Approx(1.0));
    CHECK(p_value(model, 1.96) == doctest::Approx(0.05).epsilon(2e-2));

    model.tail_mode = TailMode::upper;
    const double far = p_value(model, 10.0);
    CHECK(far >= kPValueFloor);
    CHECK(far > 0.0);
    CHECK(p_value(model, -10.0) == doctest::Approx(1.0).epsilon(1e-12));

    model.tail_mode = TailMode::lower;
    CHECK(p_value(model, -10.0) >= kPValueFloor);
    CHECK(p_value(model, 10.0) == doctest::Approx(1.0).epsilon(1e-12));

    // Extreme inputs clamp to the floor instead of reaching zero.
    model.tail_mode = TailMode::two_sided;
    CHECK(p_value(model, 1e6) == kPValueFloor);
}

TEST_CASE("two-sided p-value is 1 only at the mixture median") {
    GmmModel model;
    model.components = {{0.7, -1.0, 0.5}, {0.3, 2.0, 1.0}};
    model.tail_mode = TailMode::two_sided;
    Rng rng(64);
    for (int i = 0; i < 300; ++i) {
        const double x = rng.uniform(-6.0, 8.0);
        const double f = gmm_cdf(model, x);
        if (std::abs(f - 0.5) > 1e-6) CHECK(p_value(model, x) < 1.0);
    }
}

TEST_CASE("p-values are uniform under the fitted null") {
    const auto xs = bimodal_sample(55, 20000);
    auto model = em_fit(xs, 2, {.seed = 4});
    model.tail_mode = TailMode::two_sided;

    Rng rng(56);
    std::vector<double> pvals(100000);
    for (double& p : pvals) p = p_value(model, gmm_draw(rng, model));

    const double ks = testsupport::ks_statistic(
        pvals, [](double p) { return std::min(1.0, std::max(0.0, p)); });
    CHECK(ks < 0.02);
}

TEST_SUITE_END();
