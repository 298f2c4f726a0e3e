#include "doctest.h"

#include <cmath>

#include "m2ad/data_model.hpp"
#include "m2ad/errors.hpp"
#include "m2ad/rng.hpp"
#include "support.hpp"

using namespace m2ad;
using testsupport::TempFile;

TEST_SUITE_BEGIN("data_model");

TEST_CASE("timestamp parsing accepts epoch and ISO-8601") {
    CHECK(parse_timestamp("0") == 0);
    CHECK(parse_timestamp("1700000000") == 1700000000);
    CHECK(parse_timestamp("1970-01-01T00:00:00") == 0);
    CHECK(parse_timestamp("1970-01-02") == 86400);
    CHECK(parse_timestamp("2024-01-01 06:30:00") == 1704090600);
    CHECK(parse_timestamp("2024-01-01T06:30:00Z") == 1704090600);
    CHECK_THROWS_AS(parse_timestamp("not-a-time"), ParseError);
    CHECK_THROWS_AS(parse_timestamp("2024-13-01"), ParseError);
    // Round trip through the formatter.
    CHECK(parse_timestamp(format_timestamp(1704090600)) == 1704090600);
}

TEST_CASE("csv load parses schema, missing cells, sorting") {
    TempFile file(
        "timestamp,monitron.m1.temp,cov.throughput\n"
        "3600,21.5,100\n"
        "0,20.0,90\n"
        "7200,,110\n");
    const auto frame = load_csv(file.path());
    CHECK(frame.rows() == 3);
    CHECK(frame.sensor_count() == 1);
    CHECK(frame.covariate_count() == 1);
    CHECK(frame.sensor_meta[0].system == "monitron");
    CHECK(frame.sensor_meta[0].name == "m1");
    CHECK(frame.sensor_meta[0].summary == "temp");
    // Rows sorted by timestamp.
    CHECK(frame.timestamps == std::vector<std::int64_t>{0, 3600, 7200});
    CHECK(frame.sensors(0, 0) == doctest::Approx(20.0));
    CHECK(std::isnan(frame.sensors(2, 0)));
}

TEST_CASE("csv load rejects malformed inputs") {
    {
        TempFile file("timestamp,monitron.m1.temp\n0,1.0\n0,2.0\n");
        CHECK_THROWS_WITH_AS(load_csv(file.path()),
                             doctest::Contains("duplicate timestamp"), SchemaError);
    }
    {
        TempFile file("timestamp,monitron.m1.temp,monitron.m1.temp\n0,1,2\n");
        CHECK_THROWS_AS(load_csv(file.path()), SchemaError);
    }
    {
        TempFile file("timestamp,monitron.m1.temp\n0,abc\n");
        CHECK_THROWS_WITH_AS(load_csv(file.path()), doctest::Contains(":2:"),
                             ParseError);
    }
    {
        TempFile file("timestamp,badname\n0,1\n");
        CHECK_THROWS_AS(load_csv(file.path()), SchemaError);
    }
    {
        TempFile file("timestamp,monitron.m1.temp\nbogus,1\n");
        CHECK_THROWS_AS(load_csv(file.path()), ParseError);
    }
}

TEST_CASE("median resampling aggregates buckets") {
    TempFile file(
        "timestamp,sys.s1.v,cov.mode\n"
        "0,1,0\n"
        "600,9,1\n"
        "1200,5,1\n"
        "7200,2,0\n"
        "7800,4,0\n");
    const auto frame = load_csv(file.path());
    const auto hourly = resample_median(frame, 3600);
    REQUIRE(hourly.rows() == 3);
    CHECK(hourly.timestamps == std::vector<std::int64_t>{0, 3600, 7200});
    // Median of {1, 9, 5} = 5.
    CHECK(hourly.sensors(0, 0) == doctest::Approx(5.0));
    // Empty bucket between populated ones stays missing.
    CHECK(std::isnan(hourly.sensors(1, 0)));
    // Even-count bucket: mean of the middle pair.
    CHECK(hourly.sensors(2, 0) == doctest::Approx(3.0));
    // Covariate mode.
    CHECK(hourly.covariates(0, 0) == doctest::Approx(1.0));
    CHECK(hourly.covariates(2, 0) == doctest::Approx(0.0));

    CHECK_THROWS_AS(resample_median(frame, 60), ArgumentError);
}

TEST_CASE("resampling at the same step is idempotent") {
    auto frame = testsupport::sine_frame(200, 0.1, 3);
    const auto once = resample_median(frame, 3600);
    const auto twice = resample_median(once, 3600);
    CHECK(once.timestamps == twice.timestamps);
    CHECK(once.sensors == twice.sensors);
}

TEST_CASE("interpolation and train-fitted scaling") {
    TempFile file(
        "timestamp,sys.s1.v\n"
        "0,10\n"
        "3600,30\n"
        "7200,20\n"
        "10800,4\n"
        "14400,\n"
        "18000,\n"
        "21600,10\n"
        "25200,40\n");
    const auto raw = load_csv(file.path());
    const auto frame = interpolate_and_scale(raw, SplitSpec{4});

    // Train span [4, 30]: 10 -> ..., exact affine endpoints.
    CHECK(frame.scaling[0].lo == doctest::Approx(4.0));
    CHECK(frame.scaling[0].hi == doctest::Approx(30.0));
    CHECK(frame.scaling[0].scale(10.0) == doctest::Approx(2.0 * 6.0 / 26.0 - 1.0));
    CHECK(frame.scaling[0].scale(4.0) == doctest::Approx(-1.0));
    CHECK(frame.scaling[0].scale(30.0) == doctest::Approx(1.0));

    // Missing run {4, _, _, 10} interpolates to {4, 6, 8, 10} before scaling.
    CHECK(frame.scaling[0].unscale(frame.sensors(4, 0)) == doctest::Approx(6.0));
    CHECK(frame.scaling[0].unscale(frame.sensors(5, 0)) == doctest::Approx(8.0));

    // Test values may leave [-1, 1].
    CHECK(frame.sensors(7, 0) > 1.0);
    for (std::size_t i = 0; i < frame.rows(); ++i) {
        CHECK_FALSE(std::isnan(frame.sensors(i, 0)));
    }
}

TEST_CASE("train span 10..30 maps the canonical example points") {
    TempFile file(
        "timestamp,sys.s1.v\n"
        "0,10\n3600,30\n7200,20\n10800,40\n");
    const auto frame = interpolate_and_scale(load_csv(file.path()), SplitSpec{2});
    CHECK(frame.sensors(0, 0) == doctest::Approx(-1.0));
    CHECK(frame.sensors(1, 0) == doctest::Approx(1.0));
    CHECK(frame.sensors(2, 0) == doctest::Approx(0.0));
    // 40 with train span [10, 30] extrapolates to +2.
    CHECK(frame.sensors(3, 0) == doctest::Approx(2.0));
}

TEST_CASE("edge gaps hold the nearest observed value") {
    TempFile file(
        "timestamp,sys.s1.v\n"
        "0,\n3600,5\n7200,6\n10800,\n");
    const auto frame = interpolate_and_scale(load_csv(file.path()), SplitSpec{3});
    CHECK(frame.scaling[0].unscale(frame.sensors(0, 0)) == doctest::Approx(5.0));
    CHECK(frame.scaling[0].unscale(frame.sensors(3, 0)) == doctest::Approx(6.0));
}

TEST_CASE("constant train column is a degenerate scale") {
    TempFile file("timestamp,sys.s1.v\n0,5\n3600,5\n7200,9\n");
    CHECK_THROWS_WITH_AS(interpolate_and_scale(load_csv(file.path()), SplitSpec{2}),
                         doctest::Contains("sys.s1.v"), NumericError);
}

TEST_CASE("scale/unscale round trip") {
    Rng rng(4);
    const ScaleParams sp{-3.0, 17.0};
    for (int i = 0; i < 1000; ++i) {
        const double x = rng.uniform(-3.0, 17.0);
        CHECK(std::abs(sp.unscale(sp.scale(x)) - x) < 1e-12);
    }
}

TEST_CASE("covariate discretization rules") {
    std::string csv = "timestamp,sys.s1.v,cov.throughput,cov.availability\n";
    // Train throughput 1..91: terciles land exactly on 31 and 61.
    for (int i = 0; i < 91; ++i) {
        csv += std::to_string(i * 3600) + ",1," + std::to_string(i + 1) + ",97.5\n";
    }
    csv += "327600,2,95,99.1\n"; // test row: above upper tercile, available
    TempFile file(csv);
    const auto raw = load_csv(file.path());

    std::vector<CovariateRule> rules = {
        {"cov.throughput", CovariateRule::Kind::quantile, 0.0, {}},
        {"cov.availability", CovariateRule::Kind::threshold, 98.0, {}},
    };
    const auto frame = discretize_covariates(raw, SplitSpec{91}, rules);

    REQUIRE(rules[0].boundaries.size() == 2);
    CHECK(rules[0].boundaries[0] == doctest::Approx(31.0));
    CHECK(rules[0].boundaries[1] == doctest::Approx(61.0));
    // Availability 99.1 with the >98 threshold is available.
    CHECK(frame.covariates(91, 1) == doctest::Approx(1.0));
    // 97.5 in train is below the threshold.
    CHECK(frame.covariates(0, 1) == doctest::Approx(0.0));
    // Throughput above the train 66.7% quantile lands in the top bin.
    CHECK(frame.covariates(91, 0) == doctest::Approx(2.0));
    // A value equal to the boundary (31, row 30) goes to the lower bin.
    CHECK(frame.covariates(30, 0) == doctest::Approx(0.0));
    CHECK(frame.covariates(31, 0) == doctest::Approx(1.0));
    CHECK(frame.covariate_cardinality[0] == 3);
    CHECK(frame.covariate_cardinality[1] == 2);

    std::vector<CovariateRule> bad = {{"cov.nope", CovariateRule::Kind::quantile, 0.0, {}}};
    CHECK_THROWS_AS(discretize_covariates(raw, SplitSpec{91}, bad), SchemaError);
}

TEST_CASE("boundaries depend only on the train portion") {
    Rng rng(8);
    std::string head = "timestamp,sys.s1.v,cov.x\n";
    std::vector<double> test_vals;
    std::string train_rows;
    for (int i = 0; i < 60; ++i) {
        train_rows += std::to_string(i * 3600) + ",1," +
                      std::to_string(rng.uniform(0.0, 50.0)) + "\n";
    }
    for (int i = 60; i < 80; ++i) test_vals.push_back(rng.uniform(0.0, 900.0));

    const auto build = [&](const std::vector<double>& tail) {
        std::string csv = head + train_rows;
        for (std::size_t i = 0; i < tail.size(); ++i) {
            csv += std::to_string((60 + i) * 3600) + ",1," + std::to_string(tail[i]) + "\n";
        }
        TempFile file(csv);
        std::vector<CovariateRule> rules = {
            {"cov.x", CovariateRule::Kind::quantile, 0.0, {}}};
        discretize_covariates(load_csv(file.path()), SplitSpec{60}, rules);
        return rules[0].boundaries;
    };

    auto shuffled = test_vals;
    Rng rng2(9);
    rng2.shuffle(shuffled);
    CHECK(build(test_vals) == build(shuffled));
}

TEST_CASE("window construction counts and layout") {
    auto frame = testsupport::sine_frame(10, 0.0, 1);
    const auto ds = make_windows(frame, 3, 0, 10);
    CHECK(ds.size() == 7);
    CHECK(ds.input_width == 1);
    REQUIRE(ds.target_indices.size() == 7);
    CHECK(ds.target_indices.front() == 3);
    CHECK(ds.target_indices.back() == 9);
    // Input block rows are exactly the rows preceding the target.
    for (std::size_t r = 0; r < 3; ++r) {
        CHECK(ds.inputs[0](r, 0) == doctest::Approx(frame.sensors(r, 0)));
    }
    CHECK(ds.targets[0][0] == doctest::Approx(frame.sensors(3, 0)));

    CHECK_THROWS_AS(make_windows(frame, 10, 0, 10), ArgumentError);
    CHECK_THROWS_AS(make_windows(frame, 12, 0, 10), ArgumentError);
}

TEST_CASE("one-hot expansion widens inputs by covariate cardinality") {
    AssetFrame frame = testsupport::sine_frame(12, 0.0, 2);
    frame.sensor_meta.push_back({"s2", "sys", "value", TailMode::two_sided, {}});
    Matrix sensors(12, 2);
    for (std::size_t i = 0; i < 12; ++i) {
        sensors(i, 0) = frame.sensors(i, 0);
        sensors(i, 1) = 0.5;
    }
    frame.sensors = sensors;
    frame.covariate_names = {"cov.mode"};
    frame.covariate_cardinality = {3};
    frame.covariates = Matrix(12, 1);
    for (std::size_t i = 0; i < 12; ++i) {
        frame.covariates(i, 0) = static_cast<double>(i % 3);
    }

    const auto ds = make_windows(frame, 4, 0, 12);
    CHECK(ds.input_width == 2 + 3);
    // Row for frame row 0 has code 0 hot.
    CHECK(ds.inputs[0](0, 2) == doctest::Approx(1.0));
    CHECK(ds.inputs[0](0, 3) == doctest::Approx(0.0));
    CHECK(ds.inputs[0](1, 3) == doctest::Approx(1.0));
}

TEST_CASE("pair count property over random sizes") {
    Rng rng(123);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t t = 5 + rng.index(200);
        const std::size_t w = 1 + rng.index(t - 2);
        auto frame = testsupport::sine_frame(t, 0.0, trial);
        const auto ds = make_windows(frame, w, 0, t);
        CHECK(ds.size() == t - w);
        for (std::size_t i = 0; i < ds.size(); ++i) {
            CHECK(ds.target_indices[i] == w + i);
        }
    }
}

TEST_SUITE_END();
