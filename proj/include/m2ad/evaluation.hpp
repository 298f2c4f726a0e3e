#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace m2ad {

enum class IntervalKind { anomaly, work_order };

// Closed timestamp interval; boundaries count as inside.
struct LabeledInterval {
    std::int64_t start = 0;
    std::int64_t end = 0;
    IntervalKind kind = IntervalKind::anomaly;
    std::string signal;

    void validate() const;
};

struct MatchCounts {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    // matched[i] = truth indices covered by detection i.
    std::vector<std::vector<std::size_t>> matched;
};

// Detection scoring: a truth interval counts as found when any detection
// overlaps it; a detection overlapping no truth is a false positive. One
// detection may cover several truths without becoming a false positive.
MatchCounts match_detection(std::span<const LabeledInterval> detected,
                            std::span<const LabeledInterval> truth);

// Predictive scoring: a detection ending at e satisfies a work order
// starting at s iff s - lead_max <= e <= s - lead_min (inclusive).
MatchCounts match_predictive(std::span<const LabeledInterval> detected,
                             std::span<const LabeledInterval> work_orders,
                             std::int64_t lead_min_seconds,
                             std::int64_t lead_max_seconds);

// Dataset-level pooled counts and scores. Undefined ratios (zero
// denominators) stay unset rather than going NaN.
struct EvalReport {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    std::optional<double> precision;
    std::optional<double> recall;
    std::optional<double> f1;
    std::optional<double> f05;
    std::vector<std::pair<std::string, MatchCounts>> per_signal;
};

EvalReport aggregate(std::span<const std::pair<std::string, MatchCounts>> per_signal);

} // namespace m2ad
