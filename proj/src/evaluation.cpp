#include "m2ad/evaluation.hpp"

#include "m2ad/errors.hpp"

namespace m2ad {

void LabeledInterval::validate() const {
    if (start > end) {
        throw ArgumentError("interval start " + std::to_string(start) +
                            " after end " + std::to_string(end));
    }
}

MatchCounts match_detection(std::span<const LabeledInterval> detected,
                            std::span<const LabeledInterval> truth) {
    for (const auto& i : detected) i.validate();
    for (const auto& i : truth) i.validate();

    MatchCounts counts;
    counts.matched.resize(detected.size());
    std::vector<bool> truth_hit(truth.size(), false);

    for (std::size_t i = 0; i < detected.size(); ++i) {
        bool any = false;
        for (std::size_t j = 0; j < truth.size(); ++j) {
            const bool overlap = detected[i].start <= truth[j].end &&
                                 truth[j].start <= detected[i].end;
            if (overlap) {
                any = true;
                truth_hit[j] = true;
                counts.matched[i].push_back(j);
            }
        }
        if (!any) ++counts.fp;
    }
    for (bool hit : truth_hit) {
        if (hit) {
            ++counts.tp;
        } else {
            ++counts.fn;
        }
    }
    return counts;
}

MatchCounts match_predictive(std::span<const LabeledInterval> detected,
                             std::span<const LabeledInterval> work_orders,
                             std::int64_t lead_min_seconds,
                             std::int64_t lead_max_seconds) {
    if (lead_min_seconds > lead_max_seconds) {
        throw ArgumentError("predictive lead window inverted: lead_min > lead_max");
    }
    for (const auto& i : detected) i.validate();
    for (const auto& i : work_orders) i.validate();

    MatchCounts counts;
    counts.matched.resize(detected.size());
    std::vector<bool> order_hit(work_orders.size(), false);

    for (std::size_t i = 0; i < detected.size(); ++i) {
        const std::int64_t e = detected[i].end;
        bool any = false;
        for (std::size_t j = 0; j < work_orders.size(); ++j) {
            const std::int64_t s = work_orders[j].start;
            if (s - lead_max_seconds <= e && e <= s - lead_min_seconds) {
                any = true;
                order_hit[j] = true;
                counts.matched[i].push_back(j);
            }
        }
        if (!any) ++counts.fp;
    }
    for (bool hit : order_hit) {
        if (hit) {
            ++counts.tp;
        } else {
            ++counts.fn;
        }
    }
    return counts;
}

EvalReport aggregate(std::span<const std::pair<std::string, MatchCounts>> per_signal) {
    EvalReport report;
    for (const auto& [signal, counts] : per_signal) {
        report.tp += counts.tp;
        report.fp += counts.fp;
        report.fn += counts.fn;
        report.per_signal.emplace_back(signal, counts);
    }

    const double tp = static_cast<double>(report.tp);
    if (report.tp + report.fp > 0) {
        report.precision = tp / static_cast<double>(report.tp + report.fp);
    }
    if (report.tp + report.fn > 0) {
        report.recall = tp / static_cast<double>(report.tp + report.fn);
    }
    if (report.precision && report.recall) {
        const double p = *report.precision;
        const double r = *report.recall;
        if (p + r > 0.0) {
            report.f1 = 2.0 * p * r / (p + r);
        }
        if (0.25 * p + r > 0.0) {
            report.f05 = 1.25 * p * r / (0.25 * p + r);
        }
    }
    return report;
}

} // namespace m2ad
