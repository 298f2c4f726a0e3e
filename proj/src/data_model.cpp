#include "m2ad/data_model.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "m2ad/errors.hpp"
#include "m2ad/stats.hpp"

namespace m2ad {

namespace {

bool is_missing(double x) { return std::isnan(x); }
constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

std::string trim(const std::string& s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::vector<std::string> split(const std::string& line, char delim) {
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, delim)) out.push_back(cell);
    if (!line.empty() && line.back() == delim) out.emplace_back();
    return out;
}

// Days since 1970-01-01 for a proleptic Gregorian civil date.
std::int64_t days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const int era = (y >= 0 ? y : y - 399) / 400;
    const int yoe = y - era * 400;
    const int doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const int doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return static_cast<std::int64_t>(era) * 146097 + doe - 719468;
}

void civil_from_days(std::int64_t z, int& y, int& m, int& d) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const int doe = static_cast<int>(z - era * 146097);
    const int yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const int doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const int mp = (5 * doy + 2) / 153;
    d = doy - (153 * mp + 2) / 5 + 1;
    m = mp + (mp < 10 ? 3 : -9);
    y = static_cast<int>(yoe + era * 400) + (m <= 2);
}

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
    std::int64_t q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}

} // namespace

std::string to_string(TailMode mode) {
    switch (mode) {
        case TailMode::two_sided: return "two_sided";
        case TailMode::upper: return "upper";
        case TailMode::lower: return "lower";
    }
    return "two_sided";
}

TailMode tail_mode_from_string(const std::string& s) {
    if (s == "two_sided") return TailMode::two_sided;
    if (s == "upper") return TailMode::upper;
    if (s == "lower") return TailMode::lower;
    throw ArgumentError("unknown tail mode '" + s + "'");
}

std::int64_t parse_timestamp(const std::string& text) {
    const std::string s = trim(text);
    if (s.empty()) throw ParseError("empty timestamp");

    const bool numeric = s.find_first_not_of("+-0123456789.") == std::string::npos;
    if (numeric && s.find('-', 1) == std::string::npos) {
        if (s.find('.') != std::string::npos) {
            double v = 0.0;
            const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
            if (ec != std::errc() || p != s.data() + s.size() || v != std::floor(v)) {
                throw ParseError("malformed epoch timestamp '" + s + "'");
            }
            return static_cast<std::int64_t>(v);
        }
        std::int64_t v = 0;
        const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc() || p != s.data() + s.size()) {
            throw ParseError("malformed epoch timestamp '" + s + "'");
        }
        return v;
    }

    // ISO-8601: YYYY-MM-DD[{T, }HH:MM[:SS]][Z]
    int y = 0, mo = 0, d = 0, h = 0, mi = 0, sec = 0;
    std::string body = s;
    if (!body.empty() && (body.back() == 'Z' || body.back() == 'z')) body.pop_back();
    const int n_date = std::sscanf(body.c_str(), "%d-%d-%d", &y, &mo, &d);
    if (n_date != 3) throw ParseError("malformed timestamp '" + s + "'");
    if (body.size() > 10) {
        const char sep = body[10];
        if (sep != 'T' && sep != ' ') throw ParseError("malformed timestamp '" + s + "'");
        const std::string time_part = body.substr(11);
        const int n_time = std::sscanf(time_part.c_str(), "%d:%d:%d", &h, &mi, &sec);
        if (n_time < 2) throw ParseError("malformed timestamp '" + s + "'");
    }
    if (mo < 1 || mo > 12 || d < 1 || d > 31 || h > 23 || mi > 59 || sec > 60) {
        throw ParseError("out-of-range timestamp '" + s + "'");
    }
    return days_from_civil(y, mo, d) * 86400 + h * 3600 + mi * 60 + sec;
}

std::string format_timestamp(std::int64_t epoch_seconds) {
    const std::int64_t days = floor_div(epoch_seconds, 86400);
    const std::int64_t rem = epoch_seconds - days * 86400;
    int y, m, d;
    civil_from_days(days, y, m, d);
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02dZ", y, m, d,
                  static_cast<int>(rem / 3600), static_cast<int>((rem / 60) % 60),
                  static_cast<int>(rem % 60));
    return buf;
}

std::optional<std::size_t> AssetFrame::find_sensor(const std::string& column) const {
    for (std::size_t k = 0; k < sensor_meta.size(); ++k) {
        if (sensor_meta[k].column() == column) return k;
    }
    return std::nullopt;
}

void AssetFrame::validate() const {
    const std::size_t t = rows();
    if (sensors.rows() != t || covariates.rows() != t) {
        throw SchemaError("frame row counts disagree with timestamps");
    }
    if (sensors.cols() != sensor_meta.size()) {
        throw SchemaError("sensor column count disagrees with metadata");
    }
    if (covariates.cols() != covariate_names.size()) {
        throw SchemaError("covariate column count disagrees with names");
    }
    if (!covariate_cardinality.empty() &&
        covariate_cardinality.size() != covariate_names.size()) {
        throw SchemaError("covariate cardinality size mismatch");
    }
    for (std::size_t i = 1; i < t; ++i) {
        if (timestamps[i] <= timestamps[i - 1]) {
            throw SchemaError("timestamps not strictly increasing at row " +
                              std::to_string(i));
        }
    }
    std::set<std::string> seen;
    for (const auto& meta : sensor_meta) {
        if (!seen.insert(meta.column()).second) {
            throw SchemaError("duplicate sensor channel " + meta.column());
        }
        if (meta.weight && (!std::isfinite(*meta.weight) || *meta.weight < 0.0)) {
            throw SchemaError("invalid weight on sensor " + meta.column());
        }
    }
}

void SplitSpec::validate(std::size_t total_rows) const {
    if (train_end == 0 || train_end >= total_rows) {
        throw ArgumentError("split train_end must lie strictly inside the series (got " +
                            std::to_string(train_end) + " of " +
                            std::to_string(total_rows) + " rows)");
    }
}

AssetFrame load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ArgumentError("cannot open data file: " + path);

    std::string header;
    if (!std::getline(in, header)) throw SchemaError(path + ": empty file");
    if (!header.empty() && header.back() == '\r') header.pop_back();

    const auto names = split(header, ',');
    if (names.empty() || trim(names[0]) != "timestamp") {
        throw SchemaError(path + ": first column must be named 'timestamp'");
    }

    AssetFrame frame;
    std::vector<int> column_kind(names.size(), 0); // 0 ts, 1 sensor, 2 covariate
    std::vector<std::size_t> column_slot(names.size(), 0);
    std::set<std::string> seen;
    for (std::size_t j = 1; j < names.size(); ++j) {
        const std::string name = trim(names[j]);
        if (!seen.insert(name).second) {
            throw SchemaError(path + ": duplicate column name '" + name + "'");
        }
        if (name.rfind("cov.", 0) == 0) {
            column_kind[j] = 2;
            column_slot[j] = frame.covariate_names.size();
            frame.covariate_names.push_back(name);
            continue;
        }
        const auto parts = split(name, '.');
        if (parts.size() != 3 || parts[0].empty() || parts[1].empty() || parts[2].empty()) {
            throw SchemaError(path + ": sensor column '" + name +
                              "' must be named system.sensor.summary");
        }
        column_kind[j] = 1;
        column_slot[j] = frame.sensor_meta.size();
        frame.sensor_meta.push_back({parts[1], parts[0], parts[2],
                                     TailMode::two_sided, std::nullopt});
    }
    if (frame.sensor_meta.empty()) {
        throw SchemaError(path + ": no sensor columns (system.sensor.summary) found");
    }

    struct Row {
        std::int64_t ts;
        std::vector<double> sensors;
        std::vector<double> covariates;
    };
    std::vector<Row> rows;
    std::string line;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        auto cells = split(line, ',');
        if (cells.size() != names.size()) {
            throw ParseError(path + ":" + std::to_string(line_no) + ": expected " +
                             std::to_string(names.size()) + " cells, got " +
                             std::to_string(cells.size()));
        }
        Row row;
        row.sensors.assign(frame.sensor_meta.size(), kMissing);
        row.covariates.assign(frame.covariate_names.size(), kMissing);
        try {
            row.ts = parse_timestamp(cells[0]);
        } catch (const ParseError& e) {
            throw ParseError(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
        for (std::size_t j = 1; j < cells.size(); ++j) {
            const std::string cell = trim(cells[j]);
            if (cell.empty()) continue; // missing
            double v = 0.0;
            const auto [p, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
            if (ec != std::errc() || p != cell.data() + cell.size()) {
                throw ParseError(path + ":" + std::to_string(line_no) +
                                 ": non-numeric cell '" + cell + "' in column '" +
                                 trim(names[j]) + "'");
            }
            if (column_kind[j] == 1) {
                row.sensors[column_slot[j]] = v;
            } else {
                row.covariates[column_slot[j]] = v;
            }
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw SchemaError(path + ": no data rows");

    std::stable_sort(rows.begin(), rows.end(),
                     [](const Row& a, const Row& b) { return a.ts < b.ts; });
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].ts == rows[i - 1].ts) {
            throw SchemaError(path + ": duplicate timestamp " +
                              format_timestamp(rows[i].ts));
        }
    }

    const std::size_t t = rows.size();
    frame.timestamps.resize(t);
    frame.sensors = Matrix(t, frame.sensor_meta.size());
    frame.covariates = Matrix(t, frame.covariate_names.size());
    for (std::size_t i = 0; i < t; ++i) {
        frame.timestamps[i] = rows[i].ts;
        for (std::size_t k = 0; k < frame.sensor_meta.size(); ++k) {
            frame.sensors(i, k) = rows[i].sensors[k];
        }
        for (std::size_t j = 0; j < frame.covariate_names.size(); ++j) {
            frame.covariates(i, j) = rows[i].covariates[j];
        }
    }

    // Raw integer-coded covariates get a cardinality from the data; rules
    // overwrite this when they recode the column.
    frame.covariate_cardinality.assign(frame.covariate_count(), 0);
    for (std::size_t j = 0; j < frame.covariate_count(); ++j) {
        double max_code = 0.0;
        bool integral = true;
        for (std::size_t i = 0; i < t; ++i) {
            const double v = frame.covariates(i, j);
            if (is_missing(v)) continue;
            if (v != std::floor(v) || v < 0.0) integral = false;
            max_code = std::max(max_code, v);
        }
        frame.covariate_cardinality[j] =
            integral ? static_cast<int>(max_code) + 1 : 0; // 0: needs a rule
    }

    frame.validate();
    return frame;
}

AssetFrame resample_median(const AssetFrame& frame, std::int64_t step_seconds) {
    frame.validate();
    if (step_seconds <= 0) throw ArgumentError("resample step must be positive");
    if (frame.rows() >= 2) {
        std::int64_t native = std::numeric_limits<std::int64_t>::max();
        for (std::size_t i = 1; i < frame.rows(); ++i) {
            native = std::min(native, frame.timestamps[i] - frame.timestamps[i - 1]);
        }
        if (step_seconds < native) {
            throw ArgumentError("resample step " + std::to_string(step_seconds) +
                                "s is finer than the native step " +
                                std::to_string(native) + "s");
        }
    }

    const std::int64_t anchor = floor_div(frame.timestamps.front(), step_seconds) * step_seconds;
    const std::size_t buckets =
        static_cast<std::size_t>(floor_div(frame.timestamps.back() - anchor, step_seconds)) + 1;

    AssetFrame out;
    out.sensor_meta = frame.sensor_meta;
    out.covariate_names = frame.covariate_names;
    out.covariate_cardinality = frame.covariate_cardinality;
    out.timestamps.resize(buckets);
    out.sensors = Matrix(buckets, frame.sensor_count(), kMissing);
    out.covariates = Matrix(buckets, frame.covariate_count(), kMissing);

    std::size_t lo = 0;
    for (std::size_t b = 0; b < buckets; ++b) {
        const std::int64_t start = anchor + static_cast<std::int64_t>(b) * step_seconds;
        const std::int64_t stop = start + step_seconds;
        out.timestamps[b] = start;
        std::size_t hi = lo;
        while (hi < frame.rows() && frame.timestamps[hi] < stop) ++hi;

        for (std::size_t k = 0; k < frame.sensor_count(); ++k) {
            std::vector<double> vals;
            for (std::size_t i = lo; i < hi; ++i) {
                const double v = frame.sensors(i, k);
                if (!is_missing(v)) vals.push_back(v);
            }
            if (!vals.empty()) out.sensors(b, k) = stats::median(std::move(vals));
        }
        for (std::size_t j = 0; j < frame.covariate_count(); ++j) {
            std::map<double, int> counts;
            for (std::size_t i = lo; i < hi; ++i) {
                const double v = frame.covariates(i, j);
                if (!is_missing(v)) ++counts[v];
            }
            if (!counts.empty()) {
                // Mode; ties resolve to the smallest value (map is ordered).
                auto best = counts.begin();
                for (auto it = counts.begin(); it != counts.end(); ++it) {
                    if (it->second > best->second) best = it;
                }
                out.covariates(b, j) = best->first;
            }
        }
        lo = hi;
    }

    out.validate();
    return out;
}

AssetFrame fill_missing(const AssetFrame& frame) {
    frame.validate();

    AssetFrame out = frame;
    const std::size_t t = out.rows();

    for (std::size_t k = 0; k < out.sensor_count(); ++k) {
        // Gather observed points, then fill gaps linearly by row index.
        std::vector<std::size_t> obs;
        for (std::size_t i = 0; i < t; ++i) {
            if (!is_missing(out.sensors(i, k))) obs.push_back(i);
        }
        if (obs.empty()) {
            throw NumericError("sensor column '" + out.sensor_meta[k].column() +
                               "' has no observed values");
        }
        for (std::size_t i = 0; i < obs.front(); ++i) {
            out.sensors(i, k) = out.sensors(obs.front(), k);
        }
        for (std::size_t i = obs.back() + 1; i < t; ++i) {
            out.sensors(i, k) = out.sensors(obs.back(), k);
        }
        for (std::size_t g = 0; g + 1 < obs.size(); ++g) {
            const std::size_t a = obs[g];
            const std::size_t b = obs[g + 1];
            const double va = out.sensors(a, k);
            const double vb = out.sensors(b, k);
            for (std::size_t i = a + 1; i < b; ++i) {
                const double frac = static_cast<double>(i - a) / static_cast<double>(b - a);
                out.sensors(i, k) = va + frac * (vb - va);
            }
        }
    }

    // Covariates: hold the previous code across gaps, backfill the head.
    for (std::size_t j = 0; j < out.covariate_count(); ++j) {
        double last = kMissing;
        for (std::size_t i = 0; i < t; ++i) {
            if (is_missing(out.covariates(i, j))) {
                out.covariates(i, j) = last;
            } else {
                last = out.covariates(i, j);
            }
        }
        double next = kMissing;
        for (std::size_t i = t; i-- > 0;) {
            if (is_missing(out.covariates(i, j))) {
                out.covariates(i, j) = next;
            } else {
                next = out.covariates(i, j);
            }
        }
        if (t > 0 && is_missing(out.covariates(0, j))) {
            throw NumericError("covariate column '" + out.covariate_names[j] +
                               "' has no observed values");
        }
    }

    out.validate();
    return out;
}

AssetFrame interpolate_and_scale(const AssetFrame& frame, const SplitSpec& split,
                                 bool fit_scaling) {
    split.validate(frame.rows());
    AssetFrame out = fill_missing(frame);
    const std::size_t t = out.rows();

    // ScaleParams{-1, 1} is the identity affine map.
    out.scaling.assign(out.sensor_count(), ScaleParams{-1.0, 1.0});
    if (fit_scaling) {
        for (std::size_t k = 0; k < out.sensor_count(); ++k) {
            double lo = std::numeric_limits<double>::infinity();
            double hi = -std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < split.train_end; ++i) {
                lo = std::min(lo, out.sensors(i, k));
                hi = std::max(hi, out.sensors(i, k));
            }
            if (!(hi > lo)) {
                throw NumericError("sensor column '" + out.sensor_meta[k].column() +
                                   "' is constant over the train range; cannot scale");
            }
            out.scaling[k] = {lo, hi};
            for (std::size_t i = 0; i < t; ++i) {
                out.sensors(i, k) = out.scaling[k].scale(out.sensors(i, k));
            }
        }
    }
    return out;
}

namespace {

AssetFrame apply_rules_impl(const AssetFrame& frame,
                            const std::vector<CovariateRule>& rules) {
    AssetFrame out = frame;
    for (const auto& rule : rules) {
        std::size_t j = out.covariate_count();
        for (std::size_t c = 0; c < out.covariate_count(); ++c) {
            if (out.covariate_names[c] == rule.column) {
                j = c;
                break;
            }
        }
        if (j == out.covariate_count()) {
            throw SchemaError("covariate rule references unknown column '" +
                              rule.column + "'");
        }
        if (rule.boundaries.empty()) {
            throw ArgumentError("covariate rule for '" + rule.column +
                                "' has no resolved boundaries");
        }
        for (std::size_t i = 0; i < out.rows(); ++i) {
            const double v = out.covariates(i, j);
            if (is_missing(v)) continue;
            if (rule.kind == CovariateRule::Kind::threshold) {
                out.covariates(i, j) = v > rule.boundaries[0] ? 1.0 : 0.0;
            } else {
                // Boundary values fall into the lower bin.
                int code = 0;
                for (double b : rule.boundaries) {
                    if (v > b) ++code;
                }
                out.covariates(i, j) = static_cast<double>(code);
            }
        }
        out.covariate_cardinality[j] =
            rule.kind == CovariateRule::Kind::threshold
                ? 2
                : static_cast<int>(rule.boundaries.size()) + 1;
    }
    out.validate();
    return out;
}

} // namespace

AssetFrame discretize_covariates(const AssetFrame& frame, const SplitSpec& split,
                                 std::vector<CovariateRule>& rules) {
    frame.validate();
    split.validate(frame.rows());

    for (auto& rule : rules) {
        std::size_t j = frame.covariate_count();
        for (std::size_t c = 0; c < frame.covariate_count(); ++c) {
            if (frame.covariate_names[c] == rule.column) {
                j = c;
                break;
            }
        }
        if (j == frame.covariate_count()) {
            throw SchemaError("covariate rule references unknown column '" +
                              rule.column + "'");
        }
        if (rule.kind == CovariateRule::Kind::threshold) {
            rule.boundaries = {rule.threshold};
            continue;
        }
        std::vector<double> train_vals;
        for (std::size_t i = 0; i < split.train_end; ++i) {
            const double v = frame.covariates(i, j);
            if (!is_missing(v)) train_vals.push_back(v);
        }
        if (train_vals.size() < 2) {
            throw ArgumentError("quantile rule on '" + rule.column +
                                "' needs at least 2 train values");
        }
        const double b0 = stats::quantile(train_vals, 1.0 / 3.0);
        const double b1 = stats::quantile(train_vals, 2.0 / 3.0);
        if (!(b1 > b0)) {
            throw ArgumentError("quantile rule on '" + rule.column +
                                "' is degenerate over the train range");
        }
        rule.boundaries = {b0, b1};
    }

    return apply_rules_impl(frame, rules);
}

AssetFrame apply_covariate_rules(const AssetFrame& frame,
                                 const std::vector<CovariateRule>& rules) {
    frame.validate();
    return apply_rules_impl(frame, rules);
}

std::size_t input_width(const AssetFrame& frame) {
    std::size_t onehot = 0;
    for (std::size_t j = 0; j < frame.covariate_count(); ++j) {
        const int card = frame.covariate_cardinality.empty()
                             ? 0
                             : frame.covariate_cardinality[j];
        if (card <= 0) {
            throw ArgumentError("covariate '" + frame.covariate_names[j] +
                                "' has no categorical coding; apply a rule first");
        }
        onehot += static_cast<std::size_t>(card);
    }
    return frame.sensor_count() + onehot;
}

Matrix window_block(const AssetFrame& frame, std::size_t window,
                    std::size_t target_row) {
    if (window == 0 || target_row < window || target_row > frame.rows()) {
        throw ArgumentError("window_block: bad target row " + std::to_string(target_row));
    }
    const std::size_t d = frame.sensor_count();
    Matrix block(window, input_width(frame), 0.0);
    for (std::size_t r = 0; r < window; ++r) {
        const std::size_t row = target_row - window + r;
        for (std::size_t k = 0; k < d; ++k) {
            const double v = frame.sensors(row, k);
            if (is_missing(v)) {
                throw ArgumentError("window range contains missing sensor values; "
                                    "preprocess first");
            }
            block(r, k) = v;
        }
        std::size_t off = d;
        for (std::size_t j = 0; j < frame.covariate_count(); ++j) {
            const int card = frame.covariate_cardinality[j];
            const double v = frame.covariates(row, j);
            if (is_missing(v)) {
                throw ArgumentError("window range contains missing covariates; "
                                    "preprocess first");
            }
            const int code = static_cast<int>(v);
            if (code < 0 || code >= card) {
                throw ArgumentError("covariate code " + std::to_string(code) +
                                    " outside cardinality " + std::to_string(card) +
                                    " in '" + frame.covariate_names[j] + "'");
            }
            block(r, off + static_cast<std::size_t>(code)) = 1.0;
            off += static_cast<std::size_t>(card);
        }
    }
    return block;
}

WindowedDataset make_windows(const AssetFrame& frame, std::size_t window,
                             std::size_t begin, std::size_t end) {
    frame.validate();
    if (window == 0) throw ArgumentError("window must be positive");
    if (end > frame.rows()) throw ArgumentError("window range exceeds frame");
    if (begin >= end || end - begin <= window) {
        throw ArgumentError("window range of length " +
                            std::to_string(end > begin ? end - begin : 0) +
                            " must exceed the window size " + std::to_string(window));
    }

    const std::size_t d = frame.sensor_count();
    WindowedDataset ds;
    ds.window = window;
    ds.input_width = input_width(frame);
    const std::size_t pairs = end - begin - window;
    ds.inputs.reserve(pairs);
    ds.targets.reserve(pairs);
    ds.target_indices.reserve(pairs);

    for (std::size_t i = 0; i < pairs; ++i) {
        const std::size_t target_row = begin + window + i;
        std::vector<double> target(d);
        for (std::size_t k = 0; k < d; ++k) target[k] = frame.sensors(target_row, k);
        ds.inputs.push_back(window_block(frame, window, target_row));
        ds.targets.push_back(std::move(target));
        ds.target_indices.push_back(target_row);
    }
    return ds;
}

} // namespace m2ad
