#include "fde/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "json.hpp"

namespace fde::data {

namespace {

std::string trim(std::string_view s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

std::string lower(std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    fields.push_back(cur);
    return fields;
}

std::optional<double> parse_double(std::string_view text) {
    std::string t = trim(text);
    if (t.empty()) return std::nullopt;
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
    if (ec != std::errc() || ptr != t.data() + t.size() || !std::isfinite(value)) {
        return std::nullopt;
    }
    return value;
}

// Days since 1970-01-01 for a civil date (Howard Hinnant's algorithm).
std::int64_t days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2u) / 5u + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, int& y, int& m, int& d) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    y = static_cast<int>(yoe) + static_cast<int>(era) * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
    m = static_cast<int>(mp + (mp < 10 ? 3 : -9));
    y += m <= 2;
}

double median_of(std::vector<double>& v) {
    std::sort(v.begin(), v.end());
    std::size_t n = v.size();
    if (n % 2 == 1) return v[n / 2];
    return 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

constexpr std::int64_t kSecondsPerMinute = 60;

std::int64_t floor_div_minute(std::int64_t t) {
    std::int64_t q = t / kSecondsPerMinute;
    if (t % kSecondsPerMinute < 0) --q;
    return q;
}

void append_double(std::string& out, double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out += buf;
}

}  // namespace

std::optional<std::int64_t> parse_timestamp(std::string_view text) {
    std::string t = trim(text);
    if (t.empty()) return std::nullopt;

    // bare epoch seconds
    bool digits = t[0] == '-' || std::isdigit(static_cast<unsigned char>(t[0]));
    for (std::size_t i = 1; digits && i < t.size(); ++i) {
        digits = std::isdigit(static_cast<unsigned char>(t[i]));
    }
    if (digits) {
        std::int64_t v = 0;
        auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
        if (ec == std::errc() && ptr == t.data() + t.size()) return v;
        return std::nullopt;
    }

    int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
    char sep = 0;
    int n = std::sscanf(t.c_str(), "%d-%d-%d%c%d:%d:%d", &y, &mo, &d, &sep, &h, &mi, &s);
    if (n < 6 || (sep != ' ' && sep != 'T')) return std::nullopt;
    if (mo < 1 || mo > 12 || d < 1 || d > 31 || h < 0 || h > 23 || mi < 0 || mi > 59 || s < 0 ||
        s > 60) {
        return std::nullopt;
    }
    return days_from_civil(y, mo, d) * 86400 + h * 3600 + mi * 60 + s;
}

std::string format_minute(std::int64_t minute) {
    std::int64_t t = minute * kSecondsPerMinute;
    std::int64_t day = t / 86400;
    std::int64_t sod = t % 86400;
    if (sod < 0) {
        sod += 86400;
        --day;
    }
    int y, m, d;
    civil_from_days(day, y, m, d);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d %02d:%02d:%02d", y, m, d,
                  static_cast<int>(sod / 3600), static_cast<int>((sod % 3600) / 60),
                  static_cast<int>(sod % 60));
    return buf;
}

IngestResult ingest_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open csv: " + path);
    IngestResult result;
    std::string line;
    if (!std::getline(in, line)) {
        result.warnings.push_back("empty file: " + path);
        return result;
    }
    auto header = split_csv_line(line);
    int ts_col = -1;
    std::array<int, kNumFeatures> cols;
    cols.fill(-1);
    for (std::size_t i = 0; i < header.size(); ++i) {
        std::string name = lower(trim(header[i]));
        if (name == "timestamp" || name == "time" || name == "datetime") {
            ts_col = static_cast<int>(i);
        } else if (auto f = feature_from_name(name)) {
            cols[static_cast<int>(*f)] = static_cast<int>(i);
        }
    }
    if (ts_col < 0) throw DataError("csv missing required column: timestamp");
    for (Feature f : kAllFeatures) {
        if (cols[static_cast<int>(f)] < 0) {
            throw DataError(std::string("csv missing required column: ") + feature_name(f));
        }
    }

    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        auto fields = split_csv_line(line);
        bool ok = static_cast<std::size_t>(ts_col) < fields.size();
        RawRecord rec;
        if (ok) {
            auto ts = parse_timestamp(fields[ts_col]);
            ok = ts.has_value();
            if (ok) rec.t = *ts;
        }
        for (int f = 0; ok && f < kNumFeatures; ++f) {
            ok = static_cast<std::size_t>(cols[f]) < fields.size();
            if (!ok) break;
            auto v = parse_double(fields[cols[f]]);
            ok = v.has_value();
            if (ok) rec.values[f] = *v;
        }
        if (ok) {
            result.records.push_back(rec);
        } else {
            ++result.skipped;
        }
    }
    if (result.records.empty()) {
        result.warnings.push_back("no usable rows in: " + path);
    }
    return result;
}

MinuteSeries resample_and_interpolate(std::vector<RawRecord> records) {
    std::stable_sort(records.begin(), records.end(),
                     [](const RawRecord& a, const RawRecord& b) { return a.t < b.t; });
    MinuteSeries out;
    std::size_t i = 0;
    while (i < records.size()) {
        std::int64_t minute = floor_div_minute(records[i].t);
        std::array<std::vector<double>, kNumFeatures> bucket;
        double pir_sum = 0.0;
        bool pir_seen = false;
        for (; i < records.size() && floor_div_minute(records[i].t) == minute; ++i) {
            for (int f = 0; f < kNumFeatures; ++f) {
                if (f == static_cast<int>(Feature::pir)) {
                    pir_sum += records[i].values[f];
                    pir_seen = true;
                } else {
                    bucket[f].push_back(records[i].values[f]);
                }
            }
        }
        std::array<double, kNumFeatures> row{};
        bool complete = true;
        for (int f = 0; f < kNumFeatures; ++f) {
            if (f == static_cast<int>(Feature::pir)) {
                row[f] = pir_seen ? pir_sum : 0.0;
            } else if (bucket[f].empty()) {
                complete = false;
            } else {
                row[f] = median_of(bucket[f]);
            }
        }
        if (complete) {
            out.minutes.push_back(minute);
            out.rows.push_back(row);
        }
    }
    return out;
}

std::vector<TimeSeriesFrame> segment_chunks(const MinuteSeries& series, std::size_t min_len) {
    std::vector<TimeSeriesFrame> frames;
    std::size_t start = 0;
    int next_id = 0;
    while (start < series.minutes.size()) {
        std::size_t end = start + 1;
        while (end < series.minutes.size() && series.minutes[end] == series.minutes[end - 1] + 1) {
            ++end;
        }
        if (end - start >= min_len) {
            TimeSeriesFrame fr;
            fr.frame_id = next_id++;
            fr.start_minute = series.minutes[start];
            fr.rows.assign(series.rows.begin() + start, series.rows.begin() + end);
            frames.push_back(std::move(fr));
        }
        start = end;
    }
    return frames;
}

std::vector<Window> make_windows(const TimeSeriesFrame& frame, int history, int horizon) {
    std::vector<Window> windows;
    const std::size_t need = static_cast<std::size_t>(history) + horizon;
    if (history <= 0 || horizon <= 0 || frame.rows.size() < need) return windows;
    const std::size_t count = frame.rows.size() - need + 1;
    windows.reserve(count);
    for (std::size_t start = 0; start < count; ++start) {
        Window w;
        w.input = Matrix(history, kNumFeatures);
        for (int r = 0; r < history; ++r) {
            for (int f = 0; f < kNumFeatures; ++f) {
                w.input(r, f) = frame.rows[start + r][f];
            }
        }
        w.target = frame.rows[start + need - 1][static_cast<int>(Feature::co2)];
        w.frame_id = frame.frame_id;
        w.row = start;
        windows.push_back(std::move(w));
    }
    return windows;
}

std::vector<Window> make_all_windows(const std::vector<TimeSeriesFrame>& frames, int history,
                                     int horizon) {
    std::vector<Window> all;
    for (const auto& fr : frames) {
        auto w = make_windows(fr, history, horizon);
        all.insert(all.end(), std::make_move_iterator(w.begin()), std::make_move_iterator(w.end()));
    }
    return all;
}

Scaler Scaler::fit_from_windows(const std::vector<Window>& train_windows) {
    if (train_windows.empty()) throw DataError("scaler: empty training set");
    std::array<double, kNumFeatures> sum{}, sumsq{};
    std::size_t count = 0;
    for (const auto& w : train_windows) {
        for (std::size_t r = 0; r < w.input.rows(); ++r) {
            for (int f = 0; f < kNumFeatures; ++f) {
                sum[f] += w.input(r, f);
            }
        }
        count += w.input.rows();
    }
    std::array<double, kNumFeatures> means{}, stds{};
    for (int f = 0; f < kNumFeatures; ++f) means[f] = sum[f] / static_cast<double>(count);
    for (const auto& w : train_windows) {
        for (std::size_t r = 0; r < w.input.rows(); ++r) {
            for (int f = 0; f < kNumFeatures; ++f) {
                double d = w.input(r, f) - means[f];
                sumsq[f] += d * d;
            }
        }
    }
    for (int f = 0; f < kNumFeatures; ++f) {
        stds[f] = std::sqrt(sumsq[f] / static_cast<double>(count));
        if (!(stds[f] > 0.0) || !std::isfinite(stds[f])) {
            throw DataError(std::string("degenerate scaler: constant feature ") +
                            feature_name(static_cast<Feature>(f)));
        }
    }
    return from_stats(means, stds);
}

Scaler Scaler::from_stats(const std::array<double, kNumFeatures>& means,
                          const std::array<double, kNumFeatures>& stds) {
    for (int f = 0; f < kNumFeatures; ++f) {
        if (!(stds[f] > 0.0) || !std::isfinite(stds[f]) || !std::isfinite(means[f])) {
            throw DataError(std::string("invalid scaler stats for feature ") +
                            feature_name(static_cast<Feature>(f)));
        }
    }
    Scaler s;
    s.means_ = means;
    s.stds_ = stds;
    return s;
}

double Scaler::transform(Feature f, double raw) const {
    int i = static_cast<int>(f);
    return (raw - means_[i]) / stds_[i];
}

double Scaler::inverse(Feature f, double standardized) const {
    int i = static_cast<int>(f);
    return standardized * stds_[i] + means_[i];
}

Window Scaler::transform_window(const Window& w) const {
    Window out = w;
    for (std::size_t r = 0; r < out.input.rows(); ++r) {
        for (int f = 0; f < kNumFeatures; ++f) {
            out.input(r, f) = transform(static_cast<Feature>(f), w.input(r, f));
        }
    }
    out.target = transform(Feature::co2, w.target);
    return out;
}

std::vector<Window> standardize_windows(const std::vector<Window>& windows, const Scaler& scaler) {
    std::vector<Window> out;
    out.reserve(windows.size());
    for (const auto& w : windows) out.push_back(scaler.transform_window(w));
    return out;
}

double quantile_linear(std::vector<double> values, double q) {
    if (values.empty()) throw DomainError("quantile of empty set");
    if (q < 0.0 || q > 1.0) throw DomainError("quantile order out of range");
    std::sort(values.begin(), values.end());
    double pos = q * static_cast<double>(values.size() - 1);
    std::size_t lo = static_cast<std::size_t>(pos);
    double frac = pos - static_cast<double>(lo);
    if (lo + 1 >= values.size()) return values.back();
    return values[lo] + frac * (values[lo + 1] - values[lo]);
}

double window_co2_change(const Window& w) {
    double last = w.input(w.input.rows() - 1, static_cast<int>(Feature::co2));
    return std::fabs(w.target - last);
}

Split split_challenging_test(const std::vector<Window>& windows, double quantile,
                             std::vector<std::string>* warnings) {
    if (windows.size() < 10) throw DataError("split: need at least 10 windows");
    std::vector<double> changes(windows.size());
    for (std::size_t i = 0; i < windows.size(); ++i) changes[i] = window_co2_change(windows[i]);
    double threshold = quantile_linear(changes, quantile);
    Split split;
    for (std::size_t i = 0; i < windows.size(); ++i) {
        if (changes[i] > threshold) {
            split.test.push_back(i);
        } else {
            split.train.push_back(i);
        }
    }
    if (split.test.empty() && warnings) {
        warnings->push_back("challenging split produced an empty test set (tied changes)");
    }
    return split;
}

void write_processed_csv(const std::vector<TimeSeriesFrame>& frames, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write processed csv: " + path);
    out << "frame_id,timestamp,co2,temperature,humidity,pressure,pir\n";
    for (const auto& fr : frames) {
        for (std::size_t r = 0; r < fr.rows.size(); ++r) {
            std::string line = std::to_string(fr.frame_id);
            line += ',';
            line += format_minute(fr.start_minute + static_cast<std::int64_t>(r));
            for (int f = 0; f < kNumFeatures; ++f) {
                line += ',';
                append_double(line, fr.rows[r][f]);
            }
            line += '\n';
            out << line;
        }
    }
}

std::vector<TimeSeriesFrame> read_processed_csv(const std::string& path) {
    IngestResult raw = ingest_csv(path);  // same schema plus frame_id, reparse below
    std::ifstream in(path);
    if (!in) throw DataError("cannot open processed csv: " + path);
    std::string line;
    std::getline(in, line);
    auto header = split_csv_line(line);
    int id_col = -1;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (lower(trim(header[i])) == "frame_id") id_col = static_cast<int>(i);
    }
    if (id_col < 0) throw DataError("processed csv missing frame_id column");

    std::vector<TimeSeriesFrame> frames;
    std::size_t rec = 0;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        auto fields = split_csv_line(line);
        auto id = parse_double(fields[id_col]);
        if (!id || rec >= raw.records.size()) throw DataError("processed csv: malformed row");
        int frame_id = static_cast<int>(*id);
        std::int64_t minute = floor_div_minute(raw.records[rec].t);
        if (frames.empty() || frames.back().frame_id != frame_id) {
            frames.push_back({frame_id, minute, {}});
        } else if (minute !=
                   frames.back().start_minute + static_cast<std::int64_t>(frames.back().rows.size())) {
            throw DataError("processed csv: frame " + std::to_string(frame_id) +
                            " is not minute-continuous");
        }
        frames.back().rows.push_back(raw.records[rec].values);
        ++rec;
    }
    return frames;
}

void write_meta_json(const DatasetMeta& meta, const std::string& path) {
    nlohmann::json scaler;
    for (Feature f : kAllFeatures) {
        scaler[feature_name(f)] = {{"mean", meta.scaler.mean(f)}, {"std", meta.scaler.stddev(f)}};
    }
    nlohmann::json j = {
        {"format_version", 1},
        {"scaler", scaler},
        {"split", {{"quantile", meta.quantile}, {"train", meta.split.train}, {"test", meta.split.test}}},
        {"window", {{"history", meta.history}, {"horizon", meta.horizon}}},
        {"source", {{"rows", meta.source_rows}, {"skipped", meta.skipped_rows}}},
    };
    std::ofstream out(path);
    if (!out) throw DataError("cannot write meta json: " + path);
    out << j.dump(2) << '\n';
}

DatasetMeta read_meta_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot read meta json: " + path);
    nlohmann::json j;
    in >> j;
    DatasetMeta meta;
    std::array<double, kNumFeatures> means{}, stds{};
    for (Feature f : kAllFeatures) {
        const auto& s = j.at("scaler").at(feature_name(f));
        means[static_cast<int>(f)] = s.at("mean").get<double>();
        stds[static_cast<int>(f)] = s.at("std").get<double>();
    }
    meta.scaler = Scaler::from_stats(means, stds);
    meta.quantile = j.at("split").at("quantile").get<double>();
    meta.split.train = j.at("split").at("train").get<std::vector<std::size_t>>();
    meta.split.test = j.at("split").at("test").get<std::vector<std::size_t>>();
    meta.history = j.at("window").at("history").get<int>();
    meta.horizon = j.at("window").at("horizon").get<int>();
    meta.source_rows = j.at("source").at("rows").get<std::size_t>();
    meta.skipped_rows = j.at("source").at("skipped").get<std::size_t>();
    return meta;
}

void write_windows_csv(const std::vector<Window>& windows, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write windows csv: " + path);
    out << "window_index,frame_id,row,target";
    for (Feature f : kAllFeatures) {
        for (int r = 0; r < 5; ++r) out << ',' << feature_name(f) << '_' << r;
    }
    out << '\n';
    for (std::size_t i = 0; i < windows.size(); ++i) {
        const Window& w = windows[i];
        if (w.input.rows() != 5 || w.input.cols() != kNumFeatures) {
            throw ShapeError("windows csv expects 5-row windows");
        }
        std::string line = std::to_string(i);
        line += ',';
        line += std::to_string(w.frame_id);
        line += ',';
        line += std::to_string(w.row);
        line += ',';
        append_double(line, w.target);
        for (int f = 0; f < kNumFeatures; ++f) {
            for (int r = 0; r < 5; ++r) {
                line += ',';
                append_double(line, w.input(r, f));
            }
        }
        line += '\n';
        out << line;
    }
}

std::vector<Window> read_windows_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open windows csv: " + path);
    std::string line;
    if (!std::getline(in, line)) throw DataError("windows csv is empty: " + path);
    std::vector<Window> windows;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        auto fields = split_csv_line(line);
        if (fields.size() != 4 + 25u) throw DataError("windows csv: wrong column count");
        Window w;
        w.input = Matrix(5, kNumFeatures);
        auto fid = parse_double(fields[1]);
        auto row = parse_double(fields[2]);
        auto target = parse_double(fields[3]);
        if (!fid || !row || !target) throw DataError("windows csv: malformed row");
        w.frame_id = static_cast<int>(*fid);
        w.row = static_cast<std::size_t>(*row);
        w.target = *target;
        std::size_t col = 4;
        for (int f = 0; f < kNumFeatures; ++f) {
            for (int r = 0; r < 5; ++r) {
                auto v = parse_double(fields[col++]);
                if (!v) throw DataError("windows csv: malformed value");
                w.input(r, f) = *v;
            }
        }
        windows.push_back(std::move(w));
    }
    return windows;
}

}  // namespace fde::data
