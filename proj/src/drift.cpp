#include "fde/drift.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "json.hpp"

namespace fde::drift {

double outlier_value(const data::Scaler& scaler, Feature f, double k, bool standardized) {
    if (!std::isfinite(k)) throw ConfigError("outlier magnitude must be finite");
    return standardized ? k : scaler.mean(f) + k * scaler.stddev(f);
}

std::vector<data::Window> inject_outlier_drift(const std::vector<data::Window>& stream,
                                               const DriftScenario& scenario,
                                               const data::Scaler& scaler, bool standardized) {
    if (scenario.onset >= stream.size()) {
        throw ConfigError("drift onset " + std::to_string(scenario.onset) +
                          " outside stream of length " + std::to_string(stream.size()));
    }
    const double value = outlier_value(scaler, scenario.feature, scenario.magnitude, standardized);
    const int col = static_cast<int>(scenario.feature);
    std::vector<data::Window> out = stream;
    for (std::size_t i = scenario.onset; i < out.size(); ++i) {
        for (std::size_t r = 0; r < out[i].input.rows(); ++r) {
            out[i].input(r, col) = value;
        }
    }
    return out;
}

Adwin::Adwin(AdwinConfig cfg) : cfg_(cfg) {
    if (cfg_.delta <= 0.0 || cfg_.delta >= 1.0) throw ConfigError("adwin delta must be in (0,1)");
    if (cfg_.max_buckets < 1 || cfg_.clock < 1) throw ConfigError("adwin config out of range");
    levels_.emplace_back();
}

void Adwin::insert(double value) {
    ++width_;
    if (width_ > 1) {
        double w = static_cast<double>(width_ - 1);
        double d = value - sum_ / w;
        var_sum_ += w * d * d / static_cast<double>(width_);
    }
    sum_ += value;
    levels_[0].push_front({value, 0.0});
}

void Adwin::compress() {
    for (std::size_t level = 0; level < levels_.size(); ++level) {
        if (levels_[level].size() <= static_cast<std::size_t>(cfg_.max_buckets) + 1) break;
        if (level + 1 == levels_.size()) levels_.emplace_back();
        const double n = std::pow(2.0, static_cast<double>(level));
        Bucket oldest = levels_[level].back();
        levels_[level].pop_back();
        Bucket second = levels_[level].back();
        levels_[level].pop_back();
        double u1 = oldest.sum / n;
        double u2 = second.sum / n;
        Bucket merged;
        merged.sum = oldest.sum + second.sum;
        merged.var = oldest.var + second.var + n * n * (u1 - u2) * (u1 - u2) / (2.0 * n);
        levels_[level + 1].push_front(merged);
    }
}

bool Adwin::find_cut() const {
    const double n = static_cast<double>(width_);
    const double variance = var_sum_ / n;
    const double delta_dash = std::log(2.0 * std::log(n) / cfg_.delta);
    const double minw = static_cast<double>(cfg_.min_sub_window);

    double n0 = 0.0;
    double u0 = 0.0;
    for (std::size_t level = levels_.size(); level-- > 0;) {
        const double cap = std::pow(2.0, static_cast<double>(level));
        for (auto it = levels_[level].rbegin(); it != levels_[level].rend(); ++it) {
            n0 += cap;
            u0 += it->sum;
            double n1 = n - n0;
            if (n1 <= 0.0) return false;  // no split after the newest bucket
            if (n0 < minw || n1 < minw) continue;
            double u1 = sum_ - u0;
            double m = 1.0 / (n0 - minw + 1.0) + 1.0 / (n1 - minw + 1.0);
            double eps = std::sqrt(2.0 * m * variance * delta_dash) + (2.0 / 3.0) * delta_dash * m;
            if (std::fabs(u0 / n0 - u1 / n1) > eps) return true;
        }
    }
    return false;
}

std::size_t Adwin::drop_oldest() {
    std::size_t level = levels_.size();
    while (level-- > 0) {
        if (!levels_[level].empty()) break;
    }
    Bucket oldest = levels_[level].back();
    levels_[level].pop_back();
    const std::size_t n1 = static_cast<std::size_t>(1) << level;
    width_ -= n1;
    sum_ -= oldest.sum;
    if (width_ > 0) {
        double u1 = oldest.sum / static_cast<double>(n1);
        double mean_rest = sum_ / static_cast<double>(width_);
        double inc = oldest.var + static_cast<double>(n1) * static_cast<double>(width_) *
                                      (u1 - mean_rest) * (u1 - mean_rest) /
                                      static_cast<double>(n1 + width_);
        var_sum_ -= inc;
        if (var_sum_ < 0.0) var_sum_ = 0.0;
    } else {
        var_sum_ = 0.0;
    }
    while (levels_.size() > 1 && levels_.back().empty()) levels_.pop_back();
    return n1;
}

Adwin::Update Adwin::update(double value) {
    if (!std::isfinite(value)) throw NumericError("adwin: non-finite value");
    insert(value);
    compress();
    ++ticks_;
    Update result;
    result.mean_before = mean();
    if (ticks_ % static_cast<std::uint64_t>(cfg_.clock) == 0 &&
        width_ >= static_cast<std::size_t>(cfg_.min_window)) {
        while (find_cut()) {
            result.dropped += drop_oldest();
            result.drift = true;
        }
    }
    result.mean_after = mean();
    return result;
}

ErrorStream batch_mae_stream(const std::vector<double>& abs_errors, int batch_size) {
    if (batch_size < 1) throw ConfigError("batch size must be >= 1");
    ErrorStream stream;
    stream.batch_size = batch_size;
    for (std::size_t start = 0; start < abs_errors.size();
         start += static_cast<std::size_t>(batch_size)) {
        std::size_t stop = std::min(abs_errors.size(), start + batch_size);
        double acc = 0.0;
        for (std::size_t i = start; i < stop; ++i) acc += abs_errors[i];
        stream.batch_mae.push_back(acc / static_cast<double>(stop - start));
    }
    return stream;
}

std::vector<Alarm> detect(const ErrorStream& stream, const AdwinConfig& cfg) {
    Adwin detector(cfg);
    std::vector<Alarm> alarms;
    for (std::size_t b = 0; b < stream.batch_mae.size(); ++b) {
        auto upd = detector.update(stream.batch_mae[b]);
        if (upd.drift) {
            alarms.push_back({b, b * static_cast<std::size_t>(stream.batch_size), upd.mean_before,
                              upd.mean_after});
        }
    }
    return alarms;
}

std::vector<Section> segment_stream(std::size_t n_windows, const std::vector<Alarm>& alarms) {
    if (alarms.empty()) return {{0, n_windows, false}};
    std::size_t boundary = std::min(alarms.front().window_index, n_windows);
    return {{0, boundary, false}, {boundary, n_windows, true}};
}

void write_scenario_json(const DriftScenario& s, const std::string& path) {
    nlohmann::json j = {{"feature", feature_name(s.feature)},
                        {"onset", s.onset},
                        {"magnitude", s.magnitude},
                        {"seed", s.seed}};
    std::ofstream out(path);
    if (!out) throw DataError("cannot write scenario: " + path);
    out << j.dump(2) << '\n';
}

DriftScenario read_scenario_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot read scenario: " + path);
    nlohmann::json j;
    in >> j;
    DriftScenario s;
    s.feature = require_feature(j.at("feature").get<std::string>());
    s.onset = j.at("onset").get<std::size_t>();
    s.magnitude = j.at("magnitude").get<double>();
    s.seed = j.value("seed", std::uint64_t{0});
    return s;
}

void write_alarm_csv(const std::vector<Alarm>& alarms, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write alarm log: " + path);
    out << "batch_index,window_index,detector_mean_before,detector_mean_after\n";
    char buf[128];
    for (const auto& a : alarms) {
        std::snprintf(buf, sizeof(buf), "%zu,%zu,%.17g,%.17g\n", a.batch_index, a.window_index,
                      a.mean_before, a.mean_after);
        out << buf;
    }
}

}  // namespace fde::drift
