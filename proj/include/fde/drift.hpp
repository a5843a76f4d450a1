#pragma once

#include <cstdint>
#include <deque>
#include <string>
#include <vector>

#include "fde/common.hpp"
#include "fde/data.hpp"

namespace fde::drift {

// A simulated sensor attack: from window `onset` onward, every lagged value
// of `feature` is replaced by the mu + magnitude*sigma outlier.
struct DriftScenario {
    Feature feature = Feature::co2;
    std::size_t onset = 0;
    double magnitude = 2.0;
    std::uint64_t seed = 0;
};

// Replacement value for a feature at magnitude k: mean + k*std in raw space,
// plain k in standardized space.
double outlier_value(const data::Scaler& scaler, Feature f, double k, bool standardized);

std::vector<data::Window> inject_outlier_drift(const std::vector<data::Window>& stream,
                                               const DriftScenario& scenario,
                                               const data::Scaler& scaler,
                                               bool standardized = true);

// Adaptive-windowing change detector over a stream of error values. Keeps an
// exponential histogram of buckets (capacity 2^level, at most max_buckets+1
// per level) and drops the oldest buckets while any split of the window has
// sub-window means further apart than the delta-controlled cut threshold.
struct AdwinConfig {
    double delta = 0.002;
    int max_buckets = 5;
    int clock = 32;           // cut checks every `clock` insertions
    int min_window = 16;      // no checks below this window width
    int min_sub_window = 5;   // each side of a split must be at least this
};

class Adwin {
public:
    explicit Adwin(AdwinConfig cfg = {});

    struct Update {
        bool drift = false;
        std::size_t dropped = 0;
        double mean_before = 0.0;
        double mean_after = 0.0;
    };

    Update update(double value);

    std::size_t width() const { return width_; }
    double sum() const { return sum_; }
    double mean() const { return width_ ? sum_ / static_cast<double>(width_) : 0.0; }
    // Sum of squared deviations of the retained window (M2, not divided).
    double variance_sum() const { return var_sum_; }
    const AdwinConfig& config() const { return cfg_; }

private:
    struct Bucket {
        double sum = 0.0;
        double var = 0.0;  // within-bucket M2
    };

    void insert(double value);
    void compress();
    bool find_cut() const;
    std::size_t drop_oldest();

    AdwinConfig cfg_;
    // levels_[i]: buckets of capacity 2^i; front() is the newest bucket.
    std::vector<std::deque<Bucket>> levels_;
    std::size_t width_ = 0;
    double sum_ = 0.0;
    double var_sum_ = 0.0;
    std::uint64_t ticks_ = 0;
};

// Per-batch MAE series fed to the detector.
struct ErrorStream {
    std::vector<double> batch_mae;
    int batch_size = 5;
};

ErrorStream batch_mae_stream(const std::vector<double>& abs_errors, int batch_size = 5);

struct Alarm {
    std::size_t batch_index = 0;
    std::size_t window_index = 0;
    double mean_before = 0.0;
    double mean_after = 0.0;
};

std::vector<Alarm> detect(const ErrorStream& stream, const AdwinConfig& cfg = {});

// Contiguous partition of the window stream into a non-drifting prefix and a
// drifting suffix at the first alarm boundary.
struct Section {
    std::size_t begin = 0;
    std::size_t end = 0;
    bool drifting = false;
};

std::vector<Section> segment_stream(std::size_t n_windows, const std::vector<Alarm>& alarms);

// Scenario and alarm-log files.
void write_scenario_json(const DriftScenario& s, const std::string& path);
DriftScenario read_scenario_json(const std::string& path);
void write_alarm_csv(const std::vector<Alarm>& alarms, const std::string& path);

}  // namespace fde::drift
