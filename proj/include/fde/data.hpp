#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fde/common.hpp"
#include "fde/matrix.hpp"

namespace fde::data {

// One typed sensor reading row; t is naive local time in epoch seconds.
struct RawRecord {
    std::int64_t t = 0;
    std::array<double, kNumFeatures> values{};
};

struct IngestResult {
    std::vector<RawRecord> records;
    std::size_t skipped = 0;
    std::vector<std::string> warnings;
};

// CSV contract: header row with columns timestamp, co2, temperature,
// humidity, pressure, pir (any order, extra columns ignored). Malformed rows
// are skipped and counted.
IngestResult ingest_csv(const std::string& path);

// One-minute grid with possible gaps; rows sorted by minute.
struct MinuteSeries {
    std::vector<std::int64_t> minutes;
    std::vector<std::array<double, kNumFeatures>> rows;
};

// Collapses co-occurring readings within a minute to their median; PIR is
// summed (movement counts). A minute with no reading for any of the four
// continuous features becomes a gap; a missing PIR alone counts as zero.
MinuteSeries resample_and_interpolate(std::vector<RawRecord> records);

// One maximal run of consecutive minutes.
struct TimeSeriesFrame {
    int frame_id = 0;
    std::int64_t start_minute = 0;
    std::vector<std::array<double, kNumFeatures>> rows;
};

std::vector<TimeSeriesFrame> segment_chunks(const MinuteSeries& series, std::size_t min_len = 60);

// One supervised instance: `history` consecutive rows of all features, and
// the co2 value `horizon` minutes after the last input row.
struct Window {
    Matrix input;  // history x features
    double target = 0.0;
    int frame_id = 0;
    std::size_t row = 0;  // index of the first input row within its frame
};

std::vector<Window> make_windows(const TimeSeriesFrame& frame, int history = 5, int horizon = 5);

std::vector<Window> make_all_windows(const std::vector<TimeSeriesFrame>& frames, int history = 5,
                                     int horizon = 5);

class Scaler {
public:
    // Population mean/stddev over the input rows of the given windows.
    static Scaler fit_from_windows(const std::vector<Window>& train_windows);
    static Scaler from_stats(const std::array<double, kNumFeatures>& means,
                             const std::array<double, kNumFeatures>& stds);

    double transform(Feature f, double raw) const;
    double inverse(Feature f, double standardized) const;
    Window transform_window(const Window& w) const;

    double mean(Feature f) const { return means_[static_cast<int>(f)]; }
    double stddev(Feature f) const { return stds_[static_cast<int>(f)]; }

    const std::array<double, kNumFeatures>& means() const { return means_; }
    const std::array<double, kNumFeatures>& stds() const { return stds_; }

private:
    std::array<double, kNumFeatures> means_{};
    std::array<double, kNumFeatures> stds_{};
};

std::vector<Window> standardize_windows(const std::vector<Window>& windows, const Scaler& scaler);

struct Split {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

// Linear-interpolation quantile over a copy of `values`.
double quantile_linear(std::vector<double> values, double q);

// Absolute co2 change between a window's last input row and its target.
double window_co2_change(const Window& w);

// Windows whose change is strictly above the quantile form the test set;
// ties go to train. Emits a warning (not an error) when the test set is empty.
Split split_challenging_test(const std::vector<Window>& windows, double quantile = 0.8,
                             std::vector<std::string>* warnings = nullptr);

// Timestamp helpers (naive local time, no timezone).
std::optional<std::int64_t> parse_timestamp(std::string_view text);
std::string format_minute(std::int64_t minute);

// Processed-dataset persistence: columnar CSV (frame_id, timestamp, features)
// plus a JSON sidecar with scaler stats and split indices.
void write_processed_csv(const std::vector<TimeSeriesFrame>& frames, const std::string& path);
std::vector<TimeSeriesFrame> read_processed_csv(const std::string& path);

struct DatasetMeta {
    Scaler scaler;
    Split split;
    int history = 5;
    int horizon = 5;
    double quantile = 0.8;
    std::size_t source_rows = 0;
    std::size_t skipped_rows = 0;
};

void write_meta_json(const DatasetMeta& meta, const std::string& path);
DatasetMeta read_meta_json(const std::string& path);

// Flat window interchange CSV (used by the inject/detect/explain commands).
void write_windows_csv(const std::vector<Window>& windows, const std::string& path);
std::vector<Window> read_windows_csv(const std::string& path);

}  // namespace fde::data
