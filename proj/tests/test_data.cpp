#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "fde/data.hpp"

using namespace fde;
using namespace fde::data;

namespace {

std::string write_temp(const char* name, const std::string& content) {
    auto path = (std::filesystem::temp_directory_path() / name).string();
    std::ofstream out(path);
    out << content;
    return path;
}

RawRecord rec(std::int64_t t, double co2, double temp = 20, double hum = 30, double pres = 1000,
              double pir = 0) {
    return {t, {co2, temp, hum, pres, pir}};
}

TimeSeriesFrame ramp_frame(std::size_t len, int frame_id = 0) {
    TimeSeriesFrame fr;
    fr.frame_id = frame_id;
    fr.start_minute = 0;
    for (std::size_t i = 0; i < len; ++i) {
        double x = static_cast<double>(i);
        fr.rows.push_back({400 + x, 20 + 0.01 * x, 30 + 0.02 * x, 1000 - 0.01 * x,
                           static_cast<double>(i % 3)});
    }
    return fr;
}

}  // namespace

TEST_SUITE_BEGIN("data");

TEST_CASE("ingest well-formed, malformed and empty files") {
    std::string good = "timestamp,co2,temperature,humidity,pressure,pir\n";
    for (int i = 0; i < 10; ++i) {
        good += "2024-01-01 00:0" + std::to_string(i) + ":00,400,20,30,1000,0\n";
    }
    auto p1 = write_temp("fde_good.csv", good);
    auto r1 = ingest_csv(p1);
    CHECK(r1.records.size() == 10);
    CHECK(r1.skipped == 0);

    std::string bad = "timestamp,co2,temperature,humidity,pressure,pir\n"
                      "2024-01-01 00:00:00,400,20,30,1000,0\n"
                      "2024-01-01 00:01:00,not_a_number,20,30,1000,0\n";
    auto p2 = write_temp("fde_bad.csv", bad);
    auto r2 = ingest_csv(p2);
    CHECK(r2.records.size() == 1);
    CHECK(r2.skipped == 1);

    auto p3 = write_temp("fde_empty.csv", "");
    auto r3 = ingest_csv(p3);
    CHECK(r3.records.empty());
    CHECK(!r3.warnings.empty());

    std::string missing = "timestamp,co2,temperature,humidity,pir\n";
    auto p4 = write_temp("fde_missing.csv", missing);
    CHECK_THROWS_AS(ingest_csv(p4), DataError);

    CHECK_THROWS_AS(ingest_csv("/nonexistent/file.csv"), DataError);
    for (const auto& p : {p1, p2, p3, p4}) std::filesystem::remove(p);
}

TEST_CASE("timestamp parsing variants") {
    CHECK(parse_timestamp("1970-01-01 00:01:00") == 60);
    CHECK(parse_timestamp("1970-01-01T00:01:00") == 60);
    CHECK(parse_timestamp("120") == 120);
    CHECK(!parse_timestamp("yesterday").has_value());
    CHECK(format_minute(1) == "1970-01-01 00:01:00");
    auto t = parse_timestamp("2024-03-05 17:42:00");
    REQUIRE(t.has_value());
    CHECK(format_minute(*t / 60) == "2024-03-05 17:42:00");
}

TEST_CASE("resampling medians and pir sums") {
    // co2 readings {400, 410} in one minute -> 405
    auto two = resample_and_interpolate({rec(0, 400), rec(30, 410)});
    REQUIRE(two.rows.size() == 1);
    CHECK(two.rows[0][0] == doctest::Approx(405));

    // odd count -> middle value
    auto three = resample_and_interpolate({rec(0, 400), rec(20, 410), rec(40, 500)});
    REQUIRE(three.rows.size() == 1);
    CHECK(three.rows[0][0] == doctest::Approx(410));

    // PIR events {1, 0, 2} in a minute sum to 3
    auto pir = resample_and_interpolate(
        {rec(0, 400, 20, 30, 1000, 1), rec(10, 402, 20, 30, 1000, 0), rec(50, 404, 20, 30, 1000, 2)});
    REQUIRE(pir.rows.size() == 1);
    CHECK(pir.rows[0][static_cast<int>(Feature::pir)] == doctest::Approx(3));
}

TEST_CASE("chunk segmentation thresholds") {
    auto consecutive = [](std::int64_t m0, int n, std::vector<RawRecord>& out) {
        for (int i = 0; i < n; ++i) out.push_back(rec((m0 + i) * 60, 400 + i));
    };

    std::vector<RawRecord> r1;
    consecutive(0, 120, r1);
    auto f1 = segment_chunks(resample_and_interpolate(r1));
    REQUIRE(f1.size() == 1);
    CHECK(f1[0].rows.size() == 120);

    std::vector<RawRecord> r2;
    consecutive(0, 59, r2);
    consecutive(100, 61, r2);
    auto f2 = segment_chunks(resample_and_interpolate(r2));
    REQUIRE(f2.size() == 1);
    CHECK(f2[0].rows.size() == 61);
    CHECK(f2[0].start_minute == 100);
    CHECK(f2[0].frame_id == 0);  // surviving runs are renumbered

    std::vector<RawRecord> r3;
    consecutive(0, 60, r3);
    auto f3 = segment_chunks(resample_and_interpolate(r3));
    REQUIRE(f3.size() == 1);
    CHECK(f3[0].rows.size() == 60);
}

TEST_CASE("window construction counts and boundaries") {
    CHECK(make_windows(ramp_frame(60)).size() == 51);
    CHECK(make_windows(ramp_frame(10)).size() == 1);
    CHECK(make_windows(ramp_frame(9)).empty());

    auto w = make_windows(ramp_frame(10));
    REQUIRE(w.size() == 1);
    // input rows 0..4, target row 9: co2 ramps 400 + i
    CHECK(w[0].input(0, 0) == doctest::Approx(400));
    CHECK(w[0].input(4, 0) == doctest::Approx(404));
    CHECK(w[0].target == doctest::Approx(409));
}

TEST_CASE("window count identity over chunks") {
    Rng rng(13);
    std::vector<TimeSeriesFrame> frames;
    std::size_t expected = 0;
    for (int i = 0; i < 8; ++i) {
        std::size_t len = 5 + rng.uniform_index(100);
        frames.push_back(ramp_frame(len, i));
        expected += len >= 10 ? len - 9 : 0;
    }
    CHECK(make_all_windows(frames).size() == expected);
}

TEST_CASE("scaler matches published stats arithmetic") {
    Scaler s = Scaler::from_stats({430.02, 23.38, 29.1, 1006, 0.31},
                                  {65.4, 0.74, 13.25, 12.12, 1.46});
    CHECK(s.transform(Feature::temperature, 23.38) == doctest::Approx(0.0));
    CHECK(s.transform(Feature::temperature, 24.86) == doctest::Approx(2.0));
    CHECK(s.transform(Feature::co2, 430.02) == doctest::Approx(0.0));
    CHECK(s.inverse(Feature::temperature, 2.0) == doctest::Approx(24.86));
}

TEST_CASE("scaler round trip and standardized moments") {
    auto windows = make_windows(ramp_frame(80));
    Scaler s = Scaler::fit_from_windows(windows);

    Rng rng(14);
    for (int i = 0; i < 200; ++i) {
        Feature f = static_cast<Feature>(rng.uniform_index(kNumFeatures));
        double x = rng.uniform(-1e4, 1e4);
        CHECK(s.inverse(f, s.transform(f, x)) == doctest::Approx(x).epsilon(1e-9));
    }

    auto std_windows = standardize_windows(windows, s);
    for (int f = 0; f < kNumFeatures; ++f) {
        double sum = 0, sumsq = 0;
        std::size_t n = 0;
        for (const auto& w : std_windows) {
            for (std::size_t r = 0; r < w.input.rows(); ++r) {
                sum += w.input(r, f);
                sumsq += w.input(r, f) * w.input(r, f);
                ++n;
            }
        }
        double mean = sum / n;
        double var = sumsq / n - mean * mean;
        CHECK(std::fabs(mean) < 1e-9);
        CHECK(std::fabs(std::sqrt(var) - 1.0) < 1e-9);
    }
}

TEST_CASE("degenerate scaler names the constant feature") {
    TimeSeriesFrame fr = ramp_frame(20);
    for (auto& row : fr.rows) row[static_cast<int>(Feature::humidity)] = 55.0;
    auto windows = make_windows(fr);
    try {
        Scaler::fit_from_windows(windows);
        FAIL("expected DataError");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("humidity") != std::string::npos);
    }
}

TEST_CASE("challenging split quantile behavior") {
    // 100 distinct changes -> 20 test / 80 train
    TimeSeriesFrame fr;
    fr.frame_id = 0;
    fr.start_minute = 0;
    // co2 values chosen so each window has a distinct |change|
    std::size_t len = 109;
    double acc = 400;
    for (std::size_t i = 0; i < len; ++i) {
        fr.rows.push_back({acc, 20, 30, 1000, 0});
        acc += 0.01 * static_cast<double>(i * i);
    }
    auto windows = make_windows(fr);
    REQUIRE(windows.size() == 100);
    auto split = split_challenging_test(windows, 0.8);
    CHECK(split.test.size() == 20);
    CHECK(split.train.size() == 80);

    // all changes identical -> everything to train, warning flagged
    TimeSeriesFrame flat = ramp_frame(59);  // linear co2 => constant change
    auto flat_windows = make_windows(flat);
    std::vector<std::string> warnings;
    auto flat_split = split_challenging_test(flat_windows, 0.8, &warnings);
    CHECK(flat_split.test.empty());
    CHECK(flat_split.train.size() == flat_windows.size());
    CHECK(!warnings.empty());

    CHECK_THROWS_AS(split_challenging_test(make_windows(ramp_frame(12)), 0.8), DataError);
}

TEST_CASE("quantile rule on changes 1..10 puts {9,10} in test") {
    std::vector<double> changes = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    double threshold = quantile_linear(changes, 0.8);
    CHECK(threshold == doctest::Approx(8.2));
    std::vector<double> test;
    for (double c : changes) {
        if (c > threshold) test.push_back(c);
    }
    CHECK(test == std::vector<double>{9, 10});
}

TEST_CASE("windows never span frames") {
    std::vector<TimeSeriesFrame> frames = {ramp_frame(30, 0), ramp_frame(25, 7)};
    auto windows = make_all_windows(frames);
    for (const auto& w : windows) {
        CHECK((w.frame_id == 0 || w.frame_id == 7));
        std::size_t len = w.frame_id == 0 ? 30 : 25;
        CHECK(w.row + 9 < len);
    }
}

TEST_CASE("processed csv and meta sidecar round trip") {
    std::vector<TimeSeriesFrame> frames = {ramp_frame(61, 0), ramp_frame(60, 1)};
    frames[1].start_minute = 1000;
    auto csv = (std::filesystem::temp_directory_path() / "fde_processed.csv").string();
    auto meta_path = (std::filesystem::temp_directory_path() / "fde_meta.json").string();
    write_processed_csv(frames, csv);
    auto loaded = read_processed_csv(csv);
    REQUIRE(loaded.size() == 2);
    CHECK(loaded[0].rows.size() == 61);
    CHECK(loaded[1].start_minute == 1000);
    CHECK(loaded[0].rows[5][0] == frames[0].rows[5][0]);

    auto windows = make_all_windows(frames);
    DatasetMeta meta;
    meta.scaler = Scaler::fit_from_windows(windows);
    meta.split = split_challenging_test(windows, 0.8);
    meta.source_rows = 121;
    write_meta_json(meta, meta_path);
    auto loaded_meta = read_meta_json(meta_path);
    CHECK(loaded_meta.scaler.mean(Feature::co2) == meta.scaler.mean(Feature::co2));
    CHECK(loaded_meta.split.train == meta.split.train);
    CHECK(loaded_meta.split.test == meta.split.test);
    CHECK(loaded_meta.history == 5);

    std::filesystem::remove(csv);
    std::filesystem::remove(meta_path);
}

TEST_CASE("windows interchange csv round trip") {
    auto windows = make_windows(ramp_frame(30));
    auto path = (std::filesystem::temp_directory_path() / "fde_windows.csv").string();
    write_windows_csv(windows, path);
    auto loaded = read_windows_csv(path);
    REQUIRE(loaded.size() == windows.size());
    for (std::size_t i = 0; i < windows.size(); ++i) {
        CHECK(loaded[i].input == windows[i].input);
        CHECK(loaded[i].target == windows[i].target);
        CHECK(loaded[i].frame_id == windows[i].frame_id);
        CHECK(loaded[i].row == windows[i].row);
    }
    std::filesystem::remove(path);
}

TEST_SUITE_END();
