#include <cmath>
#include <cstring>
#include <deque>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "fde/drift.hpp"
#include "pipeline_fixture.hpp"

using namespace fde;
using namespace fde::drift;

namespace {

std::vector<data::Window> toy_stream(std::size_t n) {
    Rng rng(31);
    std::vector<data::Window> out;
    for (std::size_t i = 0; i < n; ++i) {
        data::Window w;
        w.input = Matrix(5, kNumFeatures);
        for (std::size_t r = 0; r < 5; ++r) {
            for (int f = 0; f < kNumFeatures; ++f) w.input(r, f) = rng.normal();
        }
        w.target = rng.normal();
        out.push_back(std::move(w));
    }
    return out;
}

data::Scaler table_scaler() {
    return data::Scaler::from_stats({430.02, 23.38, 29.1, 1006, 0.31},
                                    {65.4, 0.74, 13.25, 12.12, 1.46});
}

}  // namespace

TEST_SUITE_BEGIN("drift");

TEST_CASE("outlier replacement values") {
    auto scaler = table_scaler();
    CHECK(outlier_value(scaler, Feature::temperature, 2.0, false) == doctest::Approx(24.86));
    CHECK(outlier_value(scaler, Feature::humidity, 2.0, true) == doctest::Approx(2.0));
    CHECK(outlier_value(scaler, Feature::co2, -2.0, false) == doctest::Approx(430.02 - 130.8));
}

TEST_CASE("injection replaces one column from onset onward") {
    auto stream = toy_stream(20);
    auto scaler = table_scaler();
    DriftScenario sc{Feature::temperature, 8, 2.0, 0};
    auto corrupted = inject_outlier_drift(stream, sc, scaler, true);
    REQUIRE(corrupted.size() == stream.size());
    for (std::size_t i = 0; i < corrupted.size(); ++i) {
        for (std::size_t r = 0; r < 5; ++r) {
            for (int f = 0; f < kNumFeatures; ++f) {
                double expect = (i >= 8 && f == static_cast<int>(Feature::temperature))
                                    ? 2.0
                                    : stream[i].input(r, f);
                CHECK(corrupted[i].input(r, f) == expect);  // locality is bitwise
            }
        }
        CHECK(corrupted[i].target == stream[i].target);
    }
}

TEST_CASE("injection is idempotent and respects boundaries") {
    auto stream = toy_stream(10);
    auto scaler = table_scaler();
    DriftScenario sc{Feature::pir, 4, 2.0, 0};
    auto once = inject_outlier_drift(stream, sc, scaler, true);
    auto twice = inject_outlier_drift(once, sc, scaler, true);
    for (std::size_t i = 0; i < once.size(); ++i) {
        CHECK(std::memcmp(once[i].input.data(), twice[i].input.data(),
                          once[i].input.size() * sizeof(double)) == 0);
    }

    // onset at the last window corrupts exactly that window
    DriftScenario last{Feature::co2, stream.size() - 1, 2.0, 0};
    auto tail = inject_outlier_drift(stream, last, scaler, true);
    CHECK(tail[stream.size() - 2].input == stream[stream.size() - 2].input);
    CHECK(tail[stream.size() - 1].input(0, 0) == 2.0);

    DriftScenario outside{Feature::co2, stream.size(), 2.0, 0};
    CHECK_THROWS_AS(inject_outlier_drift(stream, outside, scaler, true), ConfigError);
}

TEST_CASE("adwin never flags on constant or alternating streams") {
    Adwin constant_detector{};
    for (int i = 0; i < 10000; ++i) {
        CHECK(!constant_detector.update(0.5).drift);
    }
    CHECK(constant_detector.width() == 10000);
    CHECK(constant_detector.mean() == doctest::Approx(0.5));

    Adwin alternating{};
    for (int i = 0; i < 10000; ++i) {
        CHECK(!alternating.update(i % 2 ? 1.0 : 0.0).drift);
    }
}

TEST_CASE("adwin detects an abrupt Bernoulli shift quickly") {
    int detected_within = -1;
    Rng rng(77);
    Adwin det{};
    for (int i = 0; i < 2000; ++i) {
        double p = i < 1000 ? 0.2 : 0.8;
        double v = rng.uniform() < p ? 1.0 : 0.0;
        if (det.update(v).drift && i >= 1000) {
            detected_within = i - 1000;
            break;
        }
    }
    REQUIRE(detected_within >= 0);
    CHECK(detected_within <= 300);
}

TEST_CASE("adwin window statistics match a brute-force mirror exactly") {
    // 0/1 values make every sum exactly representable, so retained-window
    // sums and counts must agree with a replayed deque at every step.
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        Rng rng(seed);
        Adwin det{};
        std::deque<double> mirror;
        for (int i = 0; i < 200; ++i) {
            double p = i < 120 ? 0.3 : 0.9;
            double v = rng.uniform() < p ? 1.0 : 0.0;
            auto upd = det.update(v);
            mirror.push_back(v);
            if (upd.dropped > 0) {
                REQUIRE(upd.dropped <= mirror.size());
                mirror.erase(mirror.begin(), mirror.begin() + upd.dropped);
            }
            REQUIRE(det.width() == mirror.size());
            double exact_sum = 0.0;
            for (double x : mirror) exact_sum += x;
            CHECK(det.sum() == exact_sum);
            CHECK(det.mean() == exact_sum / static_cast<double>(mirror.size()));
        }
    }
}

TEST_CASE("adwin false alarms are rare on stationary streams") {
    int total_alarms = 0;
    for (int seed = 0; seed < 10; ++seed) {
        Rng rng(900 + seed);
        Adwin det{};
        for (int i = 0; i < 5000; ++i) {
            total_alarms += det.update(rng.uniform() < 0.5 ? 1.0 : 0.0).drift ? 1 : 0;
        }
    }
    CHECK(total_alarms <= 1);
}

TEST_CASE("error stream batching") {
    std::vector<double> errs = {1, 2, 3, 4, 5, 6, 7};
    auto stream = batch_mae_stream(errs, 5);
    REQUIRE(stream.batch_mae.size() == 2);
    CHECK(stream.batch_mae[0] == doctest::Approx(3.0));
    CHECK(stream.batch_mae[1] == doctest::Approx(6.5));
    CHECK_THROWS_AS(batch_mae_stream(errs, 0), ConfigError);
}

TEST_CASE("stream segmentation") {
    // no alarms: one non-drifting section
    auto none = segment_stream(100, {});
    REQUIRE(none.size() == 1);
    CHECK(none[0].begin == 0);
    CHECK(none[0].end == 100);
    CHECK(!none[0].drifting);

    // one alarm at batch 4 (batch size 5): boundary at window 20
    auto sections = segment_stream(100, {{4, 20, 0.1, 0.5}});
    REQUIRE(sections.size() == 2);
    CHECK(sections[0].end == 20);
    CHECK(!sections[0].drifting);
    CHECK(sections[1].begin == 20);
    CHECK(sections[1].end == 100);
    CHECK(sections[1].drifting);

    // alarm at the stream start: empty non-drifting prefix is valid
    auto at_start = segment_stream(50, {{0, 0, 0.0, 0.9}});
    REQUIRE(at_start.size() == 2);
    CHECK(at_start[0].begin == 0);
    CHECK(at_start[0].end == 0);
    CHECK(at_start[1].begin == 0);
    CHECK(at_start[1].end == 50);
}

TEST_CASE("scenario json and alarm csv round trip") {
    auto dir = std::filesystem::temp_directory_path();
    auto spath = (dir / "fde_scenario.json").string();
    DriftScenario sc{Feature::pressure, 42, -2.0, 99};
    write_scenario_json(sc, spath);
    auto loaded = read_scenario_json(spath);
    CHECK(loaded.feature == Feature::pressure);
    CHECK(loaded.onset == 42);
    CHECK(loaded.magnitude == -2.0);
    CHECK(loaded.seed == 99);

    auto apath = (dir / "fde_alarms.csv").string();
    write_alarm_csv({{4, 20, 0.1, 0.5}}, apath);
    std::ifstream in(apath);
    std::string header, row;
    std::getline(in, header);
    std::getline(in, row);
    CHECK(header == "batch_index,window_index,detector_mean_before,detector_mean_after");
    CHECK(row.substr(0, 5) == "4,20,");
    std::filesystem::remove(spath);
    std::filesystem::remove(apath);
}

TEST_CASE("co2 drift raises the MAE stream on synthetic data") {
    const auto& pl = fde::testing::trained_pipeline();
    std::size_t onset = pl.test_windows.size() / 2;
    DriftScenario sc{Feature::co2, onset, 2.0, 0};
    auto corrupted = inject_outlier_drift(pl.test_windows, sc, pl.scaler, true);

    double pre = 0, post = 0;
    for (std::size_t i = 0; i < corrupted.size(); ++i) {
        double err = std::fabs(models::predict(pl.regressor, corrupted[i]) - corrupted[i].target);
        (i < onset ? pre : post) += err;
    }
    pre /= static_cast<double>(onset);
    post /= static_cast<double>(corrupted.size() - onset);
    CHECK(post / pre > 2.0);
}

TEST_SUITE_END();
