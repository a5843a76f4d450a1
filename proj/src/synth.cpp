#include "fde/synth.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace fde::synth {

data::TimeSeriesFrame generate_synthetic(const SyntheticSpec& spec) {
    if (spec.length < 10) throw ConfigError("synthetic length must be at least 10");
    if (!(std::fabs(spec.w1) < 1.0)) throw ConfigError("synthetic w1 must be in (-1,1)");
    for (double a : spec.ar_coeff) {
        if (!(std::fabs(a) < 1.0)) throw ConfigError("synthetic AR coefficient must be in (-1,1)");
    }
    if (spec.noise_std < 0.0 || spec.innovation_std < 0.0) {
        throw ConfigError("synthetic noise must be non-negative");
    }

    Rng rng(spec.seed);
    data::TimeSeriesFrame frame;
    frame.frame_id = 0;
    frame.start_minute = 28401120;  // 2024-01-01 00:00, arbitrary fixed origin
    frame.rows.resize(spec.length);

    // Exogenous AR(1) features: temperature, humidity, pressure, pir.
    for (int k = 0; k < 4; ++k) {
        const int col = 1 + k;
        double a = spec.ar_coeff[k];
        double mean = spec.ar_mean[k];
        double x = mean + (spec.innovation_std > 0.0
                               ? rng.normal(0.0, spec.innovation_std / std::sqrt(1.0 - a * a))
                               : 0.0);
        for (std::size_t t = 0; t < spec.length; ++t) {
            frame.rows[t][col] = x;
            x = mean + a * (x - mean) + rng.normal(0.0, spec.innovation_std);
        }
    }

    // co2 follows the target rule recursively, warm-started near stationarity.
    const int co2 = static_cast<int>(Feature::co2);
    const int temp = static_cast<int>(Feature::temperature);
    for (std::size_t t = 0; t < 5 && t < spec.length; ++t) {
        frame.rows[t][co2] = spec.co2_init_mean + (spec.co2_init_std > 0.0
                                                       ? rng.normal(0.0, spec.co2_init_std)
                                                       : 0.0);
    }
    for (std::size_t t = 5; t < spec.length; ++t) {
        frame.rows[t][co2] = spec.w1 * frame.rows[t - 5][co2] +
                             spec.w2 * frame.rows[t - 5][temp] + rng.normal(0.0, spec.noise_std);
    }
    return frame;
}

void write_raw_csv(const data::TimeSeriesFrame& frame, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write csv: " + path);
    out << "timestamp,co2,temperature,humidity,pressure,pir\n";
    char buf[40];
    for (std::size_t r = 0; r < frame.rows.size(); ++r) {
        out << data::format_minute(frame.start_minute + static_cast<std::int64_t>(r));
        for (int f = 0; f < kNumFeatures; ++f) {
            std::snprintf(buf, sizeof(buf), ",%.17g", frame.rows[r][f]);
            out << buf;
        }
        out << '\n';
    }
}

}  // namespace fde::synth
