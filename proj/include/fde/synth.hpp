#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "fde/data.hpp"

namespace fde::synth {

// Desk-scale stand-in for the sensor dataset with a known ground-truth rule:
// the co2 column is driven recursively by
//     co2[t+5] = w1 * co2[t] + w2 * temperature[t] + N(0, noise_std)
// while temperature, humidity, pressure and pir are independent mean-
// reverting AR(1) processes. co2 is therefore both an input feature and the
// prediction target, and is the dominant predictor of itself, so corrupting
// it produces a real drift while the nuisance features produce virtual ones.
struct SyntheticSpec {
    std::size_t length = 1440;
    std::uint64_t seed = 0;
    double w1 = 0.8;
    double w2 = 0.1;
    double noise_std = 0.05;
    // AR(1) parameters for temperature, humidity, pressure, pir (in order).
    std::array<double, 4> ar_coeff = {0.9, 0.9, 0.9, 0.9};
    std::array<double, 4> ar_mean = {0.0, 0.0, 0.0, 0.0};
    double innovation_std = 1.0;
    double co2_init_mean = 0.0;
    double co2_init_std = 0.4;
};

data::TimeSeriesFrame generate_synthetic(const SyntheticSpec& spec);

// Raw CSV in the ingest schema (timestamp + five features), one row a minute.
void write_raw_csv(const data::TimeSeriesFrame& frame, const std::string& path);

}  // namespace fde::synth
