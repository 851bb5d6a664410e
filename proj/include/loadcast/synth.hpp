#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "loadcast/linalg.hpp"
#include "loadcast/series.hpp"

namespace loadcast::synth {

struct RegimeSpec {
    double mean = 0.5;       // scaled-load units, in (0,1)
    double sd = 0.02;        // stationary sd of the within-regime noise
    double dwell_days = 3.0; // mean dwell; jump rate is its reciprocal
};

struct SynthConfig {
    int n_days = 362;
    std::vector<RegimeSpec> regimes = {{0.3, 0.03, 4.0}, {0.7, 0.03, 4.0}};
    double ar_coef = 0.8;  // within-regime AR(1) noise coefficient
    Vec coupling = Vec::Zero(series::kGroups);  // schedule -> load
    std::uint64_t seed = 1;
};

struct SynthResult {
    series::LoadDataset dataset;      // identity scale, loads already in [0,1]
    std::vector<int> day_labels;      // majority regime per day
    std::vector<int> step_labels;     // regime per 15-minute step
};

// Markov regime chain at 15-minute resolution with AR(1) within-regime noise
// and smoothed on/off schedule channels coupled into the load. Deterministic
// given the seed.
SynthResult generate(const SynthConfig& config);

// Writes the CSV layout that series::ingest_csv consumes (3 aggregated
// schedule columns) plus a day-label sidecar at path + ".labels". Loads are
// emitted in [raw_min, raw_max] so ingestion exercises the scaling.
void write_csv(const std::string& path, const SynthResult& result, double raw_min = 0.0,
               double raw_max = 1.0);

}  // namespace loadcast::synth
