#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "loadcast/fastec.hpp"
#include "loadcast/gmm.hpp"
#include "loadcast/neural.hpp"
#include "loadcast/series.hpp"
#include "loadcast/synth.hpp"

namespace loadcast::config {

struct DataConfig {
    std::string csv_path;
    series::ColumnLayout layout;
    int lag_steps = 8;
    int split_day = 212;  // paper's 7/5 month ratio on a 365-day calendar
};

struct GmmSection {
    int components = 5;
    int points = 10000;  // leading load points used for the fit
    gmm::EmConfig em;
};

struct DiagnoseSection {
    int acf_max_lag = 1000;
    double kde_bandwidth = 0.0;  // 0: default 1.6% of range
};

struct RunConfig {
    std::string output_dir = "out";
    std::uint64_t seed = 0;
    int threads = 0;  // 0: serial reference path

    DataConfig data;
    synth::SynthConfig synth;
    double synth_raw_min = 0.0;
    double synth_raw_max = 1.0;

    neural::TrainConfig lstm;
    neural::TrainConfig gru;
    fastec::FastecConfig fastec;
    int arx_lags = 96;
    GmmSection gmm;
    DiagnoseSection diagnose;
    std::string evaluate_reference = "lstm";

    std::string raw_json;  // config snapshot for the manifest
};

// Parses and validates the JSON run config. All validation problems are
// collected and reported together in one ConfigError. The mandatory
// top-level seed feeds every section that has no explicit seed of its own.
RunConfig load_config(const std::string& path);
RunConfig parse_config(const std::string& json_text, const std::string& origin = "<inline>");

}  // namespace loadcast::config
