#pragma once

#include <string>
#include <vector>

#include "loadcast/linalg.hpp"
#include "loadcast/series.hpp"

namespace loadcast::baselines {

struct ArxModel {
    int lags = 96;
    Vec ar_coef;     // lag 1..lags
    Vec exog_coef;   // 3 schedule channels, contemporaneous
    double intercept = 0.0;
    bool collinear = false;  // design was rank-deficient; min-norm solution
};

// OLS of the scaled load on its own lags and the contemporaneous schedule
// channels, fit over the flattened training days. Rank-deficient designs are
// solved by pseudo-inverse (minimum norm) and flagged; an unusable design
// throws RankError.
ArxModel arx_fit(const std::vector<series::SamplePair>& train, int lags);

// Recursive multi-step forecast to 2S steps. History is day t's loads, so
// lags must not exceed the steps per day; future schedule values reuse day
// t's channels as the information set contains nothing later.
Vec arx_forecast(const ArxModel& model, const series::SamplePair& sample);

// Persistence: repeats day t's loads for both target days.
Vec naive_forecast(const series::SamplePair& sample);

void save_model(const std::string& path, const ArxModel& model);
ArxModel load_model(const std::string& path);

}  // namespace loadcast::baselines
