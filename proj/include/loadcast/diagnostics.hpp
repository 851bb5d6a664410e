#pragma once

#include <optional>
#include <string>

#include "loadcast/linalg.hpp"

namespace loadcast::diagnostics {

struct AcfResult {
    Vec acf;      // acf[0] == 1
    double band;  // +-1.96/sqrt(n), 5% white-noise confidence band
};

// Sample autocorrelation up to max_lag (biased normalization, acf[0]=1).
// Constant series throws DegenerateSeries.
AcfResult acf(const Vec& series, int max_lag);

struct Density {
    Vec grid;
    Vec density;
    double bandwidth = 0.0;
};

// Epanechnikov kernel density on an even grid spanning the data plus one
// bandwidth each side. bandwidth <= 0 selects the default 1.6% of the range.
Density kde_epanechnikov(const Vec& points, double bandwidth = 0.0, int grid_size = 512);

struct StationarityReport {
    std::string test_name;  // "ADF" or "KPSS"
    double statistic = 0.0;
    double p_value = 0.0;
    int lags_used = 0;
    bool p_clamped = false;  // p-value hit the edge of the tabulated range
};

// Augmented Dickey-Fuller with constant, no trend. max_lag < 0 selects the
// lag by AIC up to the Schwert bound floor(12*(n/100)^0.25). P-values come
// from the MacKinnon response-surface approximation.
StationarityReport adf_test(const Vec& series, int max_lag = -1);

// KPSS level-stationarity test, Bartlett-kernel long-run variance. lags < 0
// selects floor(12*(n/100)^0.25). P-values interpolate the standard critical
// value table and are clamped to [0.01, 0.10] at the edges.
StationarityReport kpss_test(const Vec& series, int lags = -1);

}  // namespace loadcast::diagnostics
