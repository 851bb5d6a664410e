#pragma once

#include <optional>

#include "loadcast/linalg.hpp"

namespace loadcast::evaluation {

struct MetricReport {
    double mae = 0.0;
    double rmse = 0.0;  // sqrt(mean squared error)
    std::optional<double> mase;       // MAE / mean adjacent |diff| of actuals
    std::optional<double> mape;       // undefined when any actual is zero
    std::optional<double> nr_rmse;    // RMSE / (max - min)
    std::optional<double> nm_rmse;    // RMSE / mean
    std::optional<double> niqr_rmse;  // RMSE / (q75 - q25)
    int mape_zero_actuals = 0;        // offending points when mape is undefined
};

// The six accuracy measures on an actual/forecast pair. Undefined metrics
// (zero actuals for MAPE, zero denominators elsewhere) come back empty
// instead of being fudged with an epsilon.
MetricReport compute_metrics(const Vec& actual, const Vec& forecast);

struct DmResult {
    double statistic = 0.0;  // negative favors model a
    double p_value = 1.0;    // two-sided, standard normal
};

// Diebold-Mariano on the quadratic loss differential d_t = a_t^2 - b_t^2
// with Bartlett long-run variance, truncation floor(n^(1/3)). Identical
// forecasts raise DegenerateDifferential.
DmResult dm_test(const Vec& errors_a, const Vec& errors_b);

struct QqPoints {
    Vec theoretical;  // normal quantiles at (i - 0.5) / n
    Vec sample;       // sorted standardized residuals
};

QqPoints residual_qq(const Vec& errors);

}  // namespace loadcast::evaluation
