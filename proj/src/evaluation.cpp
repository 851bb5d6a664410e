#include "loadcast/evaluation.hpp"

#include <algorithm>
#include <cmath>

#include "loadcast/errors.hpp"
#include "loadcast/stats.hpp"

namespace loadcast::evaluation {

MetricReport compute_metrics(const Vec& actual, const Vec& forecast) {
    if (actual.size() != forecast.size()) throw ParamError("actual/forecast length mismatch");
    const Eigen::Index n = actual.size();
    if (n < 2) throw ParamError("need at least 2 points");

    MetricReport rep;
    const Vec err = actual - forecast;
    rep.mae = err.cwiseAbs().mean();
    rep.rmse = std::sqrt(err.squaredNorm() / static_cast<double>(n));

    double adj = 0.0;
    for (Eigen::Index t = 1; t < n; ++t) adj += std::abs(actual[t] - actual[t - 1]);
    const double scale = adj / static_cast<double>(n - 1);
    if (scale > 0.0) rep.mase = rep.mae / scale;

    int zeros = 0;
    double ape = 0.0;
    for (Eigen::Index t = 0; t < n; ++t) {
        if (actual[t] == 0.0) {
            ++zeros;
        } else {
            ape += std::abs(err[t] / actual[t]);
        }
    }
    if (zeros == 0) {
        rep.mape = ape / static_cast<double>(n);
    } else {
        rep.mape_zero_actuals = zeros;
    }

    const double range = actual.maxCoeff() - actual.minCoeff();
    if (range > 0.0) rep.nr_rmse = rep.rmse / range;
    const double mean = actual.mean();
    if (mean != 0.0) rep.nm_rmse = rep.rmse / mean;
    std::vector<double> vals(actual.data(), actual.data() + n);
    const double iqr =
        stats::quantile_type7(vals, 0.75) - stats::quantile_type7(vals, 0.25);
    if (iqr > 0.0) rep.niqr_rmse = rep.rmse / iqr;
    return rep;
}

DmResult dm_test(const Vec& errors_a, const Vec& errors_b) {
    if (errors_a.size() != errors_b.size()) throw ParamError("error series length mismatch");
    const Eigen::Index n = errors_a.size();
    if (n < 10) throw ParamError("need at least 10 points for the DM test");

    const Vec d = errors_a.array().square() - errors_b.array().square();
    if (d.cwiseAbs().maxCoeff() == 0.0) {
        throw DegenerateDifferential("identical squared losses: DM differential is zero");
    }
    const double dbar = d.mean();
    const int trunc = static_cast<int>(std::floor(std::cbrt(static_cast<double>(n))));
    const double lrv = stats::bartlett_long_run_variance(d.array() - dbar, trunc);
    if (lrv <= 0.0) {
        throw DegenerateDifferential("loss differential has zero long-run variance");
    }
    DmResult res;
    res.statistic = dbar / std::sqrt(lrv / static_cast<double>(n));
    res.p_value = 2.0 * (1.0 - stats::normal_cdf(std::abs(res.statistic)));
    return res;
}

QqPoints residual_qq(const Vec& errors) {
    const Eigen::Index n = errors.size();
    if (n < 10) throw ParamError("need at least 10 residuals");
    const double m = errors.mean();
    const double sd = std::sqrt(stats::variance(errors));
    if (sd <= 0.0) throw DegenerateSeries("constant residuals");

    QqPoints qq;
    qq.sample = (errors.array() - m) / sd;
    std::sort(qq.sample.data(), qq.sample.data() + n);
    qq.theoretical.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        qq.theoretical[i] =
            stats::normal_ppf((static_cast<double>(i) + 0.5) / static_cast<double>(n));
    }
    return qq;
}

}  // namespace loadcast::evaluation
