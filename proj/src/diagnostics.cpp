#include "loadcast/diagnostics.hpp"

#include <cmath>
#include <limits>

#include "loadcast/errors.hpp"
#include "loadcast/stats.hpp"

namespace loadcast::diagnostics {

namespace {

int schwert_bound(Eigen::Index n) {
    return static_cast<int>(12.0 * std::pow(static_cast<double>(n) / 100.0, 0.25));
}

// MacKinnon (1994) response-surface p-value for the constant-only ADF tau.
double mackinnon_p(double tau) {
    constexpr double tau_max = 2.74, tau_min = -18.83, tau_star = -1.61;
    if (tau > tau_max) return 1.0;
    if (tau < tau_min) return 0.0;
    if (tau <= tau_star) {
        const double z = 2.1659 + tau * (1.4412 + tau * 0.038269);
        return stats::normal_cdf(z);
    }
    const double z = 1.7339 + tau * (0.93202 + tau * (-0.12745 + tau * -0.010368));
    return stats::normal_cdf(z);
}

struct Ols {
    Vec coef;
    Vec se;
    double rss = 0.0;
    Eigen::Index nobs = 0;
};

Ols ols(const Mat& X, const Vec& y) {
    Ols fit;
    fit.nobs = X.rows();
    const Mat xtx = X.transpose() * X;
    const Eigen::LDLT<Mat> solver(xtx);
    fit.coef = solver.solve(X.transpose() * y);
    const Vec resid = y - X * fit.coef;
    fit.rss = resid.squaredNorm();
    const double dof = static_cast<double>(X.rows() - X.cols());
    const double sigma2 = fit.rss / dof;
    const Mat cov = sigma2 * solver.solve(Mat::Identity(X.cols(), X.cols()));
    fit.se = cov.diagonal().cwiseSqrt();
    return fit;
}

// Builds the augmented regression: dy_t on [1, y_{t-1}, dy_{t-1..t-p}] using
// observations t in [start, n). Returns the t-ratio of the level coefficient
// and the RSS for lag selection.
struct AdfReg {
    double tau = 0.0;
    double rss = 0.0;
    Eigen::Index nobs = 0;
    Eigen::Index ncoef = 0;
};

AdfReg adf_regression(const Vec& y, int p, Eigen::Index start) {
    const Eigen::Index n = y.size();
    const Eigen::Index rows = n - start;
    const Eigen::Index cols = 2 + p;
    Mat X(rows, cols);
    Vec dy(rows);
    for (Eigen::Index t = start; t < n; ++t) {
        const Eigen::Index r = t - start;
        dy[r] = y[t] - y[t - 1];
        X(r, 0) = 1.0;
        X(r, 1) = y[t - 1];
        for (int j = 1; j <= p; ++j) X(r, 1 + j) = y[t - j] - y[t - j - 1];
    }
    const Ols fit = ols(X, dy);
    AdfReg out;
    out.tau = fit.coef[1] / fit.se[1];
    out.rss = fit.rss;
    out.nobs = rows;
    out.ncoef = cols;
    return out;
}

}  // namespace

AcfResult acf(const Vec& series, int max_lag) {
    const Eigen::Index n = series.size();
    if (max_lag < 0 || max_lag >= n) throw ParamError("max_lag must be in [0, n)");
    const double m = series.mean();
    const Vec centered = series.array() - m;
    const double denom = centered.squaredNorm();
    if (denom <= 0.0) throw DegenerateSeries("constant series has no autocorrelation");
    AcfResult out;
    out.acf.resize(max_lag + 1);
    for (int lag = 0; lag <= max_lag; ++lag) {
        double g = 0.0;
        for (Eigen::Index t = lag; t < n; ++t) g += centered[t] * centered[t - lag];
        out.acf[lag] = g / denom;
    }
    out.band = 1.96 / std::sqrt(static_cast<double>(n));
    return out;
}

Density kde_epanechnikov(const Vec& points, double bandwidth, int grid_size) {
    if (points.size() == 0) throw EmptyInput("kde of empty sample");
    if (grid_size < 2) throw ParamError("grid_size must be >= 2");
    const double lo = points.minCoeff();
    const double hi = points.maxCoeff();
    double h = bandwidth;
    if (h <= 0.0) h = 0.016 * (hi - lo);
    if (h <= 0.0) h = 1e-3;  // all points identical: fall back to a narrow spike

    Density out;
    out.bandwidth = h;
    out.grid.resize(grid_size);
    out.density.resize(grid_size);
    const double left = lo - h, right = hi + h;
    const double step = (right - left) / static_cast<double>(grid_size - 1);
    const double norm = 1.0 / (static_cast<double>(points.size()) * h);
    for (int g = 0; g < grid_size; ++g) {
        const double x = left + step * g;
        double acc = 0.0;
        for (Eigen::Index i = 0; i < points.size(); ++i) {
            const double u = (x - points[i]) / h;
            if (u > -1.0 && u < 1.0) acc += 0.75 * (1.0 - u * u);
        }
        out.grid[g] = x;
        out.density[g] = acc * norm;
    }
    return out;
}

StationarityReport adf_test(const Vec& series, int max_lag) {
    const Eigen::Index n = series.size();
    int pmax = max_lag >= 0 ? max_lag : schwert_bound(n);
    if (n <= 20 + pmax) throw InsufficientData("series too short for ADF with lag bound " +
                                               std::to_string(pmax));

    int best_p = pmax;
    if (max_lag < 0) {
        // AIC over a common estimation sample so the criteria are comparable.
        const Eigen::Index start = 1 + pmax;
        double best_aic = std::numeric_limits<double>::infinity();
        for (int p = 0; p <= pmax; ++p) {
            const AdfReg reg = adf_regression(series, p, start);
            const double aic =
                static_cast<double>(reg.nobs) * std::log(reg.rss / static_cast<double>(reg.nobs)) +
                2.0 * static_cast<double>(reg.ncoef);
            if (aic < best_aic) {
                best_aic = aic;
                best_p = p;
            }
        }
    }

    const AdfReg reg = adf_regression(series, best_p, 1 + best_p);
    StationarityReport rep;
    rep.test_name = "ADF";
    rep.statistic = reg.tau;
    rep.p_value = mackinnon_p(reg.tau);
    rep.lags_used = best_p;
    return rep;
}

StationarityReport kpss_test(const Vec& series, int lags) {
    const Eigen::Index n = series.size();
    const int l = lags >= 0 ? lags : schwert_bound(n);
    if (n <= 20 + l) throw InsufficientData("series too short for KPSS with " + std::to_string(l) +
                                            " lags");

    const Vec e = series.array() - series.mean();
    double cum = 0.0, s2sum = 0.0;
    for (Eigen::Index t = 0; t < n; ++t) {
        cum += e[t];
        s2sum += cum * cum;
    }
    const double lrv = stats::bartlett_long_run_variance(e, l);
    if (lrv <= 0.0) throw DegenerateSeries("zero long-run variance");
    const double eta = s2sum / (static_cast<double>(n) * static_cast<double>(n) * lrv);

    // Level-stationarity critical values (10%, 5%, 2.5%, 1%).
    static const double cv[] = {0.347, 0.463, 0.574, 0.739};
    static const double pv[] = {0.10, 0.05, 0.025, 0.01};
    StationarityReport rep;
    rep.test_name = "KPSS";
    rep.statistic = eta;
    rep.lags_used = l;
    if (eta <= cv[0]) {
        rep.p_value = 0.10;
        rep.p_clamped = true;
    } else if (eta >= cv[3]) {
        rep.p_value = 0.01;
        rep.p_clamped = true;
    } else {
        for (int i = 0; i < 3; ++i) {
            if (eta >= cv[i] && eta < cv[i + 1]) {
                const double f = (eta - cv[i]) / (cv[i + 1] - cv[i]);
                rep.p_value = pv[i] + f * (pv[i + 1] - pv[i]);
                break;
            }
        }
    }
    return rep;
}

}  // namespace loadcast::diagnostics
