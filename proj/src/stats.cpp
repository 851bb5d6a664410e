#include "loadcast/stats.hpp"

#include <algorithm>
#include <cmath>

#include "loadcast/errors.hpp"

namespace loadcast::stats {

double mean(const Vec& x) { return x.mean(); }

double variance(const Vec& x) {
    if (x.size() < 2) return 0.0;
    const double m = x.mean();
    return (x.array() - m).square().sum() / static_cast<double>(x.size() - 1);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x * 0.7071067811865475244); }

double normal_ppf(double p) {
    if (p <= 0.0 || p >= 1.0) throw ParamError("normal_ppf needs p in (0,1)");
    // Acklam's algorithm.
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425, phigh = 1 - plow;
    double q, r;
    if (p < plow) {
        q = std::sqrt(-2 * std::log(p));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
    }
    if (p > phigh) {
        q = std::sqrt(-2 * std::log(1 - p));
        return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
    }
    q = p - 0.5;
    r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
}

double t_critical_two_sided(double level, int df) {
    if (level <= 0.0 || level >= 1.0) throw ParamError("significance level must be in (0,1)");
    if (df < 1) throw ParamError("df must be >= 1");
    const double z = normal_ppf(1.0 - level / 2.0);
    const double n = static_cast<double>(df);
    // First correction terms of the t quantile expansion in 1/df.
    const double z3 = z * z * z;
    const double z5 = z3 * z * z;
    return z + (z3 + z) / (4.0 * n) + (5.0 * z5 + 16.0 * z3 + 3.0 * z) / (96.0 * n * n);
}

double quantile_type7(std::vector<double> x, double p) {
    if (x.empty()) throw EmptyInput("quantile of empty sample");
    if (p <= 0.0) return *std::min_element(x.begin(), x.end());
    if (p >= 1.0) return *std::max_element(x.begin(), x.end());
    std::sort(x.begin(), x.end());
    const double h = (static_cast<double>(x.size()) - 1.0) * p;
    const std::size_t lo = static_cast<std::size_t>(h);
    const double frac = h - static_cast<double>(lo);
    if (lo + 1 >= x.size()) return x.back();
    return x[lo] + frac * (x[lo + 1] - x[lo]);
}

double bartlett_long_run_variance(const Vec& centered, int lags) {
    const auto n = centered.size();
    double acc = centered.squaredNorm() / static_cast<double>(n);
    for (int j = 1; j <= lags && j < n; ++j) {
        const double w = 1.0 - static_cast<double>(j) / static_cast<double>(lags + 1);
        double g = 0.0;
        for (Eigen::Index t = j; t < n; ++t) g += centered[t] * centered[t - j];
        acc += 2.0 * w * g / static_cast<double>(n);
    }
    return acc;
}

}  // namespace loadcast::stats
