#pragma once

#include <vector>

#include "loadcast/linalg.hpp"

namespace loadcast::stats {

double mean(const Vec& x);
// Unbiased (n-1) sample variance.
double variance(const Vec& x);

double normal_cdf(double x);
// Inverse standard normal CDF (Acklam's rational approximation, |rel err| ~ 1e-9).
double normal_ppf(double p);

// Two-sided Student-t critical value via the Cornish-Fisher expansion around
// the normal quantile; adequate for the df ~ 95 use here.
double t_critical_two_sided(double level, int df);

// Linear-interpolation empirical quantile (type-7 convention).
double quantile_type7(std::vector<double> sorted_or_not, double p);

// Bartlett-kernel long-run variance estimate of a (mean-removed) series:
// gamma0 + 2 * sum_{j=1..lags} (1 - j/(lags+1)) * gamma_j.
double bartlett_long_run_variance(const Vec& centered, int lags);

}  // namespace loadcast::stats
