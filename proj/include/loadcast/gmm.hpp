#pragma once

#include <cstdint>
#include <vector>

#include "loadcast/linalg.hpp"

namespace loadcast::gmm {

enum class InitPolicy {
    KMeansPP,  // k-means++ style seeding from the data (seeded, default)
    Spread,    // deterministic quantile spread, no randomness
};

struct GmmFit {
    int K = 0;
    Vec weights;    // sum to 1, each in (0,1)
    Vec means;
    Vec variances;  // > 0
    std::vector<double> loglik_trace;
    bool converged = false;
};

struct EmConfig {
    InitPolicy init = InitPolicy::KMeansPP;
    double tol = 1e-7;  // relative log-likelihood gain
    int max_iter = 500;
    std::uint64_t seed = 1;
    double variance_floor = 1e-6;
    int max_restarts = 5;
};

// Fits a K-component univariate Gaussian mixture by EM. Component collapse
// (variance under the floor) restarts with jittered means up to
// max_restarts, then throws NumericError. K < 1 or K >= n throws ParamError.
GmmFit em_fit(const Vec& points, int K, const EmConfig& config = {});

// Posterior membership probabilities, one row per point; computed in
// log-space so extreme points never produce NaN rows.
Mat responsibilities(const Vec& points, const GmmFit& fit);

// Log-likelihood of the sample under the mixture.
double log_likelihood(const Vec& points, const GmmFit& fit);

struct Affiliation {
    int state = 0;       // component with the smallest |t|
    bool ambiguous = false;  // every component rejected at the given level
    Vec t_stats;
};

// Assigns a day-curve to the mixture component whose mean is closest in the
// t-test sense: t_k = mean(curve - mu_k) / se. Zero within-curve variance
// falls back to comparing |mean distance| directly.
Affiliation affiliate(const Vec& curve, const GmmFit& fit, double level = 0.05);

}  // namespace loadcast::gmm
