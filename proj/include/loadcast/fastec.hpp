#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "loadcast/gmm.hpp"
#include "loadcast/linalg.hpp"
#include "loadcast/series.hpp"

namespace loadcast::fastec {

struct SplineDesign {
    Mat X;       // S x k basis evaluations; rows sum to 1
    Vec knots;   // clamped knot vector
    int degree = 3;
};

// Clamped B-spline basis of the given degree with k functions on equidistant
// interior knots over [0,1], evaluated at the s/S grid (s = 1..S).
// Requires k > degree and S >= k.
SplineDesign bspline_design(int S, int k, int degree = 3);

// Asymmetric squared loss: |tau - 1(u<0)| * u^2.
double expectile_loss(double u, double tau);

// Singular value soft-thresholding: U max(Sigma - lambda, 0) V^T.
Mat prox_nuclear(const Mat& M, double lambda);

double nuclear_norm(const Mat& M);

struct ExpectileFit {
    Mat coef;  // k x q coefficient matrix, one column per sample curve
    double tau = 0.5;
    double lambda = 0.0;
    std::vector<double> objective_trace;
    bool converged = false;
};

// Nuclear-norm penalized expectile regression of the S x q curve matrix Y on
// the spline design, by accelerated proximal gradient with function-value
// restart and monotone accept (step 1/L, L from the design spectral norm).
ExpectileFit fastec_fit(const Mat& Y, const SplineDesign& design, double tau, double lambda,
                        double tol = 1e-7, int max_iter = 5000);

// n-fold cross-validation over intra-day rows; returns the grid value with
// the smallest out-of-fold expectile loss, ties to the larger lambda.
double select_lambda(const Mat& Y, const SplineDesign& design, double tau, int folds,
                     const std::vector<double>& grid = {1e-5, 1e-4, 1e-3, 1e-2, 0.1, 1.0, 10.0},
                     double tol = 1e-6, int max_iter = 1000);

// Whole-day-curve resampling with replacement until target_count curves.
std::vector<Vec> bootstrap_enlarge(const std::vector<Vec>& curves, std::size_t target_count,
                                   std::uint64_t seed);

// MAE-minimizing combination weights over [moment forecasts | exog channels]
// via cyclic coordinate search on the grid [lo, hi] with the given step.
// Ties keep the incumbent value, so duplicated predictors load on the first.
Vec estimate_weights(const Mat& moment_forecasts, const Mat& exog, const Vec& actual,
                     double lo = -2.0, double hi = 2.0, double step = 0.01);

struct FastecConfig {
    std::vector<double> tau_grid = {0.1, 0.25, 0.5, 0.75, 0.9};
    double lambda = 1e-3;  // negative: select by cross-validation
    int cv_folds = 5;
    int bootstrap_factor = 10;
    int spline_n = 0;  // observation count n for k = floor(sqrt(n)); 0: n = S
    int spline_degree = 3;
    double tol = 1e-7;
    int max_iter = 5000;
    std::uint64_t seed = 1;
    double ambiguity_level = 0.05;
    gmm::EmConfig em = {};
};

// One conditional-moment fit: the expectile regression for a (state, horizon)
// pair plus the predicted moment curve used at forecast time.
struct StateFit {
    ExpectileFit fit;
    Vec moment_curve;     // length S
    int member_days = 0;  // affiliated training days (pre-bootstrap)
};

struct FastecModel {
    gmm::GmmFit mixture;
    std::vector<int> state_order;  // mixture component index per state, means ascending
    std::vector<double> tau_grid;  // one level per state
    SplineDesign design;
    std::array<std::vector<StateFit>, 2> states;  // [horizon][state]
    std::array<Vec, 2> weights;  // per horizon: moment weight then 3 exog weights
    double ambiguity_level = 0.05;
};

// Full regime-switching training: mixture fit on the training loads, day
// affiliation, per-(tau, horizon) penalized expectile fits on bootstrapped
// member curves, and MAE combination weights on the later half-sample.
FastecModel train_fastec(const std::vector<series::SamplePair>& train, const FastecConfig& config);

struct RegimeForecast {
    Vec values;  // 2S scaled loads
    int state = 0;
    bool ambiguous = false;
    int clipped = 0;
};

RegimeForecast regime_forecast(const FastecModel& model, const series::SamplePair& sample);

void save_model(const std::string& path, const FastecModel& model);
FastecModel load_model(const std::string& path);

}  // namespace loadcast::fastec
