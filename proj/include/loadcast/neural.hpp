#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "loadcast/linalg.hpp"
#include "loadcast/series.hpp"

namespace loadcast::neural {

enum class CellKind { Lstm, Gru };

// Parameter shapes. The cells use per-time-step coefficients: every step s
// owns its own input weights, recurrent weights and intercept per gate, so
// the matrices below have one row per step. width is the hidden size per
// step (1 reproduces the scalar-hidden formulation; the column layouts
// collapse to S x (k*G), S x G and S x G).
struct RnnShape {
    CellKind kind = CellKind::Lstm;
    int steps = 96;
    int features = 4;
    int outputs = 192;
    int width = 1;

    int gates() const { return kind == CellKind::Lstm ? 4 : 3; }
    bool operator==(const RnnShape&) const = default;
};

struct RnnParams {
    RnnShape shape;
    Mat gamma;   // steps x (gates*features*width): input weights
    Mat theta;   // steps x (gates*width*width):    recurrent weights
    Mat lambda;  // steps x (gates*width):          intercepts
    Mat dense;   // outputs x (steps*width):        output head

    static RnnParams zeros(const RnnShape& shape);
    // Uniform(-scale, scale) coordinates drawn in a fixed order from the seed.
    static RnnParams random_init(const RnnShape& shape, std::uint64_t seed, double scale = 0.05);

    // Ties the per-step rows together (conventional weight sharing).
    void tie_steps();
};

// Per-step values retained by the forward pass for backpropagation.
// LSTM uses gate_i/gate_f/cand/gate_o/mem/mem_tanh; GRU uses
// gate_i(reset)/cand/gate_u(update)/rec_cand (the pre-reset recurrent term).
struct Trace {
    Mat gate_i, gate_f, cand, gate_o;
    Mat mem, mem_tanh;
    Mat gate_u, rec_cand;
    Mat hidden;  // steps x width
    Vec h0, m0;
};

// Gate recursion over the steps x features input block. Initial state
// defaults to zero. Throws NumericError naming the step and gate if an
// intermediate value turns non-finite. Returns the stacked hidden vector
// (steps*width) plus the trace.
std::pair<Vec, Trace> lstm_forward(const RnnParams& params, const Mat& X, const Vec& h0,
                                   const Vec& m0);
std::pair<Vec, Trace> gru_forward(const RnnParams& params, const Mat& X, const Vec& h0);
std::pair<Vec, Trace> forward(const RnnParams& params, const Mat& X);

// Dense output head: plain matrix-vector product.
Vec dense_apply(const Mat& dense, const Vec& hidden);

struct Gradient {
    Mat gamma, theta, lambda, dense;
    double loss = 0.0;

    static Gradient zeros(const RnnShape& shape);
    void accumulate(const Gradient& other);
    void scale(double f);
    double squared_norm() const;
};

// Exact reverse-mode gradient of the mean-squared error of this sample
// through the dense head and back through all steps.
Gradient backward(const RnnParams& params, const Trace& trace, const Mat& X, const Vec& target);

double mse_loss(const Vec& forecast, const Vec& target);

struct TrainConfig {
    double learning_rate = 0.05;
    int epochs = 200;
    std::uint64_t seed = 1;
    std::optional<double> grad_clip = 5.0;  // global gradient norm
    bool per_sample = false;                // false: full-gradient updates
    bool shared_weights = false;
    int width = 1;
    double init_scale = 0.05;
};

struct TrainResult {
    RnnParams params;
    std::vector<double> loss_history;  // per-epoch mean sample loss
};

// Gradient-descent training on MSE. Deterministic given seed and config:
// per-sample gradients are reduced in a fixed chunk order regardless of
// thread count. Throws TrainingDiverged when the epoch loss exceeds 1e6x the
// initial loss.
TrainResult train(CellKind kind, const std::vector<series::SamplePair>& samples,
                  const TrainConfig& config);

struct ForecastResult {
    Vec values;      // 2*steps scaled loads
    int clipped = 0; // values pushed back into [0,1]
};

ForecastResult forecast_nn(const RnnParams& params, const Mat& X);

void save_model(const std::string& path, const RnnParams& params);
RnnParams load_model(const std::string& path);

}  // namespace loadcast::neural
