#include "loadcast/neural.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "loadcast/csv.hpp"
#include "loadcast/errors.hpp"
#include "loadcast/parallel.hpp"
#include "loadcast/rng.hpp"

namespace loadcast::neural {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Gate order. LSTM: input, forget, memory(candidate), output. GRU: input
// (reset), candidate, update.
enum LstmGate { kI = 0, kF = 1, kM = 2, kO = 3 };
enum GruGate { kGi = 0, kGc = 1, kGu = 2 };

const char* gate_name(CellKind kind, int g) {
    static const char* lstm[] = {"input", "forget", "memory", "output"};
    static const char* gru[] = {"input", "candidate", "update"};
    return kind == CellKind::Lstm ? lstm[g] : gru[g];
}

struct Layout {
    int k, W, G;
    explicit Layout(const RnnShape& s) : k(s.features), W(s.width), G(s.gates()) {}
    // column of gamma for (gate, feature, unit)
    int gam(int g, int j, int w) const { return (g * k + j) * W + w; }
    // column of theta for (gate, out-unit, in-unit)
    int the(int g, int wo, int wi) const { return (g * W + wo) * W + wi; }
    // column of lambda for (gate, unit)
    int lam(int g, int w) const { return g * W + w; }
};

// Pre-activation of one gate at step s: X_s^T gamma + theta * h_prev + alpha.
void gate_preact(const RnnParams& p, const Layout& L, const Mat& X, int s, int g,
                 const Vec& h_prev, Vec& out) {
    for (int w = 0; w < L.W; ++w) {
        double a = p.lambda(s, L.lam(g, w));
        for (int j = 0; j < L.k; ++j) a += X(s, j) * p.gamma(s, L.gam(g, j, w));
        for (int wi = 0; wi < L.W; ++wi) a += p.theta(s, L.the(g, w, wi)) * h_prev[wi];
        out[w] = a;
    }
}

void check_finite(const Vec& v, CellKind kind, int s, int g) {
    for (int w = 0; w < v.size(); ++w) {
        if (!std::isfinite(v[w])) {
            throw NumericError(std::string("non-finite value at step ") + std::to_string(s) +
                               ", " + gate_name(kind, g) + " gate");
        }
    }
}

void check_shapes(const RnnParams& p, const Mat& X) {
    const Layout L(p.shape);
    if (X.rows() != p.shape.steps || X.cols() != p.shape.features) {
        throw ParamError("input block must be steps x features");
    }
    if (p.gamma.rows() != p.shape.steps || p.gamma.cols() != L.G * L.k * L.W ||
        p.theta.cols() != L.G * L.W * L.W || p.lambda.cols() != L.G * L.W ||
        p.dense.rows() != p.shape.outputs || p.dense.cols() != p.shape.steps * L.W) {
        throw ParamError("parameter shapes inconsistent with declared RnnShape");
    }
}

}  // namespace

RnnParams RnnParams::zeros(const RnnShape& shape) {
    const Layout L(shape);
    RnnParams p;
    p.shape = shape;
    p.gamma = Mat::Zero(shape.steps, L.G * L.k * L.W);
    p.theta = Mat::Zero(shape.steps, L.G * L.W * L.W);
    p.lambda = Mat::Zero(shape.steps, L.G * L.W);
    p.dense = Mat::Zero(shape.outputs, shape.steps * L.W);
    return p;
}

RnnParams RnnParams::random_init(const RnnShape& shape, std::uint64_t seed, double scale) {
    RnnParams p = zeros(shape);
    Rng rng(seed);
    for (Mat* m : {&p.gamma, &p.theta, &p.lambda, &p.dense}) {
        for (Eigen::Index r = 0; r < m->rows(); ++r) {
            for (Eigen::Index c = 0; c < m->cols(); ++c) {
                (*m)(r, c) = rng.uniform(-scale, scale);
            }
        }
    }
    return p;
}

void RnnParams::tie_steps() {
    for (Mat* m : {&gamma, &theta, &lambda}) {
        for (Eigen::Index r = 1; r < m->rows(); ++r) m->row(r) = m->row(0);
    }
}

std::pair<Vec, Trace> lstm_forward(const RnnParams& p, const Mat& X, const Vec& h0,
                                   const Vec& m0) {
    if (p.shape.kind != CellKind::Lstm) throw ParamError("lstm_forward on non-LSTM params");
    check_shapes(p, X);
    const Layout L(p.shape);
    const int S = p.shape.steps, W = L.W;

    Trace tr;
    tr.h0 = h0;
    tr.m0 = m0;
    for (Mat* m : {&tr.gate_i, &tr.gate_f, &tr.cand, &tr.gate_o, &tr.mem, &tr.mem_tanh, &tr.hidden}) {
        m->resize(S, W);
    }

    Vec h = h0, m = m0, a(W);
    for (int s = 0; s < S; ++s) {
        gate_preact(p, L, X, s, kI, h, a);
        check_finite(a, CellKind::Lstm, s, kI);
        for (int w = 0; w < W; ++w) tr.gate_i(s, w) = sigmoid(a[w]);

        gate_preact(p, L, X, s, kF, h, a);
        check_finite(a, CellKind::Lstm, s, kF);
        for (int w = 0; w < W; ++w) tr.gate_f(s, w) = sigmoid(a[w]);

        gate_preact(p, L, X, s, kM, h, a);
        check_finite(a, CellKind::Lstm, s, kM);
        for (int w = 0; w < W; ++w) tr.cand(s, w) = std::tanh(a[w]);

        gate_preact(p, L, X, s, kO, h, a);
        check_finite(a, CellKind::Lstm, s, kO);
        for (int w = 0; w < W; ++w) tr.gate_o(s, w) = sigmoid(a[w]);

        for (int w = 0; w < W; ++w) {
            const double mm = tr.gate_f(s, w) * m[w] + tr.gate_i(s, w) * tr.cand(s, w);
            tr.mem(s, w) = mm;
            tr.mem_tanh(s, w) = std::tanh(mm);
            tr.hidden(s, w) = tr.gate_o(s, w) * tr.mem_tanh(s, w);
        }
        h = tr.hidden.row(s);
        m = tr.mem.row(s);
    }

    Vec H(S * W);
    for (int s = 0; s < S; ++s) {
        for (int w = 0; w < W; ++w) H[s * W + w] = tr.hidden(s, w);
    }
    return {std::move(H), std::move(tr)};
}

std::pair<Vec, Trace> gru_forward(const RnnParams& p, const Mat& X, const Vec& h0) {
    if (p.shape.kind != CellKind::Gru) throw ParamError("gru_forward on non-GRU params");
    check_shapes(p, X);
    const Layout L(p.shape);
    const int S = p.shape.steps, W = L.W;

    Trace tr;
    tr.h0 = h0;
    for (Mat* m : {&tr.gate_i, &tr.cand, &tr.gate_u, &tr.rec_cand, &tr.hidden}) m->resize(S, W);

    Vec h = h0, a(W);
    for (int s = 0; s < S; ++s) {
        gate_preact(p, L, X, s, kGi, h, a);
        check_finite(a, CellKind::Gru, s, kGi);
        for (int w = 0; w < W; ++w) tr.gate_i(s, w) = sigmoid(a[w]);

        gate_preact(p, L, X, s, kGu, h, a);
        check_finite(a, CellKind::Gru, s, kGu);
        for (int w = 0; w < W; ++w) tr.gate_u(s, w) = sigmoid(a[w]);

        // Candidate: the reset gate scales the recurrent term theta*h_prev.
        for (int w = 0; w < W; ++w) {
            double v = 0.0;
            for (int wi = 0; wi < W; ++wi) v += p.theta(s, L.the(kGc, w, wi)) * h[wi];
            tr.rec_cand(s, w) = v;
            double ac = p.lambda(s, L.lam(kGc, w)) + tr.gate_i(s, w) * v;
            for (int j = 0; j < L.k; ++j) ac += X(s, j) * p.gamma(s, L.gam(kGc, j, w));
            if (!std::isfinite(ac)) {
                throw NumericError("non-finite value at step " + std::to_string(s) +
                                   ", candidate gate");
            }
            tr.cand(s, w) = std::tanh(ac);
            tr.hidden(s, w) = (1.0 - tr.gate_u(s, w)) * h[w] + tr.gate_u(s, w) * tr.cand(s, w);
        }
        h = tr.hidden.row(s);
    }

    Vec H(S * W);
    for (int s = 0; s < S; ++s) {
        for (int w = 0; w < W; ++w) H[s * W + w] = tr.hidden(s, w);
    }
    return {std::move(H), std::move(tr)};
}

std::pair<Vec, Trace> forward(const RnnParams& p, const Mat& X) {
    const Vec zero = Vec::Zero(p.shape.width);
    return p.shape.kind == CellKind::Lstm ? lstm_forward(p, X, zero, zero)
                                          : gru_forward(p, X, zero);
}

Vec dense_apply(const Mat& dense, const Vec& hidden) {
    if (dense.cols() != hidden.size()) throw ParamError("dense head width mismatch");
    return dense * hidden;
}

Gradient Gradient::zeros(const RnnShape& shape) {
    RnnParams p = RnnParams::zeros(shape);
    return Gradient{std::move(p.gamma), std::move(p.theta), std::move(p.lambda),
                    std::move(p.dense), 0.0};
}

void Gradient::accumulate(const Gradient& other) {
    gamma += other.gamma;
    theta += other.theta;
    lambda += other.lambda;
    dense += other.dense;
    loss += other.loss;
}

void Gradient::scale(double f) {
    gamma *= f;
    theta *= f;
    lambda *= f;
    dense *= f;
    loss *= f;
}

double Gradient::squared_norm() const {
    return gamma.squaredNorm() + theta.squaredNorm() + lambda.squaredNorm() + dense.squaredNorm();
}

double mse_loss(const Vec& forecast, const Vec& target) {
    if (forecast.size() != target.size()) throw ParamError("forecast/target length mismatch");
    return (forecast - target).squaredNorm() / static_cast<double>(target.size());
}

Gradient backward(const RnnParams& p, const Trace& tr, const Mat& X, const Vec& target) {
    check_shapes(p, X);
    if (target.size() != p.shape.outputs) throw ParamError("target length mismatch");
    const Layout L(p.shape);
    const int S = p.shape.steps, W = L.W;

    Gradient g = Gradient::zeros(p.shape);

    Vec H(S * W);
    for (int s = 0; s < S; ++s) {
        for (int w = 0; w < W; ++w) H[s * W + w] = tr.hidden(s, w);
    }
    const Vec yhat = p.dense * H;
    const Vec resid = yhat - target;
    g.loss = resid.squaredNorm() / static_cast<double>(target.size());

    const Vec dy = resid * (2.0 / static_cast<double>(target.size()));
    g.dense = dy * H.transpose();
    const Vec dH = p.dense.transpose() * dy;

    Vec gh(W), gm = Vec::Zero(W), da(W);
    Vec gh_next = Vec::Zero(W);  // gradient flowing into h_s from step s+1
    for (int s = S - 1; s >= 0; --s) {
        for (int w = 0; w < W; ++w) gh[w] = dH[s * W + w] + gh_next[w];
        const Vec h_prev = s > 0 ? Vec(tr.hidden.row(s - 1)) : tr.h0;
        gh_next.setZero();

        if (p.shape.kind == CellKind::Lstm) {
            const Vec m_prev = s > 0 ? Vec(tr.mem.row(s - 1)) : tr.m0;
            // output gate
            for (int w = 0; w < W; ++w) {
                const double o = tr.gate_o(s, w);
                da[w] = gh[w] * tr.mem_tanh(s, w) * o * (1.0 - o);
            }
            auto scatter = [&](int gate, const Vec& dact) {
                for (int w = 0; w < W; ++w) {
                    for (int j = 0; j < L.k; ++j) g.gamma(s, L.gam(gate, j, w)) += dact[w] * X(s, j);
                    for (int wi = 0; wi < W; ++wi) {
                        g.theta(s, L.the(gate, w, wi)) += dact[w] * h_prev[wi];
                        gh_next[wi] += p.theta(s, L.the(gate, w, wi)) * dact[w];
                    }
                    g.lambda(s, L.lam(gate, w)) += dact[w];
                }
            };
            scatter(kO, da);

            // memory path
            for (int w = 0; w < W; ++w) {
                const double tm = tr.mem_tanh(s, w);
                gm[w] += gh[w] * tr.gate_o(s, w) * (1.0 - tm * tm);
            }
            // forget gate
            for (int w = 0; w < W; ++w) {
                const double f = tr.gate_f(s, w);
                da[w] = gm[w] * m_prev[w] * f * (1.0 - f);
            }
            scatter(kF, da);
            // input gate
            for (int w = 0; w < W; ++w) {
                const double i = tr.gate_i(s, w);
                da[w] = gm[w] * tr.cand(s, w) * i * (1.0 - i);
            }
            scatter(kI, da);
            // candidate
            for (int w = 0; w < W; ++w) {
                const double c = tr.cand(s, w);
                da[w] = gm[w] * tr.gate_i(s, w) * (1.0 - c * c);
            }
            scatter(kM, da);
            // carry memory gradient to step s-1
            for (int w = 0; w < W; ++w) gm[w] *= tr.gate_f(s, w);
        } else {
            // GRU: h = (1-u) h_prev + u c
            Vec da_u(W), da_c(W), da_i(W), dv(W);
            for (int w = 0; w < W; ++w) {
                const double u = tr.gate_u(s, w);
                const double c = tr.cand(s, w);
                da_u[w] = gh[w] * (c - h_prev[w]) * u * (1.0 - u);
                da_c[w] = gh[w] * u * (1.0 - c * c);
                dv[w] = da_c[w] * tr.gate_i(s, w);
                const double i = tr.gate_i(s, w);
                da_i[w] = da_c[w] * tr.rec_cand(s, w) * i * (1.0 - i);
                gh_next[w] += gh[w] * (1.0 - u);
            }
            auto scatter = [&](int gate, const Vec& dact, bool recurrent_direct) {
                for (int w = 0; w < W; ++w) {
                    for (int j = 0; j < L.k; ++j) g.gamma(s, L.gam(gate, j, w)) += dact[w] * X(s, j);
                    if (recurrent_direct) {
                        for (int wi = 0; wi < W; ++wi) {
                            g.theta(s, L.the(gate, w, wi)) += dact[w] * h_prev[wi];
                            gh_next[wi] += p.theta(s, L.the(gate, w, wi)) * dact[w];
                        }
                    }
                    g.lambda(s, L.lam(gate, w)) += dact[w];
                }
            };
            scatter(kGi, da_i, true);
            scatter(kGu, da_u, true);
            scatter(kGc, da_c, false);
            // candidate recurrent term v = theta_c h_prev enters through i*v
            for (int w = 0; w < W; ++w) {
                for (int wi = 0; wi < W; ++wi) {
                    g.theta(s, L.the(kGc, w, wi)) += dv[w] * h_prev[wi];
                    gh_next[wi] += p.theta(s, L.the(kGc, w, wi)) * dv[w];
                }
            }
        }
    }
    return g;
}

TrainResult train(CellKind kind, const std::vector<series::SamplePair>& samples,
                  const TrainConfig& cfg) {
    if (samples.empty()) throw ParamError("empty training set");
    if (cfg.learning_rate < 0.0) throw ParamError("learning rate must be >= 0");
    if (cfg.epochs < 1) throw ParamError("epochs must be >= 1");

    const auto& first = samples.front();
    RnnShape shape;
    shape.kind = kind;
    shape.steps = static_cast<int>(first.predictors.rows());
    shape.features = static_cast<int>(first.predictors.cols());
    shape.outputs = static_cast<int>(first.target.size());
    shape.width = cfg.width;

    RnnParams params = RnnParams::random_init(shape, cfg.seed, cfg.init_scale);
    if (cfg.shared_weights) params.tie_steps();

    const std::size_t n = samples.size();
    const double inv_n = 1.0 / static_cast<double>(n);
    std::vector<double> history;
    history.reserve(static_cast<std::size_t>(cfg.epochs));

    auto apply_update = [&](Gradient& grad) {
        if (cfg.shared_weights) {
            // Tied parameters accumulate the per-step gradient rows.
            for (Mat* m : {&grad.gamma, &grad.theta, &grad.lambda}) {
                const Eigen::RowVectorXd total = m->colwise().sum();
                for (Eigen::Index r = 0; r < m->rows(); ++r) m->row(r) = total;
            }
        }
        if (cfg.grad_clip) {
            const double norm = std::sqrt(grad.squared_norm());
            if (norm > *cfg.grad_clip) grad.scale(*cfg.grad_clip / norm);
        }
        params.gamma -= cfg.learning_rate * grad.gamma;
        params.theta -= cfg.learning_rate * grad.theta;
        params.lambda -= cfg.learning_rate * grad.lambda;
        params.dense -= cfg.learning_rate * grad.dense;
    };

    double initial_loss = 0.0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        double epoch_loss = 0.0;
        if (cfg.per_sample) {
            for (const auto& sample : samples) {
                auto [H, trace] = forward(params, sample.predictors);
                Gradient grad = backward(params, trace, sample.predictors, sample.target);
                epoch_loss += grad.loss;
                apply_update(grad);
            }
            epoch_loss *= inv_n;
        } else {
            // Full gradient: per-sample gradients are computed in parallel
            // chunks and reduced in chunk order, so the sum is identical for
            // any thread count.
            std::vector<Gradient> partial(parallel::kReduceChunks, Gradient::zeros(shape));
            parallel::for_chunks(n, parallel::kReduceChunks,
                                 [&](std::size_t begin, std::size_t end, std::size_t chunk) {
                                     for (std::size_t i = begin; i < end; ++i) {
                                         auto [H, trace] = forward(params, samples[i].predictors);
                                         Gradient grad = backward(params, trace,
                                                                  samples[i].predictors,
                                                                  samples[i].target);
                                         partial[chunk].accumulate(grad);
                                     }
                                 });
            Gradient total = Gradient::zeros(shape);
            for (const auto& part : partial) total.accumulate(part);
            total.scale(inv_n);
            epoch_loss = total.loss;
            apply_update(total);
        }

        history.push_back(epoch_loss);
        if (epoch == 0) initial_loss = epoch_loss;
        if (!std::isfinite(epoch_loss) || epoch_loss > 1e6 * std::max(initial_loss, 1e-300)) {
            throw TrainingDiverged("loss diverged at epoch " + std::to_string(epoch));
        }
    }
    return {std::move(params), std::move(history)};
}

ForecastResult forecast_nn(const RnnParams& params, const Mat& X) {
    auto [H, trace] = forward(params, X);
    ForecastResult out;
    out.values = dense_apply(params.dense, H);
    for (Eigen::Index i = 0; i < out.values.size(); ++i) {
        if (out.values[i] < 0.0) {
            out.values[i] = 0.0;
            ++out.clipped;
        } else if (out.values[i] > 1.0) {
            out.values[i] = 1.0;
            ++out.clipped;
        }
    }
    return out;
}

namespace {

void write_matrix(std::ostream& out, const char* name, const Mat& m) {
    out << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            if (c) out << ' ';
            out << csv::format_double(m(r, c));
        }
        out << '\n';
    }
}

Mat read_matrix(std::istream& in, const std::string& want) {
    std::string name;
    Eigen::Index rows, cols;
    if (!(in >> name >> rows >> cols) || name != want) {
        throw ParamError("model file: expected matrix '" + want + "'");
    }
    Mat m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) {
            if (!(in >> m(r, c))) throw ParamError("model file: truncated matrix " + want);
        }
    }
    return m;
}

}  // namespace

void save_model(const std::string& path, const RnnParams& params) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write model file: " + path);
    out << "loadcast-rnn 1\n";
    out << "kind " << (params.shape.kind == CellKind::Lstm ? "lstm" : "gru") << '\n';
    out << "steps " << params.shape.steps << '\n';
    out << "features " << params.shape.features << '\n';
    out << "outputs " << params.shape.outputs << '\n';
    out << "width " << params.shape.width << '\n';
    write_matrix(out, "gamma", params.gamma);
    write_matrix(out, "theta", params.theta);
    write_matrix(out, "lambda", params.lambda);
    write_matrix(out, "dense", params.dense);
}

RnnParams load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open model file: " + path);
    std::string magic, kind_word;
    int version;
    in >> magic >> version;
    if (magic != "loadcast-rnn" || version != 1) throw ParamError("not a loadcast-rnn v1 file");
    RnnParams p;
    std::string key;
    in >> key >> kind_word;
    if (key != "kind" || (kind_word != "lstm" && kind_word != "gru")) {
        throw ParamError("model file: bad cell kind");
    }
    p.shape.kind = kind_word == "lstm" ? CellKind::Lstm : CellKind::Gru;
    auto read_int = [&](const char* want) {
        std::string k;
        int v;
        if (!(in >> k >> v) || k != want) throw ParamError(std::string("model file: expected ") + want);
        return v;
    };
    p.shape.steps = read_int("steps");
    p.shape.features = read_int("features");
    p.shape.outputs = read_int("outputs");
    p.shape.width = read_int("width");
    p.gamma = read_matrix(in, "gamma");
    p.theta = read_matrix(in, "theta");
    p.lambda = read_matrix(in, "lambda");
    p.dense = read_matrix(in, "dense");
    return p;
}

}  // namespace loadcast::neural
