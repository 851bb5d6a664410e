#include "loadcast/fastec.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include <Eigen/SVD>

#include "loadcast/csv.hpp"
#include "loadcast/errors.hpp"
#include "loadcast/parallel.hpp"
#include "loadcast/rng.hpp"

namespace loadcast::fastec {

namespace {

// Cox-de Boor triangular scheme: the degree+1 basis values that are nonzero
// at u, written into row `row` of X starting at the span offset.
void basis_row(const Vec& knots, int degree, int k, double u, Mat& X, int row) {
    // span: last knot index i with knots[i] <= u (clamped at the right end)
    int span = degree;
    const int hi = k;  // knots has k + degree + 1 entries
    while (span < hi - 1 && u >= knots[span + 1]) ++span;

    std::vector<double> N(static_cast<std::size_t>(degree) + 1, 0.0);
    std::vector<double> left(static_cast<std::size_t>(degree) + 1, 0.0);
    std::vector<double> right(static_cast<std::size_t>(degree) + 1, 0.0);
    N[0] = 1.0;
    for (int j = 1; j <= degree; ++j) {
        left[j] = u - knots[span + 1 - j];
        right[j] = knots[span + j] - u;
        double saved = 0.0;
        for (int r = 0; r < j; ++r) {
            const double denom = right[r + 1] + left[j - r];
            const double tmp = denom != 0.0 ? N[r] / denom : 0.0;
            N[r] = saved + right[r + 1] * tmp;
            saved = left[j - r] * tmp;
        }
        N[j] = saved;
    }
    for (int j = 0; j <= degree; ++j) {
        const int col = span - degree + j;
        if (col >= 0 && col < k) X(row, col) = N[j];
    }
}

double spectral_norm(const Mat& M) {
    Eigen::JacobiSVD<Mat> svd(M);
    return svd.singularValues().size() ? svd.singularValues()[0] : 0.0;
}

// Smooth part of the FASTEC objective and its gradient at Gamma.
double smooth_value(const Mat& Y, const Mat& X, const Mat& gamma, double tau) {
    const double inv = 1.0 / static_cast<double>(Y.rows() * Y.cols());
    const Mat R = Y - X * gamma;
    double acc = 0.0;
    for (Eigen::Index c = 0; c < R.cols(); ++c) {
        for (Eigen::Index r = 0; r < R.rows(); ++r) {
            acc += expectile_loss(R(r, c), tau);
        }
    }
    return acc * inv;
}

Mat smooth_gradient(const Mat& Y, const Mat& X, const Mat& gamma, double tau) {
    const double inv = 1.0 / static_cast<double>(Y.rows() * Y.cols());
    Mat R = Y - X * gamma;
    for (Eigen::Index c = 0; c < R.cols(); ++c) {
        for (Eigen::Index r = 0; r < R.rows(); ++r) {
            const double w = R(r, c) < 0.0 ? 1.0 - tau : tau;
            R(r, c) *= w;
        }
    }
    return -2.0 * inv * (X.transpose() * R);
}

}  // namespace

SplineDesign bspline_design(int S, int k, int degree) {
    if (degree < 0) throw ParamError("degree must be >= 0");
    if (k <= degree) throw ParamError("need k > degree basis functions");
    if (S < k) throw ParamError("need S >= k evaluation points");

    SplineDesign d;
    d.degree = degree;
    const int n_knots = k + degree + 1;
    d.knots.resize(n_knots);
    const int interior = k - degree;  // segments between the clamped ends
    for (int i = 0; i < n_knots; ++i) {
        if (i <= degree) {
            d.knots[i] = 0.0;
        } else if (i >= k) {
            d.knots[i] = 1.0;
        } else {
            d.knots[i] = static_cast<double>(i - degree) / static_cast<double>(interior);
        }
    }
    d.X = Mat::Zero(S, k);
    for (int s = 0; s < S; ++s) {
        const double u = static_cast<double>(s + 1) / static_cast<double>(S);
        basis_row(d.knots, degree, k, u, d.X, s);
    }
    return d;
}

double expectile_loss(double u, double tau) {
    const double w = u < 0.0 ? 1.0 - tau : tau;
    return w * u * u;
}

Mat prox_nuclear(const Mat& M, double lambda) {
    if (lambda < 0.0) throw ParamError("lambda must be >= 0");
    if (lambda == 0.0) return M;
    Eigen::JacobiSVD<Mat> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (svd.info() != Eigen::Success) throw NumericError("SVD failed in prox_nuclear");
    Vec sv = svd.singularValues();
    for (Eigen::Index i = 0; i < sv.size(); ++i) sv[i] = std::max(sv[i] - lambda, 0.0);
    return svd.matrixU() * sv.asDiagonal() * svd.matrixV().transpose();
}

double nuclear_norm(const Mat& M) {
    Eigen::JacobiSVD<Mat> svd(M);
    return svd.singularValues().sum();
}

ExpectileFit fastec_fit(const Mat& Y, const SplineDesign& design, double tau, double lambda,
                        double tol, int max_iter) {
    if (tau <= 0.0 || tau >= 1.0) throw ParamError("tau must be in (0,1)");
    if (lambda < 0.0) throw ParamError("lambda must be >= 0");
    if (Y.rows() != design.X.rows()) throw ParamError("Y rows must match the design grid");

    const Mat& X = design.X;
    const double tau_max = std::max(tau, 1.0 - tau);
    const double L =
        2.0 * tau_max * spectral_norm(X) * spectral_norm(X) /
        static_cast<double>(Y.rows() * Y.cols());

    ExpectileFit fit;
    fit.tau = tau;
    fit.lambda = lambda;
    Mat cur = Mat::Zero(X.cols(), Y.cols());
    Mat prev = cur;
    Mat z = cur;
    double t_momentum = 1.0;

    double f_cur = smooth_value(Y, X, cur, tau) + lambda * nuclear_norm(cur);
    fit.objective_trace.push_back(f_cur);

    for (int iter = 0; iter < max_iter; ++iter) {
        const Mat grad = smooth_gradient(Y, X, z, tau);
        Mat cand = prox_nuclear(z - grad / L, lambda / L);
        double f_cand = smooth_value(Y, X, cand, tau) + lambda * nuclear_norm(cand);

        if (f_cand > f_cur) {
            // Momentum overshot: restart from the incumbent. A plain
            // proximal step from cur cannot increase the objective.
            t_momentum = 1.0;
            z = cur;
            const Mat g2 = smooth_gradient(Y, X, z, tau);
            cand = prox_nuclear(z - g2 / L, lambda / L);
            f_cand = smooth_value(Y, X, cand, tau) + lambda * nuclear_norm(cand);
            if (f_cand > f_cur) {  // numerically flat: keep the incumbent
                cand = cur;
                f_cand = f_cur;
            }
        }

        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t_momentum * t_momentum));
        z = cand + ((t_momentum - 1.0) / t_next) * (cand - prev);
        t_momentum = t_next;
        prev = cur;
        cur = cand;

        const double gain = (f_cur - f_cand) / std::max(1.0, std::abs(f_cur));
        f_cur = f_cand;
        fit.objective_trace.push_back(f_cur);
        if (gain >= 0.0 && gain < tol) {
            fit.converged = true;
            break;
        }
    }
    fit.coef = cur;
    return fit;
}

double select_lambda(const Mat& Y, const SplineDesign& design, double tau, int folds,
                     const std::vector<double>& grid, double tol, int max_iter) {
    if (folds < 2) throw CvError("need at least 2 folds");
    if (folds > Y.rows()) throw CvError("more folds than intra-day rows");
    if (grid.empty()) throw CvError("empty lambda grid");

    const Eigen::Index S = Y.rows();
    std::vector<double> scores(grid.size(), 0.0);
    parallel::for_each_index(grid.size(), [&](std::size_t gi) {
        double total = 0.0;
        std::size_t count = 0;
        for (int f = 0; f < folds; ++f) {
            std::vector<Eigen::Index> in_rows, out_rows;
            for (Eigen::Index s = 0; s < S; ++s) {
                (s % folds == f ? out_rows : in_rows).push_back(s);
            }
            Mat Yin(static_cast<Eigen::Index>(in_rows.size()), Y.cols());
            SplineDesign din;
            din.degree = design.degree;
            din.knots = design.knots;
            din.X.resize(static_cast<Eigen::Index>(in_rows.size()), design.X.cols());
            for (std::size_t i = 0; i < in_rows.size(); ++i) {
                Yin.row(static_cast<Eigen::Index>(i)) = Y.row(in_rows[i]);
                din.X.row(static_cast<Eigen::Index>(i)) = design.X.row(in_rows[i]);
            }
            const ExpectileFit fit = fastec_fit(Yin, din, tau, grid[gi], tol, max_iter);
            for (Eigen::Index s : out_rows) {
                const Vec pred = (design.X.row(s) * fit.coef).transpose();
                for (Eigen::Index c = 0; c < Y.cols(); ++c) {
                    total += expectile_loss(Y(s, c) - pred[c], tau);
                }
                count += static_cast<std::size_t>(Y.cols());
            }
        }
        scores[gi] = total / static_cast<double>(count);
    });

    std::size_t best = 0;
    for (std::size_t i = 1; i < grid.size(); ++i) {
        // ties go to the larger lambda; the grid may be in any order
        if (scores[i] < scores[best] || (scores[i] == scores[best] && grid[i] > grid[best])) {
            best = i;
        }
    }
    return grid[best];
}

std::vector<Vec> bootstrap_enlarge(const std::vector<Vec>& curves, std::size_t target_count,
                                   std::uint64_t seed) {
    if (curves.empty()) throw EmptyInput("bootstrap over empty curve list");
    Rng rng(seed);
    std::vector<Vec> out;
    out.reserve(target_count);
    for (std::size_t i = 0; i < target_count; ++i) {
        out.push_back(curves[rng.index(curves.size())]);
    }
    return out;
}

Vec estimate_weights(const Mat& moment_forecasts, const Mat& exog, const Vec& actual,
                     double lo, double hi, double step) {
    const Eigen::Index n = actual.size();
    if (moment_forecasts.rows() != n || (exog.size() > 0 && exog.rows() != n)) {
        throw ParamError("regressor rows must match the actual length");
    }
    const Eigen::Index m = moment_forecasts.cols();
    const Eigen::Index e = exog.size() > 0 ? exog.cols() : 0;
    const Eigen::Index d = m + e;
    if (d == 0) throw WeightError("no regressors");

    Mat cols(n, d);
    cols.leftCols(m) = moment_forecasts;
    if (e > 0) cols.rightCols(e) = exog;
    if (cols.cwiseAbs().maxCoeff() == 0.0) throw WeightError("all regressors are zero");

    const int n_grid = static_cast<int>(std::lround((hi - lo) / step)) + 1;
    Vec w = Vec::Zero(d);
    Vec pred = Vec::Zero(n);
    auto mae = [&](const Vec& p) { return (actual - p).cwiseAbs().mean(); };

    double best = mae(pred);
    for (int sweep = 0; sweep < 20; ++sweep) {
        bool changed = false;
        for (Eigen::Index c = 0; c < d; ++c) {
            double best_v = w[c];
            double best_score = best;
            for (int gi = 0; gi < n_grid; ++gi) {
                const double v = lo + gi * step;
                const Vec p = pred + (v - w[c]) * cols.col(c);
                const double score = mae(p);
                if (score < best_score) {  // strict: ties keep the incumbent
                    best_score = score;
                    best_v = v;
                }
            }
            if (best_v != w[c]) {
                pred += (best_v - w[c]) * cols.col(c);
                w[c] = best_v;
                best = best_score;
                changed = true;
            }
        }
        if (!changed) break;
    }
    return w;
}

FastecModel train_fastec(const std::vector<series::SamplePair>& train, const FastecConfig& cfg) {
    if (train.empty()) throw ParamError("empty training set");
    const int K = static_cast<int>(cfg.tau_grid.size());
    if (K < 1) throw ParamError("tau grid must not be empty");
    for (double tau : cfg.tau_grid) {
        if (tau <= 0.0 || tau >= 1.0) throw ParamError("tau levels must be in (0,1)");
    }

    const int S = static_cast<int>(train.front().predictors.rows());
    const int load_col = series::kFeatureCols - 1;

    // Mixture on the training load points (first 10k).
    std::vector<double> pts;
    pts.reserve(train.size() * static_cast<std::size_t>(S));
    for (const auto& sample : train) {
        for (int s = 0; s < S; ++s) pts.push_back(sample.predictors(s, load_col));
        if (pts.size() >= 10000) break;
    }
    if (pts.size() > 10000) pts.resize(10000);
    Vec points = Eigen::Map<Vec>(pts.data(), static_cast<Eigen::Index>(pts.size()));

    FastecModel model;
    gmm::EmConfig em = cfg.em;
    em.seed = cfg.seed;
    model.mixture = gmm::em_fit(points, K, em);
    model.tau_grid = cfg.tau_grid;
    std::sort(model.tau_grid.begin(), model.tau_grid.end());
    model.ambiguity_level = cfg.ambiguity_level;

    // States ordered by mixture mean so low states pair with low tau levels.
    model.state_order.resize(static_cast<std::size_t>(K));
    std::iota(model.state_order.begin(), model.state_order.end(), 0);
    std::sort(model.state_order.begin(), model.state_order.end(),
              [&](int a, int b) { return model.mixture.means[a] < model.mixture.means[b]; });
    std::vector<int> rank_of(static_cast<std::size_t>(K));
    for (int r = 0; r < K; ++r) rank_of[static_cast<std::size_t>(model.state_order[r])] = r;

    // Affiliate every training day by its day-t load curve.
    std::vector<int> day_state(train.size());
    for (std::size_t i = 0; i < train.size(); ++i) {
        const Vec curve = train[i].predictors.col(load_col);
        day_state[i] = rank_of[static_cast<std::size_t>(
            gmm::affiliate(curve, model.mixture, cfg.ambiguity_level).state)];
    }

    int spline_n = cfg.spline_n > 0 ? cfg.spline_n : S;
    int k = static_cast<int>(std::floor(std::sqrt(static_cast<double>(spline_n))));
    k = std::clamp(k, cfg.spline_degree + 1, S);
    model.design = bspline_design(S, k, cfg.spline_degree);

    // One penalized expectile fit per (tau level, horizon); independent, so
    // they run in parallel with each writing its own slot.
    for (int h = 0; h < 2; ++h) model.states[h].resize(static_cast<std::size_t>(K));
    parallel::for_each_index(static_cast<std::size_t>(2 * K), [&](std::size_t job) {
        const int h = static_cast<int>(job) / K;
        const int r = static_cast<int>(job) % K;
        StateFit sf;
        std::vector<Vec> members;
        for (std::size_t i = 0; i < train.size(); ++i) {
            if (day_state[i] == r) {
                members.push_back(train[i].target.segment(h * S, S));
            }
        }
        sf.member_days = static_cast<int>(members.size());
        if (members.empty()) {
            // No affiliated days: fall back to the flat mixture-mean curve.
            sf.moment_curve =
                Vec::Constant(S, model.mixture.means[model.state_order[static_cast<std::size_t>(r)]]);
        } else {
            const std::size_t target =
                members.size() * static_cast<std::size_t>(std::max(cfg.bootstrap_factor, 1));
            const std::vector<Vec> boot =
                bootstrap_enlarge(members, target, cfg.seed + 7919 * (job + 1));
            Mat Y(S, static_cast<Eigen::Index>(boot.size()));
            for (std::size_t c = 0; c < boot.size(); ++c) {
                Y.col(static_cast<Eigen::Index>(c)) = boot[c];
            }
            const double tau = model.tau_grid[static_cast<std::size_t>(r)];
            double lam = cfg.lambda;
            if (lam < 0.0) lam = select_lambda(Y, model.design, tau, cfg.cv_folds);
            sf.fit = fastec_fit(Y, model.design, tau, lam, cfg.tol, cfg.max_iter);
            const Mat fitted = model.design.X * sf.fit.coef;
            sf.moment_curve = fitted.rowwise().mean();
        }
        model.states[static_cast<std::size_t>(h)][static_cast<std::size_t>(r)] = std::move(sf);
    });

    // Combination weights on the chronologically later half of the sample.
    const std::size_t half_begin = train.size() / 2;
    const std::size_t n_half = train.size() - half_begin;
    for (int h = 0; h < 2; ++h) {
        Mat moments(static_cast<Eigen::Index>(n_half) * S, 1);
        Mat exog(static_cast<Eigen::Index>(n_half) * S, series::kGroups);
        Vec actual(static_cast<Eigen::Index>(n_half) * S);
        for (std::size_t i = half_begin; i < train.size(); ++i) {
            const Eigen::Index at = static_cast<Eigen::Index>(i - half_begin) * S;
            const auto& sf =
                model.states[static_cast<std::size_t>(h)][static_cast<std::size_t>(day_state[i])];
            moments.col(0).segment(at, S) = sf.moment_curve;
            exog.block(at, 0, S, series::kGroups) = train[i].predictors.leftCols(series::kGroups);
            actual.segment(at, S) = train[i].target.segment(h * S, S);
        }
        model.weights[static_cast<std::size_t>(h)] = estimate_weights(moments, exog, actual);
    }
    return model;
}

RegimeForecast regime_forecast(const FastecModel& model, const series::SamplePair& sample) {
    const int S = static_cast<int>(sample.predictors.rows());
    const Vec curve = sample.predictors.col(series::kFeatureCols - 1);
    const gmm::Affiliation aff = gmm::affiliate(curve, model.mixture, model.ambiguity_level);

    std::vector<int> rank_of(model.state_order.size());
    for (std::size_t r = 0; r < model.state_order.size(); ++r) {
        rank_of[static_cast<std::size_t>(model.state_order[r])] = static_cast<int>(r);
    }

    RegimeForecast out;
    // Ambiguous days fall back to the nearest-mean state, which is the same
    // argmin the affiliation already produced; only the flag differs.
    out.state = rank_of[static_cast<std::size_t>(aff.state)];
    out.ambiguous = aff.ambiguous;
    out.values.resize(2 * S);
    for (int h = 0; h < 2; ++h) {
        const auto& sf = model.states[static_cast<std::size_t>(h)][static_cast<std::size_t>(out.state)];
        const Vec& w = model.weights[static_cast<std::size_t>(h)];
        Vec block = w[0] * sf.moment_curve;
        for (int c = 0; c < series::kGroups; ++c) {
            block += w[1 + c] * sample.predictors.col(c);
        }
        out.values.segment(h * S, S) = block;
    }
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

void write_vec(std::ostream& out, const char* name, const Vec& v) {
    out << name << ' ' << v.size() << '\n';
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (i) out << ' ';
        out << csv::format_double(v[i]);
    }
    out << '\n';
}

Vec read_vec(std::istream& in, const std::string& want) {
    std::string name;
    Eigen::Index n;
    if (!(in >> name >> n) || name != want) throw ParamError("model file: expected vector " + want);
    Vec v(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!(in >> v[i])) throw ParamError("model file: truncated vector " + want);
    }
    return v;
}

void write_mat(std::ostream& out, const char* name, const Mat& m) {
    out << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            if (c) out << ' ';
            out << csv::format_double(m(r, c));
        }
        out << '\n';
    }
}

Mat read_mat(std::istream& in, const std::string& want) {
    std::string name;
    Eigen::Index rows, cols;
    if (!(in >> name >> rows >> cols) || name != want) {
        throw ParamError("model file: expected matrix " + want);
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

void save_model(const std::string& path, const FastecModel& model) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write model file: " + path);
    const int K = model.mixture.K;
    const int S = static_cast<int>(model.design.X.rows());
    out << "loadcast-fastec 1\n";
    out << "K " << K << " S " << S << " k " << model.design.X.cols() << " degree "
        << model.design.degree << '\n';
    out << "ambiguity_level " << csv::format_double(model.ambiguity_level) << '\n';
    write_vec(out, "gmm_weights", model.mixture.weights);
    write_vec(out, "gmm_means", model.mixture.means);
    write_vec(out, "gmm_variances", model.mixture.variances);
    out << "state_order";
    for (int s : model.state_order) out << ' ' << s;
    out << '\n';
    out << "tau_grid";
    for (double t : model.tau_grid) out << ' ' << csv::format_double(t);
    out << '\n';
    for (int h = 0; h < 2; ++h) {
        write_vec(out, "weights", model.weights[static_cast<std::size_t>(h)]);
        for (int r = 0; r < K; ++r) {
            const auto& sf = model.states[static_cast<std::size_t>(h)][static_cast<std::size_t>(r)];
            out << "state " << h << ' ' << r << ' ' << sf.member_days << ' '
                << csv::format_double(sf.fit.tau) << ' ' << csv::format_double(sf.fit.lambda) << ' '
                << (sf.fit.converged ? 1 : 0) << '\n';
            write_vec(out, "moment_curve", sf.moment_curve);
            write_mat(out, "coef", sf.fit.coef.size() ? sf.fit.coef : Mat::Zero(0, 0));
        }
    }
}

FastecModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open model file: " + path);
    std::string magic;
    int version;
    in >> magic >> version;
    if (magic != "loadcast-fastec" || version != 1) throw ParamError("not a loadcast-fastec v1 file");

    FastecModel model;
    std::string key;
    int K, S, k, degree;
    in >> key >> K >> key >> S >> key >> k >> key >> degree;
    in >> key >> model.ambiguity_level;
    model.mixture.K = K;
    model.mixture.weights = read_vec(in, "gmm_weights");
    model.mixture.means = read_vec(in, "gmm_means");
    model.mixture.variances = read_vec(in, "gmm_variances");
    model.mixture.converged = true;
    in >> key;
    model.state_order.resize(static_cast<std::size_t>(K));
    for (int i = 0; i < K; ++i) in >> model.state_order[static_cast<std::size_t>(i)];
    in >> key;
    model.tau_grid.resize(static_cast<std::size_t>(K));
    for (int i = 0; i < K; ++i) in >> model.tau_grid[static_cast<std::size_t>(i)];
    model.design = bspline_design(S, k, degree);
    for (int h = 0; h < 2; ++h) {
        model.weights[static_cast<std::size_t>(h)] = read_vec(in, "weights");
        model.states[static_cast<std::size_t>(h)].resize(static_cast<std::size_t>(K));
        for (int r = 0; r < K; ++r) {
            StateFit sf;
            int hh, rr, conv;
            in >> key >> hh >> rr >> sf.member_days >> sf.fit.tau >> sf.fit.lambda >> conv;
            if (key != "state" || hh != h || rr != r) throw ParamError("model file: bad state block");
            sf.fit.converged = conv != 0;
            sf.moment_curve = read_vec(in, "moment_curve");
            sf.fit.coef = read_mat(in, "coef");
            model.states[static_cast<std::size_t>(h)][static_cast<std::size_t>(r)] = std::move(sf);
        }
    }
    return model;
}

}  // namespace loadcast::fastec
