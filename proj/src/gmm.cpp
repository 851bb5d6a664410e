#include "loadcast/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "loadcast/errors.hpp"
#include "loadcast/parallel.hpp"
#include "loadcast/rng.hpp"
#include "loadcast/stats.hpp"

namespace loadcast::gmm {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

double log_normal_pdf(double y, double mu, double var) {
    const double d = y - mu;
    return -0.5 * (kLog2Pi + std::log(var) + d * d / var);
}

Vec kmeanspp_seeds(const Vec& points, int K, Rng& rng) {
    const Eigen::Index n = points.size();
    Vec seeds(K);
    seeds[0] = points[static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(n)))];
    Vec d2(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double d = points[i] - seeds[0];
        d2[i] = d * d;
    }
    for (int k = 1; k < K; ++k) {
        const double total = d2.sum();
        double pick = rng.uniform01() * total;
        Eigen::Index chosen = n - 1;
        if (total > 0.0) {
            for (Eigen::Index i = 0; i < n; ++i) {
                pick -= d2[i];
                if (pick <= 0.0) {
                    chosen = i;
                    break;
                }
            }
        } else {
            chosen = static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(n)));
        }
        seeds[k] = points[chosen];
        for (Eigen::Index i = 0; i < n; ++i) {
            const double d = points[i] - seeds[k];
            d2[i] = std::min(d2[i], d * d);
        }
    }
    return seeds;
}

Vec spread_seeds(const Vec& points, int K) {
    std::vector<double> sorted(points.data(), points.data() + points.size());
    Vec seeds(K);
    for (int k = 0; k < K; ++k) {
        seeds[k] = stats::quantile_type7(sorted, (k + 0.5) / static_cast<double>(K));
    }
    return seeds;
}

// One EM pass from the given seeds; returns false on component collapse.
bool run_em(const Vec& points, const Vec& seeds, const EmConfig& cfg, GmmFit& fit) {
    const Eigen::Index n = points.size();
    const int K = static_cast<int>(seeds.size());
    const double global_var = std::max(stats::variance(points), cfg.variance_floor);

    fit.K = K;
    fit.means = seeds;
    fit.variances = Vec::Constant(K, global_var);
    fit.weights = Vec::Constant(K, 1.0 / K);
    fit.loglik_trace.clear();
    fit.converged = false;

    Mat resp(n, K);
    Vec point_ll(n);
    for (int iter = 0; iter < cfg.max_iter; ++iter) {
        // E-step: per-point posteriors and log-likelihood terms. Points are
        // independent; the loglik sum is reduced serially over the buffer.
        Vec logw = fit.weights.array().log();
        const Vec means = fit.means, vars = fit.variances;
        parallel::for_chunks(static_cast<std::size_t>(n), parallel::kReduceChunks,
                             [&](std::size_t begin, std::size_t end, std::size_t) {
                                 Vec lp(K);
                                 for (std::size_t ii = begin; ii < end; ++ii) {
                                     const auto i = static_cast<Eigen::Index>(ii);
                                     for (int k = 0; k < K; ++k) {
                                         lp[k] = logw[k] + log_normal_pdf(points[i], means[k], vars[k]);
                                     }
                                     const double mx = lp.maxCoeff();
                                     const double lse = mx + std::log((lp.array() - mx).exp().sum());
                                     point_ll[i] = lse;
                                     resp.row(i) = (lp.array() - lse).exp();
                                 }
                             });
        const double ll = point_ll.sum();
        fit.loglik_trace.push_back(ll);

        // M-step: closed-form weighted moments.
        for (int k = 0; k < K; ++k) {
            const double nk = resp.col(k).sum();
            if (nk <= 0.0) return false;
            const double mu = resp.col(k).dot(points) / nk;
            const double var = (resp.col(k).array() * (points.array() - mu).square()).sum() / nk;
            if (var < cfg.variance_floor) return false;
            fit.weights[k] = nk / static_cast<double>(n);
            fit.means[k] = mu;
            fit.variances[k] = var;
        }

        if (fit.loglik_trace.size() >= 2) {
            const double prev = fit.loglik_trace[fit.loglik_trace.size() - 2];
            const double gain = (ll - prev) / std::max(1.0, std::abs(prev));
            if (gain >= 0.0 && gain < cfg.tol) {
                fit.converged = true;
                break;
            }
        }
    }
    return true;
}

}  // namespace

GmmFit em_fit(const Vec& points, int K, const EmConfig& config) {
    if (K < 1) throw ParamError("K must be >= 1");
    if (points.size() <= K) throw ParamError("need more points than components");
    for (Eigen::Index i = 0; i < points.size(); ++i) {
        if (!std::isfinite(points[i])) throw ParamError("non-finite point in GMM input");
    }

    Rng rng(config.seed);
    const double sd = std::sqrt(std::max(stats::variance(points), config.variance_floor));
    for (int attempt = 0; attempt <= config.max_restarts; ++attempt) {
        Vec seeds = config.init == InitPolicy::KMeansPP ? kmeanspp_seeds(points, K, rng)
                                                        : spread_seeds(points, K);
        if (attempt > 0) {
            for (int k = 0; k < K; ++k) seeds[k] += 0.1 * sd * rng.normal();
        }
        GmmFit fit;
        if (run_em(points, seeds, config, fit)) return fit;
    }
    throw NumericError("GMM component collapsed after " + std::to_string(config.max_restarts) +
                       " jittered restarts");
}

Mat responsibilities(const Vec& points, const GmmFit& fit) {
    const Eigen::Index n = points.size();
    Mat resp(n, fit.K);
    const Vec logw = fit.weights.array().log();
    parallel::for_each_index(static_cast<std::size_t>(n), [&](std::size_t ii) {
        const auto i = static_cast<Eigen::Index>(ii);
        Vec lp(fit.K);
        for (int k = 0; k < fit.K; ++k) {
            lp[k] = logw[k] + log_normal_pdf(points[i], fit.means[k], fit.variances[k]);
        }
        const double mx = lp.maxCoeff();
        const double lse = mx + std::log((lp.array() - mx).exp().sum());
        resp.row(i) = (lp.array() - lse).exp();
    });
    return resp;
}

double log_likelihood(const Vec& points, const GmmFit& fit) {
    const Vec logw = fit.weights.array().log();
    double ll = 0.0;
    Vec lp(fit.K);
    for (Eigen::Index i = 0; i < points.size(); ++i) {
        for (int k = 0; k < fit.K; ++k) {
            lp[k] = logw[k] + log_normal_pdf(points[i], fit.means[k], fit.variances[k]);
        }
        const double mx = lp.maxCoeff();
        ll += mx + std::log((lp.array() - mx).exp().sum());
    }
    return ll;
}

Affiliation affiliate(const Vec& curve, const GmmFit& fit, double level) {
    const Eigen::Index n = curve.size();
    if (n < 2) throw ParamError("affiliation needs a curve with at least 2 points");

    Affiliation out;
    out.t_stats.resize(fit.K);
    const double curve_mean = curve.mean();
    const double sd = std::sqrt(stats::variance(curve));
    double best = std::numeric_limits<double>::infinity();
    for (int k = 0; k < fit.K; ++k) {
        const double dist = curve_mean - fit.means[k];
        double t;
        if (sd > 0.0) {
            t = dist / (sd / std::sqrt(static_cast<double>(n)));
        } else {
            t = dist == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), dist);
        }
        out.t_stats[k] = t;
        const double score = sd > 0.0 ? std::abs(t) : std::abs(dist);
        if (score < best) {
            best = score;
            out.state = k;
        }
    }

    if (sd > 0.0) {
        const double crit = stats::t_critical_two_sided(level, static_cast<int>(n) - 1);
        out.ambiguous = out.t_stats.cwiseAbs().minCoeff() > crit;
    } else {
        // Degenerate curve: ambiguous only if it sits away from every mean.
        out.ambiguous = best > 0.0;
        for (int k = 0; k < fit.K; ++k) {
            if (curve_mean == fit.means[k]) out.ambiguous = false;
        }
    }
    return out;
}

}  // namespace loadcast::gmm
