#include "loadcast/synth.hpp"

#include <algorithm>
#include <cmath>

#include "loadcast/csv.hpp"
#include "loadcast/errors.hpp"
#include "loadcast/rng.hpp"

namespace loadcast::synth {

namespace {

// Random on/off profile smoothed with a short moving average, one channel.
Vec schedule_channel(Eigen::Index n, double toggle_prob, Rng& rng) {
    Vec raw(n);
    double level = rng.flip(0.5) ? 1.0 : 0.0;
    for (Eigen::Index g = 0; g < n; ++g) {
        if (rng.flip(toggle_prob)) level = 1.0 - level;
        raw[g] = level;
    }
    const int window = 8;
    Vec smooth(n);
    for (Eigen::Index g = 0; g < n; ++g) {
        double acc = 0.0;
        int cnt = 0;
        for (int w = -window / 2; w <= window / 2; ++w) {
            const Eigen::Index j = g + w;
            if (j >= 0 && j < n) {
                acc += raw[j];
                ++cnt;
            }
        }
        smooth[g] = acc / cnt;
    }
    return smooth;
}

}  // namespace

SynthResult generate(const SynthConfig& cfg) {
    if (cfg.n_days < 1) throw ParamError("n_days must be >= 1");
    if (cfg.regimes.empty()) throw ParamError("need at least one regime");
    for (const auto& r : cfg.regimes) {
        if (r.mean <= 0.0 || r.mean >= 1.0) throw ParamError("regime means must be in (0,1)");
        if (r.sd < 0.0) throw ParamError("regime sd must be >= 0");
        if (r.dwell_days * series::kStepsPerDay < 1.0) throw ParamError("dwell below one step");
    }
    if (cfg.coupling.size() != series::kGroups) throw ParamError("coupling needs 3 coefficients");
    if (std::abs(cfg.ar_coef) >= 1.0) throw ParamError("AR coefficient must satisfy |a| < 1");

    const int S = series::kStepsPerDay;
    const Eigen::Index n = static_cast<Eigen::Index>(cfg.n_days) * S;
    const int K = static_cast<int>(cfg.regimes.size());
    Rng rng(cfg.seed);

    // Regime chain: geometric dwell, uniform jump to another state.
    std::vector<int> state(static_cast<std::size_t>(n));
    int cur = static_cast<int>(rng.index(static_cast<std::size_t>(K)));
    for (Eigen::Index g = 0; g < n; ++g) {
        state[static_cast<std::size_t>(g)] = cur;
        const double stay =
            1.0 - 1.0 / (cfg.regimes[static_cast<std::size_t>(cur)].dwell_days * S);
        if (K > 1 && !rng.flip(stay)) {
            int next = static_cast<int>(rng.index(static_cast<std::size_t>(K - 1)));
            if (next >= cur) ++next;
            cur = next;
        }
    }

    Mat sched(n, series::kGroups);
    for (int c = 0; c < series::kGroups; ++c) {
        // toggle roughly a few times per day, slower for later channels
        sched.col(c) = schedule_channel(n, 2.5 / (S * (c + 1.0)), rng);
    }

    // Load: regime mean + AR(1) noise + schedule coupling, clipped to [0,1].
    Vec load(n);
    const double innov_factor = std::sqrt(1.0 - cfg.ar_coef * cfg.ar_coef);
    double noise = 0.0;
    for (Eigen::Index g = 0; g < n; ++g) {
        const auto& reg = cfg.regimes[static_cast<std::size_t>(state[static_cast<std::size_t>(g)])];
        noise = cfg.ar_coef * noise + reg.sd * innov_factor * rng.normal();
        double v = reg.mean + noise + cfg.coupling.dot(sched.row(g));
        load[g] = std::clamp(v, 0.0, 1.0);
    }

    SynthResult out;
    out.step_labels.assign(state.begin(), state.end());
    out.dataset.freq_per_day = S;
    out.dataset.scale = series::ScaleParams{0.0, 1.0};
    out.dataset.days.resize(static_cast<std::size_t>(cfg.n_days));
    out.day_labels.resize(static_cast<std::size_t>(cfg.n_days));
    for (int d = 0; d < cfg.n_days; ++d) {
        auto& day = out.dataset.days[static_cast<std::size_t>(d)];
        day.date = 17167 + d;  // 2017-01-01 onward
        day.load = load.segment(static_cast<Eigen::Index>(d) * S, S);
        day.sched = sched.middleRows(static_cast<Eigen::Index>(d) * S, S);

        std::vector<int> votes(static_cast<std::size_t>(K), 0);
        for (int s = 0; s < S; ++s) {
            ++votes[static_cast<std::size_t>(state[static_cast<std::size_t>(d * S + s)])];
        }
        out.day_labels[static_cast<std::size_t>(d)] = static_cast<int>(
            std::max_element(votes.begin(), votes.end()) - votes.begin());
    }
    return out;
}

void write_csv(const std::string& path, const SynthResult& result, double raw_min,
               double raw_max) {
    if (raw_max <= raw_min) throw ParamError("raw_max must exceed raw_min");
    const auto& ds = result.dataset;
    csv::Table table;
    table.header = {"timestamp", "load", "x1", "x2", "x3"};
    for (const auto& day : ds.days) {
        // civil date from the day number (inverse of days_from_civil)
        std::int64_t z = day.date + 719468;
        const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
        const unsigned doe = static_cast<unsigned>(z - era * 146097);
        const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
        const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
        const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
        const unsigned mp = (5 * doy + 2) / 153;
        const unsigned dd = doy - (153 * mp + 2) / 5 + 1;
        const unsigned mm = mp + (mp < 10 ? 3 : -9);
        const std::int64_t yy = y + (mm <= 2);

        for (int s = 0; s < ds.freq_per_day; ++s) {
            const int minutes = s * (1440 / ds.freq_per_day);
            char ts[20];
            std::snprintf(ts, sizeof(ts), "%04lld-%02u-%02u %02d:%02d", static_cast<long long>(yy),
                          mm, dd, minutes / 60, minutes % 60);
            std::vector<std::string> row;
            row.emplace_back(ts);
            row.push_back(csv::format_double(raw_min + day.load[s] * (raw_max - raw_min)));
            for (int c = 0; c < series::kGroups; ++c) {
                row.push_back(csv::format_double(day.sched(s, c)));
            }
            table.rows.push_back(std::move(row));
        }
    }
    csv::write_file(path, table);

    csv::Table labels;
    labels.header = {"day_index", "regime"};
    for (std::size_t d = 0; d < result.day_labels.size(); ++d) {
        labels.rows.push_back({std::to_string(d), std::to_string(result.day_labels[d])});
    }
    csv::write_file(path + ".labels", labels);
}

}  // namespace loadcast::synth
