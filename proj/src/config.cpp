#include "loadcast/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "loadcast/errors.hpp"

namespace loadcast::config {

namespace {

using nlohmann::json;

struct Collector {
    std::vector<std::string> errors;
    void add(const std::string& msg) { errors.push_back(msg); }
    void finish(const std::string& origin) {
        if (errors.empty()) return;
        std::ostringstream out;
        out << "config validation failed (" << origin << "):";
        for (const auto& e : errors) out << "\n  - " << e;
        throw ConfigError(out.str());
    }
};

template <class T>
T get_or(const json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    return j.at(key).get<T>();
}

void parse_train_section(const json& j, const char* name, neural::TrainConfig& cfg,
                         std::uint64_t default_seed, Collector& errs) {
    cfg.learning_rate = get_or(j, "learning_rate", cfg.learning_rate);
    cfg.epochs = get_or(j, "epochs", cfg.epochs);
    cfg.seed = get_or(j, "seed", default_seed);
    cfg.per_sample = get_or(j, "per_sample", cfg.per_sample);
    cfg.shared_weights = get_or(j, "shared_weights", cfg.shared_weights);
    cfg.width = get_or(j, "width", cfg.width);
    cfg.init_scale = get_or(j, "init_scale", cfg.init_scale);
    if (j.contains("grad_clip")) {
        if (j.at("grad_clip").is_null()) {
            cfg.grad_clip.reset();
        } else {
            cfg.grad_clip = j.at("grad_clip").get<double>();
        }
    }
    if (cfg.learning_rate < 0) errs.add(std::string(name) + ".learning_rate must be >= 0");
    if (cfg.epochs < 1) errs.add(std::string(name) + ".epochs must be >= 1");
    if (cfg.width < 1) errs.add(std::string(name) + ".width must be >= 1");
}

}  // namespace

RunConfig parse_config(const std::string& text, const std::string& origin) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError("config is not valid JSON (" + origin + "): " + e.what());
    }

    Collector errs;
    RunConfig cfg;
    cfg.raw_json = j.dump(2);

    if (!j.contains("seed")) {
        errs.add("top-level 'seed' is mandatory");
    } else {
        cfg.seed = j.at("seed").get<std::uint64_t>();
    }
    cfg.output_dir = get_or<std::string>(j, "output_dir", cfg.output_dir);
    cfg.threads = get_or(j, "threads", cfg.threads);

    if (j.contains("data")) {
        const json& d = j.at("data");
        cfg.data.csv_path = get_or<std::string>(d, "csv", "");
        const std::string layout = get_or<std::string>(d, "layout", "grouped3");
        if (layout == "grouped3") {
            cfg.data.layout.pre_aggregated = true;
        } else if (layout == "raw") {
            cfg.data.layout.pre_aggregated = false;
            if (!d.contains("group_map")) {
                errs.add("data.group_map is required for the raw layout");
            } else {
                cfg.data.layout.group_of = d.at("group_map").get<std::vector<int>>();
                for (int g : cfg.data.layout.group_of) {
                    if (g < 1 || g > series::kGroups) {
                        errs.add("data.group_map entries must be in 1..3");
                        break;
                    }
                }
            }
        } else {
            errs.add("data.layout must be 'grouped3' or 'raw'");
        }
        cfg.data.lag_steps = get_or(d, "lag_steps", cfg.data.lag_steps);
        cfg.data.split_day = get_or(d, "split_day", cfg.data.split_day);
        if (cfg.data.lag_steps < 0 || cfg.data.lag_steps >= series::kStepsPerDay) {
            errs.add("data.lag_steps must be in [0, 96)");
        }
        if (cfg.data.split_day < 1) errs.add("data.split_day must be >= 1");
    }

    cfg.synth.seed = cfg.seed + 101;
    if (j.contains("synth")) {
        const json& s = j.at("synth");
        cfg.synth.n_days = get_or(s, "n_days", cfg.synth.n_days);
        cfg.synth.ar_coef = get_or(s, "ar_coef", cfg.synth.ar_coef);
        cfg.synth.seed = get_or(s, "seed", cfg.synth.seed);
        if (s.contains("regimes")) {
            cfg.synth.regimes.clear();
            for (const auto& r : s.at("regimes")) {
                synth::RegimeSpec spec;
                spec.mean = get_or(r, "mean", spec.mean);
                spec.sd = get_or(r, "sd", spec.sd);
                spec.dwell_days = get_or(r, "dwell_days", spec.dwell_days);
                cfg.synth.regimes.push_back(spec);
                if (spec.mean <= 0 || spec.mean >= 1) errs.add("synth regime means must be in (0,1)");
            }
            if (cfg.synth.regimes.empty()) errs.add("synth.regimes must not be empty");
        }
        if (s.contains("coupling")) {
            const auto c = s.at("coupling").get<std::vector<double>>();
            if (c.size() != series::kGroups) {
                errs.add("synth.coupling needs exactly 3 coefficients");
            } else {
                for (int i = 0; i < series::kGroups; ++i) cfg.synth.coupling[i] = c[static_cast<std::size_t>(i)];
            }
        }
        cfg.synth_raw_min = get_or(s, "raw_min", cfg.synth_raw_min);
        cfg.synth_raw_max = get_or(s, "raw_max", cfg.synth_raw_max);
        if (cfg.synth_raw_max <= cfg.synth_raw_min) errs.add("synth.raw_max must exceed raw_min");
    }

    cfg.lstm.seed = cfg.seed + 1;
    cfg.gru.seed = cfg.seed + 2;
    if (j.contains("lstm")) parse_train_section(j.at("lstm"), "lstm", cfg.lstm, cfg.seed + 1, errs);
    if (j.contains("gru")) parse_train_section(j.at("gru"), "gru", cfg.gru, cfg.seed + 2, errs);

    cfg.fastec.seed = cfg.seed + 3;
    if (j.contains("fastec")) {
        const json& f = j.at("fastec");
        if (f.contains("tau_grid")) cfg.fastec.tau_grid = f.at("tau_grid").get<std::vector<double>>();
        if (f.contains("lambda")) {
            if (f.at("lambda").is_string() && f.at("lambda").get<std::string>() == "cv") {
                cfg.fastec.lambda = -1.0;
            } else {
                cfg.fastec.lambda = f.at("lambda").get<double>();
            }
        }
        cfg.fastec.cv_folds = get_or(f, "cv_folds", cfg.fastec.cv_folds);
        cfg.fastec.bootstrap_factor = get_or(f, "bootstrap_factor", cfg.fastec.bootstrap_factor);
        cfg.fastec.spline_n = get_or(f, "spline_n", cfg.fastec.spline_n);
        cfg.fastec.spline_degree = get_or(f, "spline_degree", cfg.fastec.spline_degree);
        cfg.fastec.tol = get_or(f, "tol", cfg.fastec.tol);
        cfg.fastec.max_iter = get_or(f, "max_iter", cfg.fastec.max_iter);
        cfg.fastec.seed = get_or(f, "seed", cfg.seed + 3);
        cfg.fastec.ambiguity_level = get_or(f, "ambiguity_level", cfg.fastec.ambiguity_level);
        for (double t : cfg.fastec.tau_grid) {
            if (t <= 0 || t >= 1) {
                errs.add("fastec.tau_grid levels must be in (0,1)");
                break;
            }
        }
        if (cfg.fastec.bootstrap_factor < 1) errs.add("fastec.bootstrap_factor must be >= 1");
    }
    cfg.fastec.em.seed = cfg.fastec.seed;

    if (j.contains("arx")) cfg.arx_lags = get_or(j.at("arx"), "lags", cfg.arx_lags);
    if (cfg.arx_lags < 1) errs.add("arx.lags must be >= 1");

    cfg.gmm.em.seed = cfg.seed + 4;
    if (j.contains("gmm")) {
        const json& g = j.at("gmm");
        cfg.gmm.components = get_or(g, "components", cfg.gmm.components);
        cfg.gmm.points = get_or(g, "points", cfg.gmm.points);
        cfg.gmm.em.tol = get_or(g, "tol", cfg.gmm.em.tol);
        cfg.gmm.em.max_iter = get_or(g, "max_iter", cfg.gmm.em.max_iter);
        cfg.gmm.em.seed = get_or(g, "seed", cfg.seed + 4);
        if (cfg.gmm.components < 1) errs.add("gmm.components must be >= 1");
        if (cfg.gmm.points < 2) errs.add("gmm.points must be >= 2");
    }

    if (j.contains("diagnose")) {
        const json& d = j.at("diagnose");
        cfg.diagnose.acf_max_lag = get_or(d, "acf_max_lag", cfg.diagnose.acf_max_lag);
        cfg.diagnose.kde_bandwidth = get_or(d, "kde_bandwidth", cfg.diagnose.kde_bandwidth);
        if (cfg.diagnose.acf_max_lag < 1) errs.add("diagnose.acf_max_lag must be >= 1");
    }

    if (j.contains("evaluate")) {
        cfg.evaluate_reference = get_or<std::string>(j.at("evaluate"), "reference", cfg.evaluate_reference);
    }

    errs.finish(origin);
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str(), path);
}

}  // namespace loadcast::config
