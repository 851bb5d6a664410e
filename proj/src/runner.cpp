#include "loadcast/runner.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <json.hpp>

#include "loadcast/baselines.hpp"
#include "loadcast/csv.hpp"
#include "loadcast/diagnostics.hpp"
#include "loadcast/errors.hpp"
#include "loadcast/evaluation.hpp"
#include "loadcast/fastec.hpp"
#include "loadcast/gmm.hpp"
#include "loadcast/neural.hpp"
#include "loadcast/parallel.hpp"
#include "loadcast/svg.hpp"
#include "loadcast/synth.hpp"

namespace loadcast::runner {

namespace fs = std::filesystem;

namespace {

constexpr const char* kVersion = "1.0.0";
const std::vector<std::string> kModels = {"lstm", "gru", "fastec", "arx", "naive"};

std::string display_name(const std::string& model) {
    if (model == "lstm") return "LSTM";
    if (model == "gru") return "GRU";
    if (model == "fastec") return "MS-FASTEC";
    if (model == "arx") return "ARX";
    return "naive";
}

std::uint64_t fnv1a(const std::string& text) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

struct Paths {
    fs::path root;
    fs::path models, forecasts, plots;
};

Paths prepare(const config::RunConfig& cfg) {
    parallel::set_max_threads(cfg.threads);
    Paths p;
    p.root = resolve_output_dir(cfg);
    p.models = p.root / "models";
    p.forecasts = p.root / "forecasts";
    p.plots = p.root / "plots";
    fs::create_directories(p.models);
    fs::create_directories(p.forecasts);
    fs::create_directories(p.plots);
    return p;
}

// Manifest ties every artifact directory back to its inputs. Written last.
void write_manifest(const Paths& p, const config::RunConfig& cfg, const std::string& command) {
    nlohmann::json m;
    m["tool"] = "loadcast";
    m["version"] = kVersion;
    m["command"] = command;
    m["seed"] = cfg.seed;
    char hash[32];
    std::snprintf(hash, sizeof(hash), "%016llx",
                  static_cast<unsigned long long>(fnv1a(cfg.raw_json)));
    m["config_hash"] = hash;
    m["config"] = nlohmann::json::parse(cfg.raw_json);
    std::ofstream out(p.root / "manifest.json");
    if (!out) throw Error("cannot write manifest");
    out << m.dump(2) << '\n';
}

series::LoadDataset load_dataset(const config::RunConfig& cfg) {
    if (cfg.data.csv_path.empty()) throw ConfigError("data.csv is required for this command");
    series::LoadDataset ds = series::ingest_csv(cfg.data.csv_path, cfg.data.layout);
    return series::shift_schedules(ds, cfg.data.lag_steps);
}

series::SampleSplit load_split(const config::RunConfig& cfg, const series::LoadDataset& ds) {
    return series::build_samples(ds, cfg.data.split_day);
}

void write_forecast_csv(const fs::path& path, const std::vector<series::SamplePair>& test,
                        const std::vector<Vec>& forecasts) {
    csv::Table t;
    t.header = {"sample", "day_index", "step", "actual", "forecast"};
    for (std::size_t i = 0; i < test.size(); ++i) {
        for (Eigen::Index s = 0; s < test[i].target.size(); ++s) {
            t.rows.push_back({std::to_string(i), std::to_string(test[i].day_index),
                              std::to_string(s), csv::format_double(test[i].target[s]),
                              csv::format_double(forecasts[i][s])});
        }
    }
    csv::write_file(path.string(), t);
}

struct ForecastSeries {
    Vec actual;
    Vec forecast;
    std::vector<int> sample_of;  // originating sample per point
};

ForecastSeries read_forecast_csv(const fs::path& path) {
    const csv::Table t = csv::read_file(path.string());
    ForecastSeries out;
    out.actual.resize(static_cast<Eigen::Index>(t.rows.size()));
    out.forecast.resize(static_cast<Eigen::Index>(t.rows.size()));
    out.sample_of.resize(t.rows.size());
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        double a, f;
        if (t.rows[i].size() != 5 || !csv::parse_double(t.rows[i][3], a) ||
            !csv::parse_double(t.rows[i][4], f)) {
            throw IngestError("bad forecast row in " + path.string());
        }
        out.sample_of[i] = std::stoi(t.rows[i][0]);
        out.actual[static_cast<Eigen::Index>(i)] = a;
        out.forecast[static_cast<Eigen::Index>(i)] = f;
    }
    return out;
}

std::vector<Vec> model_forecasts(const config::RunConfig& cfg, const Paths& p,
                                 const std::string& model,
                                 const std::vector<series::SamplePair>& test) {
    std::vector<Vec> out(test.size());
    if (model == "naive") {
        for (std::size_t i = 0; i < test.size(); ++i) {
            out[i] = baselines::naive_forecast(test[i]);
        }
    } else if (model == "arx") {
        const auto arx = baselines::load_model((p.models / "arx.txt").string());
        for (std::size_t i = 0; i < test.size(); ++i) {
            out[i] = baselines::arx_forecast(arx, test[i]);
        }
    } else if (model == "fastec") {
        const auto fm = fastec::load_model((p.models / "fastec.txt").string());
        for (std::size_t i = 0; i < test.size(); ++i) {
            out[i] = fastec::regime_forecast(fm, test[i]).values;
        }
    } else {
        const auto params = neural::load_model((p.models / (model + ".txt")).string());
        for (std::size_t i = 0; i < test.size(); ++i) {
            out[i] = neural::forecast_nn(params, test[i].predictors).values;
        }
    }
    return out;
}

std::string fmt3(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3f", v);
    return buf;
}

std::string metric_cell(const std::optional<double>& v, bool dagger) {
    if (!v) return "NA";
    return fmt3(*v) + (dagger ? "†" : "");
}

void evaluate_into(const config::RunConfig& cfg, const Paths& p) {
    struct Entry {
        std::string model;
        ForecastSeries data;
        evaluation::MetricReport rep;
        std::optional<evaluation::DmResult> dm;
        bool dm_degenerate = false;
    };
    std::vector<Entry> entries;
    for (const auto& model : kModels) {
        const fs::path file = p.forecasts / (model + ".csv");
        if (!fs::exists(file)) continue;
        Entry e;
        e.model = model;
        e.data = read_forecast_csv(file);
        e.rep = evaluation::compute_metrics(e.data.actual, e.data.forecast);
        entries.push_back(std::move(e));
    }
    if (entries.empty()) throw Error("no forecast files found under " + p.forecasts.string());

    const std::string ref = cfg.evaluate_reference;
    const Entry* ref_entry = nullptr;
    for (const auto& e : entries) {
        if (e.model == ref) ref_entry = &e;
    }
    if (ref_entry) {
        const Vec ref_err = ref_entry->data.actual - ref_entry->data.forecast;
        for (auto& e : entries) {
            if (e.model == ref) continue;
            const Vec err = e.data.actual - e.data.forecast;
            if (err.size() != ref_err.size()) continue;
            try {
                e.dm = evaluation::dm_test(ref_err, err);
            } catch (const DegenerateDifferential&) {
                e.dm_degenerate = true;
            }
        }
    }

    // Table-2-style report: measures as rows, models as columns.
    using Getter = std::optional<double> (*)(const evaluation::MetricReport&);
    const std::pair<const char*, Getter> rows[] = {
        {"MAPE", [](const evaluation::MetricReport& r) { return r.mape; }},
        {"MASE", [](const evaluation::MetricReport& r) { return r.mase; }},
        {"nRMSE", [](const evaluation::MetricReport& r) { return r.nr_rmse; }},
        {"niqRMSE", [](const evaluation::MetricReport& r) { return r.niqr_rmse; }},
        {"nmRMSE", [](const evaluation::MetricReport& r) { return r.nm_rmse; }},
    };

    std::ostringstream txt;
    txt << "Out-of-sample 2-days ahead forecast performance\n\n";
    txt << "Measure";
    for (const auto& e : entries) txt << '\t' << display_name(e.model);
    txt << '\n';
    csv::Table mt;
    mt.header = {"measure"};
    for (const auto& e : entries) mt.header.push_back(e.model);

    for (const auto& [label, getter] : rows) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& e : entries) {
            const auto v = getter(e.rep);
            if (v && *v < best) best = *v;
        }
        txt << label;
        std::vector<std::string> csv_row = {label};
        for (const auto& e : entries) {
            const auto v = getter(e.rep);
            txt << '\t' << metric_cell(v, v && *v == best);
            csv_row.push_back(v ? csv::format_double(*v) : "NA");
        }
        txt << '\n';
        mt.rows.push_back(std::move(csv_row));
    }

    txt << "MAE";
    std::vector<std::string> mae_row = {"MAE"};
    {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& e : entries) best = std::min(best, e.rep.mae);
        for (const auto& e : entries) {
            txt << '\t' << fmt3(e.rep.mae) << (e.rep.mae == best ? "†" : "");
            mae_row.push_back(csv::format_double(e.rep.mae));
        }
    }
    txt << '\n';
    mt.rows.push_back(std::move(mae_row));

    txt << "D-M";
    std::vector<std::string> dm_row = {"D-M"};
    for (const auto& e : entries) {
        if (e.model == ref) {
            txt << '\t' << "--";
            dm_row.push_back("");
        } else if (e.dm_degenerate) {
            txt << '\t' << "degenerate";
            dm_row.push_back("degenerate");
        } else if (e.dm) {
            std::string stars;
            if (e.dm->p_value < 0.01) stars = "***";
            else if (e.dm->p_value < 0.05) stars = "**";
            else if (e.dm->p_value < 0.10) stars = "*";
            txt << '\t' << fmt3(e.dm->statistic) << stars;
            dm_row.push_back(csv::format_double(e.dm->statistic) + stars);
        } else {
            txt << '\t' << "NA";
            dm_row.push_back("NA");
        }
    }
    txt << '\n';
    txt << "\ndagger: best model per measure. D-M: quadratic-loss test of "
        << display_name(ref) << " against each column; negative favors " << display_name(ref)
        << ". ***/**/*: significant at 1%/5%/10%.\n";
    mt.rows.push_back(std::move(dm_row));

    {
        std::ofstream f(p.root / "metrics.txt");
        f << txt.str();
    }
    csv::write_file((p.root / "metrics.csv").string(), mt);
    std::cout << txt.str();

    // Residual QQ and forecast-overlay plots per model.
    for (const auto& e : entries) {
        const Vec err = e.data.actual - e.data.forecast;
        try {
            const auto qq = evaluation::residual_qq(err);
            svg::LinePlot plot;
            plot.title = "Residual QQ: " + display_name(e.model);
            plot.xlabel = "standard normal quantiles";
            plot.ylabel = "standardized residuals";
            svg::Series diag;
            diag.label = "45°";
            diag.color = "#999999";
            diag.dashed = true;
            diag.x = {qq.theoretical[0], qq.theoretical[qq.theoretical.size() - 1]};
            diag.y = diag.x;
            svg::Series pts;
            pts.label = "residuals";
            pts.points = true;
            pts.x.assign(qq.theoretical.data(), qq.theoretical.data() + qq.theoretical.size());
            pts.y.assign(qq.sample.data(), qq.sample.data() + qq.sample.size());
            plot.series = {diag, pts};
            plot.embed_data = false;
            svg::write_line_plot((p.plots / ("qq_" + e.model + ".svg")).string(), plot);
        } catch (const Error&) {
            // degenerate residuals: no plot
        }

        // Overlay: day-ahead block of the first test samples, a continuous
        // out-of-sample stretch.
        const int S = series::kStepsPerDay;
        svg::LinePlot overlay;
        overlay.title = "Out-of-sample forecast: " + display_name(e.model);
        overlay.xlabel = "15-minute steps";
        overlay.ylabel = "scaled load";
        svg::Series act, fc;
        act.label = "actual";
        act.color = "#000000";
        fc.label = "forecast";
        fc.color = "#1f77b4";
        int plotted = 0;
        for (std::size_t i = 0; i < e.data.sample_of.size() && plotted < 10 * S;
             ++i) {
            const int within = static_cast<int>(i) % (2 * S);
            if (within >= S) continue;  // h=1 block only
            act.x.push_back(plotted);
            act.y.push_back(e.data.actual[static_cast<Eigen::Index>(i)]);
            fc.x.push_back(plotted);
            fc.y.push_back(e.data.forecast[static_cast<Eigen::Index>(i)]);
            ++plotted;
        }
        overlay.series = {act, fc};
        overlay.embed_data = false;
        svg::write_line_plot((p.plots / ("forecast_" + e.model + ".svg")).string(), overlay);
    }
}

void train_into(const config::RunConfig& cfg, const Paths& p, const std::string& model,
                const series::SampleSplit& split) {
    if (model == "lstm" || model == "gru") {
        const auto kind = model == "lstm" ? neural::CellKind::Lstm : neural::CellKind::Gru;
        const auto& tc = model == "lstm" ? cfg.lstm : cfg.gru;
        const auto result = neural::train(kind, split.train, tc);
        neural::save_model((p.models / (model + ".txt")).string(), result.params);
        csv::Table loss;
        loss.header = {"epoch", "loss"};
        for (std::size_t i = 0; i < result.loss_history.size(); ++i) {
            loss.rows.push_back({std::to_string(i), csv::format_double(result.loss_history[i])});
        }
        csv::write_file((p.models / (model + "_loss.csv")).string(), loss);
    } else if (model == "fastec") {
        const auto fm = fastec::train_fastec(split.train, cfg.fastec);
        fastec::save_model((p.models / "fastec.txt").string(), fm);
    } else if (model == "arx") {
        const auto arx = baselines::arx_fit(split.train, cfg.arx_lags);
        baselines::save_model((p.models / "arx.txt").string(), arx);
        if (arx.collinear) std::cout << "arx: design rank-deficient, min-norm solution flagged\n";
    } else {
        throw ParamError("unknown model '" + model + "' (expected lstm|gru|fastec|arx)");
    }
    std::cout << "train " << model << ": model written to "
              << (p.models / (model + ".txt")).string() << '\n';
}

}  // namespace

std::string resolve_output_dir(const config::RunConfig& cfg) {
    fs::path dir = cfg.output_dir;
    if (dir.is_relative()) {
        if (const char* root = std::getenv("LOADCAST_OUTPUT_ROOT")) {
            dir = fs::path(root) / dir;
        }
    }
    return dir.string();
}

void run_synth(const config::RunConfig& cfg) {
    const Paths p = prepare(cfg);
    if (cfg.data.csv_path.empty()) throw ConfigError("data.csv must name the synth target path");
    const auto result = synth::generate(cfg.synth);
    if (const fs::path parent = fs::path(cfg.data.csv_path).parent_path(); !parent.empty()) {
        fs::create_directories(parent);
    }
    synth::write_csv(cfg.data.csv_path, result, cfg.synth_raw_min, cfg.synth_raw_max);
    std::cout << "synth: wrote " << cfg.synth.n_days << " days to " << cfg.data.csv_path
              << " (labels sidecar alongside)\n";
    write_manifest(p, cfg, "synth");
}

void run_ingest(const config::RunConfig& cfg) {
    const Paths p = prepare(cfg);
    const auto ds = load_dataset(cfg);
    const auto split = load_split(cfg, ds);
    series::export_samples_csv((p.root / "samples.csv").string(), split.train);
    std::cout << "ingest: " << ds.n_days() << " days after the " << cfg.data.lag_steps
              << "-step schedule shift; scale [" << ds.scale.min << ", " << ds.scale.max << "]; "
              << split.train.size() << " train / " << split.test.size() << " test pairs\n";
    write_manifest(p, cfg, "ingest");
}

void run_diagnose(const config::RunConfig& cfg) {
    const Paths p = prepare(cfg);
    const auto ds = load_dataset(cfg);
    const Vec flat = ds.flat_load();

    const auto adf = diagnostics::adf_test(flat);
    const auto kpss = diagnostics::kpss_test(flat);

    std::ostringstream txt;
    txt << "Stationarity Test\n\n";
    txt << "      test   p-value   lags\n";
    char line[96];
    std::snprintf(line, sizeof(line), "ADF  %6.2f   %7.2f   %4d\n", adf.statistic, adf.p_value,
                  adf.lags_used);
    txt << line;
    std::snprintf(line, sizeof(line), "KPSS %6.2f   %7.2f   %4d\n", kpss.statistic, kpss.p_value,
                  kpss.lags_used);
    txt << line;
    {
        std::ofstream f(p.root / "stationarity.txt");
        f << txt.str();
    }
    csv::Table st;
    st.header = {"test", "statistic", "p_value", "lags", "p_clamped"};
    st.rows.push_back({"ADF", csv::format_double(adf.statistic), csv::format_double(adf.p_value),
                       std::to_string(adf.lags_used), adf.p_clamped ? "1" : "0"});
    st.rows.push_back({"KPSS", csv::format_double(kpss.statistic), csv::format_double(kpss.p_value),
                       std::to_string(kpss.lags_used), kpss.p_clamped ? "1" : "0"});
    csv::write_file((p.root / "stationarity.csv").string(), st);
    std::cout << txt.str();

    const int max_lag = std::min<int>(cfg.diagnose.acf_max_lag, static_cast<int>(flat.size()) - 1);
    const auto ac = diagnostics::acf(flat, max_lag);
    svg::LinePlot acf_plot;
    acf_plot.title = "ACF of the load process";
    acf_plot.xlabel = "lag";
    acf_plot.ylabel = "autocorrelation";
    svg::Series acs, band_hi, band_lo;
    acs.label = "acf";
    for (int l = 0; l <= max_lag; ++l) {
        acs.x.push_back(l);
        acs.y.push_back(ac.acf[l]);
    }
    band_hi.label = "5% band";
    band_hi.color = "#cc0000";
    band_hi.dashed = true;
    band_hi.x = {0.0, static_cast<double>(max_lag)};
    band_hi.y = {ac.band, ac.band};
    band_lo.color = "#cc0000";
    band_lo.dashed = true;
    band_lo.x = band_hi.x;
    band_lo.y = {-ac.band, -ac.band};
    acf_plot.series = {acs, band_hi, band_lo};
    svg::write_line_plot((p.plots / "acf.svg").string(), acf_plot);

    const auto kde = diagnostics::kde_epanechnikov(flat, cfg.diagnose.kde_bandwidth);
    svg::LinePlot kde_plot;
    kde_plot.title = "KDE of the load process (Epanechnikov)";
    kde_plot.xlabel = "scaled load";
    kde_plot.ylabel = "density";
    svg::Series kd;
    kd.label = "density";
    kd.x.assign(kde.grid.data(), kde.grid.data() + kde.grid.size());
    kd.y.assign(kde.density.data(), kde.density.data() + kde.density.size());
    kde_plot.series = {kd};
    svg::write_line_plot((p.plots / "kde.svg").string(), kde_plot);

    write_manifest(p, cfg, "diagnose");
}

void run_gmm_fit(const config::RunConfig& cfg) {
    const Paths p = prepare(cfg);
    const auto ds = load_dataset(cfg);
    Vec flat = ds.flat_load();
    if (flat.size() > cfg.gmm.points) flat.conservativeResize(cfg.gmm.points);

    gmm::EmConfig em = cfg.gmm.em;
    const auto fit = gmm::em_fit(flat, cfg.gmm.components, em);

    std::ostringstream txt;
    txt << "Gaussian mixture on the first " << flat.size() << " load points\n\n";
    txt << "component   weight     mean    variance\n";
    for (int k = 0; k < fit.K; ++k) {
        char line[96];
        std::snprintf(line, sizeof(line), "%9d   %6.4f   %6.4f   %9.3e\n", k + 1, fit.weights[k],
                      fit.means[k], fit.variances[k]);
        txt << line;
    }
    txt << "\nEM iterations: " << fit.loglik_trace.size() << (fit.converged ? " (converged)" : "")
        << '\n';
    {
        std::ofstream f(p.root / "gmm.txt");
        f << txt.str();
    }
    csv::Table gt;
    gt.header = {"component", "weight", "mean", "variance"};
    for (int k = 0; k < fit.K; ++k) {
        gt.rows.push_back({std::to_string(k + 1), csv::format_double(fit.weights[k]),
                           csv::format_double(fit.means[k]), csv::format_double(fit.variances[k])});
    }
    csv::write_file((p.root / "gmm.csv").string(), gt);
    std::cout << txt.str();

    svg::LinePlot trace;
    trace.title = "Convergence of the EM algorithm";
    trace.xlabel = "iteration";
    trace.ylabel = "log-likelihood";
    svg::Series tr;
    tr.label = "loglik";
    for (std::size_t i = 0; i < fit.loglik_trace.size(); ++i) {
        tr.x.push_back(static_cast<double>(i));
        tr.y.push_back(fit.loglik_trace[i]);
    }
    trace.series = {tr};
    svg::write_line_plot((p.plots / "em_trace.svg").string(), trace);

    write_manifest(p, cfg, "gmm fit");
}

void run_train(const config::RunConfig& cfg, const std::string& model) {
    const Paths p = prepare(cfg);
    const auto ds = load_dataset(cfg);
    const auto split = load_split(cfg, ds);
    train_into(cfg, p, model, split);
    write_manifest(p, cfg, "train " + model);
}

void run_forecast(const config::RunConfig& cfg, const std::string& model) {
    const Paths p = prepare(cfg);
    const auto ds = load_dataset(cfg);
    const auto split = load_split(cfg, ds);
    const auto forecasts = model_forecasts(cfg, p, model, split.test);
    write_forecast_csv(p.forecasts / (model + ".csv"), split.test, forecasts);
    std::cout << "forecast " << model << ": " << split.test.size() << " test samples written\n";
    write_manifest(p, cfg, "forecast " + model);
}

void run_evaluate(const config::RunConfig& cfg) {
    const Paths p = prepare(cfg);
    evaluate_into(cfg, p);
    write_manifest(p, cfg, "evaluate");
}

void run_compare(const config::RunConfig& cfg) {
    const Paths p = prepare(cfg);
    const auto ds = load_dataset(cfg);
    const auto split = load_split(cfg, ds);
    for (const std::string model : {"lstm", "gru", "fastec", "arx"}) {
        train_into(cfg, p, model, split);
    }
    for (const auto& model : kModels) {
        const auto forecasts = model_forecasts(cfg, p, model, split.test);
        write_forecast_csv(p.forecasts / (model + ".csv"), split.test, forecasts);
    }
    evaluate_into(cfg, p);
    write_manifest(p, cfg, "compare");
}

}  // namespace loadcast::runner
