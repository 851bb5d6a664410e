#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "loadcast/config.hpp"
#include "loadcast/errors.hpp"
#include "loadcast/runner.hpp"

namespace {

struct CommonFlags {
    std::string config_path;
    std::string output_override;
    int threads = -1;
    long long seed_override = -1;
};

void add_common(CLI::App* sub, CommonFlags& flags) {
    sub->add_option("-c,--config", flags.config_path, "run config file (JSON)")->required();
    sub->add_option("-o,--output", flags.output_override, "override output_dir");
    sub->add_option("--threads", flags.threads, "worker threads (0 = serial reference path)");
    sub->add_option("--seed", flags.seed_override, "override the top-level seed");
}

loadcast::config::RunConfig make_config(const CommonFlags& flags) {
    auto cfg = loadcast::config::load_config(flags.config_path);
    if (!flags.output_override.empty()) cfg.output_dir = flags.output_override;
    if (flags.threads >= 0) cfg.threads = flags.threads;
    if (flags.seed_override >= 0) cfg.seed = static_cast<std::uint64_t>(flags.seed_override);
    return cfg;
}

void emit_error_record(const std::string& output_dir, const std::string& kind,
                       const std::string& message) {
    nlohmann::json rec;
    rec["error"] = kind;
    rec["message"] = message;
    std::cerr << rec.dump() << '\n';
    if (!output_dir.empty()) {
        std::error_code ec;
        std::filesystem::create_directories(output_dir, ec);
        if (!ec) {
            std::ofstream f(std::filesystem::path(output_dir) / "error.json");
            if (f) f << rec.dump(2) << '\n';
        }
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"loadcast: short-term load forecasting toolkit"};
    app.require_subcommand(1);
    CommonFlags flags;
    std::string model;

    CLI::App* synth = app.add_subcommand("synth", "generate a synthetic regime-switching dataset");
    CLI::App* ingest = app.add_subcommand("ingest", "validate a CSV and export samples");
    CLI::App* diagnose = app.add_subcommand("diagnose", "stationarity tests, ACF and KDE plots");
    CLI::App* gmm_cmd = app.add_subcommand("gmm", "Gaussian mixture tools");
    CLI::App* gmm_fit = gmm_cmd->add_subcommand("fit", "fit the load-state mixture by EM");
    gmm_cmd->require_subcommand(1);
    CLI::App* train = app.add_subcommand("train", "train a forecaster");
    train->add_option("model", model, "lstm|gru|fastec|arx")->required();
    CLI::App* forecast = app.add_subcommand("forecast", "forecast the test samples");
    forecast->add_option("model", model, "lstm|gru|fastec|arx|naive")->required();
    CLI::App* evaluate = app.add_subcommand("evaluate", "metrics table, DM test and plots");
    CLI::App* compare = app.add_subcommand("compare", "train + forecast + evaluate all models");

    for (CLI::App* sub : {synth, ingest, diagnose, gmm_fit, train, forecast, evaluate, compare}) {
        add_common(sub, flags);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    std::string output_dir;
    try {
        const auto cfg = make_config(flags);
        output_dir = loadcast::runner::resolve_output_dir(cfg);
        using namespace loadcast::runner;
        if (synth->parsed()) run_synth(cfg);
        else if (ingest->parsed()) run_ingest(cfg);
        else if (diagnose->parsed()) run_diagnose(cfg);
        else if (gmm_cmd->parsed()) run_gmm_fit(cfg);
        else if (train->parsed()) run_train(cfg, model);
        else if (forecast->parsed()) run_forecast(cfg, model);
        else if (evaluate->parsed()) run_evaluate(cfg);
        else if (compare->parsed()) run_compare(cfg);
        return 0;
    } catch (const loadcast::ConfigError& e) {
        emit_error_record(output_dir, "ConfigError", e.what());
        return 1;
    } catch (const loadcast::Error& e) {
        emit_error_record(output_dir, "Error", e.what());
        return 1;
    } catch (const std::exception& e) {
        emit_error_record(output_dir, "Unexpected", e.what());
        return 1;
    }
}
