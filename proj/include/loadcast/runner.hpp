#pragma once

#include <string>

#include "loadcast/config.hpp"

namespace loadcast::runner {

// Subcommand implementations behind the CLI. Every command writes its
// artifacts (and the manifest, last) into the resolved output directory and
// throws loadcast::Error subclasses on failure; the CLI maps those to exit
// codes and a machine-readable error record.

// Resolved output directory: LOADCAST_OUTPUT_ROOT prefixes relative paths.
std::string resolve_output_dir(const config::RunConfig& cfg);

void run_synth(const config::RunConfig& cfg);
void run_ingest(const config::RunConfig& cfg);
void run_diagnose(const config::RunConfig& cfg);
void run_gmm_fit(const config::RunConfig& cfg);
void run_train(const config::RunConfig& cfg, const std::string& model);
void run_forecast(const config::RunConfig& cfg, const std::string& model);
void run_evaluate(const config::RunConfig& cfg);
void run_compare(const config::RunConfig& cfg);

}  // namespace loadcast::runner
