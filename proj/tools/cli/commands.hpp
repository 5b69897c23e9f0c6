#pragma once

#include "config.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <map>
#include <ostream>
#include <string>
#include <vector>

namespace msdelay::cli {

struct RunOptions {
  bool timestamp = true;
  std::ostream* log = nullptr;  // progress notes; null for silence
};

void cmd_ingest(const Config& config, const RunOptions& run);
void cmd_episodes(const Config& config, const RunOptions& run);
void cmd_fit_np(const Config& config, const RunOptions& run);
void cmd_fit_cox(const Config& config, const RunOptions& run);
void cmd_predict(const Config& config, const RunOptions& run);
void cmd_simulate(const Config& config, const RunOptions& run);

/// Runs one command by name ("ingest", "episodes", "fit-np", "fit-cox",
/// "predict", "simulate").
void run_command(const std::string& name, const Config& config, const RunOptions& run);
const std::vector<std::string>& command_names();

/// Error document written to stderr on failure.
nlohmann::json error_document(const std::string& command, ErrorKind kind,
                              const std::string& message);
int exit_code(ErrorKind kind);

/// Scenario values may be numbers or percentile references such as "p15",
/// resolved against the observed covariate distribution.
Scenario resolve_scenario(const std::string& name, const nlohmann::json& values,
                          const std::map<std::string, std::vector<double>>& observed);

/// Built-in best and worst cases: 15th vs 85th percentile passenger counts,
/// 4 vs 24 trains per hour, no adverse weather vs adverse weather.
nlohmann::json default_scenarios();

}  // namespace msdelay::cli
