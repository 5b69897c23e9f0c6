#pragma once

#include "msdelay/cox.hpp"
#include "msdelay/ingestion.hpp"
#include "msdelay/nonparametric.hpp"
#include "msdelay/types.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace msdelay::cli {

/// Every key of the configuration file with its default value. User files
/// may only contain keys present here (maps marked open excepted).
const nlohmann::json& default_config();

struct Config {
  std::filesystem::path workspace;

  // inputs
  std::string stops_path;
  std::string weather_path;
  std::string frequency_path;
  char delimiter = ',';
  std::vector<Date> holidays;
  LineConfig line;

  // state space and strata
  std::vector<double> thresholds;
  TransitionStructure structure = TransitionStructure::FullyConnected;
  bool zone_strata = true;

  // nonparametric
  std::vector<double> horizons;
  double rounding_grain = 5.0;
  double tau_max = 130.0;
  ElosEstimand estimand = ElosEstimand::Sojourn;
  bool np_svg = false;
  BootstrapOptions bootstrap;

  // cox
  std::vector<std::string> cox_models;
  Ties ties = Ties::Breslow;
  std::map<std::string, double> covariate_scale;
  bool cox_svg = false;

  // predict
  std::string scenarios_path;
  std::vector<double> predict_horizons;
  int sweep_points = 5;

  // simulate
  std::string simulation_spec;
  std::string simulation_output;
  int truth_draws = 20000;

  std::string output_dir;
  unsigned workers = 1;

  nlohmann::json document;  // merged configuration after overrides
  std::string hash;         // digest of `document` without the workspace

  StateSpace space() const { return StateSpace::from_thresholds(thresholds, structure); }
  std::filesystem::path resolve(const std::string& relative) const;
  std::filesystem::path out(const std::string& relative) const;
  CovariateModel covariate_model(const std::string& name) const;
};

struct LoadOptions {
  std::optional<std::filesystem::path> config_file;
  std::vector<std::string> overrides;  // "dotted.key=value"
  std::optional<std::filesystem::path> workspace_flag;
  std::optional<unsigned> workers_flag;
};

/// Reads the configuration, applies overrides and resolves the workspace
/// with precedence flag > MSDELAY_WORKSPACE > config key > config directory.
Config load_config(const LoadOptions& options);

/// Merges `user` into `defaults`; unknown keys are fatal and name the key path.
nlohmann::json merge_config(const nlohmann::json& defaults, const nlohmann::json& user);

}  // namespace msdelay::cli
