#include "config.hpp"

#include "msdelay/report.hpp"
#include "msdelay/timeutil.hpp"

#include <cstdlib>
#include <fstream>
#include <set>

namespace msdelay::cli {

using json = nlohmann::json;

const json& default_config() {
  static const json d = json::parse(R"({
    "workspace": null,
    "workers": 1,
    "inputs": {
      "stops": "data/stops.csv",
      "weather": "data/weather.csv",
      "frequency": "data/frequency.csv",
      "delimiter": ",",
      "holidays": []
    },
    "line": null,
    "states": {"thresholds": [5, 10], "structure": "fully_connected"},
    "strata": {"zones": true},
    "nonparametric": {
      "horizons": [10, 30],
      "rounding_grain": 5,
      "tau_max": 130,
      "elos_estimand": "sojourn",
      "svg": false
    },
    "bootstrap": {"replicates": 1000, "seed": 1, "level": 0.95},
    "cox": {
      "models": ["temporal", "spatial"],
      "ties": "breslow",
      "covariate_scale": {"boarded": 100, "alighted": 100},
      "svg": false
    },
    "predict": {"scenarios": "scenarios.json", "horizons": [10, 30], "sweep_points": 5},
    "simulate": {"spec": "simulation.json", "output": "data", "truth_draws": 20000},
    "output": "out"
  })");
  return d;
}

namespace {

// Objects whose keys are free-form.
const std::set<std::string>& open_paths() {
  static const std::set<std::string> p{"cox.covariate_scale", "line"};
  return p;
}

void merge_into(json& target, const json& user, const std::string& path) {
  if (!user.is_object()) throw Error(ErrorKind::Config, (path.empty() ? "config" : path) + ": expected an object");
  for (const auto& [key, value] : user.items()) {
    const auto p = path.empty() ? key : path + "." + key;
    if (!target.contains(key)) throw Error(ErrorKind::Config, "unknown configuration key '" + p + "'");
    auto& slot = target[key];
    if (slot.is_object() && !open_paths().contains(p)) {
      merge_into(slot, value, p);
    } else {
      slot = value;
    }
  }
}

template <typename T>
T get(const json& doc, const std::string& dotted) {
  const json* node = &doc;
  std::size_t start = 0;
  while (start <= dotted.size()) {
    const auto end = dotted.find('.', start);
    const auto key = dotted.substr(start, end == std::string::npos ? std::string::npos : end - start);
    node = &node->at(key);
    if (end == std::string::npos) break;
    start = end + 1;
  }
  try {
    return node->get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorKind::Config, "configuration key '" + dotted + "' has the wrong type");
  }
}

void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw Error(ErrorKind::Config, "override '" + assignment + "' is not of the form key=value");
  }
  const auto key = assignment.substr(0, eq);
  const auto text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;

  json patch = value;
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const auto end = key.find('.', start);
    parts.push_back(key.substr(start, end == std::string::npos ? std::string::npos : end - start));
    if (end == std::string::npos) break;
    start = end + 1;
  }
  for (auto it = parts.rbegin(); it != parts.rend(); ++it) patch = json{{*it, patch}};
  merge_into(doc, patch, "");
}

}  // namespace

json merge_config(const json& defaults, const json& user) {
  json out = defaults;
  merge_into(out, user, "");
  return out;
}

std::filesystem::path Config::resolve(const std::string& relative) const {
  const std::filesystem::path p(relative);
  return p.is_absolute() ? p : workspace / p;
}

std::filesystem::path Config::out(const std::string& relative) const {
  return resolve(output_dir) / relative;
}

CovariateModel Config::covariate_model(const std::string& name) const {
  CovariateModel m;
  if (name == "temporal") {
    m = temporal_model();
  } else if (name == "spatial") {
    m = spatial_model();
  } else {
    throw Error(ErrorKind::Config, "unknown covariate model '" + name + "' (temporal | spatial)");
  }
  m.scale = covariate_scale;
  return m;
}

Config load_config(const LoadOptions& options) {
  json user = json::object();
  std::filesystem::path config_dir = std::filesystem::current_path();
  if (options.config_file) {
    std::ifstream in(*options.config_file);
    if (!in) {
      throw Error(ErrorKind::Config, "cannot open configuration file " + options.config_file->string());
    }
    user = json::parse(in, nullptr, false, true);
    if (user.is_discarded()) {
      throw Error(ErrorKind::Config, "configuration file " + options.config_file->string() +
                                         " is not valid JSON");
    }
    config_dir = std::filesystem::absolute(*options.config_file).parent_path();
  }
  json doc = merge_config(default_config(), user);
  for (const auto& o : options.overrides) apply_override(doc, o);

  Config c;
  // workspace: flag > env > config > config file directory
  if (options.workspace_flag) {
    c.workspace = *options.workspace_flag;
  } else if (const char* env = std::getenv("MSDELAY_WORKSPACE"); env && *env) {
    c.workspace = env;
  } else if (!doc.at("workspace").is_null()) {
    const std::filesystem::path w = get<std::string>(doc, "workspace");
    c.workspace = w.is_absolute() ? w : config_dir / w;
  } else {
    c.workspace = config_dir;
  }

  c.workers = get<unsigned>(doc, "workers");
  if (options.workers_flag) c.workers = *options.workers_flag;
  if (c.workers == 0) throw Error(ErrorKind::Config, "workers must be >= 1");

  c.stops_path = get<std::string>(doc, "inputs.stops");
  c.weather_path = get<std::string>(doc, "inputs.weather");
  c.frequency_path = get<std::string>(doc, "inputs.frequency");
  const auto delim = get<std::string>(doc, "inputs.delimiter");
  if (delim == "\\t") {
    c.delimiter = '\t';
  } else if (delim.size() == 1) {
    c.delimiter = delim[0];
  } else {
    throw Error(ErrorKind::Config, "inputs.delimiter must be one character");
  }
  for (const auto& h : get<std::vector<std::string>>(doc, "inputs.holidays")) {
    const auto d = parse_date(h);
    if (!d) throw Error(ErrorKind::Config, "inputs.holidays: invalid date '" + h + "'");
    c.holidays.push_back(*d);
  }
  c.line = doc.at("line").is_null() ? LineConfig::s5() : LineConfig::from_json(doc.at("line"));

  c.thresholds = get<std::vector<double>>(doc, "states.thresholds");
  c.structure = transition_structure_from_string(get<std::string>(doc, "states.structure"));
  (void)c.space();  // validates thresholds
  c.zone_strata = get<bool>(doc, "strata.zones");

  c.horizons = get<std::vector<double>>(doc, "nonparametric.horizons");
  c.rounding_grain = get<double>(doc, "nonparametric.rounding_grain");
  c.tau_max = get<double>(doc, "nonparametric.tau_max");
  c.estimand = elos_estimand_from_string(get<std::string>(doc, "nonparametric.elos_estimand"));
  c.np_svg = get<bool>(doc, "nonparametric.svg");
  if (!(c.tau_max > 0.0)) throw Error(ErrorKind::Config, "nonparametric.tau_max must be positive");
  if (!(c.rounding_grain > 0.0)) {
    throw Error(ErrorKind::Config, "nonparametric.rounding_grain must be positive");
  }
  for (double h : c.horizons) {
    if (!(h > 0.0)) throw Error(ErrorKind::Config, "nonparametric.horizons must be positive");
  }

  c.bootstrap.replicates = get<int>(doc, "bootstrap.replicates");
  c.bootstrap.seed = get<std::uint64_t>(doc, "bootstrap.seed");
  c.bootstrap.level = get<double>(doc, "bootstrap.level");
  c.bootstrap.workers = c.workers;
  if (c.bootstrap.replicates < 2) throw Error(ErrorKind::Config, "bootstrap.replicates must be >= 2");
  if (!(c.bootstrap.level > 0.0 && c.bootstrap.level < 1.0)) {
    throw Error(ErrorKind::Config, "bootstrap.level must lie in (0, 1)");
  }

  c.cox_models = get<std::vector<std::string>>(doc, "cox.models");
  c.ties = ties_from_string(get<std::string>(doc, "cox.ties"));
  c.covariate_scale = get<std::map<std::string, double>>(doc, "cox.covariate_scale");
  for (const auto& [k, v] : c.covariate_scale) {
    if (std::find(known_covariates().begin(), known_covariates().end(), k) ==
        known_covariates().end()) {
      throw Error(ErrorKind::Config, "unknown configuration key 'cox.covariate_scale." + k + "'");
    }
    if (!(v > 0.0)) throw Error(ErrorKind::Config, "cox.covariate_scale." + k + " must be positive");
  }
  for (const auto& m : c.cox_models) (void)c.covariate_model(m);
  c.cox_svg = get<bool>(doc, "cox.svg");

  c.scenarios_path = get<std::string>(doc, "predict.scenarios");
  c.predict_horizons = get<std::vector<double>>(doc, "predict.horizons");
  c.sweep_points = get<int>(doc, "predict.sweep_points");
  if (c.sweep_points < 2) throw Error(ErrorKind::Config, "predict.sweep_points must be >= 2");

  c.simulation_spec = get<std::string>(doc, "simulate.spec");
  c.simulation_output = get<std::string>(doc, "simulate.output");
  c.truth_draws = get<int>(doc, "simulate.truth_draws");
  c.output_dir = get<std::string>(doc, "output");

  c.document = doc;
  json hashed = doc;
  hashed.erase("workspace");
  hashed.erase("workers");  // results do not depend on the worker count
  c.hash = fnv1a_hex(hashed.dump());
  return c;
}

}  // namespace msdelay::cli
