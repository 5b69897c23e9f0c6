#include "commands.hpp"

#include "msdelay/cox.hpp"
#include "msdelay/delimited.hpp"
#include "msdelay/episodes.hpp"
#include "msdelay/ingestion.hpp"
#include "msdelay/nonparametric.hpp"
#include "msdelay/parallel.hpp"
#include "msdelay/report.hpp"
#include "msdelay/simulate.hpp"
#include "msdelay/svg.hpp"
#include "msdelay/timeutil.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

namespace msdelay::cli {

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

Provenance provenance(const Config& c, const std::string& command, const RunOptions& run) {
  Provenance p{command, c.hash, std::nullopt};
  if (run.timestamp) {
    const auto now = std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now());
    p.timestamp = format_timestamp(Timestamp{now}) + " UTC";
  }
  return p;
}

void note(const RunOptions& run, const std::string& msg) {
  if (run.log) *run.log << msg << '\n';
}

void write_file(const fs::path& path, const std::string& content) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Input, "cannot write " + path.string());
  out << content;
}

void write_report(const fs::path& path, const Provenance& p, const std::string& body) {
  write_file(path, provenance_block(p) + body);
}

void write_json(const fs::path& path, const Provenance& p, json body) {
  body["provenance"] = provenance_json(p);
  write_file(path, body.dump(2) + "\n");
}

std::string delimited(const Table& t, char delimiter = ',') {
  std::ostringstream out;
  t.write_delimited(out, delimiter);
  return out.str();
}

void require(const fs::path& path, const std::string& producer) {
  if (!fs::exists(path)) {
    throw Error(ErrorKind::MissingArtifact,
                "missing artifact " + path.string() + "; run 'msdelay " + producer + "' first");
  }
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Input, "cannot open " + path.string());
  return in;
}

json read_json(const fs::path& path, ErrorKind kind) {
  auto in = open_in(path);
  auto j = json::parse(in, nullptr, false, true);
  if (j.is_discarded()) throw Error(kind, path.string() + " is not valid JSON");
  return j;
}

std::vector<AnalysisRow> load_analysis(const Config& c) {
  const auto path = c.out("ingest/analysis.csv");
  require(path, "ingest");
  auto in = open_in(path);
  return read_analysis_table(in);
}

std::vector<Episode> load_episodes(const Config& c, bool zone) {
  const auto path = c.out(zone ? "episodes/episodes_zone.csv" : "episodes/episodes_time.csv");
  require(path, "episodes");
  auto in = open_in(path);
  return read_episodes(in);
}

json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(r, k));
    rows.push_back(row);
  }
  return rows;
}

json number_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

constexpr Direction kDirections[] = {Direction::Forward, Direction::Reverse};
constexpr TimeSlot kSlots[] = {TimeSlot::MorningPeak, TimeSlot::OffPeak, TimeSlot::EveningPeak};
constexpr Zone kZones[] = {Zone::Z1, Zone::Z2, Zone::Z3, Zone::Z4};

}  // namespace

// ---------------------------------------------------------------------------

void cmd_ingest(const Config& c, const RunOptions& run) {
  const auto stops = parse_stops(c.resolve(c.stops_path), c.delimiter);
  const auto weather = parse_weather(c.resolve(c.weather_path), c.delimiter);
  const auto frequency = parse_frequency(c.resolve(c.frequency_path), c.delimiter);
  IngestOptions options;
  options.holidays = c.holidays;
  auto table = build_analysis_table(stops.records, weather.records, frequency.records, c.line, options);
  auto& rep = table.report;
  rep.stop_rows_read = stops.rows_read;
  rep.stop_rejections = stops.rejections;
  rep.weather_rejections = weather.rejections;
  rep.frequency_rejections = frequency.rejections;

  const auto p = provenance(c, "ingest", run);
  std::ostringstream analysis;
  write_analysis_table(analysis, table.rows);
  write_report(c.out("ingest/analysis.csv"), p, analysis.str());
  write_json(c.out("ingest/report.json"), p, rep.to_json());

  Table rejections({"source", "line", "reason"});
  const auto add = [&](const char* source, const std::vector<Rejection>& list) {
    for (const auto& r : list) rejections.add_row({source, std::to_string(r.line), r.reason});
  };
  add("stops", stops.rejections);
  add("weather", weather.rejections);
  add("frequency", frequency.rejections);
  write_report(c.out("ingest/rejections.csv"), p, delimited(rejections));
  note(run, fmt::format("ingest: {} stop rows read, {} rejected, {} filtered, {} retained",
                        stops.rows_read, stops.rejections.size(), rep.filtered.total(),
                        rep.rows_retained));
}

// ---------------------------------------------------------------------------

namespace {

json diagnostics_json(const EpisodeDiagnostics& d, std::size_t episodes) {
  return {{"episodes", episodes},
          {"protocol_violations", d.protocol_violations},
          {"dropped_zero_duration", d.dropped_zero_duration},
          {"short_trajectories", d.short_trajectories}};
}

}  // namespace

void cmd_episodes(const Config& c, const RunOptions& run) {
  const auto rows = load_analysis(c);
  const auto set = build_trajectories(rows);
  const auto space = c.space();
  const auto p = provenance(c, "episodes", run);

  EpisodeDiagnostics dt;
  const auto time_eps = build_episodes(set.trajectories, space, {false}, &dt);
  std::ostringstream out;
  write_episodes(out, time_eps);
  write_report(c.out("episodes/episodes_time.csv"), p, out.str());

  json diag{{"state_space", space.name()},
            {"structure", std::string(to_string(c.structure))},
            {"missions", set.trajectories.size()},
            {"time_strata", diagnostics_json(dt, time_eps.size())}};
  if (c.zone_strata) {
    EpisodeDiagnostics dz;
    const auto zone_eps = build_episodes(set.trajectories, space, {true}, &dz);
    std::ostringstream zout;
    write_episodes(zout, zone_eps);
    write_report(c.out("episodes/episodes_zone.csv"), p, zout.str());
    diag["zone_strata"] = diagnostics_json(dz, zone_eps.size());
  }
  json quarantined = json::array();
  for (const auto& q : set.quarantined) {
    quarantined.push_back({{"mission", q.mission}, {"day", format_date(q.day)}, {"reason", q.reason}});
  }
  diag["quarantined"] = quarantined;
  write_json(c.out("episodes/diagnostics.json"), p, diag);
  note(run, fmt::format("episodes: {} missions ({} quarantined), {} episodes", set.trajectories.size(),
                        set.quarantined.size(), time_eps.size()));
}

// ---------------------------------------------------------------------------

namespace {

struct NpStratum {
  Stratum stratum;
  std::vector<Episode> episodes;
  std::vector<MissionTrajectory> missions;
  bool zone = false;
};

std::string level_label(const Stratum& s) {
  if (s.zone) return to_string(*s.zone);
  if (s.time_slot) return std::string(to_string(*s.time_slot));
  return "all";
}

std::vector<double> elos_vector(std::span<const Episode> eps, const StateSpace& space,
                                const Stratum& stratum, double tau_max, ElosEstimand estimand) {
  const auto hs = estimate_hazards(eps, space, stratum);
  std::vector<double> out;
  for (std::size_t r = 0; r < space.size(); ++r) {
    const bool any = std::any_of(eps.begin(), eps.end(),
                                 [&](const Episode& e) { return e.from == static_cast<State>(r); });
    out.push_back(any ? elos(hs, static_cast<State>(r), tau_max, estimand) : kMissing);
  }
  return out;
}

bool in_stratum(const Episode& e, const Stratum& s) {
  return e.stratum.direction == s.direction && (!s.time_slot || e.stratum.time_slot == s.time_slot) &&
         (!s.zone || e.stratum.zone == s.zone);
}

}  // namespace

void cmd_fit_np(const Config& c, const RunOptions& run) {
  const auto rows = load_analysis(c);
  const auto trajectories = build_trajectories(rows).trajectories;
  const auto time_eps = load_episodes(c, false);
  std::vector<Episode> zone_eps;
  if (c.zone_strata) zone_eps = load_episodes(c, true);
  const auto space = c.space();
  const auto p = provenance(c, "fit-np", run);

  std::vector<NpStratum> strata;
  for (auto d : kDirections) {
    for (auto slot : kSlots) {
      NpStratum s;
      s.stratum.direction = d;
      s.stratum.time_slot = slot;
      for (const auto& e : time_eps) {
        if (in_stratum(e, s.stratum)) s.episodes.push_back(e);
      }
      for (const auto& t : trajectories) {
        if (t.direction == d && t.time_slot == slot) s.missions.push_back(t);
      }
      strata.push_back(std::move(s));
    }
  }
  if (c.zone_strata) {
    for (auto d : kDirections) {
      for (auto z : kZones) {
        NpStratum s;
        s.zone = true;
        s.stratum.direction = d;
        s.stratum.zone = z;
        for (const auto& e : zone_eps) {
          if (in_stratum(e, s.stratum)) s.episodes.push_back(e);
        }
        for (const auto& t : trajectories) {
          if (t.direction == d) s.missions.push_back(t);
        }
        strata.push_back(std::move(s));
      }
    }
  }

  std::vector<HazardSet> sets;
  json hazards_doc = json::array();
  Table elos_csv({"stratum", "direction", "level", "state", "elos", "ci_low", "ci_high", "n_boot",
                  "n_missing", "unstable"});
  Table elos_text({"direction", "level", "state", "elos_95ci"});
  json elos_doc = json::array();
  std::vector<std::string> warnings;

  for (std::size_t i = 0; i < strata.size(); ++i) {
    const auto& s = strata[i];
    auto hs = estimate_hazards(s.episodes, space, s.stratum);
    for (const auto& [t, h] : hs.hazards) {
      Table steps({"time", "increment", "cumulative", "events", "at_risk"});
      double cum = 0.0;
      for (const auto& st : h.steps()) {
        cum += st.increment;
        steps.add_row({format_real(st.time), format_real(st.increment), format_real(cum),
                       std::to_string(st.events), format_real(st.at_risk)});
      }
      write_report(c.out(fmt::format("np/hazards/{}/{}-{}.csv", s.stratum.label(), t.from, t.to)), p,
                   delimited(steps));
    }
    json hz = json::array();
    for (const auto& [t, h] : hs.hazards) hz.push_back(to_json(h));
    hazards_doc.push_back({{"stratum", s.stratum.label()},
                           {"episodes", s.episodes.size()},
                           {"hazards", hz},
                           {"warnings", hs.warnings}});
    warnings.insert(warnings.end(), hs.warnings.begin(), hs.warnings.end());

    const auto point = elos_vector(s.episodes, space, s.stratum, c.tau_max, c.estimand);
    std::vector<PercentileInterval> ci(space.size(), PercentileInterval{kMissing, kMissing, 0, 0, false});
    if (!s.missions.empty()) {
      auto options = c.bootstrap;
      options.seed = mix_seed(c.bootstrap.seed, i);
      const bool zone = s.zone;
      const auto stratum = s.stratum;
      ci = bootstrap(
          s.missions, options,
          [&](std::span<const MissionTrajectory> sample) {
            return build_episodes(sample, space, EpisodeOptions{zone});
          },
          [&](std::span<const Episode> eps) {
            std::vector<Episode> mine;
            for (const auto& e : eps) {
              if (in_stratum(e, stratum)) mine.push_back(e);
            }
            return elos_vector(mine, space, stratum, c.tau_max, c.estimand);
          },
          space.size());
    }
    for (std::size_t r = 0; r < space.size(); ++r) {
      const auto& iv = ci[r];
      const auto dir = std::to_string(static_cast<int>(s.stratum.direction));
      elos_csv.add_row({s.stratum.label(), dir, level_label(s.stratum), space.label(static_cast<State>(r)),
                        format_real(point[r]), format_real(iv.low), format_real(iv.high),
                        std::to_string(iv.n_boot), std::to_string(iv.n_missing),
                        iv.unstable ? "1" : "0"});
      elos_text.add_row({dir, level_label(s.stratum), space.label(static_cast<State>(r)),
                         format_interval(point[r], iv.low, iv.high) + (iv.unstable ? " *" : "")});
      elos_doc.push_back({{"stratum", s.stratum.label()},
                          {"state", space.label(static_cast<State>(r))},
                          {"elos", number_or_null(point[r])},
                          {"ci_low", number_or_null(iv.low)},
                          {"ci_high", number_or_null(iv.high)},
                          {"n_boot", iv.n_boot},
                          {"n_missing", iv.n_missing},
                          {"unstable", iv.unstable}});
    }
    sets.push_back(std::move(hs));
    note(run, fmt::format("fit-np: stratum {} ({} episodes)", s.stratum.label(), s.episodes.size()));
  }

  write_json(c.out("np/hazards.json"), p,
             {{"state_space", space.name()}, {"labels", space.labels()}, {"strata", hazards_doc}});
  const std::string elos_title = fmt::format(
      "Expected length of stay (minutes, tau_max = {}, estimand = {}), percentile bootstrap "
      "B = {}; * marks unstable intervals\n\n",
      format_real(c.tau_max), to_string(c.estimand), c.bootstrap.replicates);
  write_report(c.out("np/elos.txt"), p, elos_title + elos_text.to_text());
  write_report(c.out("np/elos.csv"), p, delimited(elos_csv));
  write_json(c.out("np/elos.json"), p,
             {{"tau_max", c.tau_max},
              {"estimand", std::string(to_string(c.estimand))},
              {"replicates", c.bootstrap.replicates},
              {"level", c.bootstrap.level},
              {"rows", elos_doc}});

  const auto report = conditional_matrix_report(sets, c.horizons, c.rounding_grain);
  std::string text;
  json mdoc = json::array();
  for (const auto& m : report) {
    text += fmt::format("stratum {}, horizon {} min (percent, grain {})\n", m.stratum.label(),
                        format_real(m.horizon), format_real(c.rounding_grain));
    text += matrix_report(m.percent, space.labels(), 0).to_text() + "\n";
    mdoc.push_back({{"stratum", m.stratum.label()},
                    {"horizon", m.horizon},
                    {"probability", matrix_json(m.matrix.entries())},
                    {"percent", matrix_json(m.percent)}});
  }
  write_report(c.out("np/matrices.txt"), p, text);
  write_json(c.out("np/matrices.json"), p, {{"labels", space.labels()}, {"matrices", mdoc}});

  if (c.np_svg) {
    const double h = c.horizons.empty() ? 30.0 : *std::max_element(c.horizons.begin(), c.horizons.end());
    std::vector<StackedRow> rows_time;
    for (const auto& hs : sets) {
      if (hs.stratum.zone) continue;
      rows_time.push_back({hs.stratum.label(), aalen_johansen_path(hs, 0.0, h)});
    }
    write_file(c.out("np/stacked_probabilities.svg"),
               stacked_probability_svg(rows_time, space.labels(), h));
  }
  for (const auto& w : warnings) note(run, "warning: " + w);
}

// ---------------------------------------------------------------------------

void cmd_fit_cox(const Config& c, const RunOptions& run) {
  const auto space = c.space();
  const auto p = provenance(c, "fit-cox", run);
  CoxOptions options;
  options.ties = c.ties;

  for (const auto& model_name : c.cox_models) {
    const auto model = c.covariate_model(model_name);
    const auto eps = load_episodes(c, model_name == "spatial");
    const auto set = fit_transitions(eps, space, model, options, c.workers, true);
    const auto dir = "cox/" + model_name + "/";

    json files = json::array();
    for (const auto& fit : set.fits) {
      const auto name = fmt::format("fit_d{}_{}-{}.json", static_cast<int>(fit.direction),
                                    fit.transition.from, fit.transition.to);
      write_json(c.out(dir + name), p, to_json(fit));
      files.push_back(name);
    }
    write_json(c.out(dir + "index.json"), p,
               {{"model", model_name},
                {"covariates", model.covariates},
                {"scale", model.scale},
                {"thresholds", c.thresholds},
                {"structure", std::string(to_string(c.structure))},
                {"fits", files},
                {"warnings", set.warnings},
                {"failures", set.failures}});

    const auto hr = hazard_ratio_table(set.fits);
    const auto table = hazard_ratio_report(hr, space.labels());
    write_report(c.out(dir + "hazard_ratios.txt"), p,
                 fmt::format("Cox model ({}): coefficients, hazard ratios, 95% Wald intervals\n\n",
                             model_name) +
                     table.to_text());
    write_report(c.out(dir + "hazard_ratios.csv"), p, delimited(table));
    json hr_doc = json::array();
    for (const auto& r : hr) {
      hr_doc.push_back({{"direction", static_cast<int>(r.direction)},
                        {"transition", r.transition.label()},
                        {"covariate", r.covariate},
                        {"coef", number_or_null(r.coef)},
                        {"hr", number_or_null(r.hr)},
                        {"ci_low", number_or_null(r.ci_low)},
                        {"ci_high", number_or_null(r.ci_high)},
                        {"std_err", number_or_null(r.std_err)},
                        {"p_value", number_or_null(r.p_value)}});
    }
    write_json(c.out(dir + "hazard_ratios.json"), p, {{"model", model_name}, {"rows", hr_doc}});

    Table trends({"direction", "transition", "covariate", "n_events", "rho", "statistic", "p_value"});
    std::vector<std::string> residual_header{"direction", "transition", "time"};
    residual_header.insert(residual_header.end(), model.covariates.begin(), model.covariates.end());
    Table residuals(residual_header);
    for (const auto& fit : set.fits) {
      std::vector<Episode> mine;
      for (const auto& e : eps) {
        if (e.stratum.direction == fit.direction) mine.push_back(e);
      }
      const auto data = make_cox_data(mine, fit.transition, model);
      const auto sch = schoenfeld_residuals(data, fit.coef);
      const auto d = std::to_string(static_cast<int>(fit.direction));
      for (const auto& t : sch.trends) {
        trends.add_row({d, fit.transition.label(), t.covariate, std::to_string(sch.times.size()),
                        format_fixed(t.rho, 4), format_fixed(t.statistic, 3), format_p_value(t.p_value)});
      }
      for (Eigen::Index i = 0; i < sch.times.size(); ++i) {
        std::vector<std::string> row{d, fit.transition.label(), format_real(sch.times(i))};
        for (Eigen::Index k = 0; k < sch.residuals.cols(); ++k) row.push_back(format_real(sch.residuals(i, k)));
        residuals.add_row(std::move(row));
      }
    }
    write_report(c.out(dir + "schoenfeld.txt"), p,
                 "Schoenfeld residual trend tests (correlation with the rank of event time)\n\n" +
                     trends.to_text());
    write_report(c.out(dir + "schoenfeld.csv"), p, delimited(trends));
    write_report(c.out(dir + "schoenfeld_residuals.csv"), p, delimited(residuals));
    if (c.cox_svg) {
      write_file(c.out(dir + "forest.svg"), forest_plot_svg(hr, "Hazard ratios, " + model_name + " model"));
    }
    for (const auto& w : set.warnings) note(run, "warning: " + w);
    for (const auto& f : set.failures) note(run, "fit failed: " + f);
    note(run, fmt::format("fit-cox: model {}, {} fits, {} failures", model_name, set.fits.size(),
                          set.failures.size()));
  }
}

// ---------------------------------------------------------------------------

json default_scenarios() {
  return json::parse(R"({
    "scenarios": {
      "best": {"boarded": "p15", "alighted": "p15", "trains_per_hour": 4, "adverse_weather": 0},
      "worst": {"boarded": "p85", "alighted": "p85", "trains_per_hour": 24, "adverse_weather": 1}
    },
    "deltas": [{"worst": "worst", "best": "best"}]
  })");
}

Scenario resolve_scenario(const std::string& name, const json& values,
                          const std::map<std::string, std::vector<double>>& observed) {
  if (!values.is_object()) throw Error(ErrorKind::Config, "scenario '" + name + "' must be an object");
  Scenario s{name, {}};
  for (const auto& [key, v] : values.items()) {
    if (std::find(known_covariates().begin(), known_covariates().end(), key) == known_covariates().end()) {
      throw Error(ErrorKind::Config, "unknown key 'scenarios." + name + "." + key + "'");
    }
    if (v.is_number()) {
      s.values[key] = v.get<double>();
    } else if (v.is_string() && v.get<std::string>().starts_with("p")) {
      const auto text = v.get<std::string>().substr(1);
      const auto q = parse_real(text);
      if (!q || !(*q >= 0.0 && *q <= 100.0)) {
        throw Error(ErrorKind::Config, "scenarios." + name + "." + key + ": invalid percentile '" +
                                           v.get<std::string>() + "'");
      }
      const auto it = observed.find(key);
      if (it == observed.end() || it->second.empty()) {
        throw Error(ErrorKind::Config, "scenarios." + name + "." + key +
                                           ": no observed values to take a percentile of");
      }
      s.values[key] = percentile(it->second, *q / 100.0);
    } else {
      throw Error(ErrorKind::Config,
                  "scenarios." + name + "." + key + ": expected a number or a percentile like \"p15\"");
    }
  }
  return s;
}

namespace {

struct Level {
  std::string label;
  std::map<std::string, double> indicators;
};

std::vector<Level> model_levels(const std::string& model) {
  if (model == "spatial") {
    std::vector<Level> out;
    for (int z = 1; z <= 4; ++z) {
      Level l{"zone" + std::to_string(z), {}};
      for (int k = 1; k <= 3; ++k) l.indicators["zone" + std::to_string(k)] = k == z ? 1.0 : 0.0;
      out.push_back(std::move(l));
    }
    return out;
  }
  return {{"morning_peak", {{"morning", 1.0}, {"evening", 0.0}}},
          {"off_peak", {{"morning", 0.0}, {"evening", 0.0}}},
          {"evening_peak", {{"morning", 0.0}, {"evening", 1.0}}}};
}

std::map<Transition, CoxFit> load_fits(const Config& c, const std::string& model, Direction d,
                                       bool* any) {
  const auto index_path = c.out("cox/" + model + "/index.json");
  require(index_path, "fit-cox");
  const auto index = read_json(index_path, ErrorKind::Input);
  std::map<Transition, CoxFit> out;
  for (const auto& f : index.at("fits")) {
    const auto path = c.out("cox/" + model + "/" + f.get<std::string>());
    require(path, "fit-cox");
    auto fit = cox_fit_from_json(read_json(path, ErrorKind::Input));
    if (fit.direction == d) out.emplace(fit.transition, std::move(fit));
  }
  *any = !index.at("fits").empty();
  return out;
}

}  // namespace

void cmd_predict(const Config& c, const RunOptions& run) {
  const auto space = c.space();
  const auto p = provenance(c, "predict", run);
  const auto rows = load_analysis(c);
  std::map<std::string, std::vector<double>> observed;
  for (const auto& r : rows) {
    if (std::isfinite(r.covariates.boarded)) observed["boarded"].push_back(r.covariates.boarded);
    if (std::isfinite(r.covariates.alighted)) observed["alighted"].push_back(r.covariates.alighted);
    if (std::isfinite(r.covariates.trains_per_hour)) {
      observed["trains_per_hour"].push_back(r.covariates.trains_per_hour);
    }
  }

  const auto scen_path = c.resolve(c.scenarios_path);
  json doc;
  if (fs::exists(scen_path)) {
    doc = read_json(scen_path, ErrorKind::Config);
  } else {
    note(run, "predict: " + scen_path.string() + " not found, using the built-in best/worst scenarios");
    doc = default_scenarios();
  }
  for (const auto& [k, v] : doc.items()) {
    if (k != "scenarios" && k != "deltas") throw Error(ErrorKind::Config, "unknown key '" + k + "' in scenario file");
  }
  std::vector<Scenario> scenarios;
  for (const auto& [name, values] : doc.at("scenarios").items()) {
    scenarios.push_back(resolve_scenario(name, values, observed));
  }
  std::vector<std::pair<std::string, std::string>> deltas;
  for (const auto& d : doc.value("deltas", json::array())) {
    const auto worst = d.at("worst").get<std::string>();
    const auto best = d.at("best").get<std::string>();
    for (const auto& n : {worst, best}) {
      if (!std::any_of(scenarios.begin(), scenarios.end(), [&](const Scenario& s) { return s.name == n; })) {
        throw Error(ErrorKind::Config, "deltas: unknown scenario '" + n + "'");
      }
    }
    deltas.emplace_back(worst, best);
  }
  const auto scenario_named = [&](const std::string& n) {
    return *std::find_if(scenarios.begin(), scenarios.end(), [&](const Scenario& s) { return s.name == n; });
  };

  json resolved = json::object();
  for (const auto& s : scenarios) resolved[s.name] = s.values;

  for (const auto& model : c.cox_models) {
    const auto dir = "predict/" + model + "/";
    std::string mtext, dtext;
    json mdoc = json::array(), ddoc = json::array(), edoc = json::array();
    std::vector<std::string> ehead{"direction", "level", "state"};
    for (const auto& s : scenarios) ehead.push_back(s.name);
    Table etable(ehead);
    Table sweeps({"direction", "covariate", "value", "horizon", "from", "to", "probability"});
    std::vector<std::string> warnings;

    for (auto d : kDirections) {
      bool any = false;
      const auto fits = load_fits(c, model, d, &any);
      if (fits.empty()) continue;
      const auto dlabel = std::to_string(static_cast<int>(d));
      for (const auto& level : model_levels(model)) {
        std::map<std::string, std::vector<double>> elos_by_scenario;
        for (const auto& base : scenarios) {
          Scenario s = base;
          for (const auto& [k, v] : level.indicators) s.values[k] = v;
          const auto hs = scenario_hazards(space, fits, s);
          for (const auto& w : hs.warnings) warnings.push_back(fmt::format("d{} {}: {}", dlabel, level.label, w));
          for (double h : c.predict_horizons) {
            json entry{{"direction", static_cast<int>(d)}, {"level", level.label},
                       {"scenario", s.name}, {"horizon", h}};
            try {
              const auto m = predict_matrix(space, fits, s, 0.0, h);
              mtext += fmt::format("direction {}, {}, scenario {}, horizon {} min (percent)\n", dlabel,
                                   level.label, s.name, format_real(h));
              mtext += matrix_report(100.0 * m.entries(), space.labels(), 1).to_text() + "\n";
              entry["probability"] = matrix_json(m.entries());
            } catch (const Error& e) {
              if (e.kind() != ErrorKind::Estimation) throw;
              entry["flagged"] = e.what();
              mtext += fmt::format("direction {}, {}, scenario {}, horizon {} min: flagged ({})\n\n", dlabel,
                                   level.label, s.name, format_real(h), e.what());
            }
            mdoc.push_back(std::move(entry));
          }
          try {
            elos_by_scenario[s.name] = scenario_elos(space, fits, s, c.tau_max, c.estimand);
          } catch (const Error& e) {
            if (e.kind() != ErrorKind::Estimation) throw;
            elos_by_scenario[s.name] = std::vector<double>(space.size(), kMissing);
            warnings.push_back(fmt::format("d{} {} scenario {}: {}", dlabel, level.label, s.name, e.what()));
          }
        }
        for (std::size_t r = 0; r < space.size(); ++r) {
          std::vector<std::string> row{dlabel, level.label, space.label(static_cast<State>(r))};
          json e{{"direction", static_cast<int>(d)}, {"level", level.label},
                 {"state", space.label(static_cast<State>(r))}};
          for (const auto& s : scenarios) {
            const double v = elos_by_scenario[s.name][r];
            row.push_back(format_fixed(v, 0));
            e[s.name] = number_or_null(v);
          }
          etable.add_row(std::move(row));
          edoc.push_back(std::move(e));
        }
        for (const auto& [wn, bn] : deltas) {
          Scenario worst = scenario_named(wn), best = scenario_named(bn);
          for (const auto& [k, v] : level.indicators) {
            worst.values[k] = v;
            best.values[k] = v;
          }
          for (double h : c.predict_horizons) {
            json entry{{"direction", static_cast<int>(d)}, {"level", level.label}, {"worst", wn},
                       {"best", bn}, {"horizon", h}};
            try {
              const auto delta = delta_matrix(space, fits, worst, best, h);
              dtext += fmt::format("direction {}, {}, {} - {}, horizon {} min (percentage points)\n",
                                   dlabel, level.label, wn, bn, format_real(h));
              dtext += matrix_report(delta, space.labels(), 0, true).to_text() + "\n";
              entry["delta_pp"] = matrix_json(delta);
            } catch (const Error& e) {
              if (e.kind() != ErrorKind::Estimation) throw;
              entry["flagged"] = e.what();
            }
            ddoc.push_back(std::move(entry));
          }
        }
      }

      // One-at-a-time sweeps around the reference level: numeric covariates
      // at their mean, indicators at 0.
      Scenario reference{"reference", {}};
      for (const auto& name : known_covariates()) reference.values[name] = 0.0;
      for (const auto& [name, values] : observed) {
        double sum = 0.0;
        for (double v : values) sum += v;
        reference.values[name] = sum / static_cast<double>(values.size());
      }
      const double h = c.predict_horizons.empty() ? 30.0 : c.predict_horizons.back();
      std::vector<std::pair<std::string, std::vector<double>>> grids;
      for (const auto& [name, values] : observed) {
        const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
        std::vector<double> g;
        for (int k = 0; k < c.sweep_points; ++k) {
          g.push_back(*lo + (*hi - *lo) * k / (c.sweep_points - 1));
        }
        grids.emplace_back(name, g);
      }
      grids.emplace_back("adverse_weather", std::vector<double>{0.0, 1.0});
      for (const auto& [name, grid] : grids) {
        for (double v : grid) {
          Scenario s = reference;
          s.values[name] = v;
          try {
            const auto m = predict_matrix(space, fits, s, 0.0, h);
            for (std::size_t r = 0; r < space.size(); ++r) {
              for (std::size_t k = 0; k < space.size(); ++k) {
                sweeps.add_row({dlabel, name, format_real(v), format_real(h),
                                space.label(static_cast<State>(r)), space.label(static_cast<State>(k)),
                                format_real(m(static_cast<State>(r), static_cast<State>(k)))});
              }
            }
          } catch (const Error& e) {
            if (e.kind() != ErrorKind::Estimation) throw;
            warnings.push_back(fmt::format("d{} sweep {}={}: {}", dlabel, name, format_real(v), e.what()));
          }
        }
      }
    }

    write_report(c.out(dir + "matrices.txt"), p, mtext);
    write_json(c.out(dir + "matrices.json"), p,
               {{"labels", space.labels()}, {"scenarios", resolved}, {"matrices", mdoc}});
    write_report(c.out(dir + "elos.txt"), p,
                 fmt::format("Expected length of stay by scenario (minutes, tau_max = {})\n\n",
                             format_real(c.tau_max)) +
                     etable.to_text());
    write_report(c.out(dir + "elos.csv"), p, delimited(etable));
    write_json(c.out(dir + "elos.json"), p, {{"tau_max", c.tau_max}, {"scenarios", resolved}, {"rows", edoc}});
    write_report(c.out(dir + "deltas.txt"), p, dtext);
    write_json(c.out(dir + "deltas.json"), p, {{"labels", space.labels()}, {"deltas", ddoc}});
    write_report(c.out(dir + "sweeps.csv"), p, delimited(sweeps));
    write_json(c.out(dir + "warnings.json"), p, {{"warnings", warnings}});
    note(run, fmt::format("predict: model {}, {} scenarios", model, scenarios.size()));
  }
}

// ---------------------------------------------------------------------------

void cmd_simulate(const Config& c, const RunOptions& run) {
  const auto spec_path = c.resolve(c.simulation_spec);
  if (!fs::exists(spec_path)) {
    throw Error(ErrorKind::Config, "simulation spec " + spec_path.string() + " not found");
  }
  const auto spec = IntensitySpec::from_json(read_json(spec_path, ErrorKind::Config));
  const auto sim = simulate(spec, c.line, c.workers);
  const auto p = provenance(c, "simulate", run);
  const auto dir = c.resolve(c.simulation_output);

  std::ostringstream stops, weather, frequency, latent;
  write_stops(stops, stop_records(sim, c.line), c.delimiter);
  write_weather(weather, sim.weather, c.delimiter);
  write_frequency(frequency, sim.frequency, c.delimiter);
  write_episodes(latent, latent_episodes(sim));
  write_report(dir / "stops.csv", p, stops.str());
  write_report(dir / "weather.csv", p, weather.str());
  write_report(dir / "frequency.csv", p, frequency.str());
  write_report(dir / "latent_episodes.csv", p, latent.str());
  write_json(dir / "ground_truth.json", p, ground_truth(spec, c.tau_max, c.truth_draws));
  note(run, fmt::format("simulate: {} missions written to {}", sim.missions.size(), dir.string()));
}

// ---------------------------------------------------------------------------

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"ingest", "episodes", "fit-np", "fit-cox", "predict", "simulate"};
  return names;
}

void run_command(const std::string& name, const Config& config, const RunOptions& run) {
  if (name == "ingest") return cmd_ingest(config, run);
  if (name == "episodes") return cmd_episodes(config, run);
  if (name == "fit-np") return cmd_fit_np(config, run);
  if (name == "fit-cox") return cmd_fit_cox(config, run);
  if (name == "predict") return cmd_predict(config, run);
  if (name == "simulate") return cmd_simulate(config, run);
  throw Error(ErrorKind::InvalidArgument, "unknown command '" + name + "'");
}

json error_document(const std::string& command, ErrorKind kind, const std::string& message) {
  return {{"error", {{"command", command}, {"kind", std::string(to_string(kind))}, {"message", message}}}};
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Config: return 2;
    case ErrorKind::Input: return 3;
    case ErrorKind::MissingArtifact: return 4;
    case ErrorKind::Estimation: return 5;
    case ErrorKind::InvalidArgument: return 6;
  }
  return 1;
}

}  // namespace msdelay::cli
