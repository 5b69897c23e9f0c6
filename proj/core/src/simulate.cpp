#include "msdelay/simulate.hpp"

#include "msdelay/delimited.hpp"
#include "msdelay/parallel.hpp"
#include "msdelay/timeutil.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <set>

namespace msdelay {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

[[noreturn]] void config_error(const std::string& msg) { throw Error(ErrorKind::Config, msg); }

}  // namespace

// ---------------------------------------------------------------------------
// Baselines
// ---------------------------------------------------------------------------

double Baseline::cumulative(double u) const {
  if (u <= 0.0) return 0.0;
  switch (family) {
    case BaselineFamily::Constant:
      return rate * u;
    case BaselineFamily::Weibull:
      return std::pow(u / scale, shape);
    case BaselineFamily::Piecewise: {
      double total = 0.0;
      for (std::size_t i = 0; i < rates.size(); ++i) {
        const double lo = breaks[i];
        const double hi = i + 1 < breaks.size() ? breaks[i + 1] : kInf;
        if (u <= lo) break;
        total += rates[i] * (std::min(u, hi) - lo);
      }
      return total;
    }
  }
  return 0.0;
}

double Baseline::inverse(double target) const {
  if (target <= 0.0) return 0.0;
  switch (family) {
    case BaselineFamily::Constant:
      return rate > 0.0 ? target / rate : kInf;
    case BaselineFamily::Weibull:
      return scale * std::pow(target, 1.0 / shape);
    case BaselineFamily::Piecewise: {
      double total = 0.0;
      for (std::size_t i = 0; i < rates.size(); ++i) {
        const double lo = breaks[i];
        const double hi = i + 1 < breaks.size() ? breaks[i + 1] : kInf;
        const double mass = rates[i] * (hi - lo);
        if (rates[i] > 0.0 && total + mass >= target) return lo + (target - total) / rates[i];
        if (std::isfinite(mass)) total += mass;
      }
      return kInf;
    }
  }
  return kInf;
}

bool Baseline::zero() const {
  switch (family) {
    case BaselineFamily::Constant:
      return rate == 0.0;
    case BaselineFamily::Weibull:
      return false;
    case BaselineFamily::Piecewise:
      return std::all_of(rates.begin(), rates.end(), [](double r) { return r == 0.0; });
  }
  return true;
}

void Baseline::validate(const std::string& where) const {
  switch (family) {
    case BaselineFamily::Constant:
      if (!(rate >= 0.0) || !std::isfinite(rate)) config_error(where + ": rate must be >= 0");
      break;
    case BaselineFamily::Weibull:
      if (!(shape > 0.0) || !std::isfinite(shape)) config_error(where + ": Weibull shape must be > 0");
      if (!(scale > 0.0) || !std::isfinite(scale)) config_error(where + ": Weibull scale must be > 0");
      break;
    case BaselineFamily::Piecewise:
      if (rates.empty() || rates.size() != breaks.size()) {
        config_error(where + ": piecewise baseline needs one rate per break");
      }
      if (breaks.front() != 0.0) config_error(where + ": first break must be 0");
      for (std::size_t i = 0; i < rates.size(); ++i) {
        if (!(rates[i] >= 0.0) || !std::isfinite(rates[i])) config_error(where + ": rates must be >= 0");
        if (i > 0 && !(breaks[i] > breaks[i - 1])) {
          config_error(where + ": breaks must be strictly increasing");
        }
      }
      break;
  }
}

// ---------------------------------------------------------------------------
// Intensity spec
// ---------------------------------------------------------------------------

StateSpace IntensitySpec::space() const { return StateSpace::from_thresholds(thresholds, structure); }

const TransitionSpec* IntensitySpec::find(Transition t) const {
  for (const auto& ts : transitions) {
    if (ts.transition == t) return &ts;
  }
  return nullptr;
}

namespace {

bool known_sim_covariate(const std::string& name) {
  static const std::set<std::string> names{"boarded", "alighted", "trains_per_hour",
                                           "adverse_weather", "morning", "evening",
                                           "zone1", "zone2", "zone3"};
  return names.contains(name);
}

}  // namespace

void IntensitySpec::validate() const {
  const auto sp = space();
  std::set<Transition> seen;
  for (const auto& ts : transitions) {
    const auto where = "transition " + ts.transition.label();
    if (!sp.allows(ts.transition)) config_error(where + " is not allowed by the state space");
    if (!seen.insert(ts.transition).second) config_error(where + " listed twice");
    ts.baseline.validate(where);
    for (const auto& [name, b] : ts.beta) {
      if (!known_sim_covariate(name)) config_error(where + ": unknown covariate '" + name + "'");
      if (!std::isfinite(b)) config_error(where + ": coefficient of '" + name + "' is not finite");
    }
    if (ts.time_varying) {
      if (!known_sim_covariate(ts.time_varying->covariate)) {
        config_error(where + ": unknown time-varying covariate '" + ts.time_varying->covariate + "'");
      }
      if (!(ts.time_varying->change_at >= 0.0)) config_error(where + ": change_at must be >= 0");
    }
  }
  for (const auto& [name, d] : covariate_scale) {
    if (!known_sim_covariate(name)) config_error("covariate_scale: unknown covariate '" + name + "'");
    if (!(d > 0.0)) config_error("covariate_scale." + name + " must be positive");
  }
  if (!initial.empty()) {
    if (initial.size() != sp.size()) config_error("initial: one probability per state required");
    double total = 0.0;
    for (double p : initial) {
      if (!(p >= 0.0)) config_error("initial: probabilities must be >= 0");
      total += p;
    }
    if (std::abs(total - 1.0) > 1e-9) config_error("initial: probabilities must sum to 1");
  }
  if (!(run_minutes > 0.0) || !std::isfinite(run_minutes)) {
    for (std::size_t r = 0; r < sp.size(); ++r) {
      bool any = false;
      for (const auto& t : sp.transitions_from(static_cast<State>(r))) {
        const auto* ts = find(t);
        any = any || (ts && !ts->baseline.zero());
      }
      if (!any) {
        config_error("state " + std::to_string(r) +
                     " has zero intensities and there is no finite censoring horizon "
                     "(infinite sojourn)");
      }
    }
    config_error("run_minutes must be finite and positive");
  }
  if (n_missions < 1) config_error("n_missions must be >= 1");
  if (missions_per_day < 1) config_error("missions_per_day must be >= 1");
  const auto& l = laws;
  if (!(l.boarded_mean > 0.0) || !(l.boarded_sd * l.boarded_sd > l.boarded_mean) ||
      !(l.alighted_mean > 0.0) || !(l.alighted_sd * l.alighted_sd > l.alighted_mean)) {
    config_error("covariate laws: counts need mean > 0 and variance > mean");
  }
  if (!(l.trains_per_hour_min >= 0.0) || !(l.trains_per_hour_max >= l.trains_per_hour_min)) {
    config_error("covariate laws: invalid trains_per_hour range");
  }
  if (!(l.adverse_probability >= 0.0 && l.adverse_probability <= 1.0)) {
    config_error("covariate laws: adverse_probability must lie in [0, 1]");
  }
}

namespace {

using json = nlohmann::json;

void check_keys(const json& j, const std::string& path, std::initializer_list<const char*> keys) {
  if (!j.is_object()) config_error(path + ": expected an object");
  for (const auto& [k, v] : j.items()) {
    if (std::find_if(keys.begin(), keys.end(), [&](const char* x) { return k == x; }) == keys.end()) {
      config_error("unknown key '" + (path.empty() ? k : path + "." + k) + "'");
    }
  }
}

template <typename T>
void read_opt(const json& j, const char* key, T& out, const std::string& path) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    config_error((path.empty() ? std::string(key) : path + "." + key) + ": wrong type");
  }
}

Baseline baseline_from_json(const json& j, const std::string& path) {
  check_keys(j, path, {"family", "rate", "breaks", "rates", "shape", "scale"});
  Baseline b;
  std::string family = "constant";
  read_opt(j, "family", family, path);
  if (family == "constant") {
    b.family = BaselineFamily::Constant;
  } else if (family == "piecewise") {
    b.family = BaselineFamily::Piecewise;
  } else if (family == "weibull") {
    b.family = BaselineFamily::Weibull;
  } else {
    config_error(path + ".family: unknown baseline family '" + family + "'");
  }
  read_opt(j, "rate", b.rate, path);
  read_opt(j, "breaks", b.breaks, path);
  read_opt(j, "rates", b.rates, path);
  read_opt(j, "shape", b.shape, path);
  read_opt(j, "scale", b.scale, path);
  return b;
}

json baseline_to_json(const Baseline& b) {
  switch (b.family) {
    case BaselineFamily::Constant:
      return {{"family", "constant"}, {"rate", b.rate}};
    case BaselineFamily::Piecewise:
      return {{"family", "piecewise"}, {"breaks", b.breaks}, {"rates", b.rates}};
    case BaselineFamily::Weibull:
      return {{"family", "weibull"}, {"shape", b.shape}, {"scale", b.scale}};
  }
  return {};
}

}  // namespace

IntensitySpec IntensitySpec::from_json(const json& j) {
  check_keys(j, "", {"thresholds", "structure", "transitions", "covariate_scale", "covariates",
                     "initial", "run_minutes", "n_missions", "missions_per_day", "seed",
                     "start_date"});
  IntensitySpec spec;
  read_opt(j, "thresholds", spec.thresholds, "");
  if (j.contains("structure")) {
    spec.structure = transition_structure_from_string(j.at("structure").get<std::string>());
  }
  read_opt(j, "covariate_scale", spec.covariate_scale, "");
  read_opt(j, "initial", spec.initial, "");
  read_opt(j, "run_minutes", spec.run_minutes, "");
  read_opt(j, "n_missions", spec.n_missions, "");
  read_opt(j, "missions_per_day", spec.missions_per_day, "");
  read_opt(j, "seed", spec.seed, "");
  if (j.contains("start_date")) {
    const auto d = parse_date(j.at("start_date").get<std::string>());
    if (!d) config_error("start_date: expected YYYY-MM-DD");
    spec.start_date = *d;
  }
  if (j.contains("covariates")) {
    const auto& c = j.at("covariates");
    check_keys(c, "covariates",
               {"boarded_mean", "boarded_sd", "alighted_mean", "alighted_sd",
                "trains_per_hour_min", "trains_per_hour_max", "adverse_probability"});
    auto& l = spec.laws;
    read_opt(c, "boarded_mean", l.boarded_mean, "covariates");
    read_opt(c, "boarded_sd", l.boarded_sd, "covariates");
    read_opt(c, "alighted_mean", l.alighted_mean, "covariates");
    read_opt(c, "alighted_sd", l.alighted_sd, "covariates");
    read_opt(c, "trains_per_hour_min", l.trains_per_hour_min, "covariates");
    read_opt(c, "trains_per_hour_max", l.trains_per_hour_max, "covariates");
    read_opt(c, "adverse_probability", l.adverse_probability, "covariates");
  }
  if (j.contains("transitions")) {
    const auto& arr = j.at("transitions");
    if (!arr.is_array()) config_error("transitions: expected an array");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const auto path = fmt::format("transitions[{}]", i);
      const auto& t = arr[i];
      check_keys(t, path, {"from", "to", "baseline", "beta", "time_varying"});
      TransitionSpec ts;
      if (!t.contains("from") || !t.contains("to")) config_error(path + ": needs 'from' and 'to'");
      read_opt(t, "from", ts.transition.from, path);
      read_opt(t, "to", ts.transition.to, path);
      if (t.contains("baseline")) ts.baseline = baseline_from_json(t.at("baseline"), path + ".baseline");
      read_opt(t, "beta", ts.beta, path);
      if (t.contains("time_varying")) {
        const auto& tv = t.at("time_varying");
        check_keys(tv, path + ".time_varying", {"covariate", "beta_after", "change_at"});
        TimeVaryingEffect e;
        read_opt(tv, "covariate", e.covariate, path + ".time_varying");
        read_opt(tv, "beta_after", e.beta_after, path + ".time_varying");
        read_opt(tv, "change_at", e.change_at, path + ".time_varying");
        ts.time_varying = e;
      }
      spec.transitions.push_back(std::move(ts));
    }
  }
  spec.validate();
  return spec;
}

json IntensitySpec::to_json() const {
  json tr = json::array();
  for (const auto& ts : transitions) {
    json t{{"from", ts.transition.from},
           {"to", ts.transition.to},
           {"baseline", baseline_to_json(ts.baseline)},
           {"beta", ts.beta}};
    if (ts.time_varying) {
      t["time_varying"] = {{"covariate", ts.time_varying->covariate},
                           {"beta_after", ts.time_varying->beta_after},
                           {"change_at", ts.time_varying->change_at}};
    }
    tr.push_back(std::move(t));
  }
  return {{"thresholds", thresholds},
          {"structure", std::string(msdelay::to_string(structure))},
          {"transitions", tr},
          {"covariate_scale", covariate_scale},
          {"covariates",
           {{"boarded_mean", laws.boarded_mean},
            {"boarded_sd", laws.boarded_sd},
            {"alighted_mean", laws.alighted_mean},
            {"alighted_sd", laws.alighted_sd},
            {"trains_per_hour_min", laws.trains_per_hour_min},
            {"trains_per_hour_max", laws.trains_per_hour_max},
            {"adverse_probability", laws.adverse_probability}}},
          {"initial", initial},
          {"run_minutes", run_minutes},
          {"n_missions", n_missions},
          {"missions_per_day", missions_per_day},
          {"seed", seed},
          {"start_date", format_date(start_date)}};
}

// ---------------------------------------------------------------------------
// True intensities
// ---------------------------------------------------------------------------

namespace {

struct Predictors {
  double before = 0.0;  // linear predictor before the change point
  double after = 0.0;
  double change_at = kInf;
};

double lookup(const std::map<std::string, double>& z, const std::string& name) {
  const auto it = z.find(name);
  return it == z.end() ? 0.0 : it->second;
}

Predictors predictors(const TransitionSpec& ts, const std::map<std::string, double>& z) {
  Predictors p;
  for (const auto& [name, b] : ts.beta) p.before += b * lookup(z, name);
  p.after = p.before;
  if (ts.time_varying) {
    const auto& tv = *ts.time_varying;
    const double x = lookup(z, tv.covariate);
    p.after = p.before - lookup(ts.beta, tv.covariate) * x + tv.beta_after * x;
    p.change_at = tv.change_at;
  }
  return p;
}

double cumulative(const TransitionSpec& ts, const Predictors& p, double u) {
  const double c = std::min(u, p.change_at);
  double h = std::exp(p.before) * ts.baseline.cumulative(c);
  if (u > p.change_at) {
    h += std::exp(p.after) * (ts.baseline.cumulative(u) - ts.baseline.cumulative(p.change_at));
  }
  return h;
}

/// Sojourn time at which the cumulative intensity reaches `target`.
double invert(const TransitionSpec& ts, const Predictors& p, double target) {
  const double a = std::exp(p.before);
  const double head = std::isfinite(p.change_at) ? a * ts.baseline.cumulative(p.change_at) : kInf;
  if (target <= head) return ts.baseline.inverse(target / a);
  const double base_c = ts.baseline.cumulative(p.change_at);
  return std::max(p.change_at, ts.baseline.inverse(base_c + (target - head) / std::exp(p.after)));
}

}  // namespace

double true_cumulative_hazard(const IntensitySpec& spec, Transition t, double u,
                              const std::map<std::string, double>& z) {
  const auto* ts = spec.find(t);
  if (!ts) return 0.0;
  return cumulative(*ts, predictors(*ts, z), u);
}

double true_sojourn_elos(const IntensitySpec& spec, State state, double tau_max,
                         const std::map<std::string, double>& z) {
  const auto sp = spec.space();
  std::vector<std::pair<const TransitionSpec*, Predictors>> out;
  for (const auto& t : sp.transitions_from(state)) {
    if (const auto* ts = spec.find(t)) out.emplace_back(ts, predictors(*ts, z));
  }
  const auto survival = [&](double u) {
    double h = 0.0;
    for (const auto& [ts, p] : out) h += cumulative(*ts, p, u);
    return std::exp(-h);
  };
  // Composite Simpson on a fine grid; the integrand is smooth between the
  // change points of piecewise baselines, which are too few to matter here.
  const int n = 20000;
  const double h = tau_max / n;
  double sum = survival(0.0) + survival(tau_max);
  for (int i = 1; i < n; ++i) sum += (i % 2 ? 4.0 : 2.0) * survival(i * h);
  return sum * h / 3.0;
}

// ---------------------------------------------------------------------------
// Simulation
// ---------------------------------------------------------------------------

int stop_spacing_seconds(const IntensitySpec& spec, const LineConfig& line) {
  const auto n = line.stations().size();
  if (n < 2) throw Error(ErrorKind::InvalidArgument, "the line needs at least two stations");
  return static_cast<int>(std::lround(spec.run_minutes * 60.0 / static_cast<double>(n - 1)));
}

namespace {

Date nth_weekday(Date start, int k) {
  Date d = start;
  while (weekday_index(d) >= 5) d += std::chrono::days{1};
  for (int i = 0; i < k; ++i) {
    d += std::chrono::days{1};
    while (weekday_index(d) >= 5) d += std::chrono::days{1};
  }
  return d;
}

double draw_count(std::mt19937_64& rng, double mean, double sd) {
  const double k = mean * mean / (sd * sd - mean);
  std::gamma_distribution<double> gamma(k, mean / k);
  const double lambda = gamma(rng);
  if (!(lambda > 0.0)) return 0.0;
  std::poisson_distribution<long long> pois(lambda);
  return static_cast<double>(pois(rng));
}

double draw_delay(std::mt19937_64& rng, const std::vector<double>& th, State s) {
  const auto n = static_cast<State>(th.size());
  long lo = 0;
  long hi = 0;
  if (s == 0) {
    lo = -20;
    hi = static_cast<long>(std::floor(th[0] * 10.0 + 1e-9));
  } else {
    lo = static_cast<long>(std::floor(th[static_cast<std::size_t>(s - 1)] * 10.0 + 1e-9)) + 1;
    hi = s < n ? static_cast<long>(std::floor(th[static_cast<std::size_t>(s)] * 10.0 + 1e-9))
               : lo + 299;
  }
  if (hi < lo) hi = lo;
  std::uniform_int_distribution<long> pick(lo, hi);
  return static_cast<double>(pick(rng)) / 10.0;
}

double scaled_covariate(const IntensitySpec& spec, const std::string& name, const SimStop& stop,
                        TimeSlot slot) {
  double raw = 0.0;
  if (name == "boarded") raw = stop.covariates.boarded;
  else if (name == "alighted") raw = stop.covariates.alighted;
  else if (name == "trains_per_hour") raw = stop.covariates.trains_per_hour;
  else if (name == "adverse_weather") raw = stop.covariates.adverse_weather;
  else if (name == "morning") raw = slot == TimeSlot::MorningPeak ? 1.0 : 0.0;
  else if (name == "evening") raw = slot == TimeSlot::EveningPeak ? 1.0 : 0.0;
  else if (name == "zone1") raw = stop.zone == Zone::Z1 ? 1.0 : 0.0;
  else if (name == "zone2") raw = stop.zone == Zone::Z2 ? 1.0 : 0.0;
  else if (name == "zone3") raw = stop.zone == Zone::Z3 ? 1.0 : 0.0;
  const auto it = spec.covariate_scale.find(name);
  return raw / (it == spec.covariate_scale.end() ? 1.0 : it->second);
}

std::map<std::string, double> scaled_covariates(const IntensitySpec& spec, const SimStop& stop,
                                                TimeSlot slot) {
  std::map<std::string, double> z;
  for (const auto& ts : spec.transitions) {
    for (const auto& [name, b] : ts.beta) z[name] = scaled_covariate(spec, name, stop, slot);
    if (ts.time_varying) {
      z[ts.time_varying->covariate] = scaled_covariate(spec, ts.time_varying->covariate, stop, slot);
    }
  }
  return z;
}

/// Per-station frequency in the configured range, fixed for the whole run.
std::vector<double> station_frequencies(const IntensitySpec& spec, const LineConfig& line) {
  std::mt19937_64 rng(mix_seed(spec.seed, 0xF4E0'0000'0000ULL));
  std::uniform_int_distribution<int> pick(static_cast<int>(std::ceil(spec.laws.trains_per_hour_min)),
                                          static_cast<int>(std::floor(spec.laws.trains_per_hour_max)));
  std::vector<double> out;
  for (std::size_t i = 0; i < line.stations().size(); ++i) out.push_back(pick(rng));
  return out;
}

}  // namespace

Simulation simulate(const IntensitySpec& spec, const LineConfig& line, unsigned workers) {
  spec.validate();
  const auto space = spec.space();
  const auto& stations = line.stations();
  const auto n_stops = stations.size();
  const int spacing = stop_spacing_seconds(spec, line);
  const double horizon = static_cast<double>(spacing) * static_cast<double>(n_stops - 1) / 60.0;
  const int n_days = (spec.n_missions + spec.missions_per_day - 1) / spec.missions_per_day;

  Simulation sim;
  const auto tph = station_frequencies(spec, line);
  for (std::size_t i = 0; i < n_stops; ++i) {
    for (int h = 0; h < 24; ++h) sim.frequency.push_back({stations[i].id, h, tph[i]});
  }

  std::vector<std::string> areas;
  for (const auto& s : stations) {
    if (std::find(areas.begin(), areas.end(), s.weather_location) == areas.end()) {
      areas.push_back(s.weather_location);
    }
  }
  std::map<std::pair<std::string, Date>, bool> adverse;
  {
    std::mt19937_64 rng(mix_seed(spec.seed, 0xA11E'0000'0000ULL));
    std::bernoulli_distribution bad(spec.laws.adverse_probability);
    std::uniform_int_distribution<int> kind(1, 3);
    std::normal_distribution<double> noise(0.0, 1.0);
    for (int d = 0; d < n_days; ++d) {
      const Date day = nth_weekday(spec.start_date, d);
      for (const auto& area : areas) {
        WeatherRecord w;
        w.location = area;
        w.date = day;
        const bool is_bad = bad(rng);
        w.event = is_bad ? static_cast<WeatherEvent>(kind(rng)) : WeatherEvent::None;
        w.mean_temperature = std::round((12.0 + 6.0 * noise(rng)) * 10.0) / 10.0;
        w.visibility = w.event == WeatherEvent::Fog ? 2.0 : 10.0;
        w.mean_wind = std::round(std::abs(8.0 + 4.0 * noise(rng)) * 10.0) / 10.0;
        adverse[{area, day}] = is_bad;
        sim.weather.push_back(std::move(w));
      }
    }
  }

  std::vector<double> initial = spec.initial;
  if (initial.empty()) {
    initial.assign(space.size(), 0.0);
    initial[0] = 1.0;
  }

  sim.missions.resize(static_cast<std::size_t>(spec.n_missions));
  parallel_for(sim.missions.size(), workers, [&](std::size_t m) {
    std::mt19937_64 rng(mix_seed(spec.seed, m));
    auto& mission = sim.missions[m];
    const int j = static_cast<int>(m) % spec.missions_per_day;
    mission.day = nth_weekday(spec.start_date, static_cast<int>(m) / spec.missions_per_day);
    mission.mission = std::to_string(24000 + j);
    mission.direction = j % 2 == 0 ? Direction::Forward : Direction::Reverse;
    mission.departure_minutes = 360 + j * 840 / spec.missions_per_day;
    mission.time_slot = *time_slot_for(mission.departure_minutes);

    mission.stops.resize(n_stops);
    for (std::size_t k = 0; k < n_stops; ++k) {
      const auto pos = mission.direction == Direction::Forward ? k : n_stops - 1 - k;
      const auto& st = stations[pos];
      auto& stop = mission.stops[k];
      stop.station = st.id;
      stop.zone = st.zone;
      stop.time = static_cast<double>(spacing) * static_cast<double>(k) / 60.0;
      stop.covariates.boarded = draw_count(rng, spec.laws.boarded_mean, spec.laws.boarded_sd);
      stop.covariates.alighted = draw_count(rng, spec.laws.alighted_mean, spec.laws.alighted_sd);
      stop.covariates.trains_per_hour = tph[pos];
      stop.covariates.adverse_weather = adverse.at({st.weather_location, mission.day}) ? 1.0 : 0.0;
    }

    // Continuous-time clock-reset path, censored at the last arrival.
    std::discrete_distribution<int> first(initial.begin(), initial.end());
    std::exponential_distribution<double> unit_exp(1.0);
    State state = first(rng);
    double entry = 0.0;
    std::vector<std::pair<double, State>> jumps{{0.0, state}};
    while (true) {
      std::size_t k = 0;
      while (k + 1 < n_stops && mission.stops[k].time < entry) ++k;
      const auto& at = mission.stops[k];
      const auto z = scaled_covariates(spec, at, mission.time_slot);
      double best = kInf;
      std::optional<State> next;
      for (const auto& t : space.transitions_from(state)) {
        const double e = unit_exp(rng);  // drawn for every candidate to keep streams aligned
        const auto* ts = spec.find(t);
        if (!ts) continue;
        const double u = invert(*ts, predictors(*ts, z), e);
        if (u < best) {
          best = u;
          next = t.to;
        }
      }
      Episode ep;
      ep.unit = {at.station, mission.mission, mission.day};
      ep.stratum.direction = mission.direction;
      ep.stratum.time_slot = mission.time_slot;
      ep.from = state;
      ep.covariates = at.covariates;
      if (!next || entry + best >= horizon) {
        ep.duration = horizon - entry;
        if (ep.duration > 0.0) mission.latent.push_back(std::move(ep));
        break;
      }
      ep.to = next;
      ep.duration = best;
      mission.latent.push_back(std::move(ep));
      entry += best;
      state = *next;
      jumps.emplace_back(entry, state);
    }

    std::size_t jj = 0;
    for (auto& stop : mission.stops) {
      while (jj + 1 < jumps.size() && jumps[jj + 1].first <= stop.time) ++jj;
      stop.state = jumps[jj].second;
      stop.delay = draw_delay(rng, spec.thresholds, stop.state);
    }
  });
  return sim;
}

std::vector<MissionTrajectory> panel_trajectories(const Simulation& sim) {
  std::vector<MissionTrajectory> out;
  out.reserve(sim.missions.size());
  for (const auto& m : sim.missions) {
    MissionTrajectory t;
    t.mission = m.mission;
    t.day = m.day;
    t.direction = m.direction;
    t.time_slot = m.time_slot;
    for (std::size_t k = 0; k < m.stops.size(); ++k) {
      const auto& s = m.stops[k];
      t.stops.push_back({s.station, s.zone, static_cast<int>(k) + 1,
                         static_cast<double>(m.departure_minutes) + s.time, s.delay,
                         s.covariates});
    }
    out.push_back(std::move(t));
  }
  return out;
}

std::vector<Episode> latent_episodes(const Simulation& sim) {
  std::vector<Episode> out;
  for (const auto& m : sim.missions) out.insert(out.end(), m.latent.begin(), m.latent.end());
  return out;
}

std::vector<MissionTrajectory> simulate_sojourns(const IntensitySpec& spec, int n_missions,
                                                 std::uint64_t seed) {
  auto s = spec;
  s.n_missions = n_missions;
  s.seed = seed;
  return panel_trajectories(simulate(s));
}

// ---------------------------------------------------------------------------
// Files
// ---------------------------------------------------------------------------

std::vector<StopRecord> stop_records(const Simulation& sim, const LineConfig& line) {
  const auto& stations = line.stations();
  std::vector<StopRecord> out;
  for (const auto& m : sim.missions) {
    const bool fwd = m.direction == Direction::Forward;
    const Timestamp dep = Timestamp{m.day} + std::chrono::minutes{m.departure_minutes};
    for (std::size_t k = 0; k < m.stops.size(); ++k) {
      const auto& s = m.stops[k];
      StopRecord r;
      r.current_station = s.station;
      r.date = m.day;
      r.day_of_week = weekday_index(m.day);
      r.mission_code = m.mission;
      r.main_route_code = "S5";
      r.line_code = "S5";
      r.departure_station = fwd ? stations.front().id : stations.back().id;
      r.arrival_station = fwd ? stations.back().id : stations.front().id;
      r.scheduled_departure = dep;
      const auto actual = dep + std::chrono::seconds{std::lround(s.time * 60.0)};
      r.scheduled_arrival = actual - std::chrono::seconds{std::lround(s.delay * 60.0)};
      r.entry_delay = s.delay;
      r.exit_delay = s.delay;
      r.boarded = s.covariates.boarded;
      r.alighted = s.covariates.alighted;
      r.progressive_index = static_cast<int>(k) + 1;
      out.push_back(std::move(r));
    }
  }
  return out;
}

void write_stops(std::ostream& out, std::span<const StopRecord> stops, char delimiter) {
  write_record(out, stop_columns(), delimiter);
  for (const auto& r : stops) {
    const auto exit = r.scheduled_arrival + std::chrono::minutes{1};
    write_record(out,
                 {r.current_station, format_date(r.date), std::to_string(r.day_of_week),
                  r.mission_code, r.main_route_code, r.line_code, r.departure_station,
                  r.arrival_station, format_timestamp(r.scheduled_departure),
                  format_timestamp(r.scheduled_arrival), std::to_string(r.progressive_index),
                  format_timestamp(r.scheduled_arrival), format_real(r.entry_delay),
                  format_timestamp(exit), format_real(r.exit_delay), format_real(r.boarded),
                  format_real(r.alighted), r.cancelled ? "1" : "0", r.service_type},
                 delimiter);
  }
}

void write_weather(std::ostream& out, std::span<const WeatherRecord> weather, char delimiter) {
  write_record(out, weather_columns(), delimiter);
  for (const auto& w : weather) {
    write_record(out,
                 {w.location, format_date(w.date), format_real(w.mean_temperature),
                  format_real(w.visibility), format_real(w.mean_wind),
                  std::string(to_string(w.event))},
                 delimiter);
  }
}

void write_frequency(std::ostream& out, std::span<const FrequencyRecord> frequency,
                     char delimiter) {
  write_record(out, frequency_columns(), delimiter);
  for (const auto& f : frequency) {
    write_record(out, {f.station, std::to_string(f.hour_window), format_real(f.trains_per_hour)},
                 delimiter);
  }
}

void emit_stop_files(const Simulation& sim, const LineConfig& line,
                     const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto open = [&](const char* name) {
    std::ofstream f(dir / name, std::ios::binary);
    if (!f) throw Error(ErrorKind::Input, "cannot write " + (dir / name).string());
    return f;
  };
  {
    auto f = open("stops.csv");
    write_stops(f, stop_records(sim, line));
  }
  {
    auto f = open("weather.csv");
    write_weather(f, sim.weather);
  }
  {
    auto f = open("frequency.csv");
    write_frequency(f, sim.frequency);
  }
}

// ---------------------------------------------------------------------------
// Ground truth
// ---------------------------------------------------------------------------

nlohmann::json ground_truth(const IntensitySpec& spec, double tau_max, int mc_draws) {
  spec.validate();
  const auto space = spec.space();
  json beta = json::object();
  for (const auto& ts : spec.transitions) {
    json b = ts.beta;
    if (ts.time_varying) {
      b["time_varying"] = {{"covariate", ts.time_varying->covariate},
                           {"beta_after", ts.time_varying->beta_after},
                           {"change_at", ts.time_varying->change_at}};
    }
    beta[ts.transition.label()] = b;
  }

  // Covariate draws from the simulation laws; frequency uses the station
  // range uniformly and the time slot follows the mission timetable.
  std::mt19937_64 rng(mix_seed(spec.seed, 0x7247'0000'0000ULL));
  std::bernoulli_distribution bad(spec.laws.adverse_probability);
  std::uniform_int_distribution<int> tph(static_cast<int>(std::ceil(spec.laws.trains_per_hour_min)),
                                         static_cast<int>(std::floor(spec.laws.trains_per_hour_max)));
  std::uniform_int_distribution<int> slot_pick(0, spec.missions_per_day - 1);
  std::uniform_int_distribution<int> zone_pick(1, 4);
  std::vector<double> marginal(space.size(), 0.0);
  std::vector<double> at_zero(space.size(), 0.0);
  for (std::size_t r = 0; r < space.size(); ++r) {
    at_zero[r] = true_sojourn_elos(spec, static_cast<State>(r), tau_max, {});
  }
  const int draws = std::max(1, mc_draws / 100);
  for (int i = 0; i < draws; ++i) {
    SimStop stop;
    stop.covariates.boarded = draw_count(rng, spec.laws.boarded_mean, spec.laws.boarded_sd);
    stop.covariates.alighted = draw_count(rng, spec.laws.alighted_mean, spec.laws.alighted_sd);
    stop.covariates.trains_per_hour = tph(rng);
    stop.covariates.adverse_weather = bad(rng) ? 1.0 : 0.0;
    stop.zone = zone_from_int(zone_pick(rng));
    const int j = slot_pick(rng);
    const auto slot = *time_slot_for(360 + j * 840 / spec.missions_per_day);
    const auto z = scaled_covariates(spec, stop, slot);
    for (std::size_t r = 0; r < space.size(); ++r) {
      marginal[r] += true_sojourn_elos(spec, static_cast<State>(r), tau_max, z) / draws;
    }
  }
  json states = json::array();
  for (std::size_t r = 0; r < space.size(); ++r) {
    states.push_back({{"state", space.label(static_cast<State>(r))},
                      {"elos_at_zero_covariates", at_zero[r]},
                      {"elos_marginal_mc", marginal[r]}});
  }
  return {{"tau_max", tau_max},
          {"beta", beta},
          {"covariate_scale", spec.covariate_scale},
          {"elos", states},
          {"mc_draws", draws},
          {"spec", spec.to_json()}};
}

}  // namespace msdelay
