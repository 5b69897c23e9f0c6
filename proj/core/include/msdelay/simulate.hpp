#pragma once

#include "msdelay/episodes.hpp"
#include "msdelay/ingestion.hpp"
#include "msdelay/types.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace msdelay {

enum class BaselineFamily { Constant, Piecewise, Weibull };

/// Baseline intensity on the sojourn clock.
///   constant:  lambda(u) = rate
///   piecewise: rates[i] on [breaks[i], breaks[i+1]), breaks[0] = 0, last rate open-ended
///   weibull:   Lambda(u) = (u / scale)^shape
struct Baseline {
  BaselineFamily family = BaselineFamily::Constant;
  double rate = 0.0;
  std::vector<double> breaks;
  std::vector<double> rates;
  double shape = 1.0;
  double scale = 1.0;

  double cumulative(double u) const;
  /// Smallest u with cumulative(u) >= target; +inf when never reached.
  double inverse(double target) const;
  bool zero() const;
  void validate(const std::string& where) const;
};

/// Coefficient of one covariate switching to `beta_after` once the sojourn
/// clock passes `change_at`; used to generate non-proportional hazards.
struct TimeVaryingEffect {
  std::string covariate;
  double beta_after = 0.0;
  double change_at = 0.0;
};

struct TransitionSpec {
  Transition transition;
  Baseline baseline;
  std::map<std::string, double> beta;  // on scaled covariates
  std::optional<TimeVaryingEffect> time_varying;
};

struct CovariateLaws {
  double boarded_mean = 28.0;
  double boarded_sd = 39.0;
  double alighted_mean = 30.0;
  double alighted_sd = 39.0;
  double trains_per_hour_min = 4.0;
  double trains_per_hour_max = 46.0;
  double adverse_probability = 0.52;
};

struct IntensitySpec {
  std::vector<double> thresholds{5.0, 10.0};
  TransitionStructure structure = TransitionStructure::FullyConnected;
  std::vector<TransitionSpec> transitions;  // unlisted transitions have zero intensity
  std::map<std::string, double> covariate_scale{{"boarded", 100.0}, {"alighted", 100.0}};
  CovariateLaws laws;
  std::vector<double> initial;  // initial state distribution; empty means state 0
  double run_minutes = 130.0;
  int n_missions = 1000;
  int missions_per_day = 40;
  std::uint64_t seed = 1;
  Date start_date = Date{std::chrono::year{2024} / 1 / 8};

  StateSpace space() const;
  const TransitionSpec* find(Transition t) const;
  void validate() const;

  static IntensitySpec from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

/// Cumulative intensity of `t` after u minutes in the state, for scaled
/// covariates given by name.
double true_cumulative_hazard(const IntensitySpec& spec, Transition t, double u,
                              const std::map<std::string, double>& scaled_covariates);

/// Restricted mean sojourn in `state` up to tau_max under fixed covariates.
double true_sojourn_elos(const IntensitySpec& spec, State state, double tau_max,
                         const std::map<std::string, double>& scaled_covariates);

struct SimStop {
  std::string station;
  Zone zone = Zone::Z1;
  double time = 0.0;  // minutes since the mission's origin departure
  State state = 0;
  double delay = 0.0;
  Covariates covariates;
};

struct SimMission {
  std::string mission;
  Date day{};
  Direction direction = Direction::Forward;
  TimeSlot time_slot = TimeSlot::OffPeak;
  int departure_minutes = 0;
  std::vector<SimStop> stops;
  std::vector<Episode> latent;  // exactly observed continuous-time sojourns
};

struct Simulation {
  std::vector<SimMission> missions;
  std::vector<WeatherRecord> weather;
  std::vector<FrequencyRecord> frequency;
};

/// Seconds between consecutive stops: the run spread evenly over the line.
int stop_spacing_seconds(const IntensitySpec& spec, const LineConfig& line);

/// Simulates spec.n_missions missions on `line`. Mission m draws from its own
/// stream derived from (seed, m), so the output does not depend on `workers`.
Simulation simulate(const IntensitySpec& spec, const LineConfig& line = LineConfig::s5(),
                    unsigned workers = 1);

/// Panel trajectories as the ingestion pipeline would rebuild them.
std::vector<MissionTrajectory> panel_trajectories(const Simulation& sim);
std::vector<Episode> latent_episodes(const Simulation& sim);

/// Convenience wrapper returning panel trajectories only.
std::vector<MissionTrajectory> simulate_sojourns(const IntensitySpec& spec, int n_missions,
                                                 std::uint64_t seed);

std::vector<StopRecord> stop_records(const Simulation& sim, const LineConfig& line);
void write_stops(std::ostream& out, std::span<const StopRecord> stops, char delimiter = ',');
void write_weather(std::ostream& out, std::span<const WeatherRecord> weather,
                   char delimiter = ',');
void write_frequency(std::ostream& out, std::span<const FrequencyRecord> frequency,
                     char delimiter = ',');

/// Writes stops.csv, weather.csv and frequency.csv into `dir`.
void emit_stop_files(const Simulation& sim, const LineConfig& line,
                     const std::filesystem::path& dir);

/// True coefficients and per-state restricted mean sojourns (at covariates 0
/// and averaged over the covariate laws by Monte Carlo).
nlohmann::json ground_truth(const IntensitySpec& spec, double tau_max, int mc_draws = 20000);

}  // namespace msdelay
