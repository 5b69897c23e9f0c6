#pragma once

#include <Eigen/Core>

#include <chrono>
#include <compare>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace msdelay {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

enum class ErrorKind {
  InvalidArgument,
  Input,
  Config,
  Estimation,
  MissingArtifact,
};

std::string_view to_string(ErrorKind kind);

/// Every failure raised by the library carries a machine-readable kind so the
/// command-line front-end can emit a structured error document.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

using Date = std::chrono::sys_days;
using Timestamp = std::chrono::sys_seconds;

// ---------------------------------------------------------------------------
// State space
// ---------------------------------------------------------------------------

using State = int;

struct Transition {
  State from = 0;
  State to = 0;

  auto operator<=>(const Transition&) const = default;
  std::string label() const;  // "0->1"
};

enum class TransitionStructure { FullyConnected, AdjacentOnly };

std::string_view to_string(TransitionStructure s);
TransitionStructure transition_structure_from_string(std::string_view s);

/// Ordered delay categories delimited by upper thresholds (minutes). A delay
/// equal to a threshold belongs to the lower state; early arrivals are On Time.
class StateSpace {
 public:
  StateSpace(std::vector<double> thresholds, std::vector<std::string> labels,
             std::set<Transition> allowed);

  static StateSpace three_state(
      TransitionStructure structure = TransitionStructure::FullyConnected);
  static StateSpace four_state(
      TransitionStructure structure = TransitionStructure::FullyConnected);
  static StateSpace from_thresholds(std::vector<double> thresholds,
                                    TransitionStructure structure);

  std::size_t size() const noexcept { return labels_.size(); }
  State classify(double delay_minutes) const;
  bool allows(Transition t) const { return allowed_.contains(t); }
  std::vector<Transition> transitions_from(State r) const;

  const std::vector<double>& thresholds() const noexcept { return thresholds_; }
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  const std::string& label(State s) const { return labels_.at(static_cast<std::size_t>(s)); }
  const std::set<Transition>& allowed_transitions() const noexcept { return allowed_; }

  /// "three_state", "four_state" or "custom_<n>".
  std::string name() const;

 private:
  std::vector<double> thresholds_;
  std::vector<std::string> labels_;
  std::set<Transition> allowed_;
};

// ---------------------------------------------------------------------------
// Strata and observational units
// ---------------------------------------------------------------------------

/// 0: Varese -> Treviglio, 1: Treviglio -> Varese.
enum class Direction : int { Forward = 0, Reverse = 1 };
enum class TimeSlot : int { MorningPeak = 0, OffPeak = 1, EveningPeak = 2 };
enum class Zone : int { Z1 = 1, Z2 = 2, Z3 = 3, Z4 = 4 };

std::string_view to_string(TimeSlot slot);
std::string to_string(Zone zone);
TimeSlot time_slot_from_string(std::string_view s);
Zone zone_from_string(std::string_view s);
Zone zone_from_int(int z);

/// Time slot of a scheduled origin departure. Band starts are inclusive, so
/// 10:00 is Off-Peak and 16:00 is Evening-Peak. Outside 06:00-20:00 -> nullopt.
std::optional<TimeSlot> time_slot_for(int minutes_of_day);

struct Stratum {
  Direction direction = Direction::Forward;
  std::optional<TimeSlot> time_slot;
  std::optional<Zone> zone;

  auto operator<=>(const Stratum&) const = default;
  std::string label() const;  // e.g. "d0_morning_peak", "d1_zone3", "d0"
};

struct UnitKey {
  std::string station;
  std::string mission;
  Date day{};

  auto operator<=>(const UnitKey&) const = default;
};

// ---------------------------------------------------------------------------
// Episodes
// ---------------------------------------------------------------------------

/// Raw covariates observed at a stop. Missing values are NaN.
struct Covariates {
  double boarded = kMissing;
  double alighted = kMissing;
  double trains_per_hour = kMissing;
  double adverse_weather = kMissing;

  bool complete() const;
  bool operator==(const Covariates&) const = default;
};

inline const std::vector<std::string>& raw_covariate_names() {
  static const std::vector<std::string> names{"boarded", "alighted", "trains_per_hour",
                                              "adverse_weather"};
  return names;
}

/// One clock-reset sojourn. `to` is empty when the sojourn is right-censored.
struct Episode {
  UnitKey unit;
  Stratum stratum;
  State from = 0;
  std::optional<State> to;
  double duration = 0.0;
  Covariates covariates;

  bool censored() const noexcept { return !to.has_value(); }
};

// ---------------------------------------------------------------------------
// Hazards and probabilities
// ---------------------------------------------------------------------------

struct HazardStep {
  double time = 0.0;
  double increment = 0.0;
  int events = 0;
  double at_risk = 0.0;  // Y_r(u) for Nelson-Aalen, S0(beta, u) for Breslow
};

/// Right-continuous step function: value(u) sums increments at times <= u.
class CumulativeHazard {
 public:
  CumulativeHazard() = default;
  CumulativeHazard(Transition transition, std::vector<HazardStep> steps);

  const Transition& transition() const noexcept { return transition_; }
  const std::vector<HazardStep>& steps() const noexcept { return steps_; }
  bool empty() const noexcept { return steps_.empty(); }

  double value(double u) const;
  /// Increment exactly at u (0 when u is not a jump time).
  double increment_at(double u) const;
  /// Copy with every increment multiplied by `factor`.
  CumulativeHazard scaled(double factor) const;

 private:
  Transition transition_;
  std::vector<HazardStep> steps_;
  std::vector<double> cumulative_;
};

class TransitionMatrix {
 public:
  static constexpr double kRowSumTolerance = 1e-10;

  TransitionMatrix(std::vector<std::string> labels, double v, double t, Eigen::MatrixXd p);

  const std::vector<std::string>& labels() const noexcept { return labels_; }
  double v() const noexcept { return v_; }
  double t() const noexcept { return t_; }
  const Eigen::MatrixXd& entries() const noexcept { return p_; }
  double operator()(State r, State s) const { return p_(r, s); }

 private:
  std::vector<std::string> labels_;
  double v_;
  double t_;
  Eigen::MatrixXd p_;
};

/// Per-transition, per-direction proportional-hazards fit.
struct CoxFit {
  Transition transition;
  Direction direction = Direction::Forward;
  std::string model_name;
  std::vector<std::string> covariate_names;
  std::map<std::string, double> covariate_scale;  // divisor applied to raw values
  Eigen::VectorXd coef;
  Eigen::MatrixXd covariance;
  CumulativeHazard baseline;
  int n_events = 0;
  int n_at_risk = 0;
  int iterations = 0;
  bool converged = false;
  double log_likelihood = 0.0;
  std::string ties = "breslow";
  std::vector<std::string> warnings;
};

}  // namespace msdelay
