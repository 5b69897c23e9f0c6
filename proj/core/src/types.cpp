#include "msdelay/types.hpp"

#include <algorithm>
#include <cmath>

namespace msdelay {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "invalid_argument";
    case ErrorKind::Input: return "input";
    case ErrorKind::Config: return "config";
    case ErrorKind::Estimation: return "estimation";
    case ErrorKind::MissingArtifact: return "missing_artifact";
  }
  return "unknown";
}

std::string Transition::label() const {
  return std::to_string(from) + "->" + std::to_string(to);
}

std::string_view to_string(TransitionStructure s) {
  return s == TransitionStructure::FullyConnected ? "fully_connected" : "adjacent_only";
}

TransitionStructure transition_structure_from_string(std::string_view s) {
  if (s == "fully_connected") return TransitionStructure::FullyConnected;
  if (s == "adjacent_only") return TransitionStructure::AdjacentOnly;
  throw Error(ErrorKind::Config, "unknown transition structure '" + std::string(s) + "'");
}

// ---------------------------------------------------------------------------

namespace {

std::set<Transition> structure_transitions(std::size_t n, TransitionStructure structure) {
  std::set<Transition> out;
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t s = 0; s < n; ++s) {
      if (r == s) continue;
      const auto gap = r > s ? r - s : s - r;
      if (structure == TransitionStructure::AdjacentOnly && gap != 1) continue;
      out.insert({static_cast<State>(r), static_cast<State>(s)});
    }
  }
  return out;
}

std::vector<std::string> default_labels(std::size_t n) {
  if (n == 3) return {"On Time", "Mild Delay", "Severe Delay"};
  if (n == 4) return {"On Time", "Mild Delay", "Medium Delay", "Severe Delay"};
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back("State " + std::to_string(i));
  return out;
}

}  // namespace

StateSpace::StateSpace(std::vector<double> thresholds, std::vector<std::string> labels,
                       std::set<Transition> allowed)
    : thresholds_(std::move(thresholds)), labels_(std::move(labels)), allowed_(std::move(allowed)) {
  if (thresholds_.empty()) {
    throw Error(ErrorKind::InvalidArgument, "state space needs at least one threshold");
  }
  for (std::size_t i = 0; i < thresholds_.size(); ++i) {
    if (!std::isfinite(thresholds_[i]) || thresholds_[i] <= 0.0) {
      throw Error(ErrorKind::InvalidArgument, "thresholds must be finite and positive");
    }
    if (i > 0 && thresholds_[i] <= thresholds_[i - 1]) {
      throw Error(ErrorKind::InvalidArgument, "thresholds must be strictly increasing");
    }
  }
  if (labels_.size() != thresholds_.size() + 1) {
    throw Error(ErrorKind::InvalidArgument, "number of labels must equal thresholds + 1");
  }
  const auto n = static_cast<State>(labels_.size());
  std::vector<int> out_degree(labels_.size(), 0), in_degree(labels_.size(), 0);
  for (const auto& t : allowed_) {
    if (t.from < 0 || t.from >= n || t.to < 0 || t.to >= n) {
      throw Error(ErrorKind::InvalidArgument, "transition " + t.label() + " out of range");
    }
    if (t.from == t.to) {
      throw Error(ErrorKind::InvalidArgument, "self-loop " + t.label() + " not allowed");
    }
    ++out_degree[static_cast<std::size_t>(t.from)];
    ++in_degree[static_cast<std::size_t>(t.to)];
  }
  for (std::size_t s = 0; s < labels_.size(); ++s) {
    if (out_degree[s] == 0 || in_degree[s] == 0) {
      throw Error(ErrorKind::InvalidArgument,
                  "state '" + labels_[s] + "' must have an incoming and an outgoing transition");
    }
  }
}

StateSpace StateSpace::three_state(TransitionStructure structure) {
  return from_thresholds({5.0, 10.0}, structure);
}

StateSpace StateSpace::four_state(TransitionStructure structure) {
  return from_thresholds({5.0, 10.0, 15.0}, structure);
}

StateSpace StateSpace::from_thresholds(std::vector<double> thresholds,
                                       TransitionStructure structure) {
  const auto n = thresholds.size() + 1;
  return StateSpace(std::move(thresholds), default_labels(n), structure_transitions(n, structure));
}

State StateSpace::classify(double delay_minutes) const {
  if (std::isnan(delay_minutes)) {
    throw Error(ErrorKind::InvalidArgument, "cannot classify a NaN delay");
  }
  // Number of thresholds strictly below the delay.
  const auto it = std::lower_bound(thresholds_.begin(), thresholds_.end(), delay_minutes);
  return static_cast<State>(it - thresholds_.begin());
}

std::vector<Transition> StateSpace::transitions_from(State r) const {
  std::vector<Transition> out;
  for (const auto& t : allowed_) {
    if (t.from == r) out.push_back(t);
  }
  return out;
}

std::string StateSpace::name() const {
  if (thresholds_ == std::vector<double>{5.0, 10.0}) return "three_state";
  if (thresholds_ == std::vector<double>{5.0, 10.0, 15.0}) return "four_state";
  return "custom_" + std::to_string(size());
}

// ---------------------------------------------------------------------------

std::string_view to_string(TimeSlot slot) {
  switch (slot) {
    case TimeSlot::MorningPeak: return "morning_peak";
    case TimeSlot::OffPeak: return "off_peak";
    case TimeSlot::EveningPeak: return "evening_peak";
  }
  return "unknown";
}

std::string to_string(Zone zone) { return "zone" + std::to_string(static_cast<int>(zone)); }

TimeSlot time_slot_from_string(std::string_view s) {
  if (s == "morning_peak") return TimeSlot::MorningPeak;
  if (s == "off_peak") return TimeSlot::OffPeak;
  if (s == "evening_peak") return TimeSlot::EveningPeak;
  throw Error(ErrorKind::Input, "unknown time slot '" + std::string(s) + "'");
}

Zone zone_from_int(int z) {
  if (z < 1 || z > 4) throw Error(ErrorKind::Input, "zone must be 1..4, got " + std::to_string(z));
  return static_cast<Zone>(z);
}

Zone zone_from_string(std::string_view s) {
  if (s.size() == 5 && s.substr(0, 4) == "zone") return zone_from_int(s[4] - '0');
  if (s.size() == 1) return zone_from_int(s[0] - '0');
  throw Error(ErrorKind::Input, "unknown zone '" + std::string(s) + "'");
}

std::optional<TimeSlot> time_slot_for(int minutes_of_day) {
  if (minutes_of_day < 6 * 60 || minutes_of_day >= 20 * 60) return std::nullopt;
  if (minutes_of_day < 10 * 60) return TimeSlot::MorningPeak;
  if (minutes_of_day < 16 * 60) return TimeSlot::OffPeak;
  return TimeSlot::EveningPeak;
}

std::string Stratum::label() const {
  std::string out = "d" + std::to_string(static_cast<int>(direction));
  if (time_slot) out += "_" + std::string(to_string(*time_slot));
  if (zone) out += "_" + to_string(*zone);
  return out;
}

bool Covariates::complete() const {
  return std::isfinite(boarded) && std::isfinite(alighted) && std::isfinite(trains_per_hour) &&
         std::isfinite(adverse_weather);
}

// ---------------------------------------------------------------------------

CumulativeHazard::CumulativeHazard(Transition transition, std::vector<HazardStep> steps)
    : transition_(transition), steps_(std::move(steps)) {
  cumulative_.reserve(steps_.size());
  double total = 0.0;
  for (std::size_t i = 0; i < steps_.size(); ++i) {
    const auto& s = steps_[i];
    if (i > 0 && !(s.time > steps_[i - 1].time)) {
      throw Error(ErrorKind::InvalidArgument, "hazard step times must be strictly increasing");
    }
    if (!(s.increment >= 0.0)) {
      throw Error(ErrorKind::InvalidArgument, "hazard increments must be non-negative");
    }
    total += s.increment;
    cumulative_.push_back(total);
  }
}

double CumulativeHazard::value(double u) const {
  const auto it = std::upper_bound(steps_.begin(), steps_.end(), u,
                                   [](double x, const HazardStep& s) { return x < s.time; });
  if (it == steps_.begin()) return 0.0;
  return cumulative_[static_cast<std::size_t>(it - steps_.begin()) - 1];
}

double CumulativeHazard::increment_at(double u) const {
  const auto it = std::lower_bound(steps_.begin(), steps_.end(), u,
                                   [](const HazardStep& s, double x) { return s.time < x; });
  if (it == steps_.end() || it->time != u) return 0.0;
  return it->increment;
}

CumulativeHazard CumulativeHazard::scaled(double factor) const {
  auto steps = steps_;
  for (auto& s : steps) s.increment *= factor;
  return CumulativeHazard(transition_, std::move(steps));
}

TransitionMatrix::TransitionMatrix(std::vector<std::string> labels, double v, double t,
                                   Eigen::MatrixXd p)
    : labels_(std::move(labels)), v_(v), t_(t), p_(std::move(p)) {
  const auto n = static_cast<Eigen::Index>(labels_.size());
  if (p_.rows() != n || p_.cols() != n) {
    throw Error(ErrorKind::InvalidArgument, "transition matrix dimension mismatch");
  }
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index s = 0; s < n; ++s) {
      if (!(p_(r, s) >= 0.0 && p_(r, s) <= 1.0)) {
        throw Error(ErrorKind::Estimation, "transition probability outside [0,1]");
      }
    }
    if (std::abs(p_.row(r).sum() - 1.0) > kRowSumTolerance) {
      throw Error(ErrorKind::Estimation, "transition matrix row does not sum to 1");
    }
  }
}

}  // namespace msdelay
