#pragma once

#include "msdelay/ingestion.hpp"
#include "msdelay/types.hpp"

#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace msdelay {

struct TrajectoryStop {
  std::string station;
  Zone zone = Zone::Z1;
  int progressive_index = 0;
  double arrival = 0.0;  // actual arrival, minutes
  double delay = 0.0;
  Covariates covariates;
};

/// One mission on one day, stops ordered by progressive index.
struct MissionTrajectory {
  std::string mission;
  Date day{};
  Direction direction = Direction::Forward;
  TimeSlot time_slot = TimeSlot::OffPeak;
  std::vector<TrajectoryStop> stops;
};

struct Quarantine {
  std::string mission;
  Date day{};
  std::string reason;
};

struct TrajectorySet {
  std::vector<MissionTrajectory> trajectories;
  std::vector<Quarantine> quarantined;
};

/// Groups rows by (mission, date) and orders them by progressive index.
/// Missions with duplicated stations, decreasing arrival times or
/// inconsistent strata are quarantined. Output is ordered by (date, mission).
TrajectorySet build_trajectories(std::span<const AnalysisRow> rows);

struct EpisodeOptions {
  /// Censor a sojourn at each zone boundary and re-open it in the new zone.
  bool split_by_zone = false;
};

struct EpisodeDiagnostics {
  std::size_t protocol_violations = 0;  // jumps outside the allowed transitions
  std::size_t dropped_zero_duration = 0;
  std::size_t short_trajectories = 0;

  EpisodeDiagnostics& operator+=(const EpisodeDiagnostics& o);
};

/// Clock-reset sojourns of one trajectory. A state change is placed at the
/// arrival where the new state is first observed; the last sojourn is
/// right-censored at the final arrival. Covariates are those of the entry stop.
std::vector<Episode> build_episodes(const MissionTrajectory& trajectory, const StateSpace& space,
                                    const EpisodeOptions& options = {},
                                    EpisodeDiagnostics* diagnostics = nullptr);

std::vector<Episode> build_episodes(std::span<const MissionTrajectory> trajectories,
                                    const StateSpace& space, const EpisodeOptions& options = {},
                                    EpisodeDiagnostics* diagnostics = nullptr);

/// Episode dump: mission, day, direction, time_slot, zone, from,
/// to_or_censored, duration_min, then the raw covariates.
const std::vector<std::string>& episode_columns();
void write_episodes(std::ostream& out, std::span<const Episode> episodes, char delimiter = ',');
std::vector<Episode> read_episodes(std::istream& in, char delimiter = ',');

}  // namespace msdelay
