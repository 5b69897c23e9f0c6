#include "msdelay/episodes.hpp"

#include "msdelay/delimited.hpp"
#include "msdelay/timeutil.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace msdelay {

TrajectorySet build_trajectories(std::span<const AnalysisRow> rows) {
  std::map<std::pair<Date, std::string>, std::vector<const AnalysisRow*>> groups;
  for (const auto& r : rows) groups[{r.unit.day, r.unit.mission}].push_back(&r);

  TrajectorySet out;
  for (auto& [key, members] : groups) {
    std::stable_sort(members.begin(), members.end(), [](const auto* a, const auto* b) {
      return a->progressive_index < b->progressive_index;
    });
    const auto quarantine = [&](std::string reason) {
      out.quarantined.push_back({key.second, key.first, std::move(reason)});
    };

    MissionTrajectory traj;
    traj.mission = key.second;
    traj.day = key.first;
    traj.direction = members.front()->stratum.direction;
    traj.time_slot = members.front()->stratum.time_slot.value_or(TimeSlot::OffPeak);

    std::set<std::string> stations;
    std::string problem;
    for (std::size_t i = 0; i < members.size() && problem.empty(); ++i) {
      const auto& r = *members[i];
      if (!stations.insert(r.unit.station).second) {
        problem = "duplicate station '" + r.unit.station + "'";
      } else if (i > 0 && r.progressive_index == members[i - 1]->progressive_index) {
        problem = "duplicate progressive index " + std::to_string(r.progressive_index);
      } else if (r.stratum.direction != traj.direction ||
                 r.stratum.time_slot.value_or(TimeSlot::OffPeak) != traj.time_slot) {
        problem = "inconsistent direction or time slot across stops";
      }
      TrajectoryStop stop;
      stop.station = r.unit.station;
      stop.zone = r.stratum.zone.value_or(Zone::Z1);
      stop.progressive_index = r.progressive_index;
      stop.arrival = r.actual_arrival_minutes();
      stop.delay = r.arrival_delay;
      stop.covariates = r.covariates;
      if (problem.empty() && !traj.stops.empty() && stop.arrival < traj.stops.back().arrival) {
        problem = "actual arrival times decrease at progressive index " +
                  std::to_string(r.progressive_index);
      }
      traj.stops.push_back(std::move(stop));
    }
    if (!problem.empty()) {
      quarantine(std::move(problem));
      continue;
    }
    out.trajectories.push_back(std::move(traj));
  }
  return out;
}

EpisodeDiagnostics& EpisodeDiagnostics::operator+=(const EpisodeDiagnostics& o) {
  protocol_violations += o.protocol_violations;
  dropped_zero_duration += o.dropped_zero_duration;
  short_trajectories += o.short_trajectories;
  return *this;
}

std::vector<Episode> build_episodes(const MissionTrajectory& trajectory, const StateSpace& space,
                                    const EpisodeOptions& options,
                                    EpisodeDiagnostics* diagnostics) {
  EpisodeDiagnostics local;
  auto& diag = diagnostics ? *diagnostics : local;
  std::vector<Episode> out;
  const auto& stops = trajectory.stops;
  if (stops.size() < 2) {
    ++diag.short_trajectories;
    return out;
  }

  std::size_t entry = 0;
  State state = space.classify(stops[0].delay);
  Zone zone = stops[0].zone;

  const auto emit = [&](std::size_t exit, std::optional<State> to) {
    const double duration = stops[exit].arrival - stops[entry].arrival;
    if (!(duration > 0.0)) {
      ++diag.dropped_zero_duration;
      return;
    }
    Episode e;
    e.unit = {stops[entry].station, trajectory.mission, trajectory.day};
    e.stratum.direction = trajectory.direction;
    e.stratum.time_slot = trajectory.time_slot;
    if (options.split_by_zone) e.stratum.zone = zone;
    e.from = state;
    e.to = to;
    e.duration = duration;
    e.covariates = stops[entry].covariates;
    if (to && !space.allows({state, *to})) ++diag.protocol_violations;
    out.push_back(std::move(e));
  };

  for (std::size_t i = 1; i < stops.size(); ++i) {
    const State observed = space.classify(stops[i].delay);
    if (options.split_by_zone && stops[i].zone != zone) {
      emit(i, std::nullopt);
      entry = i;
      state = observed;
      zone = stops[i].zone;
      continue;
    }
    if (observed != state) {
      emit(i, observed);
      entry = i;
      state = observed;
    }
  }
  emit(stops.size() - 1, std::nullopt);
  return out;
}

std::vector<Episode> build_episodes(std::span<const MissionTrajectory> trajectories,
                                    const StateSpace& space, const EpisodeOptions& options,
                                    EpisodeDiagnostics* diagnostics) {
  std::vector<Episode> out;
  for (const auto& t : trajectories) {
    auto eps = build_episodes(t, space, options, diagnostics);
    out.insert(out.end(), std::make_move_iterator(eps.begin()), std::make_move_iterator(eps.end()));
  }
  return out;
}

const std::vector<std::string>& episode_columns() {
  static const std::vector<std::string> cols{
      "mission",  "day",          "direction", "time_slot", "zone",
      "from",     "to_or_censored", "duration_min", "boarded", "alighted",
      "trains_per_hour", "adverse_weather"};
  return cols;
}

void write_episodes(std::ostream& out, std::span<const Episode> episodes, char delimiter) {
  write_record(out, episode_columns(), delimiter);
  for (const auto& e : episodes) {
    write_record(out,
                 {e.unit.mission, format_date(e.unit.day),
                  std::to_string(static_cast<int>(e.stratum.direction)),
                  e.stratum.time_slot ? std::string(to_string(*e.stratum.time_slot)) : "NA",
                  e.stratum.zone ? to_string(*e.stratum.zone) : "NA", std::to_string(e.from),
                  e.to ? std::to_string(*e.to) : "censored", format_real(e.duration),
                  format_real(e.covariates.boarded), format_real(e.covariates.alighted),
                  format_real(e.covariates.trains_per_hour),
                  format_real(e.covariates.adverse_weather)},
                 delimiter);
  }
}

std::vector<Episode> read_episodes(std::istream& in, char delimiter) {
  DelimitedReader reader(in, delimiter);
  std::vector<std::size_t> at;
  for (const auto& name : episode_columns()) {
    const auto c = reader.column(name);
    if (!c) throw Error(ErrorKind::Input, "episode file is missing column '" + name + "'");
    at.push_back(*c);
  }
  std::vector<Episode> out;
  std::vector<std::string> f;
  while (reader.next(f)) {
    const auto bad = [&](const std::string& what) {
      return Error(ErrorKind::Input,
                   "episode file line " + std::to_string(reader.line_number()) + ": " + what);
    };
    if (f.size() != reader.header().size()) throw bad("field count mismatch");
    Episode e;
    e.unit.mission = f[at[0]];
    const auto day = parse_date(f[at[1]]);
    const auto dir = parse_integer(f[at[2]]);
    const auto from = parse_integer(f[at[5]]);
    const auto duration = parse_real(f[at[7]]);
    if (!day || !dir || !from || !duration || std::isnan(*duration)) throw bad("unparseable value");
    e.unit.day = *day;
    e.stratum.direction = static_cast<Direction>(*dir);
    if (f[at[3]] != "NA") e.stratum.time_slot = time_slot_from_string(f[at[3]]);
    if (f[at[4]] != "NA") e.stratum.zone = zone_from_string(f[at[4]]);
    e.from = static_cast<State>(*from);
    if (f[at[6]] != "censored") {
      const auto to = parse_integer(f[at[6]]);
      if (!to) throw bad("unparseable destination state");
      e.to = static_cast<State>(*to);
    }
    e.duration = *duration;
    double cov[4];
    for (int k = 0; k < 4; ++k) {
      const auto v = parse_real(f[at[8 + static_cast<std::size_t>(k)]]);
      if (!v) throw bad("unparseable covariate");
      cov[k] = *v;
    }
    e.covariates = {cov[0], cov[1], cov[2], cov[3]};
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace msdelay
