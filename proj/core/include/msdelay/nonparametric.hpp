#pragma once

#include "msdelay/episodes.hpp"
#include "msdelay/types.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace msdelay {

/// Nelson-Aalen estimate of the clock-reset cumulative hazard for one
/// transition. The risk set at u counts episodes from `from` with duration
/// >= u, censored ones included.
CumulativeHazard nelson_aalen(std::span<const Episode> episodes, Transition transition);

/// Cumulative hazards of every allowed transition within one stratum.
struct HazardSet {
  Stratum stratum;
  StateSpace space;
  std::map<Transition, CumulativeHazard> hazards;
  std::vector<double> event_grid;  // union of all jump times
  std::vector<std::string> warnings;
};

/// Builds a hazard set from per-transition step functions. Allowed
/// transitions missing from `hazards` get an empty step function; entries for
/// transitions the space does not allow are rejected.
HazardSet make_hazard_set(const StateSpace& space, const Stratum& stratum,
                          std::map<Transition, CumulativeHazard> hazards);

/// Nelson-Aalen for every allowed transition. Events on disallowed pairs are
/// treated as censoring at their duration.
HazardSet estimate_hazards(std::span<const Episode> episodes, const StateSpace& space,
                           const Stratum& stratum);

struct HazardIncrement {
  double time = 0.0;
  Eigen::MatrixXd d_lambda;  // off-diagonal increments, diagonal = -row sum
};

std::vector<HazardIncrement> hazard_matrix_increments(const HazardSet& hs);

/// Product integral of (I + dLambda(u)) over jump times in (v, t].
TransitionMatrix aalen_johansen(const HazardSet& hs, double v, double t);

/// P(v, u) at v and after every jump in (v, t], plus P(v, t).
std::vector<TransitionMatrix> aalen_johansen_path(const HazardSet& hs, double v, double t);

enum class ElosEstimand {
  Sojourn,    // restricted mean of the product-limit sojourn survival in r
  Occupancy,  // integral of P_rr(0, u) from the Aalen-Johansen estimator
};

std::string_view to_string(ElosEstimand e);
ElosEstimand elos_estimand_from_string(std::string_view s);

/// Expected length of stay in `state` restricted to [0, tau_max] minutes.
double elos(const HazardSet& hs, State state, double tau_max,
            ElosEstimand estimand = ElosEstimand::Sojourn);

// ---------------------------------------------------------------------------
// Mission-level bootstrap
// ---------------------------------------------------------------------------

struct BootstrapOptions {
  int replicates = 1000;
  std::uint64_t seed = 1;
  unsigned workers = 1;
  double level = 0.95;
  double max_missing_fraction = 0.10;
};

struct PercentileInterval {
  double low = 0.0;
  double high = 0.0;
  int n_boot = 0;
  int n_missing = 0;
  bool unstable = false;
};

using EpisodeBuilder = std::function<std::vector<Episode>(std::span<const MissionTrajectory>)>;
/// A statistic may return NaN (or throw) for entries it cannot evaluate on a
/// replicate; those count as missing.
using VectorStatistic = std::function<std::vector<double>(std::span<const Episode>)>;
using ScalarStatistic = std::function<double(std::span<const Episode>)>;

/// Resamples whole missions with replacement, rebuilds episodes with
/// `builder` and evaluates `statistic`; returns one percentile interval per
/// statistic output. Replicate b draws from a stream derived from (seed, b).
std::vector<PercentileInterval> bootstrap(std::span<const MissionTrajectory> missions,
                                          const BootstrapOptions& options,
                                          const EpisodeBuilder& builder,
                                          const VectorStatistic& statistic,
                                          std::size_t n_outputs);

PercentileInterval bootstrap(std::span<const MissionTrajectory> missions,
                             const BootstrapOptions& options, const EpisodeBuilder& builder,
                             const ScalarStatistic& statistic);

/// Quantile with linear interpolation between order statistics.
double percentile(std::vector<double> values, double p);

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

struct ConditionalMatrix {
  Stratum stratum;
  double horizon = 0.0;
  TransitionMatrix matrix;
  Eigen::MatrixXd percent;  // 100 * P rounded to the grain
};

/// Rounds 100 * p to the nearest multiple of `grain` percentage points.
Eigen::MatrixXd round_percent(const Eigen::MatrixXd& p, double grain);

/// P(0, h) for every stratum and horizon; rows are the current state,
/// columns the state after h minutes.
std::vector<ConditionalMatrix> conditional_matrix_report(std::span<const HazardSet> strata,
                                                         std::span<const double> horizons,
                                                         double grain = 5.0);

}  // namespace msdelay
