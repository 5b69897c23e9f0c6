#include "msdelay/nonparametric.hpp"

#include "msdelay/parallel.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <random>

namespace msdelay {

namespace {

constexpr double kClipTolerance = 1e-9;

void check_factor_diagonal(const Eigen::MatrixXd& factor, double time, const StateSpace& space) {
  for (Eigen::Index r = 0; r < factor.rows(); ++r) {
    if (factor(r, r) < 0.0) {
      throw Error(ErrorKind::Estimation,
                  fmt::format("overloaded risk set: hazard increments leaving '{}' sum to {:.6g} > 1 "
                              "at u = {:.6g}",
                              space.label(static_cast<State>(r)), 1.0 - factor(r, r), time));
    }
  }
}

Eigen::MatrixXd clip_probabilities(Eigen::MatrixXd p) {
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    double& x = p.data()[i];
    if (x < 0.0) {
      if (x < -kClipTolerance) {
        throw Error(ErrorKind::Estimation, fmt::format("transition probability {:.3g} < 0", x));
      }
      x = 0.0;
    } else if (x > 1.0) {
      if (x > 1.0 + kClipTolerance) {
        throw Error(ErrorKind::Estimation, fmt::format("transition probability {:.12g} > 1", x));
      }
      x = 1.0;
    }
  }
  return p;
}

}  // namespace

CumulativeHazard nelson_aalen(std::span<const Episode> episodes, Transition transition) {
  std::vector<std::pair<double, bool>> at_r;  // (duration, is r->s event)
  for (const auto& e : episodes) {
    if (e.from != transition.from) continue;
    at_r.emplace_back(e.duration, e.to && *e.to == transition.to);
  }
  std::sort(at_r.begin(), at_r.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  std::vector<HazardStep> steps;
  std::size_t i = 0;
  const std::size_t n = at_r.size();
  while (i < n) {
    const double u = at_r[i].first;
    std::size_t j = i;
    int events = 0;
    while (j < n && at_r[j].first == u) {
      events += at_r[j].second ? 1 : 0;
      ++j;
    }
    if (events > 0) {
      const auto at_risk = static_cast<double>(n - i);  // durations >= u
      steps.push_back({u, static_cast<double>(events) / at_risk, events, at_risk});
    }
    i = j;
  }
  return CumulativeHazard(transition, std::move(steps));
}

HazardSet make_hazard_set(const StateSpace& space, const Stratum& stratum,
                          std::map<Transition, CumulativeHazard> hazards) {
  HazardSet hs{stratum, space, {}, {}, {}};
  for (auto& [t, h] : hazards) {
    if (!space.allows(t)) {
      throw Error(ErrorKind::InvalidArgument,
                  "hazard supplied for transition " + t.label() + " not allowed by the state space");
    }
    hs.hazards.emplace(t, std::move(h));
  }
  std::vector<double> grid;
  for (const auto& t : space.allowed_transitions()) {
    auto it = hs.hazards.find(t);
    if (it == hs.hazards.end()) {
      it = hs.hazards.emplace(t, CumulativeHazard(t, {})).first;
    }
    if (it->second.empty()) {
      hs.warnings.push_back("stratum " + stratum.label() + ": no events for transition " +
                            t.label() + " (data sparsity); hazard set to zero");
    }
    for (const auto& s : it->second.steps()) grid.push_back(s.time);
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  hs.event_grid = std::move(grid);
  return hs;
}

HazardSet estimate_hazards(std::span<const Episode> episodes, const StateSpace& space,
                           const Stratum& stratum) {
  std::map<Transition, CumulativeHazard> hazards;
  for (const auto& t : space.allowed_transitions()) hazards.emplace(t, nelson_aalen(episodes, t));
  return make_hazard_set(space, stratum, std::move(hazards));
}

std::vector<HazardIncrement> hazard_matrix_increments(const HazardSet& hs) {
  const auto n = static_cast<Eigen::Index>(hs.space.size());
  std::vector<HazardIncrement> out;
  out.reserve(hs.event_grid.size());
  for (double u : hs.event_grid) out.push_back({u, Eigen::MatrixXd::Zero(n, n)});

  for (const auto& [t, h] : hs.hazards) {
    for (const auto& step : h.steps()) {
      const auto it = std::lower_bound(hs.event_grid.begin(), hs.event_grid.end(), step.time);
      auto& m = out[static_cast<std::size_t>(it - hs.event_grid.begin())].d_lambda;
      m(t.from, t.to) += step.increment;
    }
  }
  for (auto& inc : out) {
    for (Eigen::Index r = 0; r < n; ++r) {
      double row = 0.0;
      for (Eigen::Index s = 0; s < n; ++s) {
        if (s != r) row += inc.d_lambda(r, s);
      }
      inc.d_lambda(r, r) = -row;
    }
  }
  return out;
}

namespace {

template <typename Visit>
Eigen::MatrixXd product_integral(const HazardSet& hs, double v, double t, Visit&& visit) {
  if (!(v <= t)) {
    throw Error(ErrorKind::InvalidArgument, fmt::format("aalen_johansen needs v <= t ({} > {})", v, t));
  }
  const auto n = static_cast<Eigen::Index>(hs.space.size());
  Eigen::MatrixXd p = Eigen::MatrixXd::Identity(n, n);
  const auto increments = hazard_matrix_increments(hs);
  for (const auto& inc : increments) {
    if (inc.time <= v) continue;
    if (inc.time > t) break;
    Eigen::MatrixXd factor = Eigen::MatrixXd::Identity(n, n) + inc.d_lambda;
    check_factor_diagonal(factor, inc.time, hs.space);
    p = p * factor;
    visit(inc.time, p);
  }
  return p;
}

}  // namespace

TransitionMatrix aalen_johansen(const HazardSet& hs, double v, double t) {
  auto p = product_integral(hs, v, t, [](double, const Eigen::MatrixXd&) {});
  return TransitionMatrix(hs.space.labels(), v, t, clip_probabilities(std::move(p)));
}

std::vector<TransitionMatrix> aalen_johansen_path(const HazardSet& hs, double v, double t) {
  const auto n = static_cast<Eigen::Index>(hs.space.size());
  std::vector<TransitionMatrix> out;
  out.emplace_back(hs.space.labels(), v, v, Eigen::MatrixXd::Identity(n, n));
  auto p = product_integral(hs, v, t, [&](double u, const Eigen::MatrixXd& m) {
    out.emplace_back(hs.space.labels(), v, u, clip_probabilities(m));
  });
  if (out.back().t() != t) out.emplace_back(hs.space.labels(), v, t, clip_probabilities(p));
  return out;
}

std::string_view to_string(ElosEstimand e) {
  return e == ElosEstimand::Sojourn ? "sojourn" : "occupancy";
}

ElosEstimand elos_estimand_from_string(std::string_view s) {
  if (s == "sojourn") return ElosEstimand::Sojourn;
  if (s == "occupancy") return ElosEstimand::Occupancy;
  throw Error(ErrorKind::Config, "unknown ELOS estimand '" + std::string(s) + "'");
}

double elos(const HazardSet& hs, State state, double tau_max, ElosEstimand estimand) {
  if (!(tau_max > 0.0)) throw Error(ErrorKind::InvalidArgument, "tau_max must be positive");
  if (state < 0 || static_cast<std::size_t>(state) >= hs.space.size()) {
    throw Error(ErrorKind::InvalidArgument, "state out of range");
  }

  if (estimand == ElosEstimand::Occupancy) {
    double area = 0.0;
    double prev = 0.0;
    double occupancy = 1.0;
    product_integral(hs, 0.0, tau_max, [&](double u, const Eigen::MatrixXd& p) {
      area += occupancy * (u - prev);
      prev = u;
      occupancy = p(state, state);
    });
    return area + occupancy * (tau_max - prev);
  }

  // Exit increments of `state` merged over its outgoing transitions.
  std::map<double, double> exits;
  for (const auto& [t, h] : hs.hazards) {
    if (t.from != state) continue;
    for (const auto& s : h.steps()) exits[s.time] += s.increment;
  }
  double area = 0.0;
  double prev = 0.0;
  double survival = 1.0;
  for (const auto& [u, d] : exits) {
    if (u > tau_max) break;
    area += survival * (u - prev);
    const double factor = 1.0 - d;
    if (factor < 0.0) {
      throw Error(ErrorKind::Estimation,
                  fmt::format("overloaded risk set: exit increments from '{}' sum to {:.6g} > 1 "
                              "at u = {:.6g}",
                              hs.space.label(state), d, u));
    }
    survival *= factor;
    prev = u;
  }
  return area + survival * (tau_max - prev);
}

// ---------------------------------------------------------------------------

double percentile(std::vector<double> values, double p) {
  if (values.empty()) return kMissing;
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

std::vector<PercentileInterval> bootstrap(std::span<const MissionTrajectory> missions,
                                          const BootstrapOptions& options,
                                          const EpisodeBuilder& builder,
                                          const VectorStatistic& statistic,
                                          std::size_t n_outputs) {
  if (options.replicates < 2) {
    throw Error(ErrorKind::InvalidArgument, "bootstrap needs at least 2 replicates");
  }
  if (missions.empty()) throw Error(ErrorKind::InvalidArgument, "bootstrap on an empty dataset");
  const auto B = static_cast<std::size_t>(options.replicates);
  std::vector<std::vector<double>> values(B, std::vector<double>(n_outputs, kMissing));

  parallel_for(B, options.workers, [&](std::size_t b) {
    std::mt19937_64 rng(mix_seed(options.seed, b));
    std::uniform_int_distribution<std::size_t> pick(0, missions.size() - 1);
    std::vector<MissionTrajectory> sample;
    sample.reserve(missions.size());
    for (std::size_t i = 0; i < missions.size(); ++i) sample.push_back(missions[pick(rng)]);
    try {
      const auto episodes = builder(sample);
      auto stat = statistic(episodes);
      for (std::size_t k = 0; k < n_outputs && k < stat.size(); ++k) values[b][k] = stat[k];
    } catch (const Error&) {
      // replicate stays missing
    }
  });

  const double alpha = 1.0 - options.level;
  std::vector<PercentileInterval> out(n_outputs);
  for (std::size_t k = 0; k < n_outputs; ++k) {
    std::vector<double> finite;
    for (std::size_t b = 0; b < B; ++b) {
      if (std::isfinite(values[b][k])) finite.push_back(values[b][k]);
    }
    auto& iv = out[k];
    iv.n_boot = options.replicates;
    iv.n_missing = static_cast<int>(B - finite.size());
    iv.unstable = static_cast<double>(iv.n_missing) >
                  options.max_missing_fraction * static_cast<double>(B);
    iv.low = percentile(finite, alpha / 2.0);
    iv.high = percentile(finite, 1.0 - alpha / 2.0);
  }
  return out;
}

PercentileInterval bootstrap(std::span<const MissionTrajectory> missions,
                             const BootstrapOptions& options, const EpisodeBuilder& builder,
                             const ScalarStatistic& statistic) {
  return bootstrap(
             missions, options, builder,
             [&](std::span<const Episode> e) { return std::vector<double>{statistic(e)}; }, 1)
      .front();
}

// ---------------------------------------------------------------------------

Eigen::MatrixXd round_percent(const Eigen::MatrixXd& p, double grain) {
  if (!(grain > 0.0)) throw Error(ErrorKind::InvalidArgument, "rounding grain must be positive");
  Eigen::MatrixXd out(p.rows(), p.cols());
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    out.data()[i] = std::round(100.0 * p.data()[i] / grain) * grain;
  }
  return out;
}

std::vector<ConditionalMatrix> conditional_matrix_report(std::span<const HazardSet> strata,
                                                         std::span<const double> horizons,
                                                         double grain) {
  std::vector<ConditionalMatrix> out;
  for (const auto& hs : strata) {
    for (double h : horizons) {
      auto m = aalen_johansen(hs, 0.0, h);
      auto pct = round_percent(m.entries(), grain);
      out.push_back({hs.stratum, h, std::move(m), std::move(pct)});
    }
  }
  return out;
}

}  // namespace msdelay
