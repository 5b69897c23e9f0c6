#include "msdelay/cox.hpp"

#include "msdelay/parallel.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>
#include <boost/math/distributions/students_t.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace msdelay {

double CovariateModel::divisor(const std::string& covariate) const {
  const auto it = scale.find(covariate);
  return it == scale.end() ? 1.0 : it->second;
}

namespace {

std::map<std::string, double> default_scale() {
  return {{"boarded", 100.0}, {"alighted", 100.0}};
}

}  // namespace

CovariateModel temporal_model() {
  return {"temporal",
          {"boarded", "alighted", "trains_per_hour", "adverse_weather", "morning", "evening"},
          default_scale()};
}

CovariateModel spatial_model() {
  return {"spatial",
          {"boarded", "alighted", "trains_per_hour", "adverse_weather", "zone1", "zone2", "zone3"},
          default_scale()};
}

const std::vector<std::string>& known_covariates() {
  static const std::vector<std::string> names{
      "boarded", "alighted", "trains_per_hour", "adverse_weather", "morning",
      "evening", "zone1",    "zone2",           "zone3"};
  return names;
}

double covariate_value(const Episode& e, const std::string& name) {
  const auto& c = e.covariates;
  if (name == "boarded") return c.boarded;
  if (name == "alighted") return c.alighted;
  if (name == "trains_per_hour") return c.trains_per_hour;
  if (name == "adverse_weather") return c.adverse_weather;
  const auto slot = e.stratum.time_slot;
  if (name == "morning") return slot ? (*slot == TimeSlot::MorningPeak ? 1.0 : 0.0) : kMissing;
  if (name == "evening") return slot ? (*slot == TimeSlot::EveningPeak ? 1.0 : 0.0) : kMissing;
  for (int k = 1; k <= 3; ++k) {
    if (name == "zone" + std::to_string(k)) {
      const auto zone = e.stratum.zone;
      return zone ? (static_cast<int>(*zone) == k ? 1.0 : 0.0) : kMissing;
    }
  }
  throw Error(ErrorKind::Config, "unknown covariate '" + name + "'");
}

int CoxData::events() const {
  return static_cast<int>(std::count(event.begin(), event.end(), char{1}));
}

CoxData make_cox_data(std::span<const Episode> episodes, Transition transition,
                      const CovariateModel& model) {
  for (const auto& [name, d] : model.scale) {
    if (!(d > 0.0) || !std::isfinite(d)) {
      throw Error(ErrorKind::Config, "covariate scale for '" + name + "' must be positive");
    }
  }
  CoxData data;
  data.transition = transition;
  data.names = model.covariates;
  const auto p = model.covariates.size();
  std::vector<double> zs;
  std::vector<double> times;
  std::vector<double> row(p);
  for (const auto& e : episodes) {
    if (e.from != transition.from) continue;
    bool complete = true;
    for (std::size_t k = 0; k < p; ++k) {
      row[k] = covariate_value(e, model.covariates[k]);
      if (!std::isfinite(row[k])) complete = false;
      row[k] /= model.divisor(model.covariates[k]);
    }
    if (!complete) {
      ++data.excluded_incomplete;
      continue;
    }
    zs.insert(zs.end(), row.begin(), row.end());
    times.push_back(e.duration);
    data.event.push_back(e.to && *e.to == transition.to ? 1 : 0);
  }
  const auto n = static_cast<Eigen::Index>(times.size());
  data.z.resize(n, static_cast<Eigen::Index>(p));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < p; ++k) {
      data.z(i, static_cast<Eigen::Index>(k)) = zs[static_cast<std::size_t>(i) * p + k];
    }
  }
  data.time = Eigen::Map<Eigen::VectorXd>(times.data(), n);
  return data;
}

std::string_view to_string(Ties t) { return t == Ties::Breslow ? "breslow" : "efron"; }

Ties ties_from_string(std::string_view s) {
  if (s == "breslow") return Ties::Breslow;
  if (s == "efron") return Ties::Efron;
  throw Error(ErrorKind::Config, "unknown ties method '" + std::string(s) + "'");
}

namespace {

/// Indices ordered by decreasing duration.
std::vector<Eigen::Index> descending_order(const CoxData& data) {
  std::vector<Eigen::Index> idx(data.size());
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  std::stable_sort(idx.begin(), idx.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return data.time(a) > data.time(b); });
  return idx;
}

/// Visits distinct durations from the largest down, after adding every
/// observation with that duration to the risk-set sums. Weights are
/// exp(eta - offset).
struct RiskSums {
  double s0 = 0.0;
  Eigen::VectorXd s1;
  Eigen::MatrixXd s2;
  // events at the current time
  int d = 0;
  double d0 = 0.0;
  Eigen::VectorXd d1;
  Eigen::MatrixXd d2;
  Eigen::VectorXd z_events;
  double eta_events = 0.0;
};

template <typename Visit>
void sweep(const CoxData& data, const Eigen::VectorXd& eta, double offset, bool second_order,
           Visit&& visit) {
  const auto p = data.z.cols();
  RiskSums rs;
  rs.s1 = Eigen::VectorXd::Zero(p);
  rs.d1 = Eigen::VectorXd::Zero(p);
  rs.z_events = Eigen::VectorXd::Zero(p);
  if (second_order) {
    rs.s2 = Eigen::MatrixXd::Zero(p, p);
    rs.d2 = Eigen::MatrixXd::Zero(p, p);
  }
  const auto order = descending_order(data);
  std::size_t i = 0;
  while (i < order.size()) {
    const double t = data.time(order[i]);
    rs.d = 0;
    rs.d0 = 0.0;
    rs.d1.setZero();
    rs.z_events.setZero();
    rs.eta_events = 0.0;
    if (second_order) rs.d2.setZero();
    std::vector<Eigen::Index> events;
    for (; i < order.size() && data.time(order[i]) == t; ++i) {
      const auto k = order[i];
      const double w = std::exp(eta(k) - offset);
      const auto zk = data.z.row(k).transpose();
      rs.s0 += w;
      rs.s1 += w * zk;
      if (second_order) rs.s2.noalias() += w * zk * zk.transpose();
      if (data.event[static_cast<std::size_t>(k)]) {
        ++rs.d;
        rs.d0 += w;
        rs.d1 += w * zk;
        if (second_order) rs.d2.noalias() += w * zk * zk.transpose();
        rs.z_events += zk;
        rs.eta_events += eta(k);
        events.push_back(k);
      }
    }
    if (rs.d > 0) visit(t, rs, events);
  }
}

}  // namespace

PartialLikelihood partial_likelihood(const CoxData& data, const Eigen::VectorXd& beta, Ties ties) {
  const auto p = data.z.cols();
  if (beta.size() != p) throw Error(ErrorKind::InvalidArgument, "beta dimension mismatch");
  PartialLikelihood out;
  out.score = Eigen::VectorXd::Zero(p);
  out.information = Eigen::MatrixXd::Zero(p, p);
  if (data.size() == 0) return out;

  const Eigen::VectorXd eta = data.z * beta;
  const double offset = eta.maxCoeff();
  sweep(data, eta, offset, true, [&](double, const RiskSums& rs, const auto&) {
    out.log_likelihood += rs.eta_events;
    out.score += rs.z_events;
    const int m = ties == Ties::Efron ? rs.d : 1;
    const double weight = ties == Ties::Efron ? 1.0 : static_cast<double>(rs.d);
    for (int l = 0; l < m; ++l) {
      const double f = ties == Ties::Efron ? static_cast<double>(l) / rs.d : 0.0;
      const double s0 = rs.s0 - f * rs.d0;
      const Eigen::VectorXd s1 = rs.s1 - f * rs.d1;
      const Eigen::MatrixXd s2 = rs.s2 - f * rs.d2;
      const Eigen::VectorXd mean = s1 / s0;
      out.log_likelihood -= weight * (std::log(s0) + offset);
      out.score -= weight * mean;
      out.information += weight * (s2 / s0 - mean * mean.transpose());
    }
  });
  return out;
}

CumulativeHazard breslow_baseline(const CoxData& data, const Eigen::VectorXd& beta, Ties ties) {
  std::vector<HazardStep> steps;
  if (data.size() == 0) return CumulativeHazard(data.transition, {});
  const Eigen::VectorXd eta = data.z * beta;
  const double offset = eta.maxCoeff();
  const double scale = std::exp(-offset);
  sweep(data, eta, offset, false, [&](double t, const RiskSums& rs, const auto&) {
    double inc = 0.0;
    if (ties == Ties::Efron) {
      for (int l = 0; l < rs.d; ++l) {
        inc += 1.0 / (rs.s0 - static_cast<double>(l) / rs.d * rs.d0);
      }
      inc *= scale;
    } else {
      inc = static_cast<double>(rs.d) / rs.s0 * scale;
    }
    steps.push_back({t, inc, rs.d, rs.s0 / scale});
  });
  std::reverse(steps.begin(), steps.end());
  return CumulativeHazard(data.transition, std::move(steps));
}

// ---------------------------------------------------------------------------

namespace {

std::string join(const std::vector<std::string>& names) {
  std::string out;
  for (const auto& n : names) out += (out.empty() ? "" : ", ") + n;
  return out;
}

Eigen::MatrixXd submatrix(const Eigen::MatrixXd& m, const std::vector<Eigen::Index>& idx) {
  const auto k = static_cast<Eigen::Index>(idx.size());
  Eigen::MatrixXd out(k, k);
  for (Eigen::Index a = 0; a < k; ++a) {
    for (Eigen::Index b = 0; b < k; ++b) out(a, b) = m(idx[a], idx[b]);
  }
  return out;
}

}  // namespace

CoxFit fit_cox(const CoxData& data, const CoxOptions& options) {
  const auto p = data.z.cols();
  const std::string where = "transition " + data.transition.label();
  CoxFit fit;
  fit.transition = data.transition;
  fit.covariate_names = data.names;
  fit.ties = std::string(to_string(options.ties));
  fit.n_at_risk = static_cast<int>(data.size());
  fit.n_events = data.events();
  if (fit.n_events == 0) {
    throw Error(ErrorKind::Estimation, where + ": no events, cannot fit a Cox model");
  }
  if (data.excluded_incomplete > 0) {
    fit.warnings.push_back(fmt::format("{} episodes with incomplete covariates excluded",
                                       data.excluded_incomplete));
  }

  // Covariates without variance carry no information and are held at 0.
  std::vector<Eigen::Index> active;
  for (Eigen::Index k = 0; k < p; ++k) {
    const auto col = data.z.col(k);
    if (col.maxCoeff() > col.minCoeff()) {
      active.push_back(k);
    } else {
      fit.warnings.push_back("covariate '" + data.names[static_cast<std::size_t>(k)] +
                             "' has no variance; coefficient held at 0 (collinear with the "
                             "baseline)");
    }
  }
  const auto q = static_cast<Eigen::Index>(active.size());

  if (q > 0) {
    Eigen::MatrixXd centered(data.z.rows(), q);
    for (Eigen::Index a = 0; a < q; ++a) {
      const auto col = data.z.col(active[a]);
      centered.col(a) = col.array() - col.mean();
      const double norm = centered.col(a).norm();
      if (norm > 0.0) centered.col(a) /= norm;
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(centered.transpose() * centered);
    lu.setThreshold(1e-10);
    if (lu.rank() < q) {
      const Eigen::MatrixXd kernel = lu.kernel();
      std::vector<std::string> names;
      for (Eigen::Index a = 0; a < q; ++a) {
        if (kernel.row(a).cwiseAbs().maxCoeff() > 1e-6) {
          names.push_back(data.names[static_cast<std::size_t>(active[a])]);
        }
      }
      throw Error(ErrorKind::Estimation,
                  where + ": singular information matrix; collinear covariates: " + join(names));
    }
  }

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  auto current = partial_likelihood(data, beta, options.ties);
  const auto max_abs_score = [&](const PartialLikelihood& pl) {
    double m = 0.0;
    for (auto k : active) m = std::max(m, std::abs(pl.score(k)));
    return m;
  };

  if (q > 0) {
    for (int iter = 1; iter <= options.max_iterations; ++iter) {
      fit.iterations = iter;
      const Eigen::MatrixXd info = submatrix(current.information, active);
      Eigen::VectorXd grad(q);
      for (Eigen::Index a = 0; a < q; ++a) grad(a) = current.score(active[a]);
      Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
      if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
        throw Error(ErrorKind::Estimation, where + ": information matrix is not positive definite");
      }
      Eigen::VectorXd step = ldlt.solve(grad);

      Eigen::VectorXd candidate = beta;
      PartialLikelihood next;
      for (int halving = 0;; ++halving) {
        candidate = beta;
        for (Eigen::Index a = 0; a < q; ++a) candidate(active[a]) += step(a);
        next = partial_likelihood(data, candidate, options.ties);
        if (std::isfinite(next.log_likelihood) &&
            next.log_likelihood >= current.log_likelihood) {
          break;
        }
        if (halving == 30) {
          next = current;
          candidate = beta;
          break;
        }
        step *= 0.5;
      }
      for (Eigen::Index k = 0; k < p; ++k) {
        if (std::abs(candidate(k)) > options.divergence_bound) {
          throw Error(ErrorKind::Estimation,
                      fmt::format("{}: coefficient of '{}' diverges (|beta| > {}); monotone "
                                  "likelihood suggests separation",
                                  where, data.names[static_cast<std::size_t>(k)],
                                  options.divergence_bound));
        }
      }
      const double change = std::abs(next.log_likelihood - current.log_likelihood);
      beta = candidate;
      current = std::move(next);
      if (change < options.loglik_tolerance && max_abs_score(current) < options.gradient_tolerance) {
        fit.converged = true;
        break;
      }
    }
    if (!fit.converged) {
      fit.warnings.push_back(fmt::format("Newton-Raphson did not converge in {} iterations",
                                         options.max_iterations));
    }
  } else {
    fit.converged = true;
  }

  fit.coef = beta;
  fit.covariance = Eigen::MatrixXd::Zero(p, p);
  for (Eigen::Index k = 0; k < p; ++k) fit.covariance(k, k) = kMissing;
  if (q > 0) {
    const Eigen::MatrixXd inv = submatrix(current.information, active).inverse();
    for (Eigen::Index a = 0; a < q; ++a) {
      for (Eigen::Index b = 0; b < q; ++b) fit.covariance(active[a], active[b]) = inv(a, b);
    }
  }
  fit.log_likelihood = current.log_likelihood;
  fit.baseline = breslow_baseline(data, beta, options.ties);
  return fit;
}

CoxFit fit_cox(std::span<const Episode> episodes, Transition transition,
               const CovariateModel& model, const CoxOptions& options) {
  const auto data = make_cox_data(episodes, transition, model);
  auto fit = fit_cox(data, options);
  fit.model_name = model.name;
  for (const auto& name : model.covariates) fit.covariate_scale[name] = model.divisor(name);
  return fit;
}

std::map<Transition, CoxFit> CoxFitSet::for_direction(Direction d) const {
  std::map<Transition, CoxFit> out;
  for (const auto& f : fits) {
    if (f.direction == d) out.emplace(f.transition, f);
  }
  return out;
}

CoxFitSet fit_transitions(std::span<const Episode> episodes, const StateSpace& space,
                          const CovariateModel& model, const CoxOptions& options,
                          unsigned workers, bool skip_failed) {
  std::map<Direction, std::vector<Episode>> by_direction;
  for (const auto& e : episodes) by_direction[e.stratum.direction].push_back(e);

  struct Task {
    Direction direction;
    Transition transition;
  };
  std::vector<Task> tasks;
  for (const auto& [d, eps] : by_direction) {
    for (const auto& t : space.allowed_transitions()) tasks.push_back({d, t});
  }
  std::vector<std::optional<CoxFit>> results(tasks.size());
  std::vector<std::string> skipped(tasks.size());
  std::vector<std::string> failed(tasks.size());
  parallel_for(tasks.size(), workers, [&](std::size_t i) {
    const auto& task = tasks[i];
    const auto& eps = by_direction.at(task.direction);
    const auto data = make_cox_data(eps, task.transition, model);
    const std::string where = fmt::format("direction {} transition {}",
                                          static_cast<int>(task.direction), task.transition.label());
    if (data.events() == 0) {
      skipped[i] = where + ": no events; transition treated as event-free";
      return;
    }
    try {
      auto fit = fit_cox(data, options);
      fit.direction = task.direction;
      fit.model_name = model.name;
      for (const auto& name : model.covariates) fit.covariate_scale[name] = model.divisor(name);
      results[i] = std::move(fit);
    } catch (const Error& e) {
      const auto msg = fmt::format("direction {}: {}", static_cast<int>(task.direction), e.what());
      if (!skip_failed || e.kind() != ErrorKind::Estimation) throw Error(e.kind(), msg);
      failed[i] = msg;
    }
  });

  CoxFitSet out;
  out.model_name = model.name;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    if (results[i]) out.fits.push_back(std::move(*results[i]));
    if (!skipped[i].empty()) out.warnings.push_back(skipped[i]);
    if (!failed[i].empty()) out.failures.push_back(failed[i]);
  }
  return out;
}

// ---------------------------------------------------------------------------

double linear_predictor(const CoxFit& fit, const Scenario& scenario) {
  double lp = 0.0;
  for (std::size_t k = 0; k < fit.covariate_names.size(); ++k) {
    const auto& name = fit.covariate_names[k];
    const auto it = scenario.values.find(name);
    if (it == scenario.values.end()) {
      throw Error(ErrorKind::InvalidArgument,
                  "scenario '" + scenario.name + "' does not assign covariate '" + name + "'");
    }
    const auto s = fit.covariate_scale.find(name);
    const double divisor = s == fit.covariate_scale.end() ? 1.0 : s->second;
    lp += fit.coef(static_cast<Eigen::Index>(k)) * it->second / divisor;
  }
  return lp;
}

HazardSet scenario_hazards(const StateSpace& space, const std::map<Transition, CoxFit>& fits,
                           const Scenario& scenario) {
  for (const auto& [name, value] : scenario.values) {
    if (std::find(known_covariates().begin(), known_covariates().end(), name) ==
        known_covariates().end()) {
      throw Error(ErrorKind::InvalidArgument,
                  "scenario '" + scenario.name + "' assigns unknown covariate '" + name + "'");
    }
    if (!std::isfinite(value)) {
      throw Error(ErrorKind::InvalidArgument,
                  "scenario '" + scenario.name + "' has a non-finite value for '" + name + "'");
    }
  }
  std::map<Transition, CumulativeHazard> hazards;
  std::vector<std::string> warnings;
  for (const auto& t : space.allowed_transitions()) {
    const auto it = fits.find(t);
    if (it == fits.end()) {
      warnings.push_back("transition " + t.label() + " has no fitted model; zero hazard used");
      continue;
    }
    hazards.emplace(t, it->second.baseline.scaled(std::exp(linear_predictor(it->second, scenario))));
  }
  Stratum stratum;
  if (!fits.empty()) stratum.direction = fits.begin()->second.direction;
  auto hs = make_hazard_set(space, stratum, std::move(hazards));
  hs.warnings.insert(hs.warnings.begin(), warnings.begin(), warnings.end());
  return hs;
}

TransitionMatrix predict_matrix(const StateSpace& space, const std::map<Transition, CoxFit>& fits,
                                const Scenario& scenario, double v, double t) {
  const auto hs = scenario_hazards(space, fits, scenario);
  try {
    return aalen_johansen(hs, v, t);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::Estimation) throw;
    throw Error(ErrorKind::Estimation,
                std::string(e.what()) + " under scenario '" + scenario.name +
                    "'; covariate scaling of the step-function baseline overloads the risk set, "
                    "use a finer event grid or treat this scenario as out of range");
  }
}

std::vector<double> scenario_elos(const StateSpace& space,
                                  const std::map<Transition, CoxFit>& fits,
                                  const Scenario& scenario, double tau_max,
                                  ElosEstimand estimand) {
  const auto hs = scenario_hazards(space, fits, scenario);
  std::vector<double> out;
  for (std::size_t r = 0; r < space.size(); ++r) {
    out.push_back(elos(hs, static_cast<State>(r), tau_max, estimand));
  }
  return out;
}

Eigen::MatrixXd delta_matrix(const StateSpace& space, const std::map<Transition, CoxFit>& fits,
                             const Scenario& worst, const Scenario& best, double horizon) {
  const auto pw = predict_matrix(space, fits, worst, 0.0, horizon);
  const auto pb = predict_matrix(space, fits, best, 0.0, horizon);
  return 100.0 * (pw.entries() - pb.entries());
}

// ---------------------------------------------------------------------------

namespace {

Eigen::VectorXd average_ranks(const Eigen::VectorXd& x) {
  const auto n = x.size();
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return x(a) < x(b); });
  Eigen::VectorXd ranks(n);
  std::size_t i = 0;
  while (i < idx.size()) {
    std::size_t j = i;
    while (j + 1 < idx.size() && x(idx[j + 1]) == x(idx[i])) ++j;
    const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks(idx[k]) = r;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double pearson(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  if (x.size() != y.size()) throw Error(ErrorKind::InvalidArgument, "pearson: size mismatch");
  if (x.size() < 2) return kMissing;
  const Eigen::VectorXd cx = x.array() - x.mean();
  const Eigen::VectorXd cy = y.array() - y.mean();
  const double den = std::sqrt(cx.squaredNorm() * cy.squaredNorm());
  return den > 0.0 ? cx.dot(cy) / den : kMissing;
}

double spearman(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  if (x.size() != y.size()) throw Error(ErrorKind::InvalidArgument, "spearman: size mismatch");
  if (x.size() < 2) return kMissing;
  const Eigen::VectorXd rx = average_ranks(x).array() - (static_cast<double>(x.size()) + 1.0) / 2.0;
  const Eigen::VectorXd ry = average_ranks(y).array() - (static_cast<double>(y.size()) + 1.0) / 2.0;
  const double den = std::sqrt(rx.squaredNorm() * ry.squaredNorm());
  return den > 0.0 ? rx.dot(ry) / den : kMissing;
}

SchoenfeldResult schoenfeld_residuals(const CoxData& data, const Eigen::VectorXd& beta) {
  const auto p = data.z.cols();
  std::vector<double> times;
  std::vector<Eigen::VectorXd> rows;
  if (data.size() > 0) {
    const Eigen::VectorXd eta = data.z * beta;
    sweep(data, eta, eta.maxCoeff(), false,
          [&](double t, const RiskSums& rs, const std::vector<Eigen::Index>& events) {
            const Eigen::VectorXd mean = rs.s1 / rs.s0;
            for (auto k : events) {
              times.push_back(t);
              rows.push_back(data.z.row(k).transpose() - mean);
            }
          });
  }
  SchoenfeldResult out;
  const auto m = static_cast<Eigen::Index>(times.size());
  out.times.resize(m);
  out.residuals.resize(m, p);
  // sweep visits times in decreasing order; report them increasing
  for (Eigen::Index i = 0; i < m; ++i) {
    out.times(i) = times[static_cast<std::size_t>(m - 1 - i)];
    out.residuals.row(i) = rows[static_cast<std::size_t>(m - 1 - i)].transpose();
  }
  // Residuals are correlated with the rank of event time, not ranked
  // themselves: for an indicator the residual is 1 - m(t) or -m(t), and
  // ranking would turn the slow drift of m(t) into a spurious trend.
  const Eigen::VectorXd time_ranks = m > 0 ? average_ranks(out.times) : Eigen::VectorXd();
  for (Eigen::Index k = 0; k < p; ++k) {
    SchoenfeldTrend trend;
    trend.covariate = data.names[static_cast<std::size_t>(k)];
    trend.rho = pearson(out.residuals.col(k), time_ranks);
    if (m >= 3 && std::isfinite(trend.rho) && std::abs(trend.rho) < 1.0) {
      const double df = static_cast<double>(m - 2);
      trend.statistic = trend.rho * std::sqrt(df / (1.0 - trend.rho * trend.rho));
      boost::math::students_t dist(df);
      trend.p_value = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(trend.statistic)));
    } else if (m >= 3 && std::isfinite(trend.rho)) {
      trend.statistic = std::copysign(INFINITY, trend.rho);
      trend.p_value = 0.0;
    } else {
      trend.statistic = kMissing;
      trend.p_value = kMissing;
    }
    out.trends.push_back(trend);
  }
  return out;
}

double normal_two_sided_p(double z) { return std::erfc(std::abs(z) / std::sqrt(2.0)); }

HazardRatioRow hazard_ratio_row(double coef, double std_err) {
  HazardRatioRow row;
  row.coef = coef;
  row.std_err = std_err;
  row.hr = std::exp(coef);
  row.ci_low = std::exp(coef - kWaldZ * std_err);
  row.ci_high = std::exp(coef + kWaldZ * std_err);
  row.p_value = std_err > 0.0 ? normal_two_sided_p(coef / std_err) : kMissing;
  return row;
}

std::vector<HazardRatioRow> hazard_ratio_table(std::span<const CoxFit> fits) {
  std::vector<HazardRatioRow> out;
  for (const auto& f : fits) {
    for (std::size_t k = 0; k < f.covariate_names.size(); ++k) {
      const auto i = static_cast<Eigen::Index>(k);
      const double var = f.covariance(i, i);
      auto row = hazard_ratio_row(f.coef(i), std::isfinite(var) ? std::sqrt(var) : kMissing);
      row.transition = f.transition;
      row.direction = f.direction;
      row.covariate = f.covariate_names[k];
      out.push_back(std::move(row));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

double number(const nlohmann::json& j) {
  return j.is_null() ? kMissing : j.get<double>();
}

nlohmann::json number_json(double x) {
  return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr);
}

}  // namespace

nlohmann::json to_json(const CumulativeHazard& h) {
  nlohmann::json times = nlohmann::json::array(), inc = nlohmann::json::array(),
                 events = nlohmann::json::array(), at_risk = nlohmann::json::array();
  for (const auto& s : h.steps()) {
    times.push_back(s.time);
    inc.push_back(s.increment);
    events.push_back(s.events);
    at_risk.push_back(s.at_risk);
  }
  return {{"transition", {h.transition().from, h.transition().to}},
          {"time", times},
          {"increment", inc},
          {"events", events},
          {"at_risk", at_risk}};
}

CumulativeHazard cumulative_hazard_from_json(const nlohmann::json& j) {
  try {
    const auto tr = j.at("transition");
    const auto& times = j.at("time");
    const auto& inc = j.at("increment");
    const auto& events = j.at("events");
    const auto& at_risk = j.at("at_risk");
    if (inc.size() != times.size() || events.size() != times.size() ||
        at_risk.size() != times.size()) {
      throw Error(ErrorKind::Input, "hazard arrays differ in length");
    }
    std::vector<HazardStep> steps;
    for (std::size_t i = 0; i < times.size(); ++i) {
      steps.push_back({times[i].get<double>(), inc[i].get<double>(), events[i].get<int>(),
                       at_risk[i].get<double>()});
    }
    return CumulativeHazard({tr.at(0).get<State>(), tr.at(1).get<State>()}, std::move(steps));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Input, std::string("malformed hazard document: ") + e.what());
  }
}

nlohmann::json to_json(const CoxFit& fit) {
  nlohmann::json coef = nlohmann::json::array();
  nlohmann::json cov = nlohmann::json::array();
  for (Eigen::Index i = 0; i < fit.coef.size(); ++i) {
    coef.push_back(number_json(fit.coef(i)));
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index k = 0; k < fit.covariance.cols(); ++k) row.push_back(number_json(fit.covariance(i, k)));
    cov.push_back(row);
  }
  return {{"schema", kCoxFitSchema},
          {"transition", {fit.transition.from, fit.transition.to}},
          {"direction", static_cast<int>(fit.direction)},
          {"model", fit.model_name},
          {"covariates", fit.covariate_names},
          {"scale", fit.covariate_scale},
          {"coef", coef},
          {"covariance", cov},
          {"baseline", to_json(fit.baseline)},
          {"n_events", fit.n_events},
          {"n_at_risk", fit.n_at_risk},
          {"iterations", fit.iterations},
          {"converged", fit.converged},
          {"log_likelihood", number_json(fit.log_likelihood)},
          {"ties", fit.ties},
          {"warnings", fit.warnings}};
}

CoxFit cox_fit_from_json(const nlohmann::json& j) {
  try {
    if (j.at("schema").get<std::string>() != kCoxFitSchema) {
      throw Error(ErrorKind::Input, "unsupported fit schema '" + j.at("schema").get<std::string>() +
                                        "', expected '" + kCoxFitSchema + "'");
    }
    CoxFit fit;
    fit.transition = {j.at("transition").at(0).get<State>(), j.at("transition").at(1).get<State>()};
    fit.direction = static_cast<Direction>(j.at("direction").get<int>());
    fit.model_name = j.at("model").get<std::string>();
    fit.covariate_names = j.at("covariates").get<std::vector<std::string>>();
    fit.covariate_scale = j.at("scale").get<std::map<std::string, double>>();
    const auto p = static_cast<Eigen::Index>(fit.covariate_names.size());
    const auto& coef = j.at("coef");
    const auto& cov = j.at("covariance");
    if (static_cast<Eigen::Index>(coef.size()) != p || static_cast<Eigen::Index>(cov.size()) != p) {
      throw Error(ErrorKind::Input, "coefficient arrays do not match the covariate list");
    }
    fit.coef.resize(p);
    fit.covariance.resize(p, p);
    for (Eigen::Index i = 0; i < p; ++i) {
      fit.coef(i) = number(coef.at(static_cast<std::size_t>(i)));
      const auto& row = cov.at(static_cast<std::size_t>(i));
      if (static_cast<Eigen::Index>(row.size()) != p) {
        throw Error(ErrorKind::Input, "covariance matrix is not square");
      }
      for (Eigen::Index k = 0; k < p; ++k) fit.covariance(i, k) = number(row.at(static_cast<std::size_t>(k)));
    }
    fit.baseline = cumulative_hazard_from_json(j.at("baseline"));
    fit.n_events = j.at("n_events").get<int>();
    fit.n_at_risk = j.at("n_at_risk").get<int>();
    fit.iterations = j.at("iterations").get<int>();
    fit.converged = j.at("converged").get<bool>();
    fit.log_likelihood = number(j.at("log_likelihood"));
    fit.ties = j.at("ties").get<std::string>();
    fit.warnings = j.at("warnings").get<std::vector<std::string>>();
    return fit;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Input, std::string("malformed fit document: ") + e.what());
  }
}

}  // namespace msdelay
