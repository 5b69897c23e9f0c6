#pragma once

#include "msdelay/nonparametric.hpp"
#include "msdelay/types.hpp"

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include <map>
#include <span>
#include <string>
#include <vector>

namespace msdelay {

/// Named covariate set. Recognised names: the raw covariates plus the
/// indicators morning, evening (reference Off-Peak) and zone1..zone3
/// (reference Zone 4). `scale` holds a divisor per covariate (default 1).
struct CovariateModel {
  std::string name;
  std::vector<std::string> covariates;
  std::map<std::string, double> scale;

  double divisor(const std::string& covariate) const;
};

/// boarded, alighted, trains_per_hour, adverse_weather, morning, evening.
CovariateModel temporal_model();
/// boarded, alighted, trains_per_hour, adverse_weather, zone1, zone2, zone3.
CovariateModel spatial_model();

const std::vector<std::string>& known_covariates();

/// Unscaled value of a covariate for an episode; NaN when unavailable.
double covariate_value(const Episode& episode, const std::string& name);

/// Design for one transition: every episode leaving `from` with complete
/// covariates; the event flag marks exits into `to`.
struct CoxData {
  Transition transition;
  std::vector<std::string> names;
  Eigen::MatrixXd z;  // scaled
  Eigen::VectorXd time;
  std::vector<char> event;
  std::size_t excluded_incomplete = 0;

  std::size_t size() const { return event.size(); }
  int events() const;
};

CoxData make_cox_data(std::span<const Episode> episodes, Transition transition,
                      const CovariateModel& model);

enum class Ties { Breslow, Efron };

std::string_view to_string(Ties t);
Ties ties_from_string(std::string_view s);

struct PartialLikelihood {
  double log_likelihood = 0.0;
  Eigen::VectorXd score;
  Eigen::MatrixXd information;  // observed information, minus the Hessian
};

PartialLikelihood partial_likelihood(const CoxData& data, const Eigen::VectorXd& beta,
                                     Ties ties = Ties::Breslow);

struct CoxOptions {
  Ties ties = Ties::Breslow;
  int max_iterations = 50;
  double loglik_tolerance = 1e-9;
  double gradient_tolerance = 1e-6;
  double divergence_bound = 20.0;
};

/// Newton-Raphson with step-halving. Throws on zero events, separation
/// (|beta| beyond the divergence bound) or collinear covariates; a
/// covariate without variance is held at 0 with a warning.
CoxFit fit_cox(const CoxData& data, const CoxOptions& options = {});
CoxFit fit_cox(std::span<const Episode> episodes, Transition transition,
               const CovariateModel& model, const CoxOptions& options = {});

/// Breslow estimate of the baseline cumulative hazard at covariate value 0.
CumulativeHazard breslow_baseline(const CoxData& data, const Eigen::VectorXd& beta,
                                  Ties ties = Ties::Breslow);

/// Fits every allowed transition of `space` separately for each direction
/// present in `episodes`. Transitions without events are skipped and reported.
/// With `skip_failed`, a fit that raises an estimation error is recorded in
/// `failures` instead of aborting the whole set.
struct CoxFitSet {
  std::string model_name;
  std::vector<CoxFit> fits;
  std::vector<std::string> warnings;
  std::vector<std::string> failures;

  std::map<Transition, CoxFit> for_direction(Direction d) const;
};

CoxFitSet fit_transitions(std::span<const Episode> episodes, const StateSpace& space,
                          const CovariateModel& model, const CoxOptions& options = {},
                          unsigned workers = 1, bool skip_failed = false);

// ---------------------------------------------------------------------------
// Prediction
// ---------------------------------------------------------------------------

/// Covariate values in raw units (indicators as 0/1).
struct Scenario {
  std::string name;
  std::map<std::string, double> values;
};

/// Linear predictor of a fit under a scenario; throws when the scenario
/// misses one of the fit's covariates.
double linear_predictor(const CoxFit& fit, const Scenario& scenario);

/// Covariate-adjusted hazards. Allowed transitions without a fit get a zero
/// hazard and a warning in the returned set.
HazardSet scenario_hazards(const StateSpace& space, const std::map<Transition, CoxFit>& fits,
                           const Scenario& scenario);

TransitionMatrix predict_matrix(const StateSpace& space, const std::map<Transition, CoxFit>& fits,
                                const Scenario& scenario, double v, double t);

std::vector<double> scenario_elos(const StateSpace& space,
                                  const std::map<Transition, CoxFit>& fits,
                                  const Scenario& scenario, double tau_max,
                                  ElosEstimand estimand = ElosEstimand::Sojourn);

/// P_worst(0, h) - P_best(0, h) in percentage points.
Eigen::MatrixXd delta_matrix(const StateSpace& space, const std::map<Transition, CoxFit>& fits,
                             const Scenario& worst, const Scenario& best, double horizon);

// ---------------------------------------------------------------------------
// Diagnostics and tables
// ---------------------------------------------------------------------------

struct SchoenfeldTrend {
  std::string covariate;
  double rho = 0.0;  // correlation of residuals with the rank of event time
  double statistic = 0.0;
  double p_value = 1.0;
};

struct SchoenfeldResult {
  Eigen::VectorXd times;      // one entry per event
  Eigen::MatrixXd residuals;  // events x covariates, scaled units
  std::vector<SchoenfeldTrend> trends;
};

SchoenfeldResult schoenfeld_residuals(const CoxData& data, const Eigen::VectorXd& beta);

/// Spearman rank correlation with average ranks for ties.
double spearman(const Eigen::VectorXd& x, const Eigen::VectorXd& y);
double pearson(const Eigen::VectorXd& x, const Eigen::VectorXd& y);

struct HazardRatioRow {
  Transition transition;
  Direction direction = Direction::Forward;
  std::string covariate;
  double coef = 0.0;
  double hr = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double std_err = 0.0;
  double p_value = 1.0;
};

inline constexpr double kWaldZ = 1.96;

HazardRatioRow hazard_ratio_row(double coef, double std_err);
std::vector<HazardRatioRow> hazard_ratio_table(std::span<const CoxFit> fits);

/// Two-sided p-value of a standard normal statistic.
double normal_two_sided_p(double z);

// ---------------------------------------------------------------------------
// Artifacts
// ---------------------------------------------------------------------------

inline constexpr const char* kCoxFitSchema = "msdelay.coxfit/1";

nlohmann::json to_json(const CumulativeHazard& h);
CumulativeHazard cumulative_hazard_from_json(const nlohmann::json& j);
nlohmann::json to_json(const CoxFit& fit);
CoxFit cox_fit_from_json(const nlohmann::json& j);

}  // namespace msdelay
