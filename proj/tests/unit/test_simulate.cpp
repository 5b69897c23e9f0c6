#include "msdelay/episodes.hpp"
#include "msdelay/simulate.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>

using namespace msdelay;

namespace {

Baseline constant(double rate) {
  Baseline b;
  b.rate = rate;
  return b;
}

IntensitySpec long_run(int missions) {
  IntensitySpec s;
  s.n_missions = missions;
  s.run_minutes = 20000.0;
  s.seed = 99;
  return s;
}

std::vector<double> completed(const std::vector<Episode>& eps, State from, std::optional<State> to = {}) {
  std::vector<double> out;
  for (const auto& e : eps) {
    if (e.from == from && e.to && (!to || *e.to == *to)) out.push_back(e.duration);
  }
  return out;
}

}  // namespace

TEST_CASE("baselines") {
  Baseline p;
  p.family = BaselineFamily::Piecewise;
  p.breaks = {0, 10};
  p.rates = {0.1, 0.2};
  CHECK(p.cumulative(5) == doctest::Approx(0.5));
  CHECK(p.cumulative(15) == doctest::Approx(2.0));
  CHECK(p.inverse(2.0) == doctest::Approx(15));

  Baseline w;
  w.family = BaselineFamily::Weibull;
  w.shape = 2.0;
  w.scale = 10.0;
  CHECK(w.cumulative(20) == doctest::Approx(4.0));
  CHECK(w.inverse(w.cumulative(7.5)) == doctest::Approx(7.5));

  CHECK(constant(0).zero());
  CHECK(std::isinf(constant(0).inverse(1.0)));
  Baseline bad = p;
  bad.breaks = {1, 10};
  CHECK_THROWS_AS(bad.validate("x"), Error);
}

TEST_CASE("exponential sojourns have the right mean") {
  auto s = long_run(60);
  s.transitions = {{{0, 1}, constant(0.1), {}, {}}, {{1, 0}, constant(0.1), {}, {}}};
  const auto d = completed(latent_episodes(simulate(s)), 0);
  REQUIRE(d.size() > 50000);
  double mean = 0.0;
  for (double x : d) mean += x;
  mean /= static_cast<double>(d.size());
  CHECK(std::abs(mean - 10.0) < 0.1);
}

TEST_CASE("weibull sojourns pass a KS check") {
  auto s = long_run(60);
  Baseline w;
  w.family = BaselineFamily::Weibull;
  w.shape = 1.5;
  w.scale = 20.0;
  s.transitions = {{{0, 1}, w, {}, {}}, {{1, 0}, constant(1.0), {}, {}}};
  auto d = completed(latent_episodes(simulate(s)), 0);
  REQUIRE(d.size() > 40000);
  std::sort(d.begin(), d.end());
  double ks = 0.0;
  const double n = static_cast<double>(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double f = 1.0 - std::exp(-w.cumulative(d[i]));
    ks = std::max({ks, std::abs(f - static_cast<double>(i) / n), std::abs(f - static_cast<double>(i + 1) / n)});
  }
  CHECK(ks < 0.01);
}

TEST_CASE("competing exits follow the cause-specific rates") {
  auto s = long_run(60);
  s.transitions = {{{0, 1}, constant(0.03), {}, {}},
                   {{0, 2}, constant(0.01), {}, {}},
                   {{1, 0}, constant(0.5), {}, {}},
                   {{2, 0}, constant(0.5), {}, {}}};
  const auto eps = latent_episodes(simulate(s));
  const auto all = completed(eps, 0);
  const auto to1 = completed(eps, 0, 1);
  REQUIRE(all.size() > 10000);
  const double n = static_cast<double>(all.size());
  CHECK(std::abs(static_cast<double>(to1.size()) / n - 0.75) < 0.01);
  for (double u : {10.0, 20.0, 40.0}) {
    const auto hits = std::count_if(to1.begin(), to1.end(), [&](double x) { return x <= u; });
    const double cif = 0.75 * (1.0 - std::exp(-0.04 * u));
    CHECK(std::abs(static_cast<double>(hits) / n - cif) < 0.01);
  }
}

TEST_CASE("zero intensities give one censored sojourn per mission") {
  IntensitySpec s;
  s.n_missions = 25;
  const auto sim = simulate(s);
  for (const auto& m : sim.missions) {
    REQUIRE(m.latent.size() == 1);
    CHECK(m.latent[0].censored());
    CHECK(m.latent[0].duration == doctest::Approx(m.stops.back().time));
    for (const auto& stop : m.stops) CHECK(stop.state == 0);
  }

  auto inf = s;
  inf.run_minutes = INFINITY;
  try {
    inf.validate();
    FAIL("expected a config error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Config);
    CHECK(std::string(e.what()).find("infinite sojourn") != std::string::npos);
  }
}

TEST_CASE("intensity spec validation and JSON") {
  IntensitySpec s;
  s.transitions = {{{0, 1}, constant(0.1), {{"boarded", 0.4}}, {}}};
  const auto back = IntensitySpec::from_json(s.to_json());
  CHECK(back.to_json() == s.to_json());

  auto j = s.to_json();
  j["colour"] = 1;
  CHECK_THROWS_AS(IntensitySpec::from_json(j), Error);

  auto unknown = s;
  unknown.transitions[0].beta["colour"] = 1.0;
  CHECK_THROWS_AS(unknown.validate(), Error);

  auto adjacent = s;
  adjacent.structure = TransitionStructure::AdjacentOnly;
  adjacent.transitions = {{{0, 2}, constant(0.1), {}, {}}};
  CHECK_THROWS_AS(adjacent.validate(), Error);

  auto initial = s;
  initial.initial = {0.5, 0.2};
  CHECK_THROWS_AS(initial.validate(), Error);
}

TEST_CASE("true hazards and sojourns") {
  IntensitySpec s;
  s.transitions = {{{0, 1}, constant(0.1), {{"adverse_weather", std::log(2.0)}}, {}},
                   {{0, 2}, constant(0.05), {}, {}}};
  CHECK(true_cumulative_hazard(s, {0, 1}, 10, {{"adverse_weather", 1.0}}) == doctest::Approx(2.0));
  CHECK(true_cumulative_hazard(s, {1, 2}, 10, {}) == 0.0);
  // exits at total rate 0.15: restricted mean (1 - exp(-0.15 tau)) / 0.15
  CHECK(true_sojourn_elos(s, 0, 30, {}) == doctest::Approx((1 - std::exp(-4.5)) / 0.15).epsilon(1e-4));
  CHECK(true_sojourn_elos(s, 1, 30, {}) == doctest::Approx(30.0));

  s.transitions[1].time_varying = TimeVaryingEffect{"boarded", 1.0, 5.0};
  CHECK(true_cumulative_hazard(s, {0, 2}, 10, {{"boarded", 1.0}}) ==
        doctest::Approx(0.25 + 0.25 * std::exp(1.0)));
}

TEST_CASE("same seed, same output, any worker count") {
  IntensitySpec s;
  s.n_missions = 80;
  s.seed = 1234;
  s.initial = {0.7, 0.2, 0.1};
  s.transitions = {{{0, 1}, constant(0.05), {{"boarded", 0.4}}, {}},
                   {{1, 0}, constant(0.05), {}, {}},
                   {{1, 2}, constant(0.02), {}, {}},
                   {{2, 1}, constant(0.03), {}, {}}};
  const auto a = simulate(s, LineConfig::s5(), 1);
  const auto b = simulate(s, LineConfig::s5(), 3);
  REQUIRE(a.missions.size() == b.missions.size());
  for (std::size_t m = 0; m < a.missions.size(); ++m) {
    const auto& x = a.missions[m];
    const auto& y = b.missions[m];
    REQUIRE(x.latent.size() == y.latent.size());
    for (std::size_t k = 0; k < x.latent.size(); ++k) {
      CHECK(x.latent[k].duration == y.latent[k].duration);
      CHECK(x.latent[k].to == y.latent[k].to);
    }
    for (std::size_t k = 0; k < x.stops.size(); ++k) {
      CHECK(x.stops[k].delay == y.stops[k].delay);
      CHECK(x.stops[k].covariates == y.stops[k].covariates);
    }
  }
  s.seed = 1235;
  const auto c = simulate(s);
  bool differs = false;
  for (std::size_t m = 0; m < a.missions.size() && !differs; ++m) {
    differs = a.missions[m].latent.size() != c.missions[m].latent.size() ||
              a.missions[m].latent[0].duration != c.missions[m].latent[0].duration;
  }
  CHECK(differs);
}

TEST_CASE("latent path and panel agree") {
  IntensitySpec s;
  s.n_missions = 50;
  s.transitions = {{{0, 1}, constant(0.05), {}, {}}, {{1, 0}, constant(0.05), {}, {}}};
  const auto sim = simulate(s);
  const auto space = s.space();
  for (const auto& m : sim.missions) {
    double total = 0.0;
    for (const auto& e : m.latent) total += e.duration;
    CHECK(total == doctest::Approx(m.stops.back().time));
    for (const auto& stop : m.stops) CHECK(space.classify(stop.delay) == stop.state);
  }
}

TEST_CASE("emitted files ingest cleanly") {
  IntensitySpec s;
  s.n_missions = 40;
  s.missions_per_day = 20;
  s.seed = 8;
  s.transitions = {{{0, 1}, constant(0.06), {{"boarded", 0.3}}, {}},
                   {{1, 0}, constant(0.05), {}, {}},
                   {{1, 2}, constant(0.03), {}, {}},
                   {{2, 1}, constant(0.04), {}, {}}};
  const auto line = LineConfig::s5();
  const auto sim = simulate(s, line);
  const auto dir = std::filesystem::temp_directory_path() / "msdelay_test_simulate";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  emit_stop_files(sim, line, dir);

  const auto stops = parse_stops(dir / "stops.csv");
  const auto weather = parse_weather(dir / "weather.csv");
  const auto freq = parse_frequency(dir / "frequency.csv");
  CHECK(stops.rejections.empty());
  CHECK(weather.rejections.empty());
  CHECK(freq.rejections.empty());
  CHECK(stops.records.size() == 40 * line.stations().size());

  const auto table = build_analysis_table(stops.records, weather.records, freq.records, line, {});
  CHECK(table.rows.size() == stops.records.size());
  CHECK(table.report.missing_weather == 0);
  const auto set = build_trajectories(table.rows);
  CHECK(set.quarantined.empty());

  const auto space = s.space();
  auto from_files = build_episodes(set.trajectories, space);
  auto direct = build_episodes(panel_trajectories(sim), space);
  REQUIRE(from_files.size() == direct.size());
  const auto key = [](const Episode& e) {
    return std::make_tuple(e.unit.day, e.unit.mission, e.unit.station, e.from);
  };
  const auto by_key = [&](const Episode& a, const Episode& b) { return key(a) < key(b); };
  std::stable_sort(from_files.begin(), from_files.end(), by_key);
  std::stable_sort(direct.begin(), direct.end(), by_key);
  for (std::size_t i = 0; i < direct.size(); ++i) {
    CHECK(from_files[i].from == direct[i].from);
    CHECK(from_files[i].to == direct[i].to);
    CHECK(from_files[i].duration == doctest::Approx(direct[i].duration).epsilon(1e-9));
    CHECK(from_files[i].covariates == direct[i].covariates);
    CHECK(from_files[i].stratum.direction == direct[i].stratum.direction);
    CHECK(from_files[i].stratum.time_slot == direct[i].stratum.time_slot);
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("ground truth document") {
  IntensitySpec s;
  s.transitions = {{{0, 1}, constant(0.1), {{"boarded", 0.4}}, {}}};
  const auto g = ground_truth(s, 130, 2000);
  CHECK(g.at("beta").at("0->1").at("boarded") == 0.4);
  CHECK(g.at("elos").size() == 3);
}
