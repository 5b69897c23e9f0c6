#pragma once

// Independent reference implementations used by the unit and acceptance
// tests. Nothing here calls into the estimators under test.

#include "msdelay/types.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <set>
#include <stdexcept>
#include <vector>

namespace oracle {

struct Fraction {
  long long num = 0;
  long long den = 1;

  Fraction() = default;
  Fraction(long long n, long long d = 1) : num(n), den(d) { normalize(); }

  void normalize() {
    if (den == 0) throw std::domain_error("zero denominator");
    if (den < 0) {
      num = -num;
      den = -den;
    }
    const long long g = std::gcd(num < 0 ? -num : num, den);
    if (g > 1) {
      num /= g;
      den /= g;
    }
  }
  static Fraction make(__int128 n, __int128 d) {
    if (d < 0) {
      n = -n;
      d = -d;
    }
    __int128 a = n < 0 ? -n : n, b = d;
    while (b != 0) {
      const __int128 t = a % b;
      a = b;
      b = t;
    }
    if (a > 1) {
      n /= a;
      d /= a;
    }
    if (n > INT64_MAX || n < INT64_MIN || d > INT64_MAX) throw std::overflow_error("fraction overflow");
    Fraction f;
    f.num = static_cast<long long>(n);
    f.den = static_cast<long long>(d);
    return f;
  }
  friend Fraction operator+(Fraction a, Fraction b) {
    return make(static_cast<__int128>(a.num) * b.den + static_cast<__int128>(b.num) * a.den,
                static_cast<__int128>(a.den) * b.den);
  }
  friend Fraction operator-(Fraction a, Fraction b) { return a + Fraction(-b.num, b.den); }
  friend Fraction operator*(Fraction a, Fraction b) {
    return make(static_cast<__int128>(a.num) * b.num, static_cast<__int128>(a.den) * b.den);
  }
  friend bool operator==(Fraction a, Fraction b) { return a.num == b.num && a.den == b.den; }
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
};

struct NaStep {
  double time = 0.0;
  Fraction increment;
  int events = 0;
  int at_risk = 0;
};

/// dN/Y by direct counting at every distinct event time.
inline std::vector<NaStep> nelson_aalen(const std::vector<msdelay::Episode>& eps, int r, int s) {
  std::set<double> times;
  for (const auto& e : eps) {
    if (e.from == r && e.to && *e.to == s) times.insert(e.duration);
  }
  std::vector<NaStep> out;
  for (double u : times) {
    int d = 0, y = 0;
    for (const auto& e : eps) {
      if (e.from != r) continue;
      if (e.duration >= u) ++y;
      if (e.to && *e.to == s && e.duration == u) ++d;
    }
    out.push_back({u, Fraction(d, y), d, y});
  }
  return out;
}

using FMatrix = std::vector<std::vector<Fraction>>;

inline FMatrix identity(int n) {
  FMatrix m(static_cast<std::size_t>(n), std::vector<Fraction>(static_cast<std::size_t>(n)));
  for (int i = 0; i < n; ++i) m[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)] = Fraction(1);
  return m;
}

inline FMatrix multiply(const FMatrix& a, const FMatrix& b) {
  const auto n = a.size();
  FMatrix c(n, std::vector<Fraction>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      Fraction acc;
      for (std::size_t k = 0; k < n; ++k) acc = acc + a[i][k] * b[k][j];
      c[i][j] = acc;
    }
  }
  return c;
}

/// Product of (I + dLambda) over event times in (v, t], every off-diagonal
/// pair allowed, in exact arithmetic.
inline FMatrix aalen_johansen(const std::vector<msdelay::Episode>& eps, int n, double v, double t) {
  std::set<double> grid;
  for (const auto& e : eps) {
    if (e.to && e.duration > v && e.duration <= t) grid.insert(e.duration);
  }
  FMatrix p = identity(n);
  for (double u : grid) {
    FMatrix f = identity(n);
    for (int r = 0; r < n; ++r) {
      for (int s = 0; s < n; ++s) {
        if (r == s) continue;
        for (const auto& step : nelson_aalen(eps, r, s)) {
          if (step.time == u) {
            f[static_cast<std::size_t>(r)][static_cast<std::size_t>(s)] = step.increment;
            f[static_cast<std::size_t>(r)][static_cast<std::size_t>(r)] =
                f[static_cast<std::size_t>(r)][static_cast<std::size_t>(r)] - step.increment;
          }
        }
      }
    }
    p = multiply(p, f);
  }
  return p;
}

/// Kaplan-Meier failure probability 1 - S(t) at each distinct event time.
inline std::vector<std::pair<double, double>> km_failure(const std::vector<double>& time,
                                                         const std::vector<bool>& event) {
  std::set<double> times;
  for (std::size_t i = 0; i < time.size(); ++i) {
    if (event[i]) times.insert(time[i]);
  }
  std::vector<std::pair<double, double>> out;
  double surv = 1.0;
  for (double u : times) {
    double d = 0, y = 0;
    for (std::size_t i = 0; i < time.size(); ++i) {
      if (time[i] >= u) ++y;
      if (event[i] && time[i] == u) ++d;
    }
    surv *= 1.0 - d / y;
    out.emplace_back(u, 1.0 - surv);
  }
  return out;
}

/// Breslow log partial likelihood by the textbook double loop.
inline double cox_loglik(const Eigen::MatrixXd& z, const Eigen::VectorXd& time,
                         const std::vector<char>& event, const Eigen::VectorXd& beta) {
  const Eigen::VectorXd eta = z * beta;
  double ll = 0.0;
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    if (!event[static_cast<std::size_t>(i)]) continue;
    long double sum = 0.0;
    for (Eigen::Index j = 0; j < z.rows(); ++j) {
      if (time(j) >= time(i)) sum += std::exp(static_cast<long double>(eta(j)));
    }
    ll += eta(i) - static_cast<double>(std::log(sum));
  }
  return ll;
}

/// Gillespie simulation of a continuous-time Markov chain with off-diagonal
/// rates `q`; returns the empirical P(X(h) = s | X(0) = r).
inline Eigen::MatrixXd markov_mc(const Eigen::MatrixXd& q, double h, int paths, std::uint64_t seed) {
  const auto n = q.rows();
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n, n);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (Eigen::Index r = 0; r < n; ++r) {
    for (int k = 0; k < paths; ++k) {
      Eigen::Index state = r;
      double t = 0.0;
      for (;;) {
        double total = 0.0;
        for (Eigen::Index s = 0; s < n; ++s) {
          if (s != state) total += q(state, s);
        }
        if (total <= 0.0) break;
        t += -std::log1p(-unif(rng)) / total;
        if (t > h) break;
        double pick = unif(rng) * total;
        Eigen::Index next = state;
        for (Eigen::Index s = 0; s < n; ++s) {
          if (s == state) continue;
          next = s;
          pick -= q(state, s);
          if (pick < 0.0) break;
        }
        state = next;
      }
      p(r, state) += 1.0;
    }
  }
  return p / static_cast<double>(paths);
}

/// Mean of min(T, tau) where T is the first of competing latent times, each
/// drawn by inverting its cumulative hazard at an Exp(1) variate.
inline double restricted_sojourn_mc(const std::vector<std::function<double(double)>>& inverse_cumhaz,
                                    double tau, int draws, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::exponential_distribution<double> e1(1.0);
  double sum = 0.0;
  for (int k = 0; k < draws; ++k) {
    double t = INFINITY;
    for (const auto& inv : inverse_cumhaz) t = std::min(t, inv(e1(rng)));
    sum += std::min(t, tau);
  }
  return sum / draws;
}

}  // namespace oracle
