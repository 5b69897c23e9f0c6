#pragma once

#include "msdelay/types.hpp"

#include <string>

namespace fixture {

inline constexpr int kCensored = -1;

inline msdelay::Episode episode(int from, int to, double duration,
                                msdelay::Covariates covariates = {}) {
  msdelay::Episode e;
  e.unit = {"S", "M", msdelay::Date{}};
  e.from = from;
  if (to != kCensored) e.to = to;
  e.duration = duration;
  e.covariates = covariates;
  return e;
}

inline msdelay::Covariates covariates(double boarded, double alighted, double tph, double adverse) {
  return {boarded, alighted, tph, adverse};
}

}  // namespace fixture
