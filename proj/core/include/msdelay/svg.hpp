#pragma once

#include "msdelay/cox.hpp"
#include "msdelay/types.hpp"

#include <span>
#include <string>
#include <vector>

namespace msdelay {

/// Occupancy path P(0, u) for one stratum, drawn as one stacked panel per
/// starting state.
struct StackedRow {
  std::string title;
  std::vector<TransitionMatrix> path;  // from aalen_johansen_path
};

/// Grid of stacked-probability panels: rows are strata, columns starting
/// states, stacks the state occupied after u minutes.
std::string stacked_probability_svg(std::span<const StackedRow> rows,
                                    const std::vector<std::string>& labels, double horizon);

/// Hazard ratios with 95% intervals on a log axis, one line per row.
std::string forest_plot_svg(std::span<const HazardRatioRow> rows, const std::string& title);

}  // namespace msdelay
