#pragma once

#include "msdelay/cox.hpp"
#include "msdelay/types.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace msdelay {

inline constexpr const char* kVersion = "0.1.0";

/// 64-bit FNV-1a digest as 16 hex digits.
std::string fnv1a_hex(std::string_view data);

struct Provenance {
  std::string command;
  std::string config_hash;
  std::optional<std::string> timestamp;  // omitted for reproducible output
};

/// '#'-prefixed header naming the tool version, module versions, command and
/// config hash. Delimited readers skip it.
std::string provenance_block(const Provenance& p);
nlohmann::json provenance_json(const Provenance& p);

/// Fixed decimals; NaN prints as "NA".
std::string format_fixed(double value, int decimals);
/// "74.06 (69.07-78.88)".
std::string format_interval(double estimate, double low, double high, int decimals = 2);
/// Four decimals, or scientific notation below 1e-4.
std::string format_p_value(double p);

/// Rectangular table rendered as aligned text or delimited text.
class Table {
 public:
  explicit Table(std::vector<std::string> header) : header_(std::move(header)) {}

  void add_row(std::vector<std::string> row);
  const std::vector<std::string>& header() const noexcept { return header_; }
  const std::vector<std::vector<std::string>>& rows() const noexcept { return rows_; }

  std::string to_text() const;
  void write_delimited(std::ostream& out, char delimiter = ',') const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

/// One row per (transition, covariate): Coef, HR, 95% CI, Std Err, p-value.
Table hazard_ratio_report(std::span<const HazardRatioRow> rows,
                          const std::vector<std::string>& state_labels);

/// Rows are the current state, columns the state after the horizon.
Table matrix_report(const Eigen::MatrixXd& values, const std::vector<std::string>& labels,
                    int decimals, bool signed_values = false);

}  // namespace msdelay
