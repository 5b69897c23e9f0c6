#include "msdelay/report.hpp"

#include "msdelay/delimited.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <cstdint>

namespace msdelay {

std::string fnv1a_hex(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return fmt::format("{:016x}", h);
}

namespace {

const std::vector<std::pair<std::string, std::string>>& module_versions() {
  static const std::vector<std::pair<std::string, std::string>> v{
      {"core-types", "1"},    {"ingestion", "1"}, {"episode-builder", "1"},
      {"nonparametric", "1"}, {"cox", "1"},       {"synthetic-generator", "1"}};
  return v;
}

}  // namespace

std::string provenance_block(const Provenance& p) {
  std::string modules;
  for (const auto& [name, v] : module_versions()) {
    modules += (modules.empty() ? "" : " ") + name + "/" + v;
  }
  std::string out = fmt::format("# msdelay {}\n# command: {}\n# config_hash: {}\n# modules: {}\n",
                                kVersion, p.command, p.config_hash, modules);
  if (p.timestamp) out += "# generated: " + *p.timestamp + "\n";
  return out;
}

nlohmann::json provenance_json(const Provenance& p) {
  nlohmann::json modules = nlohmann::json::object();
  for (const auto& [name, v] : module_versions()) modules[name] = v;
  nlohmann::json j{{"tool", "msdelay"},
                   {"version", kVersion},
                   {"command", p.command},
                   {"config_hash", p.config_hash},
                   {"modules", modules}};
  if (p.timestamp) j["generated"] = *p.timestamp;
  return j;
}

std::string format_fixed(double value, int decimals) {
  if (std::isnan(value)) return "NA";
  std::string s = fmt::format("{:.{}f}", value, decimals);
  if (s.starts_with("-") && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
  return s;
}

std::string format_interval(double estimate, double low, double high, int decimals) {
  return fmt::format("{} ({}-{})", format_fixed(estimate, decimals), format_fixed(low, decimals),
                     format_fixed(high, decimals));
}

std::string format_p_value(double p) {
  if (std::isnan(p)) return "NA";
  if (p >= 1e-4) return format_fixed(p, 4);
  return fmt::format("{:.2e}", p);
}

void Table::add_row(std::vector<std::string> row) {
  if (row.size() != header_.size()) {
    throw Error(ErrorKind::InvalidArgument, "table row width does not match the header");
  }
  rows_.push_back(std::move(row));
}

std::string Table::to_text() const {
  std::vector<std::size_t> width(header_.size());
  for (std::size_t c = 0; c < header_.size(); ++c) width[c] = header_[c].size();
  for (const auto& r : rows_) {
    for (std::size_t c = 0; c < r.size(); ++c) width[c] = std::max(width[c], r[c].size());
  }
  std::string out;
  const auto line = [&](const std::vector<std::string>& r) {
    for (std::size_t c = 0; c < r.size(); ++c) {
      out += c == 0 ? fmt::format("{:<{}}", r[c], width[c]) : fmt::format("  {:>{}}", r[c], width[c]);
    }
    out += '\n';
  };
  line(header_);
  std::size_t total = 0;
  for (auto w : width) total += w;
  out += std::string(total + 2 * (width.empty() ? 0 : width.size() - 1), '-') + '\n';
  for (const auto& r : rows_) line(r);
  return out;
}

void Table::write_delimited(std::ostream& out, char delimiter) const {
  write_record(out, header_, delimiter);
  for (const auto& r : rows_) write_record(out, r, delimiter);
}

Table hazard_ratio_report(std::span<const HazardRatioRow> rows,
                          const std::vector<std::string>& state_labels) {
  Table t({"direction", "transition", "from", "to", "covariate", "coef", "hr", "ci_95",
           "std_err", "p_value"});
  for (const auto& r : rows) {
    const auto label = [&](State s) {
      return static_cast<std::size_t>(s) < state_labels.size()
                 ? state_labels[static_cast<std::size_t>(s)]
                 : std::to_string(s);
    };
    t.add_row({std::to_string(static_cast<int>(r.direction)),
               r.transition.label(),
               label(r.transition.from), label(r.transition.to), r.covariate,
               format_fixed(r.coef, 4), format_fixed(r.hr, 4),
               fmt::format("[{}, {}]", format_fixed(r.ci_low, 4), format_fixed(r.ci_high, 4)),
               format_fixed(r.std_err, 4), format_p_value(r.p_value)});
  }
  return t;
}

Table matrix_report(const Eigen::MatrixXd& values, const std::vector<std::string>& labels,
                    int decimals, bool signed_values) {
  std::vector<std::string> header{"from \\ to"};
  header.insert(header.end(), labels.begin(), labels.end());
  Table t(header);
  for (Eigen::Index r = 0; r < values.rows(); ++r) {
    std::vector<std::string> row{labels.at(static_cast<std::size_t>(r))};
    for (Eigen::Index c = 0; c < values.cols(); ++c) {
      auto s = format_fixed(values(r, c), decimals);
      if (signed_values && s != "0" && !s.starts_with("-") &&
          s.find_first_not_of("0.") != std::string::npos) {
        s = "+" + s;
      }
      row.push_back(std::move(s));
    }
    t.add_row(std::move(row));
  }
  return t;
}

}  // namespace msdelay
