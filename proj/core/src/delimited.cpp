#include "msdelay/delimited.hpp"

#include "msdelay/types.hpp"

#include <charconv>
#include <cmath>

namespace msdelay {

std::vector<std::string> split_record(std::string_view line, char delimiter) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == delimiter) {
      out.push_back(std::move(field));
      field.clear();
    } else if (c != '\r') {
      field.push_back(c);
    }
  }
  out.push_back(std::move(field));
  return out;
}

std::string quote_field(std::string_view field, char delimiter) {
  if (field.find_first_of(std::string{delimiter, '"', '\n'}) == std::string_view::npos) {
    return std::string(field);
  }
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

DelimitedReader::DelimitedReader(std::istream& in, char delimiter)
    : in_(in), delimiter_(delimiter) {
  std::string line;
  while (std::getline(in_, line)) {
    ++line_;
    if (line.empty() || line[0] == '#') continue;
    if (line_ == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) {
      line.erase(0, 3);
    }
    header_ = split_record(line, delimiter_);
    for (std::size_t i = 0; i < header_.size(); ++i) index_.emplace(header_[i], i);
    return;
  }
  throw Error(ErrorKind::Input, "delimited file has no header row");
}

std::optional<std::size_t> DelimitedReader::column(std::string_view name) const {
  const auto it = index_.find(name);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

bool DelimitedReader::next(std::vector<std::string>& fields) {
  std::string line;
  while (std::getline(in_, line)) {
    ++line_;
    if (line.empty() || line == "\r" || line[0] == '#') continue;
    fields = split_record(line, delimiter_);
    return true;
  }
  return false;
}

std::string format_real(double value) {
  if (std::isnan(value)) return "NA";
  if (value == 0.0) return "0";  // also folds -0
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

std::optional<double> parse_real(std::string_view text) {
  while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
  while (!text.empty() && text.back() == ' ') text.remove_suffix(1);
  if (text.empty() || text == "NA" || text == "na" || text == "NaN") return kMissing;
  if (text.front() == '+') text.remove_prefix(1);
  double out = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), out);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) return std::nullopt;
  return out;
}

std::optional<long long> parse_integer(std::string_view text) {
  while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
  while (!text.empty() && text.back() == ' ') text.remove_suffix(1);
  long long out = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), out);
  if (text.empty() || res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
    return std::nullopt;
  }
  return out;
}

void write_record(std::ostream& out, const std::vector<std::string>& fields, char delimiter) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i > 0) out << delimiter;
    out << quote_field(fields[i], delimiter);
  }
  out << '\n';
}

}  // namespace msdelay
