#pragma once

#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace msdelay {

/// Splits one record of a delimited text file. Double-quoted fields may
/// contain the delimiter; a doubled quote inside quotes is a literal quote.
std::vector<std::string> split_record(std::string_view line, char delimiter);

/// Quotes a field when it contains the delimiter, a quote or a newline.
std::string quote_field(std::string_view field, char delimiter);

/// Line-oriented reader with a header row. Blank lines and lines starting with
/// '#' are skipped (report files carry a '#' provenance block).
class DelimitedReader {
 public:
  DelimitedReader(std::istream& in, char delimiter);

  const std::vector<std::string>& header() const noexcept { return header_; }
  std::optional<std::size_t> column(std::string_view name) const;
  bool next(std::vector<std::string>& fields);
  /// 1-based line number of the record last returned by next().
  std::size_t line_number() const noexcept { return line_; }

 private:
  std::istream& in_;
  char delimiter_;
  std::vector<std::string> header_;
  std::map<std::string, std::size_t, std::less<>> index_;
  std::size_t line_ = 0;
};

/// Shortest round-trip representation; NaN is written as "NA".
std::string format_real(double value);
/// Parses a real; "NA" and empty fields give NaN. Returns nullopt on garbage.
std::optional<double> parse_real(std::string_view text);
std::optional<long long> parse_integer(std::string_view text);

void write_record(std::ostream& out, const std::vector<std::string>& fields, char delimiter);

}  // namespace msdelay
