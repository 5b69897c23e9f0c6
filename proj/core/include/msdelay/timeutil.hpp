#pragma once

#include "msdelay/types.hpp"

#include <optional>
#include <string>
#include <string_view>

namespace msdelay {

/// "YYYY-MM-DD".
std::optional<Date> parse_date(std::string_view text);
/// "YYYY-MM-DD hh:mm:ss" (a 'T' separator is accepted too).
std::optional<Timestamp> parse_timestamp(std::string_view text);

std::string format_date(Date day);
std::string format_timestamp(Timestamp ts);

/// 0 = Monday ... 6 = Sunday.
int weekday_index(Date day);
int minutes_of_day(Timestamp ts);
Date date_of(Timestamp ts);

}  // namespace msdelay
