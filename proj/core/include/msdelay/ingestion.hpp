#pragma once

#include "msdelay/types.hpp"

#include <nlohmann/json.hpp>

#include <cstddef>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace msdelay {

// ---------------------------------------------------------------------------
// Input records
// ---------------------------------------------------------------------------

/// One train arrival at one station on one day.
struct StopRecord {
  std::string current_station;
  Date date{};
  int day_of_week = 0;
  std::string mission_code;
  std::string main_route_code;
  std::string line_code;
  std::string departure_station;
  std::string arrival_station;
  Timestamp scheduled_departure{};  // mission departure from its origin
  Timestamp scheduled_arrival{};    // scheduled entry into current_station
  double entry_delay = 0.0;         // minutes
  double exit_delay = kMissing;     // minutes
  double boarded = kMissing;
  double alighted = kMissing;
  bool cancelled = false;
  int progressive_index = 0;
  std::string service_type = "regular";
  std::size_t source_line = 0;

  double actual_arrival_minutes() const;  // minutes since midnight of `date`
};

enum class WeatherEvent { None, Rain, Fog, Storm };

std::string_view to_string(WeatherEvent e);
std::optional<WeatherEvent> weather_event_from_string(std::string_view s);

struct WeatherRecord {
  std::string location;
  Date date{};
  double mean_temperature = kMissing;
  double visibility = kMissing;
  double mean_wind = kMissing;
  WeatherEvent event = WeatherEvent::None;

  bool adverse() const noexcept { return event != WeatherEvent::None; }
};

struct FrequencyRecord {
  std::string station;
  int hour_window = 0;
  double trains_per_hour = 0.0;
};

struct Rejection {
  std::size_t line = 0;
  std::string reason;
};

template <typename Record>
struct ParseResult {
  std::vector<Record> records;
  std::vector<Rejection> rejections;
  std::size_t rows_read = 0;
};

/// Mandatory stop columns. Optional: main_route_code, scheduled_arrival,
/// station_scheduled_exit, station_exit_delay, service_type.
const std::vector<std::string>& stop_mandatory_columns();
const std::vector<std::string>& stop_columns();
const std::vector<std::string>& weather_columns();
const std::vector<std::string>& frequency_columns();

ParseResult<StopRecord> parse_stops(std::istream& in, char delimiter = ',');
ParseResult<WeatherRecord> parse_weather(std::istream& in, char delimiter = ',');
ParseResult<FrequencyRecord> parse_frequency(std::istream& in, char delimiter = ',');

ParseResult<StopRecord> parse_stops(const std::filesystem::path& path, char delimiter = ',');
ParseResult<WeatherRecord> parse_weather(const std::filesystem::path& path, char delimiter = ',');
ParseResult<FrequencyRecord> parse_frequency(const std::filesystem::path& path,
                                             char delimiter = ',');

// ---------------------------------------------------------------------------
// Line configuration
// ---------------------------------------------------------------------------

struct StationInfo {
  std::string id;
  Zone zone = Zone::Z1;
  std::string weather_location;
};

/// Ordered station list in the Forward direction with zone and weather-area
/// membership.
class LineConfig {
 public:
  LineConfig() = default;
  explicit LineConfig(std::vector<StationInfo> stations);

  /// The 30-station Varese-Treviglio line with its four zones and three
  /// airport weather areas.
  static LineConfig s5();

  const std::vector<StationInfo>& stations() const noexcept { return stations_; }
  const StationInfo* find(std::string_view id) const;
  std::optional<std::size_t> position(std::string_view id) const;

  nlohmann::json to_json() const;
  static LineConfig from_json(const nlohmann::json& j);

 private:
  std::vector<StationInfo> stations_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

// ---------------------------------------------------------------------------
// Filtering, joining, stratification
// ---------------------------------------------------------------------------

struct FilterCounts {
  std::size_t weekend = 0;
  std::size_t holiday = 0;
  std::size_t cancelled = 0;
  std::size_t non_scheduled = 0;
  std::size_t out_of_window = 0;

  std::size_t total() const { return weekend + holiday + cancelled + non_scheduled + out_of_window; }
};

struct FilterResult {
  std::vector<StopRecord> stops;
  FilterCounts removed;
};

/// Keeps weekday, non-holiday, non-cancelled, regular-service stops whose
/// mission departs its origin within 06:00-20:00.
FilterResult filter_window(std::span<const StopRecord> stops, std::span<const Date> holidays);

/// Direction from the line positions of the mission's origin and terminus,
/// time slot from the origin departure, zone from the current station.
Stratum assign_stratum(const StopRecord& stop, const LineConfig& line);

/// Weather record of each stop's area and date; nullopt when that record is
/// missing. Throws when a station has no area in the line configuration.
std::vector<std::optional<WeatherRecord>> assign_weather(std::span<const StopRecord> stops,
                                                         std::span<const WeatherRecord> weather,
                                                         const LineConfig& line);

struct AnalysisRow {
  UnitKey unit;
  Stratum stratum;  // direction, time slot and zone all set
  int progressive_index = 0;
  Timestamp scheduled_arrival{};
  double arrival_delay = 0.0;
  Covariates covariates;
  bool weather_available = false;

  double actual_arrival_minutes() const;  // minutes since midnight of unit.day
};

struct IngestReport {
  std::size_t stop_rows_read = 0;
  std::vector<Rejection> stop_rejections;
  std::vector<Rejection> weather_rejections;
  std::vector<Rejection> frequency_rejections;
  FilterCounts filtered;
  std::size_t rows_retained = 0;
  std::size_t missing_weather = 0;
  std::size_t missing_counts = 0;
  std::size_t missing_frequency = 0;
  std::size_t adverse_weather_rows = 0;

  nlohmann::json to_json() const;
};

struct IngestOptions {
  std::vector<Date> holidays;
};

struct AnalysisTable {
  std::vector<AnalysisRow> rows;
  IngestReport report;
};

/// Filter, stratify and join the three sources into one analysis table.
AnalysisTable build_analysis_table(std::span<const StopRecord> stops,
                                   std::span<const WeatherRecord> weather,
                                   std::span<const FrequencyRecord> frequency,
                                   const LineConfig& line, const IngestOptions& options);

const std::vector<std::string>& analysis_columns();
void write_analysis_table(std::ostream& out, std::span<const AnalysisRow> rows,
                          char delimiter = ',');
std::vector<AnalysisRow> read_analysis_table(std::istream& in, char delimiter = ',');

}  // namespace msdelay
