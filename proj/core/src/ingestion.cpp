#include "msdelay/ingestion.hpp"

#include "msdelay/delimited.hpp"
#include "msdelay/timeutil.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <tuple>

namespace msdelay {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return std::string(s);
}

std::optional<bool> parse_flag(std::string_view text) {
  const auto v = lower(trim(text));
  if (v == "true" || v == "1" || v == "yes" || v == "t") return true;
  if (v == "false" || v == "0" || v == "no" || v == "f" || v.empty()) return false;
  return std::nullopt;
}

// Column lookup helper shared by the three parsers.
struct Columns {
  const DelimitedReader& reader;
  std::vector<std::string> missing;

  std::optional<std::size_t> need(const std::string& name) {
    auto c = reader.column(name);
    if (!c) missing.push_back(name);
    return c;
  }
  void check(std::string_view file_kind) const {
    if (missing.empty()) return;
    std::string msg = std::string(file_kind) + " file is missing mandatory column(s):";
    for (const auto& m : missing) msg += " '" + m + "'";
    throw Error(ErrorKind::Input, msg);
  }
};

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Input, "cannot open input file " + path.string());
  return in;
}

}  // namespace

double StopRecord::actual_arrival_minutes() const {
  const auto offset = std::chrono::duration_cast<std::chrono::seconds>(scheduled_arrival -
                                                                       Timestamp{date});
  return static_cast<double>(offset.count()) / 60.0 + entry_delay;
}

double AnalysisRow::actual_arrival_minutes() const {
  const auto offset = std::chrono::duration_cast<std::chrono::seconds>(scheduled_arrival -
                                                                       Timestamp{unit.day});
  return static_cast<double>(offset.count()) / 60.0 + arrival_delay;
}

std::string_view to_string(WeatherEvent e) {
  switch (e) {
    case WeatherEvent::None: return "none";
    case WeatherEvent::Rain: return "rain";
    case WeatherEvent::Fog: return "fog";
    case WeatherEvent::Storm: return "storm";
  }
  return "none";
}

std::optional<WeatherEvent> weather_event_from_string(std::string_view s) {
  const auto v = lower(trim(s));
  if (v.empty() || v == "none" || v == "na") return WeatherEvent::None;
  if (v == "rain") return WeatherEvent::Rain;
  if (v == "fog") return WeatherEvent::Fog;
  if (v == "storm" || v == "thunderstorm") return WeatherEvent::Storm;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

const std::vector<std::string>& stop_mandatory_columns() {
  static const std::vector<std::string> cols{
      "current_station",     "date",           "day_of_week",       "mission_code",
      "line_code",           "departure_station", "arrival_station", "scheduled_departure",
      "progressive_index",   "station_scheduled_entry", "station_entry_delay", "boarded",
      "alighted",            "cancelled"};
  return cols;
}

const std::vector<std::string>& stop_columns() {
  static const std::vector<std::string> cols{"current_station",
                                             "date",
                                             "day_of_week",
                                             "mission_code",
                                             "main_route_code",
                                             "line_code",
                                             "departure_station",
                                             "arrival_station",
                                             "scheduled_departure",
                                             "scheduled_arrival",
                                             "progressive_index",
                                             "station_scheduled_entry",
                                             "station_entry_delay",
                                             "station_scheduled_exit",
                                             "station_exit_delay",
                                             "boarded",
                                             "alighted",
                                             "cancelled",
                                             "service_type"};
  return cols;
}

const std::vector<std::string>& weather_columns() {
  static const std::vector<std::string> cols{"location",   "date",      "mean_temperature",
                                             "visibility", "mean_wind", "event_type"};
  return cols;
}

const std::vector<std::string>& frequency_columns() {
  static const std::vector<std::string> cols{"station", "hour_window", "trains_per_hour"};
  return cols;
}

ParseResult<StopRecord> parse_stops(std::istream& in, char delimiter) {
  DelimitedReader reader(in, delimiter);
  Columns cols{reader, {}};
  std::map<std::string, std::size_t> at;
  for (const auto& name : stop_mandatory_columns()) {
    if (auto c = cols.need(name)) at[name] = *c;
  }
  cols.check("stops");
  const auto opt = [&](const char* name) { return reader.column(name); };
  const auto c_route = opt("main_route_code");
  const auto c_exit_delay = opt("station_exit_delay");
  const auto c_service = opt("service_type");

  ParseResult<StopRecord> result;
  std::vector<std::string> f;
  while (reader.next(f)) {
    ++result.rows_read;
    const auto line = reader.line_number();
    auto reject = [&](std::string reason) { result.rejections.push_back({line, std::move(reason)}); };
    if (f.size() != reader.header().size()) {
      reject("expected " + std::to_string(reader.header().size()) + " fields, found " +
             std::to_string(f.size()));
      continue;
    }
    const auto field = [&](const std::string& name) -> const std::string& { return f[at.at(name)]; };

    StopRecord r;
    r.source_line = line;
    r.current_station = trim(field("current_station"));
    r.mission_code = trim(field("mission_code"));
    r.line_code = trim(field("line_code"));
    r.departure_station = trim(field("departure_station"));
    r.arrival_station = trim(field("arrival_station"));
    if (c_route) r.main_route_code = trim(f[*c_route]);
    if (r.current_station.empty() || r.mission_code.empty()) {
      reject("empty station or mission code");
      continue;
    }
    const auto date = parse_date(trim(field("date")));
    if (!date) {
      reject("unparseable date '" + field("date") + "'");
      continue;
    }
    r.date = *date;
    const auto dow = parse_integer(field("day_of_week"));
    if (!dow || *dow < -1 || *dow > 6) {
      reject("invalid day_of_week '" + field("day_of_week") + "'");
      continue;
    }
    if (*dow == -1) {
      reject("day_of_week = -1 (run with invalid data)");
      continue;
    }
    r.day_of_week = static_cast<int>(*dow);
    const auto dep = parse_timestamp(trim(field("scheduled_departure")));
    if (!dep) {
      reject("unparseable scheduled_departure '" + field("scheduled_departure") + "'");
      continue;
    }
    r.scheduled_departure = *dep;
    const auto entry = parse_timestamp(trim(field("station_scheduled_entry")));
    if (!entry) {
      reject("unparseable station_scheduled_entry '" + field("station_scheduled_entry") + "'");
      continue;
    }
    r.scheduled_arrival = *entry;
    const auto delay = parse_real(field("station_entry_delay"));
    if (!delay || std::isnan(*delay)) {
      reject("missing or unparseable station_entry_delay");
      continue;
    }
    r.entry_delay = *delay;
    if (c_exit_delay) {
      const auto d = parse_real(f[*c_exit_delay]);
      if (!d) {
        reject("unparseable station_exit_delay");
        continue;
      }
      r.exit_delay = *d;
    }
    const auto boarded = parse_real(field("boarded"));
    const auto alighted = parse_real(field("alighted"));
    if (!boarded || !alighted || *boarded < 0.0 || *alighted < 0.0) {
      reject("invalid passenger count");
      continue;
    }
    r.boarded = *boarded;
    r.alighted = *alighted;
    const auto cancelled = parse_flag(field("cancelled"));
    if (!cancelled) {
      reject("invalid cancelled flag '" + field("cancelled") + "'");
      continue;
    }
    r.cancelled = *cancelled;
    const auto prog = parse_integer(field("progressive_index"));
    if (!prog) {
      reject("invalid progressive_index '" + field("progressive_index") + "'");
      continue;
    }
    r.progressive_index = static_cast<int>(*prog);
    if (c_service) {
      const auto s = lower(trim(f[*c_service]));
      r.service_type = s.empty() ? "regular" : s;
    }
    result.records.push_back(std::move(r));
  }
  return result;
}

ParseResult<WeatherRecord> parse_weather(std::istream& in, char delimiter) {
  DelimitedReader reader(in, delimiter);
  Columns cols{reader, {}};
  std::map<std::string, std::size_t> at;
  for (const auto& name : weather_columns()) {
    if (auto c = cols.need(name)) at[name] = *c;
  }
  cols.check("weather");

  ParseResult<WeatherRecord> result;
  std::set<std::pair<std::string, Date>> seen;
  std::vector<std::string> f;
  while (reader.next(f)) {
    ++result.rows_read;
    const auto line = reader.line_number();
    auto reject = [&](std::string reason) { result.rejections.push_back({line, std::move(reason)}); };
    if (f.size() != reader.header().size()) {
      reject("field count mismatch");
      continue;
    }
    WeatherRecord w;
    w.location = trim(f[at["location"]]);
    const auto date = parse_date(trim(f[at["date"]]));
    if (!date) {
      reject("unparseable date");
      continue;
    }
    w.date = *date;
    const auto temp = parse_real(f[at["mean_temperature"]]);
    const auto vis = parse_real(f[at["visibility"]]);
    const auto wind = parse_real(f[at["mean_wind"]]);
    const auto event = weather_event_from_string(f[at["event_type"]]);
    if (!temp || !vis || !wind || !event) {
      reject("unparseable weather value");
      continue;
    }
    w.mean_temperature = *temp;
    w.visibility = *vis;
    w.mean_wind = *wind;
    w.event = *event;
    if (!seen.emplace(w.location, w.date).second) {
      reject("duplicate weather record for " + w.location + " on " + format_date(w.date));
      continue;
    }
    result.records.push_back(std::move(w));
  }
  return result;
}

ParseResult<FrequencyRecord> parse_frequency(std::istream& in, char delimiter) {
  DelimitedReader reader(in, delimiter);
  Columns cols{reader, {}};
  std::map<std::string, std::size_t> at;
  for (const auto& name : frequency_columns()) {
    if (auto c = cols.need(name)) at[name] = *c;
  }
  cols.check("frequency");

  ParseResult<FrequencyRecord> result;
  std::vector<std::string> f;
  while (reader.next(f)) {
    ++result.rows_read;
    const auto line = reader.line_number();
    if (f.size() != reader.header().size()) {
      result.rejections.push_back({line, "field count mismatch"});
      continue;
    }
    FrequencyRecord r;
    r.station = trim(f[at["station"]]);
    const auto hour = parse_integer(f[at["hour_window"]]);
    const auto tph = parse_real(f[at["trains_per_hour"]]);
    if (!hour || *hour < 0 || *hour > 23 || !tph || std::isnan(*tph) || *tph < 0.0) {
      result.rejections.push_back({line, "invalid hour_window or trains_per_hour"});
      continue;
    }
    r.hour_window = static_cast<int>(*hour);
    r.trains_per_hour = *tph;
    result.records.push_back(std::move(r));
  }
  return result;
}

ParseResult<StopRecord> parse_stops(const std::filesystem::path& path, char delimiter) {
  auto in = open_input(path);
  return parse_stops(in, delimiter);
}

ParseResult<WeatherRecord> parse_weather(const std::filesystem::path& path, char delimiter) {
  auto in = open_input(path);
  return parse_weather(in, delimiter);
}

ParseResult<FrequencyRecord> parse_frequency(const std::filesystem::path& path, char delimiter) {
  auto in = open_input(path);
  return parse_frequency(in, delimiter);
}

// ---------------------------------------------------------------------------
// Line configuration
// ---------------------------------------------------------------------------

LineConfig::LineConfig(std::vector<StationInfo> stations) : stations_(std::move(stations)) {
  for (std::size_t i = 0; i < stations_.size(); ++i) {
    if (!index_.emplace(stations_[i].id, i).second) {
      throw Error(ErrorKind::Config, "duplicate station '" + stations_[i].id + "' in line");
    }
  }
}

LineConfig LineConfig::s5() {
  struct Row {
    const char* id;
    int zone;
    const char* area;
  };
  // Zones: Varese-Gallarate, Busto Arsizio-Rho Fiera, Milano core, Segrate-Treviglio.
  // Weather areas: Malpensa (Varese-Legnano), Linate (Canegrate-Pioltello
  // Limito), Orio al Serio (Vignate-Treviglio).
  static constexpr Row rows[] = {
      {"Varese", 1, "Malpensa"},
      {"Gazzada Schianno Morazzone", 1, "Malpensa"},
      {"Castronno", 1, "Malpensa"},
      {"Albizzate Solbiate Arno", 1, "Malpensa"},
      {"Cavaria Oggiona Jerago", 1, "Malpensa"},
      {"Gallarate", 1, "Malpensa"},
      {"Busto Arsizio", 2, "Malpensa"},
      {"Legnano", 2, "Malpensa"},
      {"Canegrate", 2, "Linate"},
      {"Parabiago", 2, "Linate"},
      {"Vanzago Pogliano", 2, "Linate"},
      {"Rho", 2, "Linate"},
      {"Rho Fiera", 2, "Linate"},
      {"MI Certosa", 3, "Linate"},
      {"MI Villapizzone", 3, "Linate"},
      {"MI Lancetti", 3, "Linate"},
      {"MI Porta Garibaldi", 3, "Linate"},
      {"MI Repubblica", 3, "Linate"},
      {"MI Porta Venezia", 3, "Linate"},
      {"MI Dateo", 3, "Linate"},
      {"MI Porta Vittoria", 3, "Linate"},
      {"MI Forlanini", 3, "Linate"},
      {"Segrate", 4, "Linate"},
      {"Pioltello Limito", 4, "Linate"},
      {"Vignate", 4, "Orio al Serio"},
      {"Melzo", 4, "Orio al Serio"},
      {"Pozzuolo Martesana", 4, "Orio al Serio"},
      {"Trecella", 4, "Orio al Serio"},
      {"Cassano d'Adda", 4, "Orio al Serio"},
      {"Treviglio", 4, "Orio al Serio"},
  };
  std::vector<StationInfo> stations;
  for (const auto& r : rows) stations.push_back({r.id, zone_from_int(r.zone), r.area});
  return LineConfig(std::move(stations));
}

const StationInfo* LineConfig::find(std::string_view id) const {
  const auto it = index_.find(id);
  return it == index_.end() ? nullptr : &stations_[it->second];
}

std::optional<std::size_t> LineConfig::position(std::string_view id) const {
  const auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

nlohmann::json LineConfig::to_json() const {
  nlohmann::json stations = nlohmann::json::array();
  for (const auto& s : stations_) {
    stations.push_back({{"id", s.id},
                        {"zone", static_cast<int>(s.zone)},
                        {"weather_location", s.weather_location}});
  }
  return {{"stations", stations}};
}

LineConfig LineConfig::from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("stations") || !j["stations"].is_array()) {
    throw Error(ErrorKind::Config, "line: expected an object with a 'stations' array");
  }
  std::vector<StationInfo> stations;
  for (const auto& s : j["stations"]) {
    for (const auto& [key, _] : s.items()) {
      if (key != "id" && key != "zone" && key != "weather_location") {
        throw Error(ErrorKind::Config, "unknown key 'line.stations[]." + key + "'");
      }
    }
    try {
      stations.push_back({s.at("id").get<std::string>(), zone_from_int(s.at("zone").get<int>()),
                          s.at("weather_location").get<std::string>()});
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::Config, std::string("line.stations[]: ") + e.what());
    }
  }
  return LineConfig(std::move(stations));
}

// ---------------------------------------------------------------------------
// Filtering, joining, stratification
// ---------------------------------------------------------------------------

FilterResult filter_window(std::span<const StopRecord> stops, std::span<const Date> holidays) {
  const std::set<Date> holiday_set(holidays.begin(), holidays.end());
  FilterResult out;
  for (const auto& s : stops) {
    const int wd = weekday_index(s.date);
    if (wd >= 5 || s.day_of_week == 5) {
      ++out.removed.weekend;
    } else if (holiday_set.contains(s.date) || s.day_of_week == 6) {
      ++out.removed.holiday;
    } else if (s.cancelled) {
      ++out.removed.cancelled;
    } else if (s.service_type != "regular") {
      ++out.removed.non_scheduled;
    } else if (!time_slot_for(minutes_of_day(s.scheduled_departure))) {
      ++out.removed.out_of_window;
    } else {
      out.stops.push_back(s);
    }
  }
  return out;
}

Stratum assign_stratum(const StopRecord& stop, const LineConfig& line) {
  const auto* station = line.find(stop.current_station);
  if (!station) {
    throw Error(ErrorKind::Input,
                "station '" + stop.current_station + "' is not on the configured line");
  }
  const auto origin = line.position(stop.departure_station);
  const auto terminus = line.position(stop.arrival_station);
  if (!origin || !terminus) {
    throw Error(ErrorKind::Input, "mission " + stop.mission_code + " terminal station '" +
                                      (origin ? stop.arrival_station : stop.departure_station) +
                                      "' is not on the configured line");
  }
  if (*origin == *terminus) {
    throw Error(ErrorKind::Input,
                "mission " + stop.mission_code + " has identical origin and terminus");
  }
  const auto slot = time_slot_for(minutes_of_day(stop.scheduled_departure));
  if (!slot) {
    throw Error(ErrorKind::InvalidArgument,
                "mission " + stop.mission_code + " departs outside the 06:00-20:00 window");
  }
  Stratum st;
  st.direction = *origin < *terminus ? Direction::Forward : Direction::Reverse;
  st.time_slot = slot;
  st.zone = station->zone;
  return st;
}

std::vector<std::optional<WeatherRecord>> assign_weather(std::span<const StopRecord> stops,
                                                         std::span<const WeatherRecord> weather,
                                                         const LineConfig& line) {
  std::map<std::pair<std::string, Date>, const WeatherRecord*> by_key;
  for (const auto& w : weather) by_key.emplace(std::make_pair(w.location, w.date), &w);

  std::vector<std::optional<WeatherRecord>> out;
  out.reserve(stops.size());
  for (const auto& s : stops) {
    const auto* station = line.find(s.current_station);
    if (!station || station->weather_location.empty()) {
      throw Error(ErrorKind::Input,
                  "station '" + s.current_station + "' has no weather area in the line map");
    }
    const auto it = by_key.find({station->weather_location, s.date});
    if (it == by_key.end()) {
      out.emplace_back(std::nullopt);
    } else {
      out.emplace_back(*it->second);
    }
  }
  return out;
}

nlohmann::json IngestReport::to_json() const {
  auto rejections = [](const std::vector<Rejection>& v) {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& r : v) a.push_back({{"line", r.line}, {"reason", r.reason}});
    return a;
  };
  return {
      {"stops", {{"rows_read", stop_rows_read}, {"rejected", rejections(stop_rejections)}}},
      {"weather", {{"rejected", rejections(weather_rejections)}}},
      {"frequency", {{"rejected", rejections(frequency_rejections)}}},
      {"filtered",
       {{"weekend", filtered.weekend},
        {"holiday", filtered.holiday},
        {"cancelled", filtered.cancelled},
        {"non_scheduled", filtered.non_scheduled},
        {"out_of_window", filtered.out_of_window}}},
      {"rows_retained", rows_retained},
      {"flags",
       {{"missing_weather", missing_weather},
        {"missing_counts", missing_counts},
        {"missing_frequency", missing_frequency}}},
      {"adverse_weather_rows", adverse_weather_rows},
  };
}

AnalysisTable build_analysis_table(std::span<const StopRecord> stops,
                                   std::span<const WeatherRecord> weather,
                                   std::span<const FrequencyRecord> frequency,
                                   const LineConfig& line, const IngestOptions& options) {
  AnalysisTable table;
  auto& rep = table.report;
  rep.stop_rows_read = stops.size();

  auto filtered = filter_window(stops, options.holidays);
  rep.filtered = filtered.removed;
  const auto weather_by_stop = assign_weather(filtered.stops, weather, line);

  std::map<std::pair<std::string, int>, double> tph;
  for (const auto& f : frequency) tph[{f.station, f.hour_window}] = f.trains_per_hour;

  table.rows.reserve(filtered.stops.size());
  for (std::size_t i = 0; i < filtered.stops.size(); ++i) {
    const auto& s = filtered.stops[i];
    AnalysisRow row;
    row.unit = {s.current_station, s.mission_code, s.date};
    row.stratum = assign_stratum(s, line);
    row.progressive_index = s.progressive_index;
    row.scheduled_arrival = s.scheduled_arrival;
    row.arrival_delay = s.entry_delay;
    row.covariates.boarded = s.boarded;
    row.covariates.alighted = s.alighted;
    if (std::isnan(s.boarded) || std::isnan(s.alighted)) ++rep.missing_counts;
    if (const auto& w = weather_by_stop[i]) {
      row.weather_available = true;
      row.covariates.adverse_weather = w->adverse() ? 1.0 : 0.0;
      if (w->adverse()) ++rep.adverse_weather_rows;
    } else {
      ++rep.missing_weather;
    }
    const auto it = tph.find({s.current_station, minutes_of_day(s.scheduled_arrival) / 60});
    if (it != tph.end()) {
      row.covariates.trains_per_hour = it->second;
    } else {
      ++rep.missing_frequency;
    }
    table.rows.push_back(std::move(row));
  }
  rep.rows_retained = table.rows.size();
  return table;
}

// ---------------------------------------------------------------------------
// Analysis table I/O
// ---------------------------------------------------------------------------

const std::vector<std::string>& analysis_columns() {
  static const std::vector<std::string> cols{
      "station",           "mission",         "date",           "direction",
      "time_slot",         "zone",            "progressive_index", "scheduled_arrival",
      "actual_arrival",    "arrival_delay",   "boarded",        "alighted",
      "trains_per_hour",   "adverse_weather"};
  return cols;
}

void write_analysis_table(std::ostream& out, std::span<const AnalysisRow> rows, char delimiter) {
  write_record(out, analysis_columns(), delimiter);
  for (const auto& r : rows) {
    const auto actual =
        r.scheduled_arrival + std::chrono::seconds{std::llround(r.arrival_delay * 60.0)};
    write_record(out,
                 {r.unit.station, r.unit.mission, format_date(r.unit.day),
                  std::to_string(static_cast<int>(r.stratum.direction)),
                  std::string(to_string(*r.stratum.time_slot)), to_string(*r.stratum.zone),
                  std::to_string(r.progressive_index), format_timestamp(r.scheduled_arrival),
                  format_timestamp(actual), format_real(r.arrival_delay),
                  format_real(r.covariates.boarded), format_real(r.covariates.alighted),
                  format_real(r.covariates.trains_per_hour),
                  format_real(r.covariates.adverse_weather)},
                 delimiter);
  }
}

std::vector<AnalysisRow> read_analysis_table(std::istream& in, char delimiter) {
  DelimitedReader reader(in, delimiter);
  std::vector<std::size_t> at;
  for (const auto& name : analysis_columns()) {
    const auto c = reader.column(name);
    if (!c) throw Error(ErrorKind::Input, "analysis table is missing column '" + name + "'");
    at.push_back(*c);
  }
  std::vector<AnalysisRow> rows;
  std::vector<std::string> f;
  while (reader.next(f)) {
    const auto bad = [&](const std::string& what) {
      return Error(ErrorKind::Input, "analysis table line " + std::to_string(reader.line_number()) +
                                         ": " + what);
    };
    if (f.size() != reader.header().size()) throw bad("field count mismatch");
    AnalysisRow r;
    r.unit.station = f[at[0]];
    r.unit.mission = f[at[1]];
    const auto day = parse_date(f[at[2]]);
    const auto dir = parse_integer(f[at[3]]);
    const auto prog = parse_integer(f[at[6]]);
    const auto sched = parse_timestamp(f[at[7]]);
    const auto delay = parse_real(f[at[9]]);
    const auto boarded = parse_real(f[at[10]]);
    const auto alighted = parse_real(f[at[11]]);
    const auto tph = parse_real(f[at[12]]);
    const auto adverse = parse_real(f[at[13]]);
    if (!day || !dir || (*dir != 0 && *dir != 1) || !prog || !sched || !delay ||
        std::isnan(*delay) || !boarded || !alighted || !tph || !adverse) {
      throw bad("unparseable value");
    }
    r.unit.day = *day;
    r.stratum.direction = static_cast<Direction>(*dir);
    r.stratum.time_slot = time_slot_from_string(f[at[4]]);
    r.stratum.zone = zone_from_string(f[at[5]]);
    r.progressive_index = static_cast<int>(*prog);
    r.scheduled_arrival = *sched;
    r.arrival_delay = *delay;
    r.covariates = {*boarded, *alighted, *tph, *adverse};
    r.weather_available = !std::isnan(*adverse);
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace msdelay
