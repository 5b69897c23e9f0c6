#include "msdelay/ingestion.hpp"
#include "msdelay/timeutil.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace msdelay;

namespace {

const char* kHeader =
    "current_station,date,day_of_week,mission_code,main_route_code,line_code,departure_station,"
    "arrival_station,scheduled_departure,scheduled_arrival,progressive_index,station_scheduled_entry,"
    "station_entry_delay,station_scheduled_exit,station_exit_delay,boarded,alighted,cancelled,"
    "service_type\n";

struct Row {
  std::string station = "Varese";
  std::string date = "2024-01-08";
  std::string dow = "0";
  std::string mission = "24001";
  std::string from = "Varese";
  std::string to = "Treviglio";
  std::string departure = "07:30:00";
  std::string entry = "07:30:00";
  std::string index = "1";
  std::string delay = "2.5";
  std::string boarded = "12";
  std::string alighted = "3";
  std::string cancelled = "0";
  std::string service = "regular";

  std::string csv() const {
    return station + "," + date + "," + dow + "," + mission + ",S5,S5," + from + "," + to + "," +
           date + " " + departure + "," + date + " " + entry + "," + index + "," + date + " " +
           entry + "," + delay + "," + date + " " + entry + "," + delay + "," + boarded + "," +
           alighted + "," + cancelled + "," + service + "\n";
  }
};

ParseResult<StopRecord> parse(const std::string& body) {
  std::istringstream in(kHeader + body);
  return parse_stops(in);
}

StopRecord record(Row r = {}) {
  auto p = parse(r.csv());
  REQUIRE(p.records.size() == 1);
  return p.records.front();
}

WeatherRecord weather(const std::string& location, const std::string& date, WeatherEvent e) {
  WeatherRecord w;
  w.location = location;
  w.date = *parse_date(date);
  w.event = e;
  return w;
}

}  // namespace

TEST_CASE("parse_stops") {
  SUBCASE("header and one valid row") {
    const auto p = parse(Row{}.csv());
    CHECK(p.records.size() == 1);
    CHECK(p.rejections.empty());
    const auto& s = p.records.front();
    CHECK(s.current_station == "Varese");
    CHECK(s.entry_delay == 2.5);
    CHECK(s.boarded == 12);
    CHECK(s.actual_arrival_minutes() == doctest::Approx(7 * 60 + 30 + 2.5));
  }
  SUBCASE("day_of_week -1 is rejected") {
    Row r;
    r.dow = "-1";
    const auto p = parse(Row{}.csv() + r.csv());
    CHECK(p.records.size() == 1);
    REQUIRE(p.rejections.size() == 1);
    CHECK(p.rejections.front().line == 3);
  }
  SUBCASE("empty file with header") {
    const auto p = parse("");
    CHECK(p.records.empty());
    CHECK(p.rows_read == 0);
  }
  SUBCASE("unparseable timestamp rejects the row") {
    Row r;
    r.departure = "7h30";
    CHECK(parse(r.csv()).rejections.size() == 1);
  }
  SUBCASE("missing counts are kept as NaN") {
    Row r;
    r.boarded = "";
    const auto p = parse(r.csv());
    REQUIRE(p.records.size() == 1);
    CHECK(std::isnan(p.records.front().boarded));
  }
  SUBCASE("missing mandatory column is fatal") {
    std::istringstream in("current_station,date\nVarese,2024-01-08\n");
    CHECK_THROWS_AS(parse_stops(in), Error);
  }
  SUBCASE("wrong field count") {
    CHECK(parse("Varese,2024-01-08\n").rejections.size() == 1);
  }
}

TEST_CASE("parse_weather and parse_frequency") {
  std::istringstream w(
      "location,date,mean_temperature,visibility,mean_wind,event_type\n"
      "Malpensa,2024-01-08,3.5,10,2,fog\n"
      "Linate,2024-01-08,4,10,2,none\n"
      "Linate,2024-01-08,4,10,2,none\n"
      "Linate,2024-01-09,4,10,2,hail\n");
  const auto pw = parse_weather(w);
  CHECK(pw.records.size() == 2);
  CHECK(pw.rejections.size() == 2);
  CHECK(pw.records[0].adverse());
  CHECK_FALSE(pw.records[1].adverse());

  std::istringstream f("station,hour_window,trains_per_hour\nVarese,7,12\nVarese,x,1\n");
  const auto pf = parse_frequency(f);
  CHECK(pf.records.size() == 1);
  CHECK(pf.rejections.size() == 1);
}

TEST_CASE("assign_weather") {
  const auto line = LineConfig::s5();
  Row legnano;
  legnano.station = "Legnano";
  const std::vector<StopRecord> stops{record(legnano)};
  const std::vector<WeatherRecord> ws{weather("Malpensa", "2024-01-08", WeatherEvent::Fog),
                                      weather("Linate", "2024-01-08", WeatherEvent::None)};
  const auto out = assign_weather(stops, ws, line);
  REQUIRE(out[0].has_value());
  CHECK(out[0]->location == "Malpensa");
  CHECK(out[0]->adverse());

  const std::vector<WeatherRecord> none{weather("Linate", "2024-01-08", WeatherEvent::None)};
  CHECK_FALSE(assign_weather(stops, none, line)[0].has_value());

  Row unknown;
  unknown.station = "Nowhere";
  const std::vector<StopRecord> bad{record(unknown)};
  CHECK_THROWS_AS(assign_weather(bad, ws, line), Error);
}

TEST_CASE("assign_stratum") {
  const auto line = LineConfig::s5();
  CHECK(assign_stratum(record(), line).time_slot == TimeSlot::MorningPeak);
  Row ten;
  ten.departure = "10:00:00";
  CHECK(assign_stratum(record(ten), line).time_slot == TimeSlot::OffPeak);
  Row certosa;
  certosa.station = "MI Certosa";
  CHECK(assign_stratum(record(certosa), line).zone == Zone::Z3);
  CHECK(assign_stratum(record(), line).direction == Direction::Forward);
  Row back;
  back.from = "Treviglio";
  back.to = "Varese";
  CHECK(assign_stratum(record(back), line).direction == Direction::Reverse);
  CHECK(assign_stratum(record(back), line) == assign_stratum(record(back), line));
  Row off;
  off.station = "Como";
  CHECK_THROWS_AS(assign_stratum(record(off), line), Error);
}

TEST_CASE("filter_window") {
  Row saturday;
  saturday.date = "2024-01-13";
  saturday.dow = "5";
  Row cancelled;
  cancelled.cancelled = "1";
  Row early;
  early.departure = "05:30:00";
  Row extra;
  extra.service = "extra";
  Row holiday;
  holiday.date = "2024-01-09";
  const std::vector<StopRecord> stops{record(), record(saturday), record(cancelled), record(early),
                                      record(extra), record(holiday)};
  const std::vector<Date> holidays{*parse_date("2024-01-09")};
  const auto f = filter_window(stops, holidays);
  CHECK(f.stops.size() == 1);
  CHECK(f.removed.weekend == 1);
  CHECK(f.removed.cancelled == 1);
  CHECK(f.removed.out_of_window == 1);
  CHECK(f.removed.non_scheduled == 1);
  CHECK(f.removed.holiday == 1);

  const auto again = filter_window(f.stops, holidays);
  CHECK(again.stops.size() == f.stops.size());
  CHECK(again.removed.total() == 0);
}

TEST_CASE("analysis table joins and round-trips") {
  const auto line = LineConfig::s5();
  Row a, b;
  b.station = "MI Certosa";
  b.index = "14";
  b.entry = "08:20:00";
  b.boarded = "";
  const std::vector<StopRecord> stops{record(a), record(b)};
  const std::vector<WeatherRecord> ws{weather("Malpensa", "2024-01-08", WeatherEvent::Rain),
                                      weather("Linate", "2024-01-08", WeatherEvent::None)};
  const std::vector<FrequencyRecord> freq{{"Varese", 7, 10.0}, {"MI Certosa", 8, 24.0}};
  const auto table = build_analysis_table(stops, ws, freq, line, {});
  REQUIRE(table.rows.size() == 2);
  for (const auto& r : table.rows) CHECK(r.weather_available);
  CHECK(table.rows[0].covariates.adverse_weather == 1.0);
  CHECK(table.rows[1].covariates.adverse_weather == 0.0);
  CHECK(table.rows[1].covariates.trains_per_hour == 24.0);
  CHECK(table.report.missing_counts == 1);
  CHECK(table.report.adverse_weather_rows == 1);

  std::ostringstream out;
  write_analysis_table(out, table.rows);
  std::istringstream in(out.str());
  const auto back = read_analysis_table(in);
  REQUIRE(back.size() == 2);
  CHECK(back[0].unit == table.rows[0].unit);
  CHECK(back[1].stratum == table.rows[1].stratum);
  CHECK(back[0].covariates == table.rows[0].covariates);
  CHECK(std::isnan(back[1].covariates.boarded));
  CHECK(back[1].actual_arrival_minutes() == doctest::Approx(table.rows[1].actual_arrival_minutes()));
}

TEST_CASE("line configuration JSON round-trip") {
  const auto line = LineConfig::s5();
  CHECK(line.stations().size() == 30);
  const auto back = LineConfig::from_json(line.to_json());
  CHECK(back.stations().size() == 30);
  CHECK(back.find("Treviglio")->zone == Zone::Z4);
  CHECK(*back.position("Gallarate") == 5);
  nlohmann::json bad = {{"stations", {{{"id", "A"}, {"zone", 1}, {"weather_location", "X"}, {"x", 1}}}}};
  CHECK_THROWS_AS(LineConfig::from_json(bad), Error);
}
