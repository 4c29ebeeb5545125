#include <doctest.h>

#include <json.hpp>

#include "aquasonde/keyvalue.hpp"
#include "aquasonde/record_io.hpp"
#include "aquasonde/timeutil.hpp"
#include "support.hpp"

using namespace aquasonde;
using nlohmann::json;

TEST_SUITE("text_formats") {

TEST_CASE("ISO-8601 timestamps") {
  const auto t = timeutil::parse_iso8601("2017-03-14T09:26:53Z");
  CHECK(timeutil::format_iso8601(t) == "2017-03-14T09:26:53Z");
  CHECK(t.time_since_epoch().count() == 1489483613);
  CHECK(timeutil::format_date(t) == "2017-03-14");
  CHECK(timeutil::format_time(t) == "09:26:53");
  CHECK(timeutil::parse_date_time("2017-03-14", "09:26:53") == t);
  for (const char* bad : {"2017-03-14 09:26:53Z", "2017-03-14T09:26:53", "2017-13-14T09:26:53Z",
                          "2017-02-30T00:00:00Z", "2017-03-14T24:00:00Z", "garbage", ""}) {
    CAPTURE(bad);
    CHECK_THROWS_AS(timeutil::parse_iso8601(bad), timeutil::TimeFormatError);
  }
}

TEST_CASE("key = value documents") {
  const auto doc = keyvalue::parse(
      "# header\n"
      "name = canal   # trailing comment\n"
      "rate=2.5\n"
      "count = 7\n"
      "\n"
      "[stations]\n"
      "L1  74.1  31.2\n"
      "  L2\t74.3 31.4 200\n",
      "test.scenario");
  CHECK(doc.get_string("name") == "canal");
  CHECK(doc.get_double("rate") == 2.5);
  CHECK(doc.get_uint("count") == 7);
  CHECK(doc.get_double("missing", 9.0) == 9.0);
  CHECK_FALSE(doc.contains("missing"));
  REQUIRE(doc.stations().size() == 2);
  CHECK(doc.stations()[0].line == 7);
  CHECK(doc.stations()[1].fields == std::vector<std::string>{"L2", "74.3", "31.4", "200"});

  CHECK_THROWS_AS(doc.get_string("missing"), keyvalue::ParseError);
  try {
    (void)doc.get_uint("rate");
    FAIL("expected ParseError");
  } catch (const keyvalue::ParseError& e) {
    CHECK(std::string(e.what()).find("test.scenario:3") != std::string::npos);
  }
  CHECK_THROWS_AS(keyvalue::parse("a = 1\na = 2\n"), keyvalue::ParseError);
  CHECK_THROWS_AS(keyvalue::parse("just words\n"), keyvalue::ParseError);
  CHECK_THROWS_AS(keyvalue::parse("[stations]\nL1 1 2\n[stations]\n"), keyvalue::ParseError);
  CHECK(keyvalue::to_double("+1.5", "x") == 1.5);
  CHECK_THROWS_AS(keyvalue::to_double("1.5x", "x"), keyvalue::ParseError);
  CHECK_THROWS_AS(keyvalue::to_uint("-1", "x"), keyvalue::ParseError);
}

TEST_CASE("reading JSON round trip") {
  for (const auto& r : testsupport::canal_readings()) {
    const auto j = record_io::to_json(r);
    CHECK(j.at("timestamp").is_string());
    CHECK(j.at("station") == *r.station);
    CHECK(record_io::reading_from_json(j) == r);
  }
  auto r = testsupport::canal_readings()[0];
  r.station.reset();
  const auto j = record_io::to_json(r);
  CHECK_FALSE(j.contains("station"));
  CHECK(record_io::reading_from_json(j) == r);
}

TEST_CASE("reading JSON errors") {
  auto j = record_io::to_json(testsupport::canal_readings()[0]);
  for (const char* key : {"timestamp", "longitude", "latitude", "ph", "temp_c", "device_id",
                          "seq_origin"}) {
    auto copy = j;
    copy.erase(key);
    CAPTURE(key);
    CHECK_THROWS_AS(record_io::reading_from_json(copy), record_io::RecordError);
  }
  auto wrong = j;
  wrong["ph"] = "seven";
  CHECK_THROWS_AS(record_io::reading_from_json(wrong), record_io::RecordError);
  wrong = j;
  wrong["timestamp"] = "yesterday";
  CHECK_THROWS_AS(record_io::reading_from_json(wrong), record_io::RecordError);
  wrong = j;
  wrong["seq_origin"] = -3;
  CHECK_THROWS_AS(record_io::reading_from_json(wrong), record_io::RecordError);
  CHECK_THROWS_AS(record_io::reading_from_json(json::array()), record_io::RecordError);
}

TEST_CASE("summary JSON round trip") {
  const auto readings = testsupport::canal_readings();
  for (const auto& s : summarize_by_station(readings, Season::Winter)) {
    const auto back = record_io::summary_from_json(record_io::to_json(s));
    CHECK(back.station == s.station);
    CHECK(back.count == s.count);
    CHECK(back.ph_mean == s.ph_mean);
    CHECK(back.temp_assessment.classification == s.temp_assessment.classification);
    CHECK(back.temp_assessment.season == Season::Winter);
  }
}

TEST_CASE("CSV row format is fixed") {
  Reading r;
  r.timestamp = timeutil::parse_iso8601("2024-06-11T08:03:09Z");
  r.longitude = 74.2681;
  r.latitude = 31.4974;
  r.ph = 5.3349;
  r.temp_c = 25.9;
  r.device_id = "sonde-01";
  r.station = "L1";
  r.seq_origin = 189;
  CHECK(record_io::csv_header(false) == "date,time,longitude,latitude,ph,temperature");
  CHECK(record_io::csv_row(r, false) == "2024-06-11,08:03:09,74.268100,31.497400,5.33,25.90");
  CHECK(record_io::csv_row(r, true) ==
        "2024-06-11,08:03:09,74.268100,31.497400,5.33,25.90,L1,sonde-01,189");
  CHECK(record_io::to_csv({}, false) == "date,time,longitude,latitude,ph,temperature\n");
}

TEST_CASE("CSV parse") {
  const auto readings = testsupport::canal_readings();
  const auto with = record_io::parse_csv(record_io::to_csv(readings, true));
  REQUIRE(with.size() == 6);
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(dedup_key(with[i]) == dedup_key(readings[i]));
    CHECK(with[i].station == readings[i].station);
    CHECK(with[i].ph == doctest::Approx(readings[i].ph).epsilon(0.005));
  }
  const auto without = record_io::parse_csv(record_io::to_csv(readings, false));
  REQUIRE(without.size() == 6);
  CHECK(without[3].device_id == "csv-import");
  CHECK(without[3].seq_origin == 3);
  CHECK_FALSE(without[3].station.has_value());

  CHECK(record_io::parse_csv("date,time,longitude,latitude,ph,temperature\r\n").empty());
  CHECK_THROWS_AS(record_io::parse_csv(""), record_io::RecordError);
  CHECK_THROWS_AS(record_io::parse_csv("a,b,c\n"), record_io::RecordError);
  CHECK_THROWS_AS(record_io::parse_csv("date,time,longitude,latitude,ph,temperature\n2024-06-11,08:00:00,1,2,3\n"),
                  record_io::RecordError);
  CHECK_THROWS_AS(record_io::parse_csv("date,time,longitude,latitude,ph,temperature\n2024-06-11,8am,1,2,3,4\n"),
                  record_io::RecordError);
  CHECK_THROWS_AS(record_io::parse_csv("date,time,longitude,latitude,ph,temperature\n2024-06-11,08:00:00,1,2,x,4\n"),
                  record_io::RecordError);
}

TEST_CASE("CSV quoting of awkward labels") {
  auto r = testsupport::canal_readings()[0];
  r.station = "Bridge, \"north\"";
  const auto back = record_io::parse_csv(record_io::to_csv(std::span(&r, 1), true));
  REQUIRE(back.size() == 1);
  CHECK(back[0].station == r.station);
}

}  // TEST_SUITE
