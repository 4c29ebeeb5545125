#include "aquasonde/timeutil.hpp"

#include <charconv>

#include <fmt/format.h>

namespace aquasonde::timeutil {

using namespace std::chrono;

namespace {

int parse_fixed(std::string_view text, std::size_t at, std::size_t width) {
  if (at + width > text.size()) throw TimeFormatError(fmt::format("bad timestamp '{}'", text));
  int value = 0;
  const char* first = text.data() + at;
  auto [ptr, ec] = std::from_chars(first, first + width, value);
  if (ec != std::errc{} || ptr != first + width) {
    throw TimeFormatError(fmt::format("bad timestamp '{}'", text));
  }
  return value;
}

void expect_char(std::string_view text, std::size_t at, char c) {
  if (at >= text.size() || text[at] != c) {
    throw TimeFormatError(fmt::format("bad timestamp '{}'", text));
  }
}

sys_days parse_ymd(std::string_view text) {
  if (text.size() != 10) throw TimeFormatError(fmt::format("bad date '{}'", text));
  const int y = parse_fixed(text, 0, 4);
  expect_char(text, 4, '-');
  const int m = parse_fixed(text, 5, 2);
  expect_char(text, 7, '-');
  const int d = parse_fixed(text, 8, 2);
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(m)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) throw TimeFormatError(fmt::format("bad date '{}'", text));
  return sys_days{ymd};
}

seconds parse_hms(std::string_view text) {
  if (text.size() != 8) throw TimeFormatError(fmt::format("bad time '{}'", text));
  const int h = parse_fixed(text, 0, 2);
  expect_char(text, 2, ':');
  const int mi = parse_fixed(text, 3, 2);
  expect_char(text, 5, ':');
  const int s = parse_fixed(text, 6, 2);
  if (h > 23 || mi > 59 || s > 59) throw TimeFormatError(fmt::format("bad time '{}'", text));
  return hours{h} + minutes{mi} + seconds{s};
}

}  // namespace

std::string format_date(Timestamp t) {
  const year_month_day ymd{floor<days>(t)};
  return fmt::format("{:04}-{:02}-{:02}", static_cast<int>(ymd.year()),
                     static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
}

std::string format_time(Timestamp t) {
  const hh_mm_ss hms{t - floor<days>(t)};
  return fmt::format("{:02}:{:02}:{:02}", hms.hours().count(), hms.minutes().count(),
                     hms.seconds().count());
}

std::string format_iso8601(Timestamp t) {
  return format_date(t) + "T" + format_time(t) + "Z";
}

Timestamp parse_iso8601(std::string_view text) {
  if (text.size() != 20 || text[10] != 'T' || text[19] != 'Z') {
    throw TimeFormatError(fmt::format("bad timestamp '{}', expected YYYY-MM-DDTHH:MM:SSZ", text));
  }
  return parse_ymd(text.substr(0, 10)) + parse_hms(text.substr(11, 8));
}

Timestamp parse_date_time(std::string_view date, std::string_view time) {
  return parse_ymd(date) + parse_hms(time);
}

Timestamp now_utc() {
  return floor<seconds>(system_clock::now());
}

}  // namespace aquasonde::timeutil
