#pragma once

#include <chrono>
#include <stdexcept>
#include <string>
#include <string_view>

namespace aquasonde::timeutil {

using Timestamp = std::chrono::sys_seconds;

struct TimeFormatError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// "2017-03-14T09:26:53Z"
std::string format_iso8601(Timestamp t);
Timestamp parse_iso8601(std::string_view text);

// CSV halves: "2017-03-14" and "09:26:53".
std::string format_date(Timestamp t);
std::string format_time(Timestamp t);
Timestamp parse_date_time(std::string_view date, std::string_view time);

Timestamp now_utc();

}  // namespace aquasonde::timeutil
