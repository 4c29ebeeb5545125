#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "aquasonde/calibration.hpp"
#include "aquasonde/timeutil.hpp"
#include "aquasonde/wire_protocol.hpp"

namespace aquasonde {

using timeutil::Timestamp;
using FrameTime = std::chrono::sys_time<std::chrono::milliseconds>;

// Irrigation-water norms. All bands are inclusive at both ends.
inline constexpr double kPhNormLow = 6.5;
inline constexpr double kPhNormHigh = 8.4;
inline constexpr double kWinterTempLow = 17.0;
inline constexpr double kWinterTempHigh = 19.0;
inline constexpr double kSummerTempLow = 27.0;
inline constexpr double kSummerTempHigh = 29.0;

inline constexpr auto kMaxClockSkew = std::chrono::hours{24};

enum class Parameter { Ph, Temperature };
enum class Classification { BelowNormal, Normal, AboveNormal };
enum class Season { Winter, Summer };

std::string_view to_string(Parameter p);
std::string_view to_string(Classification c);
std::string_view to_string(Season s);
// Accepts "winter" / "summer" (case-insensitive).
Season parse_season(std::string_view text);

struct DomainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct InsufficientData : DomainError {
  using DomainError::DomainError;
};
struct EmptyInput : DomainError {
  using DomainError::DomainError;
};

struct Reading {
  Timestamp timestamp;
  double longitude = 0.0;
  double latitude = 0.0;
  double ph = 0.0;
  double temp_c = 0.0;
  std::string device_id;
  std::optional<std::string> station;
  std::uint32_t seq_origin = 0;

  friend bool operator==(const Reading&, const Reading&) = default;
};

struct Violation {
  std::string reason;  // e.g. "FieldOutOfRange"
  std::string detail;
};

// Checks field ranges, and rejects timestamps beyond now + 24 h.
std::optional<Violation> validate(const Reading& reading, Timestamp now);

struct Station {
  std::string label;
  double longitude = 0.0;
  double latitude = 0.0;
  std::optional<Timestamp> visited_at;
};

struct QualityAssessment {
  Parameter parameter = Parameter::Ph;
  double value = 0.0;
  Classification classification = Classification::Normal;
  double norm_low = 0.0;
  double norm_high = 0.0;
  std::optional<Season> season;
};

QualityAssessment assess_ph(double ph);
QualityAssessment assess_temperature(double temp_c, Season season);

struct StationSummary {
  std::string station;
  std::size_t count = 0;
  double ph_mean = 0.0, ph_min = 0.0, ph_max = 0.0;
  double temp_mean = 0.0, temp_min = 0.0, temp_max = 0.0;
  QualityAssessment ph_assessment;
  QualityAssessment temp_assessment;
};

// Throws EmptyInput for an empty list and std::invalid_argument when the
// readings carry different station labels. Statistics do not depend on the
// order of `readings`.
StationSummary summarize_station(std::span<const Reading> readings, Season season);

// One summary per labelled station, in order of first appearance. Readings
// without a station label are ignored.
std::vector<StationSummary> summarize_by_station(std::span<const Reading> readings, Season season);

struct DedupKey {
  std::string device_id;
  Timestamp timestamp;
  std::uint32_t seq_origin = 0;

  friend bool operator==(const DedupKey&, const DedupKey&) = default;
};

DedupKey dedup_key(const Reading& reading);

struct TimedFrame {
  FrameTime at;
  wire::SensorFrame frame;
};

struct DwellSettings {
  std::chrono::milliseconds settle{std::chrono::seconds{180}};
  int avg_count = 10;
};

// One frame after calibration.
struct ConvertedSample {
  FrameTime at;
  std::uint8_t seq = 0;
  double ph = 0.0;
  double temp_c = 0.0;
  bool clamped = false;
};

ConvertedSample convert_frame(const TimedFrame& frame, const calibration::PhCalibration& cal);

// Incremental dwell-window capture at one station: frames earlier than
// `arrival` + settle are discarded, then the next avg_count frames with both
// channels valid are averaged into one Reading.
class DwellCapture {
 public:
  DwellCapture(Station station, calibration::PhCalibration cal, DwellSettings settings,
               FrameTime arrival, std::string device_id);

  // Returns true once avg_count samples have been collected; later frames
  // are ignored.
  bool offer(const TimedFrame& frame);

  bool complete() const;
  int collected() const { return static_cast<int>(samples_.size()); }
  const std::vector<ConvertedSample>& samples() const { return samples_; }
  FrameTime arrival() const { return arrival_; }
  const Station& station() const { return station_; }

  // Throws InsufficientData while incomplete.
  Reading reading() const;

 private:
  Station station_;
  calibration::PhCalibration cal_;
  DwellSettings settings_;
  FrameTime arrival_;
  std::string device_id_;
  std::vector<ConvertedSample> samples_;
};

// Batch form. Arrival defaults to the first frame's time.
Reading dwell_capture(std::span<const TimedFrame> frames, const calibration::PhCalibration& cal,
                      const Station& station, DwellSettings settings,
                      std::string device_id = "sonde-01",
                      std::optional<FrameTime> arrival = std::nullopt);

}  // namespace aquasonde

template <>
struct std::hash<aquasonde::DedupKey> {
  std::size_t operator()(const aquasonde::DedupKey& key) const noexcept;
};
