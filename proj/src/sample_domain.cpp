#include "aquasonde/sample_domain.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

namespace aquasonde {

namespace {

Classification classify(double value, double low, double high) {
  if (value < low) return Classification::BelowNormal;
  if (value > high) return Classification::AboveNormal;
  return Classification::Normal;
}

bool in_range(double v, double lo, double hi) {
  return std::isfinite(v) && v >= lo && v <= hi;
}

// Sorting first makes the floating-point sum independent of input order.
double order_free_mean(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

}  // namespace

std::string_view to_string(Parameter p) {
  return p == Parameter::Ph ? "pH" : "temperature";
}

std::string_view to_string(Classification c) {
  switch (c) {
    case Classification::BelowNormal: return "BelowNormal";
    case Classification::Normal: return "Normal";
    case Classification::AboveNormal: return "AboveNormal";
  }
  return "Unknown";
}

std::string_view to_string(Season s) {
  return s == Season::Winter ? "winter" : "summer";
}

Season parse_season(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "winter") return Season::Winter;
  if (lower == "summer") return Season::Summer;
  throw std::invalid_argument(fmt::format("unknown season '{}' (expected winter or summer)", text));
}

std::optional<Violation> validate(const Reading& r, Timestamp now) {
  if (!in_range(r.longitude, -180.0, 180.0)) {
    return Violation{"FieldOutOfRange", fmt::format("longitude {} outside [-180, 180]", r.longitude)};
  }
  if (!in_range(r.latitude, -90.0, 90.0)) {
    return Violation{"FieldOutOfRange", fmt::format("latitude {} outside [-90, 90]", r.latitude)};
  }
  if (!in_range(r.ph, calibration::kPhMin, calibration::kPhMax)) {
    return Violation{"FieldOutOfRange", fmt::format("ph {} outside [0, 14]", r.ph)};
  }
  if (!in_range(r.temp_c, calibration::kTempMinC, calibration::kTempMaxC)) {
    return Violation{"FieldOutOfRange", fmt::format("temp_c {} outside [0, 60]", r.temp_c)};
  }
  if (r.device_id.empty()) {
    return Violation{"MissingField", "device_id is empty"};
  }
  if (r.station && r.station->empty()) {
    return Violation{"MissingField", "station label is empty"};
  }
  if (r.timestamp > now + kMaxClockSkew) {
    return Violation{"FutureTimestamp",
                     fmt::format("timestamp {} is more than 24 h ahead of server time",
                                 timeutil::format_iso8601(r.timestamp))};
  }
  return std::nullopt;
}

QualityAssessment assess_ph(double ph) {
  if (!in_range(ph, calibration::kPhMin, calibration::kPhMax)) {
    throw std::out_of_range(fmt::format("pH {} outside [0, 14]", ph));
  }
  return QualityAssessment{Parameter::Ph, ph, classify(ph, kPhNormLow, kPhNormHigh), kPhNormLow,
                           kPhNormHigh, std::nullopt};
}

QualityAssessment assess_temperature(double temp_c, Season season) {
  if (!in_range(temp_c, calibration::kTempMinC, calibration::kTempMaxC)) {
    throw std::out_of_range(fmt::format("temperature {} outside [0, 60]", temp_c));
  }
  const double low = season == Season::Winter ? kWinterTempLow : kSummerTempLow;
  const double high = season == Season::Winter ? kWinterTempHigh : kSummerTempHigh;
  return QualityAssessment{Parameter::Temperature, temp_c, classify(temp_c, low, high), low, high,
                           season};
}

StationSummary summarize_station(std::span<const Reading> readings, Season season) {
  if (readings.empty()) throw EmptyInput("no readings to summarize");
  const auto& label = readings.front().station;
  std::vector<double> ph, temp;
  ph.reserve(readings.size());
  temp.reserve(readings.size());
  for (const auto& r : readings) {
    if (r.station != label) {
      throw std::invalid_argument("readings belong to more than one station");
    }
    ph.push_back(r.ph);
    temp.push_back(r.temp_c);
  }

  StationSummary s;
  s.station = label.value_or("");
  s.count = readings.size();
  const auto [ph_lo, ph_hi] = std::minmax_element(ph.begin(), ph.end());
  const auto [t_lo, t_hi] = std::minmax_element(temp.begin(), temp.end());
  s.ph_min = *ph_lo;
  s.ph_max = *ph_hi;
  s.temp_min = *t_lo;
  s.temp_max = *t_hi;
  s.ph_mean = std::clamp(order_free_mean(std::move(ph)), s.ph_min, s.ph_max);
  s.temp_mean = std::clamp(order_free_mean(std::move(temp)), s.temp_min, s.temp_max);
  s.ph_assessment = assess_ph(s.ph_mean);
  s.temp_assessment = assess_temperature(s.temp_mean, season);
  return s;
}

std::vector<StationSummary> summarize_by_station(std::span<const Reading> readings, Season season) {
  std::vector<std::string> order;
  std::vector<std::vector<Reading>> groups;
  for (const auto& r : readings) {
    if (!r.station) continue;
    auto it = std::find(order.begin(), order.end(), *r.station);
    if (it == order.end()) {
      order.push_back(*r.station);
      groups.emplace_back();
      it = order.end() - 1;
    }
    groups[static_cast<std::size_t>(it - order.begin())].push_back(r);
  }
  std::vector<StationSummary> out;
  out.reserve(groups.size());
  for (const auto& g : groups) out.push_back(summarize_station(g, season));
  return out;
}

DedupKey dedup_key(const Reading& reading) {
  return DedupKey{reading.device_id, reading.timestamp, reading.seq_origin};
}

ConvertedSample convert_frame(const TimedFrame& tf, const calibration::PhCalibration& cal) {
  ConvertedSample s;
  s.at = tf.at;
  s.seq = tf.frame.seq;
  s.temp_c = calibration::temp_c_from_adc(tf.frame.temp_adc);
  const auto ph = calibration::ph_from_mv(calibration::electrode_mv_from_adc(tf.frame.ph_adc), cal,
                                          s.temp_c);
  s.ph = ph.ph;
  s.clamped = ph.clamped;
  return s;
}

DwellCapture::DwellCapture(Station station, calibration::PhCalibration cal, DwellSettings settings,
                           FrameTime arrival, std::string device_id)
    : station_(std::move(station)),
      cal_(cal),
      settings_(settings),
      arrival_(arrival),
      device_id_(std::move(device_id)) {
  if (settings_.settle.count() < 0) throw std::invalid_argument("settle time must be >= 0");
  if (settings_.avg_count < 1) throw std::invalid_argument("avg_count must be >= 1");
  samples_.reserve(static_cast<std::size_t>(settings_.avg_count));
}

bool DwellCapture::offer(const TimedFrame& frame) {
  if (complete()) return true;
  if (frame.at < arrival_ + settings_.settle) return false;
  if (!frame.frame.both_valid() || !wire::is_valid(frame.frame)) return false;
  samples_.push_back(convert_frame(frame, cal_));
  return complete();
}

bool DwellCapture::complete() const {
  return collected() >= settings_.avg_count;
}

Reading DwellCapture::reading() const {
  if (!complete()) {
    throw InsufficientData(fmt::format("station {}: {} of {} samples after the {} s settle window",
                                       station_.label, collected(), settings_.avg_count,
                                       settings_.settle.count() / 1000.0));
  }
  std::vector<double> ph, temp;
  for (const auto& s : samples_) {
    ph.push_back(s.ph);
    temp.push_back(s.temp_c);
  }
  const auto [ph_lo, ph_hi] = std::minmax_element(ph.begin(), ph.end());
  const auto [t_lo, t_hi] = std::minmax_element(temp.begin(), temp.end());
  const double ph_min = *ph_lo, ph_max = *ph_hi, t_min = *t_lo, t_max = *t_hi;

  const auto& last = samples_.back();
  Reading r;
  r.timestamp = std::chrono::floor<std::chrono::seconds>(last.at);
  r.longitude = station_.longitude;
  r.latitude = station_.latitude;
  r.ph = std::clamp(order_free_mean(std::move(ph)), ph_min, ph_max);
  r.temp_c = std::clamp(order_free_mean(std::move(temp)), t_min, t_max);
  r.device_id = device_id_;
  r.station = station_.label;
  r.seq_origin = last.seq;
  return r;
}

Reading dwell_capture(std::span<const TimedFrame> frames, const calibration::PhCalibration& cal,
                      const Station& station, DwellSettings settings, std::string device_id,
                      std::optional<FrameTime> arrival) {
  const FrameTime start = arrival ? *arrival : (frames.empty() ? FrameTime{} : frames.front().at);
  DwellCapture capture(station, cal, settings, start, std::move(device_id));
  for (const auto& f : frames) {
    if (capture.offer(f)) break;
  }
  return capture.reading();
}

}  // namespace aquasonde

std::size_t std::hash<aquasonde::DedupKey>::operator()(const aquasonde::DedupKey& key) const noexcept {
  std::size_t h = std::hash<std::string>{}(key.device_id);
  h ^= std::hash<long long>{}(key.timestamp.time_since_epoch().count()) + 0x9e3779b97f4a7c15ULL +
       (h << 6) + (h >> 2);
  h ^= std::hash<std::uint32_t>{}(key.seq_origin) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  return h;
}
