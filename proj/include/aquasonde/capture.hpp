#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "aquasonde/calibration.hpp"
#include "aquasonde/keyvalue.hpp"
#include "aquasonde/sample_domain.hpp"

namespace aquasonde::capture {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct StationPlan {
  Station station;
  // Scheduled time at the station. When set, the next station's arrival is
  // this station's arrival + dwell; otherwise the next station starts with
  // the first frame after this station's reading completes.
  std::optional<double> dwell_s;
};

enum class ClockMode { Wall, Frames };

struct SessionConfig {
  std::string device;                // "tcp://host:port" or a replay file path
  std::string calibration = "ideal"; // calibration file path or "ideal"
  std::vector<StationPlan> stations;
  double settle_s = 180.0;
  int avg_count = 10;
  std::optional<std::string> service_url;
  std::optional<std::string> token;
  Season season = Season::Summer;
  double time_scale = 1.0;
  double frame_rate_hz = 1.0;
  std::string device_id = "sonde-01";
  std::filesystem::path csv_path = "capture.csv";
  std::optional<Timestamp> start_time;  // logical origin; default now
  std::optional<ClockMode> clock;       // default: Wall for tcp, Frames for files

  bool device_is_tcp() const;
  ClockMode effective_clock() const;
  void validate() const;  // throws ConfigError
};

// Same key = value + [stations] format as scenario files. Station rows are
// "label longitude latitude [dwell_s]". Relative paths resolve against the
// config file's directory.
SessionConfig parse_session_config(const keyvalue::Document& doc,
                                   const std::filesystem::path& base_dir = {});
SessionConfig load_session_config(const std::filesystem::path& path);

// Assigns a logical time to each decoded frame.
class CaptureClock {
 public:
  virtual ~CaptureClock() = default;
  virtual FrameTime stamp(const wire::SensorFrame& frame) = 0;
};

// origin + elapsed steady time x time_scale.
class ScaledWallClock final : public CaptureClock {
 public:
  ScaledWallClock(FrameTime origin, double time_scale);
  FrameTime stamp(const wire::SensorFrame& frame) override;

 private:
  FrameTime origin_;
  double scale_;
  std::chrono::steady_clock::time_point start_;
};

// First frame at origin, then 1/rate per frame plus any sequence gap.
class FrameCountClock final : public CaptureClock {
 public:
  FrameCountClock(FrameTime origin, double frame_rate_hz);
  FrameTime stamp(const wire::SensorFrame& frame) override;
  std::uint64_t lost_frames() const { return lost_; }

 private:
  FrameTime origin_;
  double rate_;
  std::uint64_t ticks_ = 0;
  std::uint64_t lost_ = 0;
  std::optional<std::uint8_t> last_seq_;
};

struct StationOutcome {
  std::string label;
  std::optional<Reading> reading;
  std::string error;  // InsufficientData diagnostic when no reading
};

// Walks the station list in order, running one DwellCapture per station
// against the frame stream.
class StationScheduler {
 public:
  using Sink = std::function<void(const StationOutcome&)>;

  StationScheduler(std::vector<StationPlan> plan, calibration::PhCalibration cal,
                   DwellSettings settings, std::string device_id, FrameTime origin, Sink sink);

  void on_frame(const TimedFrame& frame);
  // Closes out the current and remaining stations as InsufficientData.
  void finish();
  bool done() const { return index_ >= plan_.size(); }

 private:
  void advance();
  void emit_insufficient();

  std::vector<StationPlan> plan_;
  calibration::PhCalibration cal_;
  DwellSettings settings_;
  std::string device_id_;
  Sink sink_;
  std::size_t index_ = 0;
  std::optional<FrameTime> next_arrival_;
  std::optional<DwellCapture> current_;
};

struct SessionResult {
  std::vector<StationOutcome> stations;
  std::uint64_t frames = 0;
  std::uint64_t frame_errors = 0;
  std::uint64_t lost_frames = 0;
  std::size_t uploaded = 0;
  std::size_t upload_duplicates = 0;
  std::vector<std::string> upload_failures;

  std::vector<Reading> readings() const;
};

// Runs a full capture session: reads the device stream, applies the dwell
// protocol per station, prints the narrative to `console`, appends readings
// to the local CSV and uploads them when a service is configured. Throws
// ConfigError / CalibrationError for invalid input and net::NetError when
// the device cannot be reached.
SessionResult run_session(const SessionConfig& config, std::ostream& console);

}  // namespace aquasonde::capture
