#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "aquasonde/keyvalue.hpp"
#include "aquasonde/net.hpp"
#include "aquasonde/wire_protocol.hpp"

namespace aquasonde::sim {

struct ScenarioInvalid : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct OffsetOutOfRange : std::out_of_range {
  using std::out_of_range::out_of_range;
};

struct ScriptStation {
  std::string label;
  double longitude = 0.0;
  double latitude = 0.0;
  double true_ph = 7.0;
  double true_temp_c = 25.0;
  double dwell_s = 200.0;
};

struct ScenarioScript {
  std::vector<ScriptStation> stations;
  double frame_rate_hz = 1.0;
  double noise_mv_sigma = 1.0;
  double noise_temp_sigma = 0.05;
  std::uint64_t seed = 0;
  int battery_start_pct = 100;
  double time_scale = 1.0;

  // Throws ScenarioInvalid.
  void validate() const;
  std::size_t frames_for(const ScriptStation& station) const;
  std::size_t total_frames() const;
};

ScenarioScript parse_scenario(const keyvalue::Document& doc);
ScenarioScript load_scenario(const std::filesystem::path& path);

// xorshift64* (Vigna 2014): shifts 12/25/27, multiplier 0x2545F4914F6CDD1D.
// A zero seed is replaced by 0x9E3779B97F4A7C15 since the all-zero state is
// absorbing.
class Xorshift64Star {
 public:
  explicit Xorshift64Star(std::uint64_t seed);

  std::uint64_t next();
  // Top 53 bits scaled into [0, 1).
  double uniform();
  // Box-Muller cosine branch: two uniforms per draw, no caching.
  double gaussian();

 private:
  std::uint64_t state_;
};

struct SimulatedFrame {
  double at_s = 0.0;  // logical seconds since stream start
  std::size_t station_index = 0;
  wire::SensorFrame frame;
};

std::vector<SimulatedFrame> simulate_frames(const ScenarioScript& script);

// Concatenated encoded frames; byte-identical for identical scripts.
std::vector<std::uint8_t> simulate(const ScenarioScript& script);

struct DropBytes {
  std::size_t begin = 0;  // [begin, end)
  std::size_t end = 0;
};
struct CorruptByte {
  std::size_t offset = 0;
  std::uint8_t xor_mask = 0xFF;
};
struct DuplicateFrame {
  std::size_t index = 0;  // frame index in an 11-byte aligned stream
};
using Fault = std::variant<DropBytes, CorruptByte, DuplicateFrame>;

// Throws OffsetOutOfRange when the fault addresses bytes beyond the stream.
std::vector<std::uint8_t> inject_fault(std::span<const std::uint8_t> stream, const Fault& fault);

// Writes `stream` to `peer` one frame-sized chunk at a time, paced at
// `frames_per_second` of real time. Returns the number of bytes written
// before the peer went away.
std::size_t serve_paced(net::Socket& peer, std::span<const std::uint8_t> stream,
                        double frames_per_second);

}  // namespace aquasonde::sim
