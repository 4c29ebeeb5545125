#include "aquasonde/device_sim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include <fmt/format.h>

#include "aquasonde/calibration.hpp"

namespace aquasonde::sim {

namespace cal = aquasonde::calibration;

void ScenarioScript::validate() const {
  if (stations.empty()) throw ScenarioInvalid("scenario has no stations");
  if (!(frame_rate_hz > 0.0) || !std::isfinite(frame_rate_hz)) {
    throw ScenarioInvalid("frame_rate_hz must be > 0");
  }
  if (!(time_scale > 0.0) || !std::isfinite(time_scale)) {
    throw ScenarioInvalid("time_scale must be > 0");
  }
  if (!(noise_mv_sigma >= 0.0) || !(noise_temp_sigma >= 0.0)) {
    throw ScenarioInvalid("noise sigmas must be >= 0");
  }
  if (battery_start_pct < 0 || battery_start_pct > 100) {
    throw ScenarioInvalid("battery_start_pct must be within [0, 100]");
  }
  std::set<std::string> labels;
  for (const auto& s : stations) {
    if (s.label.empty()) throw ScenarioInvalid("station label is empty");
    if (!labels.insert(s.label).second) {
      throw ScenarioInvalid(fmt::format("duplicate station label '{}'", s.label));
    }
    if (!(s.true_ph >= cal::kPhMin && s.true_ph <= cal::kPhMax)) {
      throw ScenarioInvalid(fmt::format("station {}: true_ph {} outside [0, 14]", s.label, s.true_ph));
    }
    if (!(s.true_temp_c >= cal::kTempMinC && s.true_temp_c <= cal::kTempMaxC)) {
      throw ScenarioInvalid(
          fmt::format("station {}: true_temp_c {} outside [0, 60]", s.label, s.true_temp_c));
    }
    if (!(s.longitude >= -180.0 && s.longitude <= 180.0) ||
        !(s.latitude >= -90.0 && s.latitude <= 90.0)) {
      throw ScenarioInvalid(fmt::format("station {}: coordinates out of range", s.label));
    }
    if (!(s.dwell_s > 0.0) || !std::isfinite(s.dwell_s)) {
      throw ScenarioInvalid(fmt::format("station {}: dwell_s must be > 0", s.label));
    }
  }
}

std::size_t ScenarioScript::frames_for(const ScriptStation& station) const {
  return static_cast<std::size_t>(std::llround(station.dwell_s * frame_rate_hz));
}

std::size_t ScenarioScript::total_frames() const {
  std::size_t n = 0;
  for (const auto& s : stations) n += frames_for(s);
  return n;
}

ScenarioScript parse_scenario(const keyvalue::Document& doc) {
  ScenarioScript script;
  try {
    script.frame_rate_hz = doc.get_double("frame_rate_hz", 1.0);
    script.noise_mv_sigma = doc.get_double("noise_mv_sigma", 1.0);
    script.noise_temp_sigma = doc.get_double("noise_temp_sigma", 0.05);
    script.seed = doc.get_uint("seed", 0);
    const auto battery = doc.get_uint("battery_start_pct", 100);
    script.battery_start_pct = battery > 100 ? 101 : static_cast<int>(battery);
    script.time_scale = doc.get_double("time_scale", 1.0);
    for (const auto& row : doc.stations()) {
      if (row.fields.size() != 6) {
        throw ScenarioInvalid(fmt::format(
            "{}:{}: station row needs 6 columns (label longitude latitude true_ph true_temp_c "
            "dwell_s)",
            doc.source(), row.line));
      }
      const auto where = fmt::format("{}:{}", doc.source(), row.line);
      ScriptStation s;
      s.label = row.fields[0];
      s.longitude = keyvalue::to_double(row.fields[1], where);
      s.latitude = keyvalue::to_double(row.fields[2], where);
      s.true_ph = keyvalue::to_double(row.fields[3], where);
      s.true_temp_c = keyvalue::to_double(row.fields[4], where);
      s.dwell_s = keyvalue::to_double(row.fields[5], where);
      script.stations.push_back(std::move(s));
    }
  } catch (const keyvalue::ParseError& e) {
    throw ScenarioInvalid(e.what());
  }
  script.validate();
  return script;
}

ScenarioScript load_scenario(const std::filesystem::path& path) {
  try {
    return parse_scenario(keyvalue::parse_file(path));
  } catch (const keyvalue::ParseError& e) {
    throw ScenarioInvalid(e.what());
  }
}

Xorshift64Star::Xorshift64Star(std::uint64_t seed)
    : state_(seed == 0 ? 0x9E3779B97F4A7C15ULL : seed) {}

std::uint64_t Xorshift64Star::next() {
  state_ ^= state_ >> 12;
  state_ ^= state_ << 25;
  state_ ^= state_ >> 27;
  return state_ * 0x2545F4914F6CDD1DULL;
}

double Xorshift64Star::uniform() {
  return static_cast<double>(next() >> 11) * 0x1.0p-53;
}

double Xorshift64Star::gaussian() {
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::vector<SimulatedFrame> simulate_frames(const ScenarioScript& script) {
  script.validate();
  const auto ideal = cal::ideal_calibration();
  Xorshift64Star rng(script.seed);

  std::vector<SimulatedFrame> out;
  out.reserve(script.total_frames());
  std::uint8_t seq = 0;
  std::size_t global = 0;
  for (std::size_t k = 0; k < script.stations.size(); ++k) {
    const auto& st = script.stations[k];
    const std::size_t count = script.frames_for(st);
    const double true_mv = cal::mv_from_ph(st.true_ph, ideal, st.true_temp_c);
    for (std::size_t j = 0; j < count; ++j, ++global) {
      const double mv = true_mv + script.noise_mv_sigma * rng.gaussian();
      const double temp = st.true_temp_c + script.noise_temp_sigma * rng.gaussian();
      const double battery = script.battery_start_pct - static_cast<double>(k) -
                             static_cast<double>(j + 1) / static_cast<double>(count);

      SimulatedFrame f;
      f.at_s = static_cast<double>(global) / script.frame_rate_hz;
      f.station_index = k;
      f.frame.seq = seq++;
      f.frame.ph_adc = cal::adc_from_electrode_mv(mv);
      f.frame.temp_adc = cal::adc_from_temp_c(temp);
      f.frame.battery_pct = static_cast<std::uint8_t>(std::clamp(std::lround(battery), 0L, 100L));
      f.frame.flags = wire::kFlagPhValid | wire::kFlagTempValid;
      out.push_back(f);
    }
  }
  return out;
}

std::vector<std::uint8_t> simulate(const ScenarioScript& script) {
  const auto frames = simulate_frames(script);
  std::vector<std::uint8_t> bytes;
  bytes.reserve(frames.size() * wire::kFrameSize);
  for (const auto& f : frames) {
    const auto encoded = wire::encode_frame(f.frame);
    bytes.insert(bytes.end(), encoded.begin(), encoded.end());
  }
  return bytes;
}

std::vector<std::uint8_t> inject_fault(std::span<const std::uint8_t> stream, const Fault& fault) {
  std::vector<std::uint8_t> out(stream.begin(), stream.end());
  std::visit(
      [&](const auto& f) {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, DropBytes>) {
          if (f.begin > f.end || f.end > out.size()) {
            throw OffsetOutOfRange(fmt::format("drop range [{}, {}) outside stream of {} bytes",
                                               f.begin, f.end, out.size()));
          }
          out.erase(out.begin() + static_cast<std::ptrdiff_t>(f.begin),
                    out.begin() + static_cast<std::ptrdiff_t>(f.end));
        } else if constexpr (std::is_same_v<T, CorruptByte>) {
          if (f.offset >= out.size()) {
            throw OffsetOutOfRange(
                fmt::format("offset {} outside stream of {} bytes", f.offset, out.size()));
          }
          if (f.xor_mask == 0) throw std::invalid_argument("xor_mask 0 leaves the byte unchanged");
          out[f.offset] ^= f.xor_mask;
        } else {
          const std::size_t begin = f.index * wire::kFrameSize;
          if (begin + wire::kFrameSize > out.size()) {
            throw OffsetOutOfRange(fmt::format("frame {} outside stream of {} bytes", f.index,
                                               out.size()));
          }
          std::vector<std::uint8_t> copy(out.begin() + static_cast<std::ptrdiff_t>(begin),
                                         out.begin() + static_cast<std::ptrdiff_t>(begin + wire::kFrameSize));
          out.insert(out.begin() + static_cast<std::ptrdiff_t>(begin + wire::kFrameSize),
                     copy.begin(), copy.end());
        }
      },
      fault);
  return out;
}

}  // namespace aquasonde::sim
