#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string_view>
#include <variant>
#include <vector>

namespace aquasonde::wire {

// Frame layout (11 bytes, big-endian fields):
//
//   0-1  sync        A5 5A
//   2    version     1
//   3    seq         wraps 255 -> 0
//   4-5  ph_adc      0..1023
//   6-7  temp_adc    0..1023
//   8    battery_pct 0..100
//   9    flags       bit0 pH valid, bit1 temperature valid, bits 2-7 zero
//   10   checksum    (sum of bytes 2..10) mod 256 == 0
//
// See docs/wire-format.md.

inline constexpr std::size_t kFrameSize = 11;
inline constexpr std::uint8_t kSync0 = 0xA5;
inline constexpr std::uint8_t kSync1 = 0x5A;
inline constexpr std::uint8_t kProtocolVersion = 1;
inline constexpr std::uint16_t kAdcMax = 1023;
inline constexpr std::uint8_t kBatteryMax = 100;

inline constexpr std::uint8_t kFlagPhValid = 0x01;
inline constexpr std::uint8_t kFlagTempValid = 0x02;
inline constexpr std::uint8_t kFlagReservedMask = 0xFC;

using FrameBytes = std::array<std::uint8_t, kFrameSize>;

struct SensorFrame {
  std::uint8_t version = kProtocolVersion;
  std::uint8_t seq = 0;
  std::uint16_t ph_adc = 0;
  std::uint16_t temp_adc = 0;
  std::uint8_t battery_pct = 0;
  std::uint8_t flags = 0;

  bool ph_valid() const { return (flags & kFlagPhValid) != 0; }
  bool temp_valid() const { return (flags & kFlagTempValid) != 0; }
  bool both_valid() const { return ph_valid() && temp_valid(); }

  friend bool operator==(const SensorFrame&, const SensorFrame&) = default;
};

// True when the frame satisfies every field invariant (ranges, reserved bits).
bool is_valid(const SensorFrame& frame);

enum class FrameErrorKind {
  BadSync,
  UnsupportedVersion,
  ChecksumMismatch,
  FieldOutOfRange,
  Truncated,
};

std::string_view to_string(FrameErrorKind kind);

struct FrameError {
  FrameErrorKind kind;
  std::uint64_t byte_offset = 0;

  friend bool operator==(const FrameError&, const FrameError&) = default;
};

class InvalidFrame : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Throws InvalidFrame when `frame` violates an invariant.
FrameBytes encode_frame(const SensorFrame& frame);

// Checks run in the order sync, version, checksum, field range; the first
// failure is returned. byte_offset is relative to the start of `bytes`.
// Input shorter than kFrameSize yields Truncated.
std::variant<SensorFrame, FrameError> decode_frame(std::span<const std::uint8_t> bytes);

// Number of frames missing between two consecutive sequence numbers.
constexpr unsigned seq_gap(std::uint8_t prev_seq, std::uint8_t next_seq) {
  return static_cast<std::uint8_t>(next_seq - prev_seq - 1);
}

struct FeedResult {
  std::vector<SensorFrame> frames;
  std::vector<FrameError> errors;
};

// Incremental decoder for a continuous byte stream. Accepts arbitrary chunk
// boundaries; output depends only on the concatenated input. A contiguous run
// of non-frame bytes is reported as a single BadSync at its first byte, and
// the bytes following a rejected frame are skipped silently until the next
// sync pair.
class StreamDecoder {
 public:
  FeedResult feed(std::span<const std::uint8_t> chunk);

  // Reports a Truncated error for a partial frame left in the buffer.
  std::vector<FrameError> finish();

  std::size_t buffered() const { return buffer_.size(); }
  std::uint64_t stream_offset() const { return consumed_ + buffer_.size(); }

 private:
  void discard(std::size_t count, FeedResult& out);

  std::vector<std::uint8_t> buffer_;
  std::uint64_t consumed_ = 0;  // stream offset of buffer_[0]
  bool skipping_ = false;
};

}  // namespace aquasonde::wire
