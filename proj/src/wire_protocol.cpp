#include "aquasonde/wire_protocol.hpp"

#include <algorithm>
#include <numeric>

namespace aquasonde::wire {

namespace {

std::uint8_t checksum_of(std::span<const std::uint8_t> payload) {
  const unsigned sum = std::accumulate(payload.begin(), payload.end(), 0u);
  return static_cast<std::uint8_t>(0x100 - (sum & 0xFF));
}

std::uint16_t read_be16(std::span<const std::uint8_t> bytes, std::size_t at) {
  return static_cast<std::uint16_t>((bytes[at] << 8) | bytes[at + 1]);
}

}  // namespace

bool is_valid(const SensorFrame& frame) {
  return frame.ph_adc <= kAdcMax && frame.temp_adc <= kAdcMax &&
         frame.battery_pct <= kBatteryMax && (frame.flags & kFlagReservedMask) == 0;
}

std::string_view to_string(FrameErrorKind kind) {
  switch (kind) {
    case FrameErrorKind::BadSync: return "BadSync";
    case FrameErrorKind::UnsupportedVersion: return "UnsupportedVersion";
    case FrameErrorKind::ChecksumMismatch: return "ChecksumMismatch";
    case FrameErrorKind::FieldOutOfRange: return "FieldOutOfRange";
    case FrameErrorKind::Truncated: return "Truncated";
  }
  return "Unknown";
}

FrameBytes encode_frame(const SensorFrame& frame) {
  if (frame.version != kProtocolVersion) {
    throw InvalidFrame("unsupported protocol version");
  }
  if (!is_valid(frame)) {
    throw InvalidFrame("frame field out of range");
  }
  FrameBytes out{};
  out[0] = kSync0;
  out[1] = kSync1;
  out[2] = frame.version;
  out[3] = frame.seq;
  out[4] = static_cast<std::uint8_t>(frame.ph_adc >> 8);
  out[5] = static_cast<std::uint8_t>(frame.ph_adc & 0xFF);
  out[6] = static_cast<std::uint8_t>(frame.temp_adc >> 8);
  out[7] = static_cast<std::uint8_t>(frame.temp_adc & 0xFF);
  out[8] = frame.battery_pct;
  out[9] = frame.flags;
  out[10] = checksum_of(std::span(out).subspan(2, 8));
  return out;
}

std::variant<SensorFrame, FrameError> decode_frame(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kFrameSize) {
    return FrameError{FrameErrorKind::Truncated, bytes.size()};
  }
  if (bytes[0] != kSync0 || bytes[1] != kSync1) {
    return FrameError{FrameErrorKind::BadSync, 0};
  }
  if (bytes[2] != kProtocolVersion) {
    return FrameError{FrameErrorKind::UnsupportedVersion, 2};
  }
  const unsigned sum = std::accumulate(bytes.begin() + 2, bytes.begin() + kFrameSize, 0u);
  if ((sum & 0xFF) != 0) {
    return FrameError{FrameErrorKind::ChecksumMismatch, 10};
  }

  SensorFrame frame;
  frame.version = bytes[2];
  frame.seq = bytes[3];
  frame.ph_adc = read_be16(bytes, 4);
  frame.temp_adc = read_be16(bytes, 6);
  frame.battery_pct = bytes[8];
  frame.flags = bytes[9];

  if (frame.ph_adc > kAdcMax) return FrameError{FrameErrorKind::FieldOutOfRange, 4};
  if (frame.temp_adc > kAdcMax) return FrameError{FrameErrorKind::FieldOutOfRange, 6};
  if (frame.battery_pct > kBatteryMax) return FrameError{FrameErrorKind::FieldOutOfRange, 8};
  if ((frame.flags & kFlagReservedMask) != 0) {
    return FrameError{FrameErrorKind::FieldOutOfRange, 9};
  }
  return frame;
}

void StreamDecoder::discard(std::size_t count, FeedResult& out) {
  if (count == 0) return;
  if (!skipping_) {
    out.errors.push_back(FrameError{FrameErrorKind::BadSync, consumed_});
    skipping_ = true;
  }
  buffer_.erase(buffer_.begin(), buffer_.begin() + static_cast<std::ptrdiff_t>(count));
  consumed_ += count;
}

FeedResult StreamDecoder::feed(std::span<const std::uint8_t> chunk) {
  FeedResult out;
  buffer_.insert(buffer_.end(), chunk.begin(), chunk.end());

  while (!buffer_.empty()) {
    if (buffer_[0] != kSync0 || (buffer_.size() > 1 && buffer_[1] != kSync1)) {
      // Find the next candidate sync pair. A trailing lone A5 is kept since
      // its partner may arrive in the next chunk.
      std::size_t next = 1;
      while (next < buffer_.size()) {
        if (buffer_[next] == kSync0 &&
            (next + 1 == buffer_.size() || buffer_[next + 1] == kSync1)) {
          break;
        }
        ++next;
      }
      discard(next, out);
      continue;
    }
    if (buffer_.size() < kFrameSize) break;

    auto decoded = decode_frame(std::span(buffer_).first(kFrameSize));
    if (auto* frame = std::get_if<SensorFrame>(&decoded)) {
      out.frames.push_back(*frame);
      buffer_.erase(buffer_.begin(), buffer_.begin() + kFrameSize);
      consumed_ += kFrameSize;
      skipping_ = false;
      continue;
    }
    auto error = std::get<FrameError>(decoded);
    error.byte_offset += consumed_;
    out.errors.push_back(error);
    // Drop the sync byte and resynchronize; the rest of the rejected frame is
    // skipped without further BadSync reports.
    skipping_ = true;
    buffer_.erase(buffer_.begin());
    ++consumed_;
  }
  return out;
}

std::vector<FrameError> StreamDecoder::finish() {
  std::vector<FrameError> errors;
  if (!buffer_.empty()) {
    if (buffer_[0] == kSync0) {
      errors.push_back(FrameError{FrameErrorKind::Truncated, consumed_});
    } else if (!skipping_) {
      errors.push_back(FrameError{FrameErrorKind::BadSync, consumed_});
    }
    consumed_ += buffer_.size();
    buffer_.clear();
  }
  skipping_ = false;
  return errors;
}

}  // namespace aquasonde::wire
