#include "aquasonde/capture.hpp"

#include <cmath>
#include <condition_variable>
#include <deque>
#include <fstream>
#include <mutex>
#include <ostream>
#include <set>
#include <thread>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "aquasonde/net.hpp"
#include "aquasonde/record_io.hpp"
#include "aquasonde/report.hpp"
#include "aquasonde/service_client.hpp"
#include "aquasonde/wire_protocol.hpp"

namespace aquasonde::capture {

using namespace std::chrono;

namespace {

milliseconds to_ms(double seconds) {
  return milliseconds{std::llround(seconds * 1000.0)};
}

// Best-effort uploader: readings are posted from a worker thread so the
// stream decoder never waits on the network.
class Uploader {
 public:
  Uploader(std::string url, std::optional<std::string> token)
      : client_(std::move(url), std::move(token)), worker_([this] { loop(); }) {}

  ~Uploader() { close(); }

  void submit(const Reading& r) {
    {
      std::lock_guard lock(mutex_);
      queue_.push_back(r);
    }
    cv_.notify_one();
  }

  void close() {
    {
      std::lock_guard lock(mutex_);
      closing_ = true;
    }
    cv_.notify_one();
    if (worker_.joinable()) worker_.join();
  }

  std::size_t accepted = 0;
  std::size_t duplicates = 0;
  std::vector<std::string> failures;

 private:
  void loop() {
    for (;;) {
      Reading r;
      {
        std::unique_lock lock(mutex_);
        cv_.wait(lock, [&] { return closing_ || !queue_.empty(); });
        if (queue_.empty()) return;
        r = std::move(queue_.front());
        queue_.pop_front();
      }
      try {
        const auto res = client_.post_readings(std::span(&r, 1));
        std::lock_guard lock(mutex_);
        accepted += res.accepted;
        duplicates += res.duplicates;
        if (!res.rejected.empty()) {
          failures.push_back(fmt::format("{}: rejected: {}", r.station.value_or("?"),
                                         res.rejected.dump()));
        }
      } catch (const client::ServiceError& e) {
        std::lock_guard lock(mutex_);
        failures.push_back(fmt::format("{}: {}", r.station.value_or("?"), e.what()));
      }
    }
  }

  client::ServiceClient client_;
  std::mutex mutex_;
  std::condition_variable cv_;
  std::deque<Reading> queue_;
  bool closing_ = false;
  std::thread worker_;
};

class CsvAppender {
 public:
  explicit CsvAppender(const std::filesystem::path& path) : path_(path) {
    std::error_code ec;
    const bool fresh = !std::filesystem::exists(path, ec) || std::filesystem::file_size(path, ec) == 0;
    out_.open(path, std::ios::app);
    if (!out_) throw std::runtime_error(fmt::format("cannot open {}", path.string()));
    if (fresh) out_ << record_io::csv_header(true) << '\n';
    out_.flush();
  }

  void append(const Reading& r) {
    out_ << record_io::csv_row(r, true) << '\n';
    out_.flush();
  }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

void print_reading(std::ostream& console, const Reading& r, Season season) {
  const auto ph = assess_ph(r.ph);
  const auto temp = assess_temperature(r.temp_c, season);
  fmt::print(console, "  {} {}  lon {:.6f} lat {:.6f}\n", r.station.value_or("?"),
             timeutil::format_iso8601(r.timestamp), r.longitude, r.latitude);
  fmt::print(console, "    pH   {:6.2f}  {} (norm {:.1f}-{:.1f})\n", r.ph,
             to_string(ph.classification), ph.norm_low, ph.norm_high);
  fmt::print(console, "    temp {:6.2f}  {} ({} norm {:.0f}-{:.0f} C)\n", r.temp_c,
             to_string(temp.classification), to_string(season), temp.norm_low, temp.norm_high);
}

}  // namespace

bool SessionConfig::device_is_tcp() const {
  return device.starts_with("tcp://");
}

ClockMode SessionConfig::effective_clock() const {
  if (clock) return *clock;
  return device_is_tcp() ? ClockMode::Wall : ClockMode::Frames;
}

void SessionConfig::validate() const {
  if (device.empty()) throw ConfigError("device endpoint is not set");
  if (!(settle_s >= 0.0)) throw ConfigError("settle_s must be >= 0");
  if (avg_count < 1) throw ConfigError("avg_count must be >= 1");
  if (!(time_scale > 0.0)) throw ConfigError("time_scale must be > 0");
  if (!(frame_rate_hz > 0.0)) throw ConfigError("frame_rate_hz must be > 0");
  if (stations.empty()) throw ConfigError("no stations configured");
  std::set<std::string> labels;
  for (const auto& s : stations) {
    if (s.station.label.empty()) throw ConfigError("station label is empty");
    if (!labels.insert(s.station.label).second) {
      throw ConfigError(fmt::format("duplicate station label '{}'", s.station.label));
    }
    if (s.dwell_s && !(*s.dwell_s > 0.0)) {
      throw ConfigError(fmt::format("station {}: dwell_s must be > 0", s.station.label));
    }
  }
}

SessionConfig parse_session_config(const keyvalue::Document& doc,
                                   const std::filesystem::path& base_dir) {
  auto resolve = [&](const std::string& p) {
    std::filesystem::path path(p);
    return path.is_relative() && !base_dir.empty() ? base_dir / path : path;
  };

  SessionConfig c;
  try {
    c.device = doc.get_string("device");
    if (!c.device.starts_with("tcp://")) {
      auto file = c.device.starts_with("file:") ? c.device.substr(5) : c.device;
      c.device = resolve(file).string();
    }
    c.calibration = doc.get_string("calibration", "ideal");
    if (c.calibration != "ideal") c.calibration = resolve(c.calibration).string();
    c.settle_s = doc.get_double("settle_s", 180.0);
    const auto avg = doc.get_uint("avg_count", 10);
    c.avg_count = avg > 1'000'000 ? 1'000'000 : static_cast<int>(avg);
    if (auto url = doc.find("service"); url && !url->empty()) c.service_url = *url;
    c.season = parse_season(doc.get_string("season", "summer"));
    c.time_scale = doc.get_double("time_scale", 1.0);
    c.frame_rate_hz = doc.get_double("frame_rate_hz", 1.0);
    c.device_id = doc.get_string("device_id", "sonde-01");
    c.csv_path = resolve(doc.get_string("csv", "capture.csv"));
    if (auto start = doc.find("start_time")) c.start_time = timeutil::parse_iso8601(*start);
    if (auto clock = doc.find("clock")) {
      if (*clock == "wall") {
        c.clock = ClockMode::Wall;
      } else if (*clock == "frames") {
        c.clock = ClockMode::Frames;
      } else {
        throw ConfigError(fmt::format("clock must be 'wall' or 'frames', got '{}'", *clock));
      }
    }
    for (const auto& row : doc.stations()) {
      if (row.fields.size() != 3 && row.fields.size() != 4) {
        throw ConfigError(fmt::format(
            "{}:{}: station row needs 'label longitude latitude [dwell_s]'", doc.source(), row.line));
      }
      const auto where = fmt::format("{}:{}", doc.source(), row.line);
      StationPlan plan;
      plan.station.label = row.fields[0];
      plan.station.longitude = keyvalue::to_double(row.fields[1], where);
      plan.station.latitude = keyvalue::to_double(row.fields[2], where);
      if (row.fields.size() == 4) plan.dwell_s = keyvalue::to_double(row.fields[3], where);
      c.stations.push_back(std::move(plan));
    }
  } catch (const keyvalue::ParseError& e) {
    throw ConfigError(e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  c.validate();
  return c;
}

SessionConfig load_session_config(const std::filesystem::path& path) {
  try {
    return parse_session_config(keyvalue::parse_file(path), path.parent_path());
  } catch (const keyvalue::ParseError& e) {
    throw ConfigError(e.what());
  }
}

ScaledWallClock::ScaledWallClock(FrameTime origin, double time_scale)
    : origin_(origin), scale_(time_scale), start_(steady_clock::now()) {}

FrameTime ScaledWallClock::stamp(const wire::SensorFrame&) {
  const duration<double> elapsed = steady_clock::now() - start_;
  return origin_ + to_ms(elapsed.count() * scale_);
}

FrameCountClock::FrameCountClock(FrameTime origin, double frame_rate_hz)
    : origin_(origin), rate_(frame_rate_hz) {}

FrameTime FrameCountClock::stamp(const wire::SensorFrame& frame) {
  if (last_seq_) {
    const auto gap = wire::seq_gap(*last_seq_, frame.seq);
    lost_ += gap;
    ticks_ += 1 + gap;
  }
  last_seq_ = frame.seq;
  return origin_ + to_ms(static_cast<double>(ticks_) / rate_);
}

StationScheduler::StationScheduler(std::vector<StationPlan> plan, calibration::PhCalibration cal,
                                   DwellSettings settings, std::string device_id,
                                   FrameTime origin, Sink sink)
    : plan_(std::move(plan)),
      cal_(cal),
      settings_(settings),
      device_id_(std::move(device_id)),
      sink_(std::move(sink)),
      next_arrival_(origin) {}

void StationScheduler::advance() {
  const auto& plan = plan_[index_];
  if (plan.dwell_s && current_) {
    next_arrival_ = current_->arrival() + to_ms(*plan.dwell_s);
  } else {
    // The next station starts with the next frame.
    next_arrival_.reset();
  }
  current_.reset();
  ++index_;
}

void StationScheduler::emit_insufficient() {
  const int collected = current_ ? current_->collected() : 0;
  StationOutcome out;
  out.label = plan_[index_].station.label;
  out.error = fmt::format("station {}: {} of {} samples after the {} s settle window",
                          out.label, collected, settings_.avg_count,
                          duration<double>(settings_.settle).count());
  sink_(out);
}

void StationScheduler::on_frame(const TimedFrame& frame) {
  while (!done()) {
    if (!current_) {
      const FrameTime arrival = next_arrival_ ? *next_arrival_ : frame.at;
      auto station = plan_[index_].station;
      station.visited_at = floor<seconds>(arrival);
      current_.emplace(std::move(station), cal_, settings_, arrival, device_id_);
    }
    const auto& plan = plan_[index_];
    if (plan.dwell_s && frame.at >= current_->arrival() + to_ms(*plan.dwell_s)) {
      // The scheduled stay ended before enough samples arrived.
      emit_insufficient();
      advance();
      continue;
    }
    if (current_->offer(frame)) {
      sink_(StationOutcome{plan.station.label, current_->reading(), {}});
      advance();
    }
    return;
  }
}

void StationScheduler::finish() {
  while (!done()) {
    emit_insufficient();
    advance();
  }
}

std::vector<Reading> SessionResult::readings() const {
  std::vector<Reading> out;
  for (const auto& s : stations) {
    if (s.reading) out.push_back(*s.reading);
  }
  return out;
}

SessionResult run_session(const SessionConfig& config, std::ostream& console) {
  config.validate();
  const auto cal = config.calibration == "ideal" ? calibration::ideal_calibration()
                                                 : calibration::load_calibration(config.calibration);

  SessionResult result;
  CsvAppender csv(config.csv_path);
  std::optional<Uploader> uploader;
  if (config.service_url) uploader.emplace(*config.service_url, config.token);

  const DwellSettings settings{to_ms(config.settle_s), config.avg_count};
  const auto wall_start = time_point_cast<milliseconds>(system_clock::now());
  const FrameTime origin = config.start_time ? FrameTime{*config.start_time} : wall_start;

  fmt::print(console, "capture session: {} station(s), settle {} s, {} sample(s) per reading\n",
             config.stations.size(), config.settle_s, config.avg_count);

  StationScheduler scheduler(
      config.stations, cal, settings, config.device_id, origin, [&](const StationOutcome& out) {
        result.stations.push_back(out);
        if (!out.reading) {
          fmt::print(console, "  {} InsufficientData: {}\n", out.label, out.error);
          return;
        }
        print_reading(console, *out.reading, config.season);
        csv.append(*out.reading);
        if (uploader) uploader->submit(*out.reading);
      });

  std::unique_ptr<CaptureClock> clock;
  FrameCountClock* frame_clock = nullptr;
  wire::StreamDecoder decoder;
  auto consume = [&](std::span<const std::uint8_t> chunk) {
    auto fed = decoder.feed(chunk);
    result.frame_errors += fed.errors.size();
    for (const auto& f : fed.frames) {
      ++result.frames;
      scheduler.on_frame(TimedFrame{clock->stamp(f), f});
    }
  };

  if (config.effective_clock() == ClockMode::Frames) {
    auto fc = std::make_unique<FrameCountClock>(origin, config.frame_rate_hz);
    frame_clock = fc.get();
    clock = std::move(fc);
  }

  if (config.device_is_tcp()) {
    auto socket = net::connect(net::parse_endpoint(config.device));
    if (!clock) clock = std::make_unique<ScaledWallClock>(origin, config.time_scale);
    std::vector<std::uint8_t> buf(4096);
    while (!scheduler.done()) {
      const auto n = socket.read_some(buf);
      if (n == 0) break;
      consume(std::span(buf).first(n));
    }
  } else {
    std::ifstream in(config.device, std::ios::binary);
    if (!in) throw ConfigError(fmt::format("cannot open replay file {}", config.device));
    if (!clock) clock = std::make_unique<ScaledWallClock>(origin, config.time_scale);
    std::vector<std::uint8_t> buf(4096);
    while (!scheduler.done() && in) {
      in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
      const auto n = static_cast<std::size_t>(in.gcount());
      if (n == 0) break;
      consume(std::span(buf).first(n));
    }
  }
  result.frame_errors += decoder.finish().size();
  scheduler.finish();
  if (frame_clock) result.lost_frames = frame_clock->lost_frames();

  if (uploader) {
    uploader->close();
    result.uploaded = uploader->accepted;
    result.upload_duplicates = uploader->duplicates;
    result.upload_failures = uploader->failures;
  }

  const auto readings = result.readings();
  fmt::print(console, "\n{} frame(s) decoded, {} frame error(s), {} reading(s) captured\n",
             result.frames, result.frame_errors, readings.size());
  if (!readings.empty()) {
    const auto summaries = summarize_by_station(readings, config.season);
    fmt::print(console, "\n{}", report::format_table(summaries, config.season));
  }
  fmt::print(console, "\nreadings written to {}\n", config.csv_path.string());
  if (config.service_url) {
    fmt::print(console, "uploaded to {}: {} accepted, {} duplicate(s)\n", *config.service_url,
               result.uploaded, result.upload_duplicates);
    if (!result.upload_failures.empty()) {
      fmt::print(console, "warning: {} upload(s) failed; readings are kept in {}\n",
                 result.upload_failures.size(), config.csv_path.string());
      for (const auto& f : result.upload_failures) fmt::print(console, "  {}\n", f);
      fmt::print(console, "retry with: aquasonde upload --csv {} --service {}\n",
                 config.csv_path.string(), *config.service_url);
    }
  }
  return result;
}

}  // namespace aquasonde::capture
