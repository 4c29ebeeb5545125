#include "aquasonde/store.hpp"

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "aquasonde/record_io.hpp"

namespace aquasonde::ingest {

using nlohmann::json;

std::string_view to_string(Source s) {
  return s == Source::Live ? "live" : "replay";
}

Source parse_source(std::string_view text) {
  if (text == "live") return Source::Live;
  if (text == "replay") return Source::Replay;
  throw std::invalid_argument(fmt::format("unknown source '{}'", text));
}

std::string encode_log_line(const IngestRecord& record) {
  json j = {
      {"received_at", timeutil::format_iso8601(record.received_at)},
      {"source", std::string(to_string(record.source))},
      {"reading", record_io::to_json(record.reading)},
  };
  return j.dump() + "\n";
}

IngestRecord decode_log_line(std::string_view line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw record_io::RecordError(e.what());
  }
  if (!j.is_object() || !j.contains("received_at") || !j.contains("source") ||
      !j.contains("reading") || !j["received_at"].is_string() || !j["source"].is_string()) {
    throw record_io::RecordError("log record lacks received_at/source/reading");
  }
  IngestRecord r;
  try {
    r.received_at = timeutil::parse_iso8601(j["received_at"].get<std::string>());
    r.source = parse_source(j["source"].get<std::string>());
  } catch (const std::invalid_argument& e) {
    throw record_io::RecordError(e.what());
  }
  r.reading = record_io::reading_from_json(j["reading"]);
  return r;
}

FileLog::FileLog(const std::filesystem::path& path) : path_(path) {
  fd_ = ::open(path.c_str(), O_WRONLY | O_APPEND | O_CREAT | O_CLOEXEC, 0644);
  if (fd_ < 0) {
    throw StorageError(fmt::format("cannot open log {}: {}", path.string(), std::strerror(errno)));
  }
  struct stat st {};
  ::fstat(fd_, &st);
  size_ = static_cast<std::uint64_t>(st.st_size);
}

FileLog::~FileLog() {
  if (fd_ >= 0) ::close(fd_);
}

void FileLog::rollback() {
  // A failed truncate leaves a torn tail, which recovery cuts on next start.
  if (::ftruncate(fd_, static_cast<off_t>(size_)) != 0) return;
}

void FileLog::append(std::string_view bytes) {
  std::size_t written = 0;
  while (written < bytes.size()) {
    const auto n = ::write(fd_, bytes.data() + written, bytes.size() - written);
    if (n < 0) {
      if (errno == EINTR) continue;
      const int err = errno;
      rollback();
      throw StorageError(fmt::format("write to {} failed: {}", path_.string(), std::strerror(err)));
    }
    written += static_cast<std::size_t>(n);
  }
  if (::fdatasync(fd_) != 0) {
    const int err = errno;
    rollback();
    throw StorageError(fmt::format("fdatasync {} failed: {}", path_.string(), std::strerror(err)));
  }
  size_ += bytes.size();
}

Recovery recover_log(const std::filesystem::path& path) {
  Recovery out;
  std::error_code ec;
  if (!std::filesystem::exists(path, ec)) return out;

  std::ifstream in(path, std::ios::binary);
  if (!in) throw StorageError(fmt::format("cannot read log {}", path.string()));
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();

  std::size_t pos = 0;
  std::size_t good_end = 0;
  int line_no = 0;
  while (pos < text.size()) {
    const auto eol = text.find('\n', pos);
    const bool terminated = eol != std::string::npos;
    const std::size_t next = terminated ? eol + 1 : text.size();
    const std::string_view line(text.data() + pos, (terminated ? eol : text.size()) - pos);
    const bool final_record = next >= text.size();
    ++line_no;

    if (line.empty()) {
      pos = next;
      good_end = next;
      continue;
    }
    try {
      if (!terminated) throw record_io::RecordError("record is not newline-terminated");
      out.records.push_back(decode_log_line(line));
      good_end = next;
    } catch (const record_io::RecordError& e) {
      if (!final_record) {
        throw LogCorrupt(fmt::format("{}:{}: {}", path.string(), line_no, e.what()));
      }
      out.torn_bytes = text.size() - pos;
      out.warnings.push_back(fmt::format("{}:{}: discarded torn final record ({} bytes): {}",
                                         path.string(), line_no, out.torn_bytes, e.what()));
    }
    pos = next;
  }

  if (good_end < text.size()) {
    std::filesystem::resize_file(path, good_end, ec);
    if (ec) {
      throw StorageError(fmt::format("cannot truncate torn tail of {}: {}", path.string(),
                                     ec.message()));
    }
  }
  return out;
}

Store::Store(std::unique_ptr<LogDevice> log, std::vector<IngestRecord> recovered)
    : log_(std::move(log)) {
  for (auto& r : recovered) {
    if (!keys_.insert(dedup_key(r.reading)).second) continue;
    if (r.reading.station) by_station_[*r.reading.station].push_back(records_.size());
    records_.push_back(std::move(r));
  }
}

std::unique_ptr<Store> Store::open(const std::filesystem::path& path, Recovery* report) {
  auto recovery = recover_log(path);
  auto log = std::make_unique<FileLog>(path);
  auto store = std::make_unique<Store>(std::move(log), recovery.records);
  if (report) *report = std::move(recovery);
  return store;
}

AppendOutcome Store::append_batch(std::span<const IngestRecord> batch,
                                  const std::function<void(const IngestRecord&)>& on_accepted) {
  std::lock_guard writer(write_mutex_);
  AppendOutcome outcome;
  std::unordered_set<DedupKey> batch_keys;
  std::string payload;
  {
    std::shared_lock read(mutex_);
    for (std::size_t i = 0; i < batch.size(); ++i) {
      auto key = dedup_key(batch[i].reading);
      if (keys_.contains(key) || !batch_keys.insert(std::move(key)).second) {
        outcome.duplicates.push_back(i);
        continue;
      }
      outcome.accepted.push_back(i);
      payload += encode_log_line(batch[i]);
    }
  }
  if (outcome.accepted.empty()) return outcome;

  log_->append(payload);

  {
    std::unique_lock write(mutex_);
    for (auto i : outcome.accepted) {
      const auto& rec = batch[i];
      keys_.insert(dedup_key(rec.reading));
      if (rec.reading.station) by_station_[*rec.reading.station].push_back(records_.size());
      records_.push_back(rec);
    }
  }
  if (on_accepted) {
    for (auto i : outcome.accepted) on_accepted(batch[i]);
  }
  return outcome;
}

std::size_t Store::size() const {
  std::shared_lock lock(mutex_);
  return records_.size();
}

bool Store::contains(const DedupKey& key) const {
  std::shared_lock lock(mutex_);
  return keys_.contains(key);
}

bool Store::has_station(std::string_view label) const {
  std::shared_lock lock(mutex_);
  return by_station_.contains(std::string(label));
}

std::vector<Reading> Store::by_timestamp(std::vector<Reading> readings) {
  std::stable_sort(readings.begin(), readings.end(),
                   [](const Reading& a, const Reading& b) { return a.timestamp < b.timestamp; });
  return readings;
}

std::vector<Reading> Store::readings() const {
  std::vector<Reading> out;
  {
    std::shared_lock lock(mutex_);
    out.reserve(records_.size());
    for (const auto& r : records_) out.push_back(r.reading);
  }
  return by_timestamp(std::move(out));
}

std::vector<Reading> Store::station_readings(std::string_view label) const {
  std::vector<Reading> out;
  {
    std::shared_lock lock(mutex_);
    auto it = by_station_.find(std::string(label));
    if (it == by_station_.end()) return out;
    for (auto i : it->second) out.push_back(records_[i].reading);
  }
  return by_timestamp(std::move(out));
}

std::vector<StationSummary> Store::summaries(Season season) const {
  return summarize_by_station(readings(), season);
}

}  // namespace aquasonde::ingest
