#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "aquasonde/sample_domain.hpp"

namespace aquasonde::ingest {

enum class Source { Live, Replay };

std::string_view to_string(Source s);
Source parse_source(std::string_view text);

struct IngestRecord {
  Reading reading;
  Timestamp received_at;
  Source source = Source::Live;
};

struct LogCorrupt : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct StorageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// One JSON object per line:
//   {"received_at":"...Z","source":"live","reading":{...}}
std::string encode_log_line(const IngestRecord& record);
IngestRecord decode_log_line(std::string_view line);

// Durable append-only byte sink. append() either makes the whole chunk
// durable or throws StorageError leaving the log as it was.
class LogDevice {
 public:
  virtual ~LogDevice() = default;
  virtual void append(std::string_view bytes) = 0;
};

class FileLog final : public LogDevice {
 public:
  explicit FileLog(const std::filesystem::path& path);
  ~FileLog() override;
  FileLog(const FileLog&) = delete;
  FileLog& operator=(const FileLog&) = delete;

  void append(std::string_view bytes) override;

 private:
  void rollback();

  std::filesystem::path path_;
  int fd_ = -1;
  std::uint64_t size_ = 0;
};

struct Recovery {
  std::vector<IngestRecord> records;
  std::size_t torn_bytes = 0;
  std::vector<std::string> warnings;
};

// Replays the log at `path`. A torn final record is reported in `warnings`
// and cut from the file so later appends start on a clean line. Throws
// LogCorrupt when any earlier record fails to parse.
Recovery recover_log(const std::filesystem::path& path);

struct AppendOutcome {
  std::vector<std::size_t> accepted;    // indices into the submitted batch
  std::vector<std::size_t> duplicates;
};

// Readings indexed by dedup key and station. Writes are serialized; reads
// take a shared lock and return copies.
class Store {
 public:
  explicit Store(std::unique_ptr<LogDevice> log, std::vector<IngestRecord> recovered = {});

  // Recovers from `path` and appends to it afterwards.
  static std::unique_ptr<Store> open(const std::filesystem::path& path, Recovery* report = nullptr);

  // Appends every novel record in one durable write, then indexes them and
  // invokes `on_accepted` for each, in order, before returning. Throws
  // StorageError with nothing indexed when the write fails.
  AppendOutcome append_batch(std::span<const IngestRecord> batch,
                             const std::function<void(const IngestRecord&)>& on_accepted = {});

  std::size_t size() const;
  bool contains(const DedupKey& key) const;
  bool has_station(std::string_view label) const;

  // Ordered by reading timestamp; ties keep arrival order.
  std::vector<Reading> readings() const;
  std::vector<Reading> station_readings(std::string_view label) const;
  std::vector<StationSummary> summaries(Season season) const;

 private:
  static std::vector<Reading> by_timestamp(std::vector<Reading> readings);

  mutable std::shared_mutex mutex_;
  std::mutex write_mutex_;
  std::unique_ptr<LogDevice> log_;
  std::vector<IngestRecord> records_;
  std::unordered_set<DedupKey> keys_;
  std::unordered_map<std::string, std::vector<std::size_t>> by_station_;
};

}  // namespace aquasonde::ingest
