#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "aquasonde/event_hub.hpp"
#include "aquasonde/sample_domain.hpp"
#include "aquasonde/store.hpp"

namespace httplib {
class Server;
}

namespace aquasonde::ingest {

struct ServiceConfig {
  std::string host = "127.0.0.1";
  std::uint16_t port = 8080;  // 0 = ephemeral
  std::optional<std::string> token;
  Season default_season = Season::Summer;
  std::size_t subscriber_queue = 256;
  std::size_t worker_threads = 32;
};

struct Rejection {
  std::size_t index = 0;
  std::string reason;
  std::string detail;
};

struct BatchResponse {
  std::size_t accepted = 0;
  std::size_t duplicates = 0;
  std::vector<Rejection> rejected;

  nlohmann::json to_json() const;
};

// HTTP front end over a Store. Endpoints are documented in docs/api.md.
class IngestService {
 public:
  IngestService(ServiceConfig config, std::unique_ptr<Store> store);
  ~IngestService();
  IngestService(const IngestService&) = delete;
  IngestService& operator=(const IngestService&) = delete;

  // Validates and stores a POST body (a JSON array of readings). Throws
  // std::invalid_argument for a malformed body and StorageError when the
  // log write fails; nothing from the batch is acknowledged in that case.
  BatchResponse ingest(const nlohmann::json& body, Source source);

  // Binds the listening socket and returns the bound port.
  std::uint16_t bind();
  // Serves until stop(). Requires bind().
  void run();
  // bind() + run() on a background thread.
  std::uint16_t start();
  void stop();

  Store& store() { return *store_; }
  EventHub& hub() { return hub_; }
  const ServiceConfig& config() const { return config_; }

 private:
  void install_routes();

  ServiceConfig config_;
  std::unique_ptr<Store> store_;
  EventHub hub_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  bool bound_ = false;
};

}  // namespace aquasonde::ingest
