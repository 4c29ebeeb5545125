#pragma once

#include <chrono>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "aquasonde/sample_domain.hpp"

namespace aquasonde::client {

// Transport failure or non-2xx status.
struct ServiceError : std::runtime_error {
  ServiceError(const std::string& what, int status) : std::runtime_error(what), status(status) {}
  int status = 0;  // 0 when no HTTP response was received
};

struct UploadResult {
  std::size_t accepted = 0;
  std::size_t duplicates = 0;
  nlohmann::json rejected = nlohmann::json::array();
};

class ServiceClient {
 public:
  // base_url: "http://host:port"
  explicit ServiceClient(std::string base_url, std::optional<std::string> token = std::nullopt,
                         std::chrono::seconds timeout = std::chrono::seconds{5});

  UploadResult post_readings(std::span<const Reading> readings, std::string_view source = "live");
  std::string export_csv(bool with_provenance);
  nlohmann::json stations(Season season);
  nlohmann::json health();

  const std::string& base_url() const { return base_url_; }

 private:
  std::string base_url_;
  std::optional<std::string> token_;
  std::chrono::seconds timeout_;
};

}  // namespace aquasonde::client
