#include "aquasonde/service_client.hpp"

#include <httplib.h>

#include <fmt/format.h>

#include "aquasonde/record_io.hpp"

namespace aquasonde::client {

using nlohmann::json;

namespace {

httplib::Client make_client(const std::string& base, std::chrono::seconds timeout) {
  httplib::Client cli(base);
  cli.set_connection_timeout(timeout);
  cli.set_read_timeout(timeout);
  cli.set_write_timeout(timeout);
  return cli;
}

httplib::Headers auth_headers(const std::optional<std::string>& token) {
  httplib::Headers h;
  if (token) h.emplace("Authorization", "Bearer " + *token);
  return h;
}

void check(const httplib::Result& res, const std::string& base, std::string_view what) {
  if (!res) {
    throw ServiceError(fmt::format("{} {}: {}", what, base, httplib::to_string(res.error())), 0);
  }
  if (res->status < 200 || res->status >= 300) {
    throw ServiceError(fmt::format("{} {}: HTTP {} {}", what, base, res->status, res->body),
                       res->status);
  }
}

}  // namespace

ServiceClient::ServiceClient(std::string base_url, std::optional<std::string> token,
                             std::chrono::seconds timeout)
    : base_url_(std::move(base_url)), token_(std::move(token)), timeout_(timeout) {
  while (!base_url_.empty() && base_url_.back() == '/') base_url_.pop_back();
}

UploadResult ServiceClient::post_readings(std::span<const Reading> readings,
                                          std::string_view source) {
  json body = json::array();
  for (const auto& r : readings) body.push_back(record_io::to_json(r));
  auto cli = make_client(base_url_, timeout_);
  auto res = cli.Post(fmt::format("/v1/readings?source={}", source), auth_headers(token_),
                      body.dump(), "application/json");
  check(res, base_url_, "POST /v1/readings");
  try {
    const auto j = json::parse(res->body);
    return UploadResult{j.at("accepted").get<std::size_t>(), j.at("duplicates").get<std::size_t>(),
                        j.at("rejected")};
  } catch (const json::exception& e) {
    throw ServiceError(fmt::format("unexpected response from {}: {}", base_url_, e.what()),
                       res->status);
  }
}

std::string ServiceClient::export_csv(bool with_provenance) {
  auto cli = make_client(base_url_, timeout_);
  auto res = cli.Get(with_provenance ? "/v1/export.csv?provenance=1" : "/v1/export.csv",
                     auth_headers(token_));
  check(res, base_url_, "GET /v1/export.csv");
  return res->body;
}

json ServiceClient::stations(Season season) {
  auto cli = make_client(base_url_, timeout_);
  auto res = cli.Get(fmt::format("/v1/stations?season={}", to_string(season)),
                     auth_headers(token_));
  check(res, base_url_, "GET /v1/stations");
  return json::parse(res->body);
}

json ServiceClient::health() {
  auto cli = make_client(base_url_, timeout_);
  auto res = cli.Get("/v1/health", auth_headers(token_));
  check(res, base_url_, "GET /v1/health");
  return json::parse(res->body);
}

}  // namespace aquasonde::client
