#include "aquasonde/ingest_service.hpp"

#include <httplib.h>

#include <fmt/format.h>

#include "aquasonde/record_io.hpp"

namespace aquasonde::ingest {

using nlohmann::json;

namespace {

constexpr auto kStreamPoll = std::chrono::milliseconds{200};
constexpr auto kKeepaliveEvery = std::chrono::seconds{5};

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, std::string_view message) {
  send_json(res, status, json{{"error", std::string(message)}});
}

std::string sse_frame(const Event& e) {
  return fmt::format("event: {}\ndata: {}\n\n", e.name, e.data);
}

}  // namespace

json BatchResponse::to_json() const {
  json rej = json::array();
  for (const auto& r : rejected) {
    rej.push_back(json{{"index", r.index}, {"reason", r.reason}, {"detail", r.detail}});
  }
  return json{{"accepted", accepted}, {"duplicates", duplicates}, {"rejected", rej}};
}

IngestService::IngestService(ServiceConfig config, std::unique_ptr<Store> store)
    : config_(std::move(config)),
      store_(std::move(store)),
      hub_(config_.subscriber_queue),
      server_(std::make_unique<httplib::Server>()) {
  const auto threads = config_.worker_threads;
  server_->new_task_queue = [threads] { return new httplib::ThreadPool(threads); };
  install_routes();
}

IngestService::~IngestService() {
  stop();
}

BatchResponse IngestService::ingest(const json& body, Source source) {
  if (!body.is_array()) throw std::invalid_argument("request body must be a JSON array of readings");

  BatchResponse response;
  const auto now = timeutil::now_utc();
  std::vector<IngestRecord> candidates;
  std::vector<std::size_t> positions;
  for (std::size_t i = 0; i < body.size(); ++i) {
    Reading r;
    try {
      r = record_io::reading_from_json(body[i]);
    } catch (const record_io::RecordError& e) {
      response.rejected.push_back({i, "Malformed", e.what()});
      continue;
    }
    if (auto v = validate(r, now)) {
      response.rejected.push_back({i, v->reason, v->detail});
      continue;
    }
    candidates.push_back(IngestRecord{std::move(r), now, source});
    positions.push_back(i);
  }

  const auto outcome = store_->append_batch(candidates, [this](const IngestRecord& rec) {
    hub_.publish(Event{"reading", record_io::to_json(rec.reading).dump()});
  });
  response.accepted = outcome.accepted.size();
  response.duplicates = outcome.duplicates.size();
  return response;
}

void IngestService::install_routes() {
  auto authorized = [this](const httplib::Request& req, httplib::Response& res) {
    if (!config_.token) return true;
    const auto expected = "Bearer " + *config_.token;
    if (req.get_header_value("Authorization") == expected ||
        (req.has_param("token") && req.get_param_value("token") == *config_.token)) {
      return true;
    }
    send_error(res, 401, "missing or invalid bearer token");
    return false;
  };

  auto season_of = [this](const httplib::Request& req) {
    return req.has_param("season") ? parse_season(req.get_param_value("season"))
                                   : config_.default_season;
  };

  server_->Get("/v1/health", [this](const httplib::Request&, httplib::Response& res) {
    send_json(res, 200, json{{"status", "ok"}, {"records", store_->size()}});
  });

  server_->Post("/v1/readings", [this, authorized](const httplib::Request& req,
                                                   httplib::Response& res) {
    if (!authorized(req, res)) return;
    json body;
    try {
      body = json::parse(req.body);
    } catch (const json::parse_error& e) {
      return send_error(res, 400, fmt::format("malformed JSON: {}", e.what()));
    }
    Source source = Source::Live;
    try {
      if (req.has_param("source")) source = parse_source(req.get_param_value("source"));
      send_json(res, 200, ingest(body, source).to_json());
    } catch (const std::invalid_argument& e) {
      send_error(res, 400, e.what());
    } catch (const StorageError& e) {
      send_error(res, 507, e.what());
    }
  });

  server_->Get("/v1/stations", [this, authorized, season_of](const httplib::Request& req,
                                                             httplib::Response& res) {
    if (!authorized(req, res)) return;
    try {
      json out = json::array();
      for (const auto& s : store_->summaries(season_of(req))) out.push_back(record_io::to_json(s));
      send_json(res, 200, out);
    } catch (const std::invalid_argument& e) {
      send_error(res, 400, e.what());
    }
  });

  server_->Get(R"(/v1/stations/([^/]+)/readings)", [this, authorized](const httplib::Request& req,
                                                                      httplib::Response& res) {
    if (!authorized(req, res)) return;
    const std::string label = httplib::detail::decode_url(req.matches[1], false);
    if (!store_->has_station(label)) {
      return send_error(res, 404, fmt::format("unknown station '{}'", label));
    }
    Timestamp from = Timestamp::min();
    Timestamp to = Timestamp::max();
    try {
      if (req.has_param("from")) from = timeutil::parse_iso8601(req.get_param_value("from"));
      if (req.has_param("to")) to = timeutil::parse_iso8601(req.get_param_value("to"));
    } catch (const timeutil::TimeFormatError& e) {
      return send_error(res, 400, e.what());
    }
    if (from > to) return send_error(res, 400, "interval start is after its end");
    json out = json::array();
    for (const auto& r : store_->station_readings(label)) {
      if (r.timestamp >= from && r.timestamp <= to) out.push_back(record_io::to_json(r));
    }
    send_json(res, 200, out);
  });

  server_->Get("/v1/export.csv", [this, authorized](const httplib::Request& req,
                                                    httplib::Response& res) {
    if (!authorized(req, res)) return;
    const auto flag = req.has_param("provenance") ? req.get_param_value("provenance") : "";
    const bool provenance = flag == "1" || flag == "true";
    res.set_content(record_io::to_csv(store_->readings(), provenance), "text/csv");
  });

  server_->Get("/v1/stream", [this, authorized, season_of](const httplib::Request& req,
                                                           httplib::Response& res) {
    if (!authorized(req, res)) return;
    Season season;
    try {
      season = season_of(req);
    } catch (const std::invalid_argument& e) {
      return send_error(res, 400, e.what());
    }
    // Subscribe before taking the snapshot so no acknowledged reading falls
    // between the two.
    auto sub = hub_.subscribe();
    json summaries = json::array();
    for (const auto& s : store_->summaries(season)) summaries.push_back(record_io::to_json(s));
    auto pending = std::make_shared<std::string>(sse_frame(Event{"snapshot", summaries.dump()}));
    auto last_write = std::make_shared<std::chrono::steady_clock::time_point>(
        std::chrono::steady_clock::now());

    res.set_header("Cache-Control", "no-cache");
    res.set_chunked_content_provider(
        "text/event-stream",
        [sub, pending, last_write](std::size_t, httplib::DataSink& sink) {
          if (!pending->empty()) {
            const bool ok = sink.write(pending->data(), pending->size());
            pending->clear();
            return ok;
          }
          auto event = sub->next(kStreamPoll);
          if (!event) {
            if (sub->closed()) {
              sink.done();
              return true;
            }
            const auto now = std::chrono::steady_clock::now();
            if (now - *last_write < kKeepaliveEvery) return sink.is_writable();
            *last_write = now;
            static constexpr std::string_view kPing = ": keepalive\n\n";
            return sink.write(kPing.data(), kPing.size());
          }
          *last_write = std::chrono::steady_clock::now();
          const auto frame = sse_frame(*event);
          return sink.write(frame.data(), frame.size());
        },
        [this, sub](bool) { hub_.unsubscribe(sub); });
  });
}

std::uint16_t IngestService::bind() {
  int port = 0;
  if (config_.port == 0) {
    port = server_->bind_to_any_port(config_.host);
  } else {
    port = server_->bind_to_port(config_.host, config_.port) ? config_.port : -1;
  }
  if (port <= 0) {
    throw std::runtime_error(fmt::format("cannot bind {}:{}", config_.host, config_.port));
  }
  config_.port = static_cast<std::uint16_t>(port);
  bound_ = true;
  return config_.port;
}

void IngestService::run() {
  if (!bound_) bind();
  server_->listen_after_bind();
}

std::uint16_t IngestService::start() {
  const auto port = bind();
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return port;
}

void IngestService::stop() {
  hub_.close_all();
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace aquasonde::ingest
