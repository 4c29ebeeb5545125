// aquasonde: field capture, simulation, ingestion and reporting.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage or validation error.

#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include "aquasonde/calibration.hpp"
#include "aquasonde/capture.hpp"
#include "aquasonde/device_sim.hpp"
#include "aquasonde/ingest_service.hpp"
#include "aquasonde/net.hpp"
#include "aquasonde/record_io.hpp"
#include "aquasonde/report.hpp"
#include "aquasonde/service_client.hpp"

namespace fs = std::filesystem;
using namespace aquasonde;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

// Usage or validation failure; maps to exit code 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::optional<std::string> env_token() {
  if (const char* t = std::getenv("AQUASONDE_TOKEN"); t && *t) return std::string(t);
  return std::nullopt;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError(fmt::format("cannot read {}", path.string()));
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

bool is_url(std::string_view s) {
  return s.starts_with("http://") || s.starts_with("https://");
}

// ---------------------------------------------------------------- simulate

struct SimulateOptions {
  fs::path scenario;
  std::string listen;
  fs::path out;
  std::optional<std::uint64_t> seed;
  std::optional<double> time_scale;
  std::vector<std::size_t> corrupt;
  std::vector<std::size_t> duplicate;
  std::vector<std::string> drop;
};

int run_simulate(const SimulateOptions& opt) {
  if (!fs::exists(opt.scenario)) {
    throw UsageError(fmt::format("scenario file not found: {}", opt.scenario.string()));
  }
  auto script = sim::load_scenario(opt.scenario);
  if (opt.seed) script.seed = *opt.seed;
  if (opt.time_scale) script.time_scale = *opt.time_scale;
  script.validate();

  auto stream = sim::simulate(script);
  for (auto i : opt.duplicate) stream = sim::inject_fault(stream, sim::DuplicateFrame{i});
  for (auto off : opt.corrupt) stream = sim::inject_fault(stream, sim::CorruptByte{off});
  for (const auto& range : opt.drop) {
    const auto colon = range.find(':');
    if (colon == std::string::npos) throw UsageError("--drop-bytes expects BEGIN:END");
    const auto b = keyvalue::to_uint(range.substr(0, colon), "--drop-bytes");
    const auto e = keyvalue::to_uint(range.substr(colon + 1), "--drop-bytes");
    stream = sim::inject_fault(stream, sim::DropBytes{b, e});
  }

  if (!opt.out.empty()) {
    std::ofstream out(opt.out, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(stream.data()), static_cast<std::streamsize>(stream.size()));
    if (!out) throw std::runtime_error(fmt::format("cannot write {}", opt.out.string()));
    fmt::print("wrote {} frame(s), {} bytes to {}\n", script.total_frames(), stream.size(),
               opt.out.string());
    return kExitOk;
  }

  auto listener = net::TcpListener::bind(net::parse_endpoint(opt.listen));
  fmt::print("listening on {}:{}\n", net::parse_endpoint(opt.listen).host, listener.port());
  std::fflush(stdout);
  auto peer = listener.accept();
  const double fps = script.frame_rate_hz * script.time_scale;
  const auto sent = sim::serve_paced(peer, stream, fps);
  fmt::print("served {} of {} bytes ({} frame(s))\n", sent, stream.size(), sent / wire::kFrameSize);
  return kExitOk;
}

// ----------------------------------------------------------------- capture

int run_capture(const fs::path& config_path, const std::optional<std::string>& service,
                const std::optional<fs::path>& csv, const std::optional<double>& time_scale) {
  if (!fs::exists(config_path)) {
    throw UsageError(fmt::format("config file not found: {}", config_path.string()));
  }
  auto config = capture::load_session_config(config_path);
  if (service) config.service_url = *service;
  if (csv) config.csv_path = *csv;
  if (time_scale) config.time_scale = *time_scale;
  config.token = env_token();
  capture::run_session(config, std::cout);
  return kExitOk;
}

// ------------------------------------------------------------------ report

std::vector<Reading> load_readings(const std::string& source) {
  std::string csv;
  if (is_url(source)) {
    client::ServiceClient cli(source, env_token());
    csv = cli.export_csv(true);
  } else {
    csv = read_file(source);
  }
  return record_io::parse_csv(csv);
}

int run_report(const std::string& from, const fs::path& out_dir, Season season) {
  const auto readings = load_readings(from);
  const auto rep = report::build_report(readings, season);
  fs::create_directories(out_dir);
  std::ofstream(out_dir / "table.txt", std::ios::trunc) << rep.table;
  std::ofstream(out_dir / "chart.svg", std::ios::trunc) << rep.svg;
  std::cout << rep.table;
  fmt::print("\nwrote {} and {}\n", (out_dir / "table.txt").string(),
             (out_dir / "chart.svg").string());
  return kExitOk;
}

// --------------------------------------------------------------- calibrate

calibration::BufferPoint parse_buffer(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw UsageError(fmt::format("--buffer '{}' must be PH:MV", text));
  return calibration::BufferPoint{keyvalue::to_double(text.substr(0, colon), "--buffer pH"),
                                  keyvalue::to_double(text.substr(colon + 1), "--buffer mV")};
}

int run_calibrate(const std::vector<std::string>& buffers, double temp_c, const fs::path& out) {
  if (buffers.size() != 2) throw UsageError("exactly two --buffer values are required");
  auto cal = calibration::two_point_calibrate(parse_buffer(buffers[0]), parse_buffer(buffers[1]),
                                              temp_c);
  cal.calibrated_at = timeutil::now_utc();
  calibration::save_calibration(cal, out);
  fmt::print("slope {:.2f} mV/pH, offset {:.2f} mV at {:.1f} C ({:.1f}% of Nernstian)\n",
             cal.slope_mv_per_ph, cal.offset_mv, cal.ref_temp_c,
             100.0 * std::abs(cal.slope_mv_per_ph) / calibration::nernst_slope_mv(temp_c));
  fmt::print("wrote {}\n", out.string());
  return kExitOk;
}

// ------------------------------------------------------------------- serve

int run_serve(const std::string& listen, const fs::path& log_path, Season season,
              std::optional<std::string> token) {
  // Block termination signals before any thread starts; a dedicated thread
  // waits for them and shuts the server down.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  ingest::Recovery recovery;
  auto store = ingest::Store::open(log_path, &recovery);
  for (const auto& w : recovery.warnings) fmt::print(stderr, "warning: {}\n", w);

  const auto ep = net::parse_endpoint(listen);
  ingest::ServiceConfig cfg;
  cfg.host = ep.host;
  cfg.port = ep.port;
  cfg.default_season = season;
  cfg.token = token ? token : env_token();
  ingest::IngestService service(cfg, std::move(store));
  const auto port = service.bind();
  fmt::print("recovered {} record(s) from {}\n", service.store().size(), log_path.string());
  fmt::print("listening on {}:{}\n", ep.host, port);
  std::fflush(stdout);

  std::thread waiter([&] {
    int sig = 0;
    sigwait(&signals, &sig);
    service.stop();
  });
  service.run();
  // run() also returns if the server fails; make sure the waiter exits.
  if (waiter.joinable()) {
    pthread_kill(waiter.native_handle(), SIGTERM);
    waiter.join();
  }
  return kExitOk;
}

// ------------------------------------------------------------------ upload

int run_upload(const fs::path& csv, const std::string& service, const std::string& source) {
  const auto readings = record_io::parse_csv(read_file(csv));
  client::ServiceClient cli(service, env_token());
  const auto res = cli.post_readings(readings, source);
  fmt::print("{} reading(s): accepted {}, duplicates {}, rejected {}\n", readings.size(),
             res.accepted, res.duplicates, res.rejected.size());
  for (const auto& r : res.rejected) fmt::print("  rejected {}\n", r.dump());
  return kExitOk;
}

int run_export(const std::string& service, const fs::path& out, bool provenance) {
  client::ServiceClient cli(service, env_token());
  const auto csv = cli.export_csv(provenance);
  if (out.empty()) {
    std::cout << csv;
  } else {
    std::ofstream(out, std::ios::trunc) << csv;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"aquasonde: river water-quality field capture and ingestion"};
  app.require_subcommand(1);

  SimulateOptions sim_opt;
  auto* simulate = app.add_subcommand("simulate", "Serve a scripted sensor-node byte stream");
  simulate->add_option("--scenario", sim_opt.scenario, "Scenario file")->required();
  auto* listen_opt = simulate->add_option("--listen", sim_opt.listen, "TCP address host:port");
  auto* out_opt = simulate->add_option("--out", sim_opt.out, "Write the stream to a file instead");
  listen_opt->excludes(out_opt);
  simulate->add_option("--seed", sim_opt.seed, "Override the scenario seed");
  simulate->add_option("--time-scale", sim_opt.time_scale, "Override the scenario time scale");
  simulate->add_option("--corrupt-byte", sim_opt.corrupt, "XOR 0xFF into the byte at OFFSET");
  simulate->add_option("--duplicate-frame", sim_opt.duplicate, "Repeat frame INDEX");
  simulate->add_option("--drop-bytes", sim_opt.drop, "Remove bytes BEGIN:END");

  fs::path config_path;
  std::optional<std::string> capture_service;
  std::optional<fs::path> capture_csv;
  std::optional<double> capture_scale;
  auto* capture_cmd = app.add_subcommand("capture", "Run a dwell-capture session");
  capture_cmd->add_option("--config", config_path, "Session config file")->required();
  capture_cmd->add_option("--service", capture_service, "Override the service URL");
  capture_cmd->add_option("--csv", capture_csv, "Override the local CSV path");
  capture_cmd->add_option("--time-scale", capture_scale, "Override the time scale");

  std::string report_from;
  fs::path report_out;
  std::string report_season = "summer";
  auto* report_cmd = app.add_subcommand("report", "Per-location table and SVG chart");
  report_cmd->add_option("--from", report_from, "Service URL or CSV file")->required();
  report_cmd->add_option("--out", report_out, "Output directory")->required();
  report_cmd->add_option("--season", report_season, "winter or summer");

  std::vector<std::string> buffers;
  double cal_temp = 25.0;
  fs::path cal_out;
  auto* calibrate = app.add_subcommand("calibrate", "Two-point pH electrode calibration");
  calibrate->add_option("--buffer", buffers, "Buffer PH:MV (give twice)")->required();
  calibrate->add_option("--temp", cal_temp, "Buffer temperature in C")->required();
  calibrate->add_option("--out", cal_out, "Calibration file to write")->required();

  std::string serve_listen = "127.0.0.1:8080";
  fs::path serve_log = "aquasonde.log";
  std::string serve_season = "summer";
  std::optional<std::string> serve_token;
  auto* serve = app.add_subcommand("serve", "Run the ingestion service");
  serve->add_option("--listen", serve_listen, "host:port (port 0 = ephemeral)");
  serve->add_option("--log", serve_log, "Append-only record log");
  serve->add_option("--season", serve_season, "Default season for temperature assessment");
  serve->add_option("--token", serve_token, "Bearer token (default: $AQUASONDE_TOKEN)");

  fs::path upload_csv;
  std::string upload_service;
  std::string upload_source = "replay";
  auto* upload = app.add_subcommand("upload", "POST a capture CSV to the service");
  upload->add_option("--csv", upload_csv, "CSV file")->required();
  upload->add_option("--service", upload_service, "Service URL")->required();
  upload->add_option("--source", upload_source, "live or replay");

  std::string export_service;
  fs::path export_out;
  bool export_provenance = false;
  auto* export_cmd = app.add_subcommand("export", "Download the service's CSV export");
  export_cmd->add_option("--service", export_service, "Service URL")->required();
  export_cmd->add_option("--out", export_out, "Output file (default stdout)");
  export_cmd->add_flag("--with-provenance", export_provenance,
                       "Append station, device_id and seq_origin columns");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*simulate) {
      if (sim_opt.listen.empty() && sim_opt.out.empty()) {
        throw UsageError("simulate needs --listen or --out");
      }
      return run_simulate(sim_opt);
    }
    if (*capture_cmd) return run_capture(config_path, capture_service, capture_csv, capture_scale);
    if (*report_cmd) return run_report(report_from, report_out, parse_season(report_season));
    if (*calibrate) return run_calibrate(buffers, cal_temp, cal_out);
    if (*serve) return run_serve(serve_listen, serve_log, parse_season(serve_season), serve_token);
    if (*upload) return run_upload(upload_csv, upload_service, upload_source);
    if (*export_cmd) return run_export(export_service, export_out, export_provenance);
  } catch (const calibration::DegenerateCalibration& e) {
    fmt::print(stderr, "error: DegenerateCalibration: {}\n", e.what());
    return kExitUsage;
  } catch (const calibration::ElectrodeFault& e) {
    fmt::print(stderr, "error: ElectrodeFault: {}\n", e.what());
    return kExitUsage;
  } catch (const EmptyInput& e) {
    fmt::print(stderr, "error: EmptyInput: {}\n", e.what());
    return kExitUsage;
  } catch (const UsageError& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitUsage;
  } catch (const sim::ScenarioInvalid& e) {
    fmt::print(stderr, "error: ScenarioInvalid: {}\n", e.what());
    return kExitUsage;
  } catch (const capture::ConfigError& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitUsage;
  } catch (const calibration::CalibrationError& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitUsage;
  } catch (const record_io::RecordError& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitUsage;
  } catch (const keyvalue::ParseError& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitUsage;
  } catch (const std::out_of_range& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitRuntime;
  }
  return kExitUsage;
}
