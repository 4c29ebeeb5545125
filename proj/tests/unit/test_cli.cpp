#include <doctest.h>

#include <csignal>

#include "aquasonde/calibration.hpp"
#include "aquasonde/net.hpp"
#include "aquasonde/record_io.hpp"
#include "support.hpp"

using namespace std::chrono_literals;
using testsupport::run;
using testsupport::TempDir;

namespace {

const std::string kCli = AQUASONDE_CLI;
const std::filesystem::path kData(AQUASONDE_DATA_DIR);
const std::string kScenario = (kData / "lahore-canal.scenario").string();

bool contains(const std::string& haystack, std::string_view needle) {
  return haystack.find(needle) != std::string::npos;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("usage errors exit 2") {
  CHECK(run({kCli}).exit_code == 2);
  CHECK(run({kCli, "frobnicate"}).exit_code == 2);
  CHECK(run({kCli, "simulate"}).exit_code == 2);
  CHECK(run({kCli, "simulate", "--scenario", kScenario}).exit_code == 2);
  CHECK(run({kCli, "report", "--from", "x.csv"}).exit_code == 2);
  CHECK(run({kCli, "--help"}).exit_code == 0);
}

TEST_CASE("simulate: missing scenario names the path") {
  const auto r = run({kCli, "simulate", "--scenario", "/nonexistent/canal.scenario", "--out", "/tmp/x"});
  CHECK(r.exit_code == 2);
  CHECK(contains(r.output, "/nonexistent/canal.scenario"));
}

TEST_CASE("simulate: invalid scenario exits 2") {
  TempDir dir;
  testsupport::write_file(dir / "bad.scenario", "frame_rate_hz = 0\n[stations]\nL1 74 31 6 26 10\n");
  const auto r = run({kCli, "simulate", "--scenario", (dir / "bad.scenario").string(), "--out",
                      (dir / "out.bin").string()});
  CHECK(r.exit_code == 2);
  CHECK(contains(r.output, "frame_rate_hz"));
}

TEST_CASE("simulate: seeded streams are reproducible") {
  TempDir dir;
  auto sim = [&](const std::string& name, const std::string& seed) {
    const auto path = (dir / name).string();
    const auto r = run({kCli, "simulate", "--scenario", kScenario, "--seed", seed, "--out", path});
    REQUIRE(r.exit_code == 0);
    return testsupport::read_file(path);
  };
  const auto a = sim("a.bin", "42");
  const auto b = sim("b.bin", "42");
  const auto c = sim("c.bin", "43");
  CHECK(a.size() == 6 * 200 * 11);
  CHECK(a == b);
  CHECK(a != c);
}

TEST_CASE("simulate: fault flags") {
  TempDir dir;
  const auto path = (dir / "f.bin").string();
  auto r = run({kCli, "simulate", "--scenario", kScenario, "--out", path, "--duplicate-frame", "3",
                "--drop-bytes", "0:11"});
  CHECK(r.exit_code == 0);
  CHECK(testsupport::read_file(path).size() == 1200 * 11);
  r = run({kCli, "simulate", "--scenario", kScenario, "--out", path, "--corrupt-byte", "999999"});
  CHECK(r.exit_code == 2);
  r = run({kCli, "simulate", "--scenario", kScenario, "--out", path, "--drop-bytes", "7"});
  CHECK(r.exit_code == 2);
}

TEST_CASE("simulate: TCP listener serves the stream") {
  testsupport::Child sim({kCli, "simulate", "--scenario", kScenario, "--listen", "127.0.0.1:0",
                          "--time-scale", "1000"});
  const auto line = sim.wait_for_line("listening on", 5s);
  REQUIRE(line);
  auto sock = aquasonde::net::connect({"127.0.0.1", testsupport::port_from_line(*line)});
  std::vector<std::uint8_t> all, buf(4096);
  for (std::size_t n; (n = sock.read_some(buf)) > 0;) all.insert(all.end(), buf.begin(), buf.begin() + n);
  CHECK(all.size() == 1200 * 11);
  CHECK(sim.wait() == 0);
}

TEST_CASE("calibrate") {
  TempDir dir;
  const auto out = (dir / "probe.cal").string();
  auto r = run({kCli, "calibrate", "--buffer", "7:0", "--buffer", "4:177.48", "--temp", "25", "--out", out});
  CHECK(r.exit_code == 0);
  const auto cal = aquasonde::calibration::load_calibration(out);
  CHECK(cal.slope_mv_per_ph == doctest::Approx(-59.16));
  CHECK(cal.offset_mv == doctest::Approx(0.0));
  CHECK(cal.calibrated_at.has_value());

  r = run({kCli, "calibrate", "--buffer", "7:0", "--buffer", "7:0", "--temp", "25", "--out", out});
  CHECK(r.exit_code == 2);
  CHECK(contains(r.output, "DegenerateCalibration"));
  r = run({kCli, "calibrate", "--buffer", "7:0", "--buffer", "4:30", "--temp", "25", "--out", out});
  CHECK(r.exit_code == 2);
  CHECK(contains(r.output, "ElectrodeFault"));
  r = run({kCli, "calibrate", "--buffer", "7:0", "--temp", "25", "--out", out});
  CHECK(r.exit_code == 2);
  r = run({kCli, "calibrate", "--buffer", "7-0", "--buffer", "4:177", "--temp", "25", "--out", out});
  CHECK(r.exit_code == 2);
}

TEST_CASE("report from CSV") {
  TempDir dir;
  const auto csv = dir / "canal.csv";
  testsupport::write_file(csv, aquasonde::record_io::to_csv(testsupport::canal_readings(), true));
  const auto out = dir / "rep";
  auto r = run({kCli, "report", "--from", csv.string(), "--out", out.string()});
  REQUIRE(r.exit_code == 0);
  const auto table = testsupport::read_file(out / "table.txt");
  CHECK(contains(r.output, table));
  CHECK(contains(testsupport::read_file(out / "chart.svg"), "data-series=\"ph\""));

  r = run({kCli, "report", "--from", csv.string(), "--out", out.string(), "--season", "winter"});
  CHECK(r.exit_code == 0);
  CHECK(contains(testsupport::read_file(out / "table.txt"), "winter temperature norm 17-19 C"));

  testsupport::write_file(dir / "empty.csv", aquasonde::record_io::csv_header(true) + "\n");
  r = run({kCli, "report", "--from", (dir / "empty.csv").string(), "--out", out.string()});
  CHECK(r.exit_code == 2);
  CHECK(contains(r.output, "EmptyInput"));
  r = run({kCli, "report", "--from", (dir / "missing.csv").string(), "--out", out.string()});
  CHECK(r.exit_code == 2);
  r = run({kCli, "report", "--from", "http://127.0.0.1:1", "--out", out.string()});
  CHECK(r.exit_code == 1);
}

TEST_CASE("capture: missing config and offline service") {
  auto r = run({kCli, "capture", "--config", "/nonexistent/x.capture"});
  CHECK(r.exit_code == 2);
  CHECK(contains(r.output, "/nonexistent/x.capture"));

  TempDir dir;
  const auto replay = dir / "canal.bin";
  REQUIRE(run({kCli, "simulate", "--scenario", kScenario, "--out", replay.string()}).exit_code == 0);
  testsupport::write_file(dir / "s.capture",
                          "device = canal.bin\nservice = http://127.0.0.1:1\ncsv = out.csv\n"
                          "[stations]\nL1 74.2681 31.4974 200\nL2 74.2815 31.5059 200\n");
  r = run({kCli, "capture", "--config", (dir / "s.capture").string()});
  CHECK(r.exit_code == 0);
  CHECK(contains(r.output, "warning: 2 upload(s) failed"));
  CHECK(contains(r.output, "retry with: aquasonde upload"));
  CHECK(aquasonde::record_io::parse_csv(testsupport::read_file(dir / "out.csv")).size() == 2);

  testsupport::write_file(dir / "bad.capture", "device = canal.bin\navg_count = 0\n[stations]\nL1 1 1\n");
  CHECK(run({kCli, "capture", "--config", (dir / "bad.capture").string()}).exit_code == 2);
  testsupport::write_file(dir / "tcp.capture", "device = tcp://127.0.0.1:1\n[stations]\nL1 1 1\n");
  CHECK(run({kCli, "capture", "--config", (dir / "tcp.capture").string(), "--csv",
             (dir / "tcp.csv").string()}).exit_code == 1);
}

TEST_CASE("serve, upload, export and graceful shutdown") {
  TempDir dir;
  const auto log = (dir / "svc.log").string();
  testsupport::Child serve({kCli, "serve", "--listen", "127.0.0.1:0", "--log", log, "--token", "tok"});
  const auto line = serve.wait_for_line("listening on", 5s);
  REQUIRE(line);
  const auto url = "http://127.0.0.1:" + std::to_string(testsupport::port_from_line(*line));

  auto readings = testsupport::canal_readings(aquasonde::timeutil::now_utc() - 2h);
  testsupport::write_file(dir / "in.csv", aquasonde::record_io::to_csv(readings, true));
  auto r = run({kCli, "upload", "--csv", (dir / "in.csv").string(), "--service", url});
  CHECK(r.exit_code == 1);  // no token
  r = run({kCli, "upload", "--csv", (dir / "in.csv").string(), "--service", url}, {"AQUASONDE_TOKEN=tok"});
  CHECK(r.exit_code == 0);
  CHECK(contains(r.output, "accepted 6, duplicates 0"));
  r = run({kCli, "upload", "--csv", (dir / "in.csv").string(), "--service", url}, {"AQUASONDE_TOKEN=tok"});
  CHECK(contains(r.output, "accepted 0, duplicates 6"));

  const auto out = (dir / "export.csv").string();
  r = run({kCli, "export", "--service", url, "--out", out, "--with-provenance"}, {"AQUASONDE_TOKEN=tok"});
  CHECK(r.exit_code == 0);
  CHECK(aquasonde::record_io::parse_csv(testsupport::read_file(out)).size() == 6);
  r = run({kCli, "export", "--service", url}, {"AQUASONDE_TOKEN=tok"});
  CHECK(r.output.starts_with("date,time,longitude,latitude,ph,temperature\n"));

  // report from the service equals report from the exported CSV
  r = run({kCli, "report", "--from", url, "--out", (dir / "a").string()}, {"AQUASONDE_TOKEN=tok"});
  REQUIRE(r.exit_code == 0);
  r = run({kCli, "report", "--from", out, "--out", (dir / "b").string()});
  REQUIRE(r.exit_code == 0);
  CHECK(testsupport::read_file(dir / "a" / "table.txt") == testsupport::read_file(dir / "b" / "table.txt"));

  serve.signal(SIGTERM);
  CHECK(serve.wait() == 0);
}

}  // TEST_SUITE
