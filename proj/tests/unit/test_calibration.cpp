#include <doctest.h>

#include <cmath>
#include <random>

#include "aquasonde/calibration.hpp"
#include "aquasonde/keyvalue.hpp"
#include "support.hpp"

using namespace aquasonde::calibration;
using doctest::Approx;

namespace {

// Textbook Nernst slope with rounded constants, kept apart from the library's.
double oracle_slope(double temp_c) { return 1000.0 * 2.303 * 8.314 * (temp_c + 273.15) / 96485.0; }

}  // namespace

TEST_SUITE("calibration") {

TEST_CASE("ADC to electrode millivolts") {
  CHECK(electrode_mv_from_adc(0) == Approx(-2500.0));
  CHECK(electrode_mv_from_adc(1023) == Approx(2500.0));
  CHECK(electrode_mv_from_adc(512) == Approx(512.0 * 5000.0 / 1023.0 - 2500.0).epsilon(1e-12));
  CHECK(std::abs(electrode_mv_from_adc(512) - 2.4438) < 1e-4);
  CHECK_THROWS_AS(electrode_mv_from_adc(1024), FieldOutOfRange);
}

TEST_CASE("ADC to temperature") {
  CHECK(temp_c_from_adc(0) == 0.0);
  CHECK(temp_c_from_adc(1023) == Approx(60.0));
  CHECK(std::abs(temp_c_from_adc(512) - 30.029) < 1e-3);
  CHECK_THROWS_AS(temp_c_from_adc(1024), FieldOutOfRange);
}

TEST_CASE("inverse converter maps") {
  CHECK(adc_from_electrode_mv(0.0) == 512);
  CHECK(adc_from_electrode_mv(-9999.0) == 0);
  CHECK(adc_from_electrode_mv(9999.0) == 1023);
  CHECK(adc_from_temp_c(-5.0) == 0);
  CHECK(adc_from_temp_c(75.0) == 1023);
  for (std::uint16_t c = 0; c <= 1023; ++c) {
    REQUIRE(adc_from_electrode_mv(electrode_mv_from_adc(c)) == c);
    REQUIRE(adc_from_temp_c(temp_c_from_adc(c)) == c);
  }
}

TEST_CASE("Nernst slope against the textbook oracle") {
  CHECK(std::abs(nernst_slope_mv(25.0) - oracle_slope(25.0)) < 0.01);
  CHECK(std::abs(nernst_slope_mv(25.0) - 59.16) < 0.01);
  for (double t = 0; t <= 60; t += 5) CHECK(std::abs(nernst_slope_mv(t) - oracle_slope(t)) < 0.02);
  const auto ideal = ideal_calibration();
  CHECK(ideal.offset_mv == 0.0);
  CHECK(ideal.ref_temp_c == 25.0);
  CHECK(ideal.slope_mv_per_ph == Approx(-nernst_slope_mv(25.0)));
}

TEST_CASE("two-point calibration examples") {
  const auto cal = two_point_calibrate({7.0, 0.0}, {4.0, 177.48}, 25.0);
  CHECK(cal.slope_mv_per_ph == Approx(-59.16).epsilon(1e-12));
  CHECK(cal.offset_mv == Approx(0.0));
  CHECK(cal.ref_temp_c == 25.0);

  CHECK_THROWS_AS(two_point_calibrate({7.0, 0.0}, {7.0, 0.0}, 25.0), DegenerateCalibration);
  CHECK_THROWS_AS(two_point_calibrate({7.0, 0.0}, {7.5, -29.0}, 25.0), DegenerateCalibration);
  CHECK_THROWS_AS(two_point_calibrate({7.0, 0.0}, {4.0, 30.0}, 25.0), ElectrodeFault);
  CHECK_THROWS_AS(two_point_calibrate({7.0, 0.0}, {4.0, 400.0}, 25.0), ElectrodeFault);
  CHECK_THROWS_AS(two_point_calibrate({7.0, 0.0}, {15.0, -400.0}, 25.0), std::exception);
}

TEST_CASE("pH from millivolts examples") {
  const PhCalibration cal{0.0, -59.16, 25.0, {}};
  CHECK(ph_from_mv(0.0, cal, 25.0).ph == Approx(7.0));
  CHECK(ph_from_mv(177.48, cal, 25.0).ph == Approx(4.0).epsilon(1e-12));
  // 7 - 177.48 / (59.16 * 323.15 / 298.15)
  CHECK(std::abs(ph_from_mv(177.48, cal, 50.0).ph - 4.2321) < 1e-4);
  CHECK_FALSE(ph_from_mv(177.48, cal, 50.0).clamped);
}

TEST_CASE("clamping at scale ends is flagged") {
  const auto cal = ideal_calibration();
  auto lo = ph_from_mv(600.0, cal, 25.0);
  CHECK(lo.ph == 0.0);
  CHECK(lo.clamped);
  auto hi = ph_from_mv(-600.0, cal, 25.0);
  CHECK(hi.ph == 14.0);
  CHECK(hi.clamped);
}

TEST_CASE("temperature compensation is a no-op at the reference temperature") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> slope(-90, -30), ref(0, 60);
  for (int i = 0; i < 1000; ++i) {
    const PhCalibration cal{0.0, slope(rng), ref(rng), {}};
    REQUIRE(compensated_slope(cal, cal.ref_temp_c) == cal.slope_mv_per_ph);
  }
}

TEST_CASE("pH is strictly decreasing in mV on the interior") {
  const auto cal = ideal_calibration();
  for (double t : {0.0, 25.0, 60.0}) {
    double prev = ph_from_mv(-400.0, cal, t).ph;
    for (double mv = -399.0; mv <= 400.0; mv += 1.0) {
      const auto v = ph_from_mv(mv, cal, t);
      if (v.clamped) continue;
      REQUIRE(v.ph < prev);
      prev = v.ph;
    }
  }
}

TEST_CASE("mv_from_ph is the exact inverse") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> slope(-90, -30), offset(-40, 40), temp(0, 60), ph(0, 14);
  for (int i = 0; i < 20000; ++i) {
    const PhCalibration cal{offset(rng), slope(rng), temp(rng), {}};
    const double t = temp(rng);
    const double p = ph(rng);
    REQUIRE(std::abs(ph_from_mv(mv_from_ph(p, cal, t), cal, t).ph - p) < 1e-9);
  }
}

TEST_CASE("calibration reproduces both buffers") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> ph(0, 14), slope(35, 85), offset(-30, 30), temp(0, 60);
  int checked = 0;
  while (checked < 2000) {
    const double p1 = ph(rng), p2 = ph(rng);
    if (std::abs(p1 - p2) < 1.0) continue;
    const double s = -slope(rng), o = offset(rng), t = temp(rng);
    const BufferPoint b1{p1, o + s * (p1 - 7)}, b2{p2, o + s * (p2 - 7)};
    const auto cal = two_point_calibrate(b1, b2, t);
    REQUIRE(std::abs(ph_from_mv(b1.measured_mv, cal, t).ph - p1) < 1e-9);
    REQUIRE(std::abs(ph_from_mv(b2.measured_mv, cal, t).ph - p2) < 1e-9);
    ++checked;
  }
}

TEST_CASE("calibration file round trip") {
  testsupport::TempDir dir;
  auto cal = two_point_calibrate({7.0, 3.2}, {4.0, 180.1}, 21.5);
  cal.calibrated_at = aquasonde::timeutil::parse_iso8601("2024-06-11T07:45:00Z");
  save_calibration(cal, dir / "probe.cal");
  const auto back = load_calibration(dir / "probe.cal");
  CHECK(back.offset_mv == Approx(cal.offset_mv).epsilon(1e-6));
  CHECK(back.slope_mv_per_ph == Approx(cal.slope_mv_per_ph).epsilon(1e-6));
  CHECK(back.ref_temp_c == 21.5);
  CHECK(back.calibrated_at == cal.calibrated_at);
  const auto text = testsupport::read_file(dir / "probe.cal");
  CHECK(text.find("calibrated_at = 2024-06-11T07:45:00Z") != std::string::npos);
}

TEST_CASE("calibration file errors") {
  testsupport::TempDir dir;
  testsupport::write_file(dir / "weak.cal", "offset_mv = 0\nslope_mv_per_ph = -12\nref_temp_c = 25\n");
  CHECK_THROWS_AS(load_calibration(dir / "weak.cal"), ElectrodeFault);
  testsupport::write_file(dir / "partial.cal", "offset_mv = 0\n");
  CHECK_THROWS_AS(load_calibration(dir / "partial.cal"), aquasonde::keyvalue::ParseError);
  testsupport::write_file(dir / "hot.cal", "offset_mv = 0\nslope_mv_per_ph = -59\nref_temp_c = 80\n");
  CHECK_THROWS_AS(load_calibration(dir / "hot.cal"), CalibrationError);
  CHECK_THROWS(load_calibration(dir / "missing.cal"));
}

}  // TEST_SUITE
