#include "aquasonde/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include <fmt/format.h>

#include "aquasonde/keyvalue.hpp"
#include "aquasonde/timeutil.hpp"

namespace aquasonde::calibration {

namespace {

constexpr double kGasConstant = 8.314462618;  // J/(mol K)
constexpr double kFaraday = 96485.33212;      // C/mol

void require_temp(double temp_c, const char* what) {
  if (!(temp_c >= kTempMinC && temp_c <= kTempMaxC)) {
    throw FieldOutOfRange(fmt::format("{} {} degC outside [0, 60]", what, temp_c));
  }
}

std::uint16_t saturate_counts(double counts) {
  if (!(counts > 0.0)) return 0;
  if (counts >= kAdcCounts) return static_cast<std::uint16_t>(kAdcCounts);
  return static_cast<std::uint16_t>(std::lround(counts));
}

}  // namespace

void PhCalibration::validate() const {
  const double magnitude = std::abs(slope_mv_per_ph);
  if (!std::isfinite(slope_mv_per_ph) || magnitude < kMinSlopeMagnitude ||
      magnitude > kMaxSlopeMagnitude) {
    throw ElectrodeFault(fmt::format(
        "electrode slope {:.3f} mV/pH outside the [{}, {}] sanity band", slope_mv_per_ph,
        kMinSlopeMagnitude, kMaxSlopeMagnitude));
  }
  if (!std::isfinite(offset_mv)) throw CalibrationError("offset is not finite");
  if (!(ref_temp_c >= kTempMinC && ref_temp_c <= kTempMaxC)) {
    throw CalibrationError(fmt::format("reference temperature {} outside [0, 60]", ref_temp_c));
  }
}

double nernst_slope_mv(double temp_c) {
  return std::numbers::ln10 * kGasConstant * (temp_c + kKelvinOffset) / kFaraday * 1000.0;
}

PhCalibration ideal_calibration() {
  return PhCalibration{0.0, -nernst_slope_mv(25.0), 25.0, std::nullopt};
}

double electrode_mv_from_adc(std::uint16_t ph_adc) {
  if (ph_adc > kAdcCounts) {
    throw FieldOutOfRange(fmt::format("ph_adc {} exceeds 1023", ph_adc));
  }
  return ph_adc * kAdcFullScaleMv / kAdcCounts - kAdcMidRailMv;
}

double temp_c_from_adc(std::uint16_t temp_adc) {
  if (temp_adc > kAdcCounts) {
    throw FieldOutOfRange(fmt::format("temp_adc {} exceeds 1023", temp_adc));
  }
  return temp_adc * (kTempMaxC - kTempMinC) / kAdcCounts + kTempMinC;
}

std::uint16_t adc_from_electrode_mv(double mv) {
  return saturate_counts((mv + kAdcMidRailMv) * kAdcCounts / kAdcFullScaleMv);
}

std::uint16_t adc_from_temp_c(double temp_c) {
  return saturate_counts((temp_c - kTempMinC) * kAdcCounts / (kTempMaxC - kTempMinC));
}

PhCalibration two_point_calibrate(const BufferPoint& p1, const BufferPoint& p2, double temp_c) {
  for (const auto* p : {&p1, &p2}) {
    if (!(p->ph >= kPhMin && p->ph <= kPhMax)) {
      throw FieldOutOfRange(fmt::format("buffer pH {} outside [0, 14]", p->ph));
    }
  }
  if (std::abs(p1.ph - p2.ph) < 1.0) {
    throw DegenerateCalibration(fmt::format(
        "buffers pH {} and pH {} are less than 1 pH apart", p1.ph, p2.ph));
  }
  require_temp(temp_c, "calibration temperature");

  PhCalibration cal;
  cal.slope_mv_per_ph = (p2.measured_mv - p1.measured_mv) / (p2.ph - p1.ph);
  cal.offset_mv = p1.measured_mv - cal.slope_mv_per_ph * (p1.ph - kIsopotentialPh);
  cal.ref_temp_c = temp_c;
  cal.validate();
  return cal;
}

double compensated_slope(const PhCalibration& cal, double water_temp_c) {
  if (water_temp_c == cal.ref_temp_c) return cal.slope_mv_per_ph;
  return cal.slope_mv_per_ph * (water_temp_c + kKelvinOffset) / (cal.ref_temp_c + kKelvinOffset);
}

PhValue ph_from_mv(double mv, const PhCalibration& cal, double water_temp_c) {
  require_temp(water_temp_c, "water temperature");
  const double ph = kIsopotentialPh + (mv - cal.offset_mv) / compensated_slope(cal, water_temp_c);
  if (ph < kPhMin) return {kPhMin, true};
  if (ph > kPhMax) return {kPhMax, true};
  return {ph, false};
}

double mv_from_ph(double ph, const PhCalibration& cal, double water_temp_c) {
  return cal.offset_mv + (ph - kIsopotentialPh) * compensated_slope(cal, water_temp_c);
}

PhCalibration load_calibration(const std::filesystem::path& path) {
  const auto doc = keyvalue::parse_file(path);
  PhCalibration cal;
  cal.offset_mv = doc.get_double("offset_mv");
  cal.slope_mv_per_ph = doc.get_double("slope_mv_per_ph");
  cal.ref_temp_c = doc.get_double("ref_temp_c");
  if (auto at = doc.find("calibrated_at")) {
    cal.calibrated_at = timeutil::parse_iso8601(*at);
  }
  cal.validate();
  return cal;
}

void save_calibration(const PhCalibration& cal, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error(fmt::format("cannot write {}", path.string()));
  out << "# aquasonde pH electrode calibration\n";
  out << fmt::format("offset_mv = {:.6f}\n", cal.offset_mv);
  out << fmt::format("slope_mv_per_ph = {:.6f}\n", cal.slope_mv_per_ph);
  out << fmt::format("ref_temp_c = {:.3f}\n", cal.ref_temp_c);
  if (cal.calibrated_at) {
    out << "calibrated_at = " << timeutil::format_iso8601(*cal.calibrated_at) << "\n";
  }
  if (!out.flush()) throw std::runtime_error(fmt::format("cannot write {}", path.string()));
}

}  // namespace aquasonde::calibration
