#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>

namespace aquasonde::calibration {

// Signal chain: the electrode's bipolar voltage is shifted by +2500 mV onto a
// 0..5000 mV unipolar range and read by a 10-bit converter. The temperature
// probe maps 0..60 degC linearly onto the same converter.
inline constexpr double kAdcFullScaleMv = 5000.0;
inline constexpr double kAdcMidRailMv = 2500.0;
inline constexpr double kAdcCounts = 1023.0;
inline constexpr double kTempMinC = 0.0;
inline constexpr double kTempMaxC = 60.0;
inline constexpr double kPhMin = 0.0;
inline constexpr double kPhMax = 14.0;
inline constexpr double kIsopotentialPh = 7.0;
inline constexpr double kKelvinOffset = 273.15;

// A healthy glass electrode delivers 30..90 mV per pH unit. Outside that band
// the bulb is dry, cracked or badly fouled and readings cannot be trusted.
inline constexpr double kMinSlopeMagnitude = 30.0;
inline constexpr double kMaxSlopeMagnitude = 90.0;

struct CalibrationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DegenerateCalibration : CalibrationError {
  using CalibrationError::CalibrationError;
};
struct ElectrodeFault : CalibrationError {
  using CalibrationError::CalibrationError;
};
struct FieldOutOfRange : std::out_of_range {
  using std::out_of_range::out_of_range;
};

struct PhCalibration {
  double offset_mv = 0.0;         // electrode output at pH 7
  double slope_mv_per_ph = 0.0;   // negative for a healthy electrode
  double ref_temp_c = 25.0;
  std::optional<std::chrono::sys_seconds> calibrated_at;

  // Throws ElectrodeFault / CalibrationError on invariant violation.
  void validate() const;
};

struct BufferPoint {
  double ph = 0.0;
  double measured_mv = 0.0;
};

struct PhValue {
  double ph = 0.0;
  bool clamped = false;
};

// Ideal Nernst slope magnitude, ln(10)*R*T/F, in mV per pH unit.
double nernst_slope_mv(double temp_c);

// Offset 0 mV, slope -nernst_slope_mv(25), reference 25 degC.
PhCalibration ideal_calibration();

double electrode_mv_from_adc(std::uint16_t ph_adc);
double temp_c_from_adc(std::uint16_t temp_adc);

// Inverse converter maps: nearest count, saturating at 0 and 1023.
std::uint16_t adc_from_electrode_mv(double mv);
std::uint16_t adc_from_temp_c(double temp_c);

PhCalibration two_point_calibrate(const BufferPoint& p1, const BufferPoint& p2, double temp_c);

// Electrode slope scaled from the reference to the water temperature.
double compensated_slope(const PhCalibration& cal, double water_temp_c);

PhValue ph_from_mv(double mv, const PhCalibration& cal, double water_temp_c);

// Exact inverse of ph_from_mv on the unclamped interior.
double mv_from_ph(double ph, const PhCalibration& cal, double water_temp_c);

// Plain-text key = value record; see docs/file-formats.md.
PhCalibration load_calibration(const std::filesystem::path& path);
void save_calibration(const PhCalibration& cal, const std::filesystem::path& path);

}  // namespace aquasonde::calibration
