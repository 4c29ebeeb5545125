#include "aquasonde/report.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace aquasonde::report {

namespace {

std::string status(const QualityAssessment& a) {
  return fmt::format("{:<12}{}", to_string(a.classification),
                     a.classification == Classification::Normal ? " " : "!");
}

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Frame {
  double left = 70, right = 650, top = 50, bottom = 340;
  double width = 720, height = 400;
};

}  // namespace

std::string format_table(std::span<const StationSummary> summaries, Season season) {
  const double t_lo = season == Season::Winter ? kWinterTempLow : kSummerTempLow;
  const double t_hi = season == Season::Winter ? kWinterTempHigh : kSummerTempHigh;
  std::string out = fmt::format(
      "Per-location water quality (pH norm {:.1f}-{:.1f}; {} temperature norm {:.0f}-{:.0f} C)\n\n",
      kPhNormLow, kPhNormHigh, to_string(season), t_lo, t_hi);
  out += fmt::format("{:<8} {:>3}  {:>7} {:>6} {:>6}  {:<13}  {:>9} {:>8} {:>8}  {:<13}\n",
                     "Station", "n", "pH mean", "min", "max", "pH status", "Temp mean", "min",
                     "max", "Temp status");
  for (const auto& s : summaries) {
    out += fmt::format(
        "{:<8} {:>3}  {:>7.2f} {:>6.2f} {:>6.2f}  {:<13}  {:>9.2f} {:>8.2f} {:>8.2f}  {:<13}\n",
        s.station, s.count, s.ph_mean, s.ph_min, s.ph_max, status(s.ph_assessment), s.temp_mean,
        s.temp_min, s.temp_max, status(s.temp_assessment));
  }
  return out;
}

std::string render_svg(std::span<const StationSummary> summaries, Season season) {
  const Frame f;
  double temp_max_axis = 40.0;
  for (const auto& s : summaries) {
    if (s.temp_mean > temp_max_axis) temp_max_axis = 60.0;
  }
  const auto n = summaries.size();
  auto x_of = [&](std::size_t i) {
    return n == 1 ? (f.left + f.right) / 2
                  : f.left + 40 + (f.right - f.left - 80) * static_cast<double>(i) /
                                     static_cast<double>(n - 1);
  };
  auto y_ph = [&](double ph) { return f.bottom - (f.bottom - f.top) * ph / 14.0; };
  auto y_temp = [&](double t) { return f.bottom - (f.bottom - f.top) * t / temp_max_axis; };

  std::string svg = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" "
      "viewBox=\"0 0 {0} {1}\" font-family=\"sans-serif\" font-size=\"12\">\n",
      f.width, f.height);
  svg += fmt::format("<rect width=\"{}\" height=\"{}\" fill=\"white\"/>\n", f.width, f.height);
  svg += fmt::format(
      "<text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">pH and temperature by "
      "location</text>\n",
      f.width / 2);

  const double band_lo = season == Season::Winter ? kWinterTempLow : kSummerTempLow;
  const double band_hi = season == Season::Winter ? kWinterTempHigh : kSummerTempHigh;
  svg += fmt::format(
      "<rect class=\"temp-band\" data-season=\"{}\" x=\"{:.1f}\" y=\"{:.1f}\" width=\"{:.1f}\" "
      "height=\"{:.1f}\" fill=\"#d62728\" fill-opacity=\"0.08\"/>\n",
      to_string(season), f.left, y_temp(band_hi), f.right - f.left,
      y_temp(band_lo) - y_temp(band_hi));

  // Axes and ticks.
  svg += fmt::format(
      "<path d=\"M{0:.1f},{1:.1f} V{2:.1f} H{3:.1f} V{1:.1f}\" fill=\"none\" stroke=\"black\"/>\n",
      f.left, f.top, f.bottom, f.right);
  for (int ph = 0; ph <= 14; ph += 2) {
    svg += fmt::format(
        "<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"end\">{}</text>\n", f.left - 6,
        y_ph(ph) + 4, ph);
  }
  const int temp_step = temp_max_axis > 40 ? 10 : 5;
  for (int t = 0; t <= static_cast<int>(temp_max_axis); t += temp_step) {
    svg += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\">{}</text>\n", f.right + 6,
                       y_temp(t) + 4, t);
  }
  svg += fmt::format(
      "<text x=\"18\" y=\"{0:.1f}\" transform=\"rotate(-90 18 {0:.1f})\" "
      "text-anchor=\"middle\">pH</text>\n",
      (f.top + f.bottom) / 2);
  svg += fmt::format(
      "<text x=\"{0:.1f}\" y=\"{1:.1f}\" transform=\"rotate(90 {0:.1f} {1:.1f})\" "
      "text-anchor=\"middle\">Temperature (C)</text>\n",
      f.width - 20, (f.top + f.bottom) / 2);

  for (double ref : {kPhNormLow, kPhNormHigh}) {
    svg += fmt::format(
        "<line class=\"ph-reference\" data-value=\"{:.1f}\" x1=\"{:.1f}\" y1=\"{:.1f}\" "
        "x2=\"{:.1f}\" y2=\"{:.1f}\" stroke=\"#1f77b4\" stroke-dasharray=\"6 4\"/>\n",
        ref, f.left, y_ph(ref), f.right, y_ph(ref));
  }

  std::string ph_points, temp_points;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& s = summaries[i];
    const double x = x_of(i);
    svg += fmt::format(
        "<text class=\"station-label\" x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\">{}</text>\n",
        x, f.bottom + 18, xml_escape(s.station));
    ph_points += fmt::format("{:.1f},{:.1f} ", x, y_ph(s.ph_mean));
    temp_points += fmt::format("{:.1f},{:.1f} ", x, y_temp(s.temp_mean));
  }
  if (n > 1) {
    svg += fmt::format("<polyline points=\"{}\" fill=\"none\" stroke=\"#1f77b4\"/>\n", ph_points);
    svg += fmt::format("<polyline points=\"{}\" fill=\"none\" stroke=\"#d62728\"/>\n", temp_points);
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto& s = summaries[i];
    const double x = x_of(i);
    svg += fmt::format(
        "<circle data-series=\"ph\" data-station=\"{}\" data-value=\"{:.2f}\" "
        "data-classification=\"{}\" cx=\"{:.1f}\" cy=\"{:.1f}\" r=\"4\" fill=\"#1f77b4\"/>\n",
        xml_escape(s.station), s.ph_mean, to_string(s.ph_assessment.classification), x,
        y_ph(s.ph_mean));
    svg += fmt::format(
        "<circle data-series=\"temperature\" data-station=\"{}\" data-value=\"{:.2f}\" "
        "data-classification=\"{}\" cx=\"{:.1f}\" cy=\"{:.1f}\" r=\"4\" fill=\"#d62728\"/>\n",
        xml_escape(s.station), s.temp_mean, to_string(s.temp_assessment.classification), x,
        y_temp(s.temp_mean));
  }

  svg += fmt::format(
      "<g font-size=\"11\"><circle cx=\"{0:.1f}\" cy=\"{1:.1f}\" r=\"4\" fill=\"#1f77b4\"/>"
      "<text x=\"{2:.1f}\" y=\"{3:.1f}\">pH</text>"
      "<circle cx=\"{4:.1f}\" cy=\"{1:.1f}\" r=\"4\" fill=\"#d62728\"/>"
      "<text x=\"{5:.1f}\" y=\"{3:.1f}\">Temperature</text></g>\n",
      f.left + 10, f.bottom + 42, f.left + 18, f.bottom + 46, f.left + 70, f.left + 78);
  svg += "</svg>\n";
  return svg;
}

Report build_report(std::span<const Reading> readings, Season season) {
  Report r;
  r.summaries = summarize_by_station(readings, season);
  if (r.summaries.empty()) throw EmptyInput("no station readings to report");
  r.table = format_table(r.summaries, season);
  r.svg = render_svg(r.summaries, season);
  return r;
}

}  // namespace aquasonde::report
