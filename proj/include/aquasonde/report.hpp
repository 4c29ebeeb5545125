#pragma once

#include <span>
#include <string>

#include "aquasonde/sample_domain.hpp"

namespace aquasonde::report {

// Plain-text per-location table. Rows whose assessment is not Normal carry a
// trailing "!" flag in the status column.
std::string format_table(std::span<const StationSummary> summaries, Season season);

// Self-contained SVG: stations along x, pH on the left axis (0..14) with
// reference lines at 6.5 and 8.4, temperature on the right axis. Every data
// point is a <circle> carrying data-series, data-station and data-value
// attributes.
std::string render_svg(std::span<const StationSummary> summaries, Season season);

struct Report {
  std::vector<StationSummary> summaries;
  std::string table;
  std::string svg;
};

// Throws EmptyInput when no labelled readings are present.
Report build_report(std::span<const Reading> readings, Season season);

}  // namespace aquasonde::report
