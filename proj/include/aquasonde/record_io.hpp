#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "aquasonde/sample_domain.hpp"

// Serialized forms of readings: the JSON record used by the HTTP API and the
// ingest log, and the CSV export.
namespace aquasonde::record_io {

struct RecordError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// {"timestamp": "...Z", "longitude", "latitude", "ph", "temp_c",
//  "device_id", "station" (optional), "seq_origin"}
nlohmann::json to_json(const Reading& reading);
// Throws RecordError when a field is missing or has the wrong type.
Reading reading_from_json(const nlohmann::json& j);

nlohmann::json to_json(const QualityAssessment& a);
nlohmann::json to_json(const StationSummary& s);
StationSummary summary_from_json(const nlohmann::json& j);

// date,time,longitude,latitude,ph,temperature
// The provenance variant appends station,device_id,seq_origin.
std::string csv_header(bool with_provenance);
std::string csv_row(const Reading& reading, bool with_provenance);
std::string to_csv(std::span<const Reading> readings, bool with_provenance);

// Accepts both header variants. Rows without provenance get device_id
// "csv-import", seq_origin = row index, and no station label.
std::vector<Reading> parse_csv(std::string_view text);

}  // namespace aquasonde::record_io
