#include "aquasonde/record_io.hpp"

#include <fmt/format.h>

#include "aquasonde/keyvalue.hpp"

namespace aquasonde::record_io {

using nlohmann::json;

namespace {

template <typename T>
T field(const json& j, const char* name) {
  auto it = j.find(name);
  if (it == j.end()) throw RecordError(fmt::format("missing field '{}'", name));
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw RecordError(fmt::format("field '{}' has the wrong type", name));
  }
}

double number_field(const json& j, const char* name) {
  auto it = j.find(name);
  if (it == j.end()) throw RecordError(fmt::format("missing field '{}'", name));
  if (!it->is_number()) throw RecordError(fmt::format("field '{}' must be a number", name));
  return it->get<double>();
}

std::string csv_escape(std::string_view s) {
  if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::vector<std::string> split_csv_line(std::string_view line, int line_no) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cell += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cell += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.push_back(std::move(cell));
      cell.clear();
    } else {
      cell += c;
    }
  }
  if (quoted) throw RecordError(fmt::format("line {}: unterminated quote", line_no));
  cells.push_back(std::move(cell));
  return cells;
}

}  // namespace

json to_json(const Reading& r) {
  json j = {
      {"timestamp", timeutil::format_iso8601(r.timestamp)},
      {"longitude", r.longitude},
      {"latitude", r.latitude},
      {"ph", r.ph},
      {"temp_c", r.temp_c},
      {"device_id", r.device_id},
      {"seq_origin", r.seq_origin},
  };
  if (r.station) j["station"] = *r.station;
  return j;
}

Reading reading_from_json(const json& j) {
  if (!j.is_object()) throw RecordError("record must be a JSON object");
  Reading r;
  try {
    r.timestamp = timeutil::parse_iso8601(field<std::string>(j, "timestamp"));
  } catch (const timeutil::TimeFormatError& e) {
    throw RecordError(e.what());
  }
  r.longitude = number_field(j, "longitude");
  r.latitude = number_field(j, "latitude");
  r.ph = number_field(j, "ph");
  r.temp_c = number_field(j, "temp_c");
  r.device_id = field<std::string>(j, "device_id");
  if (auto it = j.find("station"); it != j.end() && !it->is_null()) {
    r.station = field<std::string>(j, "station");
  }
  auto seq = j.find("seq_origin");
  if (seq == j.end()) throw RecordError("missing field 'seq_origin'");
  if (!seq->is_number_unsigned() || seq->get<std::uint64_t>() > 0xFFFFFFFFu) {
    throw RecordError("field 'seq_origin' must be an unsigned 32-bit integer");
  }
  r.seq_origin = seq->get<std::uint32_t>();
  return r;
}

json to_json(const QualityAssessment& a) {
  json j = {
      {"parameter", std::string(to_string(a.parameter))},
      {"value", a.value},
      {"classification", std::string(to_string(a.classification))},
      {"norm_low", a.norm_low},
      {"norm_high", a.norm_high},
  };
  if (a.season) j["season"] = std::string(to_string(*a.season));
  return j;
}

json to_json(const StationSummary& s) {
  return json{
      {"station", s.station},
      {"count", s.count},
      {"ph_mean", s.ph_mean},
      {"ph_min", s.ph_min},
      {"ph_max", s.ph_max},
      {"temp_mean", s.temp_mean},
      {"temp_min", s.temp_min},
      {"temp_max", s.temp_max},
      {"ph_assessment", to_json(s.ph_assessment)},
      {"temp_assessment", to_json(s.temp_assessment)},
  };
}

namespace {

Classification classification_from(const std::string& s) {
  if (s == "BelowNormal") return Classification::BelowNormal;
  if (s == "Normal") return Classification::Normal;
  if (s == "AboveNormal") return Classification::AboveNormal;
  throw RecordError(fmt::format("unknown classification '{}'", s));
}

QualityAssessment assessment_from_json(const json& j, Parameter p) {
  QualityAssessment a;
  a.parameter = p;
  a.value = number_field(j, "value");
  a.classification = classification_from(field<std::string>(j, "classification"));
  a.norm_low = number_field(j, "norm_low");
  a.norm_high = number_field(j, "norm_high");
  if (auto it = j.find("season"); it != j.end()) a.season = parse_season(it->get<std::string>());
  return a;
}

}  // namespace

StationSummary summary_from_json(const json& j) {
  StationSummary s;
  s.station = field<std::string>(j, "station");
  s.count = field<std::size_t>(j, "count");
  s.ph_mean = number_field(j, "ph_mean");
  s.ph_min = number_field(j, "ph_min");
  s.ph_max = number_field(j, "ph_max");
  s.temp_mean = number_field(j, "temp_mean");
  s.temp_min = number_field(j, "temp_min");
  s.temp_max = number_field(j, "temp_max");
  s.ph_assessment = assessment_from_json(field<json>(j, "ph_assessment"), Parameter::Ph);
  s.temp_assessment =
      assessment_from_json(field<json>(j, "temp_assessment"), Parameter::Temperature);
  return s;
}

std::string csv_header(bool with_provenance) {
  return with_provenance ? "date,time,longitude,latitude,ph,temperature,station,device_id,seq_origin"
                         : "date,time,longitude,latitude,ph,temperature";
}

std::string csv_row(const Reading& r, bool with_provenance) {
  auto row = fmt::format("{},{},{:.6f},{:.6f},{:.2f},{:.2f}", timeutil::format_date(r.timestamp),
                         timeutil::format_time(r.timestamp), r.longitude, r.latitude, r.ph,
                         r.temp_c);
  if (with_provenance) {
    row += fmt::format(",{},{},{}", csv_escape(r.station.value_or("")), csv_escape(r.device_id),
                       r.seq_origin);
  }
  return row;
}

std::string to_csv(std::span<const Reading> readings, bool with_provenance) {
  std::string out = csv_header(with_provenance) + "\n";
  for (const auto& r : readings) {
    out += csv_row(r, with_provenance);
    out += '\n';
  }
  return out;
}

std::vector<Reading> parse_csv(std::string_view text) {
  std::vector<Reading> out;
  bool provenance = false;
  bool saw_header = false;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto eol = text.find('\n', pos);
    auto line = text.substr(pos, eol == std::string_view::npos ? text.npos : eol - pos);
    pos = eol == std::string_view::npos ? text.size() : eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;

    if (!saw_header) {
      if (line == csv_header(true)) {
        provenance = true;
      } else if (line != csv_header(false)) {
        throw RecordError(fmt::format("line {}: unrecognized CSV header '{}'", line_no, line));
      }
      saw_header = true;
      continue;
    }

    const auto cells = split_csv_line(line, line_no);
    const std::size_t expected = provenance ? 9 : 6;
    if (cells.size() != expected) {
      throw RecordError(
          fmt::format("line {}: expected {} columns, found {}", line_no, expected, cells.size()));
    }
    try {
      Reading r;
      r.timestamp = timeutil::parse_date_time(cells[0], cells[1]);
      const auto where = fmt::format("line {}", line_no);
      r.longitude = keyvalue::to_double(cells[2], where);
      r.latitude = keyvalue::to_double(cells[3], where);
      r.ph = keyvalue::to_double(cells[4], where);
      r.temp_c = keyvalue::to_double(cells[5], where);
      if (provenance) {
        if (!cells[6].empty()) r.station = cells[6];
        r.device_id = cells[7];
        const auto seq = keyvalue::to_uint(cells[8], where);
        if (seq > 0xFFFFFFFFu) throw RecordError(fmt::format("line {}: seq_origin too large", line_no));
        r.seq_origin = static_cast<std::uint32_t>(seq);
      } else {
        r.device_id = "csv-import";
        r.seq_origin = static_cast<std::uint32_t>(out.size());
      }
      out.push_back(std::move(r));
    } catch (const timeutil::TimeFormatError& e) {
      throw RecordError(fmt::format("line {}: {}", line_no, e.what()));
    } catch (const keyvalue::ParseError& e) {
      throw RecordError(e.what());
    }
  }
  if (!saw_header) throw RecordError("empty CSV document");
  return out;
}

}  // namespace aquasonde::record_io
