#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

// Plain-text configuration format shared by scenario, capture-config and
// calibration files:
//
//   # comment
//   key = value
//   [stations]
//   L1  74.2651  31.4697  5.33  25.90  200
//
// Keys precede the optional [stations] section; every non-blank line after
// it is a whitespace-separated row.
namespace aquasonde::keyvalue {

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Row {
  int line = 0;
  std::vector<std::string> fields;
};

class Document {
 public:
  std::optional<std::string> find(std::string_view key) const;
  bool contains(std::string_view key) const { return find(key).has_value(); }

  std::string get_string(std::string_view key) const;
  std::string get_string(std::string_view key, std::string fallback) const;
  double get_double(std::string_view key) const;
  double get_double(std::string_view key, double fallback) const;
  std::uint64_t get_uint(std::string_view key) const;
  std::uint64_t get_uint(std::string_view key, std::uint64_t fallback) const;

  const std::vector<Row>& stations() const { return stations_; }
  const std::string& source() const { return source_; }

 private:
  friend Document parse(std::string_view text, std::string source);
  std::string where(std::string_view key) const;

  std::map<std::string, std::string, std::less<>> values_;
  std::map<std::string, int, std::less<>> lines_;
  std::vector<Row> stations_;
  std::string source_;
};

Document parse(std::string_view text, std::string source = "<memory>");
Document parse_file(const std::filesystem::path& path);

// Strict numeric conversions; the whole token must be consumed.
double to_double(std::string_view token, std::string_view what);
std::uint64_t to_uint(std::string_view token, std::string_view what);

}  // namespace aquasonde::keyvalue
