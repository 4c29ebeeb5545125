#include "aquasonde/keyvalue.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

namespace aquasonde::keyvalue {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_ws(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    const std::size_t start = i;
    while (i < s.size() && s[i] != ' ' && s[i] != '\t') ++i;
    if (i > start) out.emplace_back(s.substr(start, i - start));
  }
  return out;
}

}  // namespace

double to_double(std::string_view token, std::string_view what) {
  if (token.size() > 1 && token.front() == '+') token.remove_prefix(1);
  double value = 0.0;
  const auto* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(token.data(), end, value);
  if (ec != std::errc{} || ptr != end || token.empty()) {
    throw ParseError(fmt::format("{}: '{}' is not a number", what, token));
  }
  return value;
}

std::uint64_t to_uint(std::string_view token, std::string_view what) {
  std::uint64_t value = 0;
  const auto* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(token.data(), end, value);
  if (ec != std::errc{} || ptr != end || token.empty()) {
    throw ParseError(fmt::format("{}: '{}' is not an unsigned integer", what, token));
  }
  return value;
}

Document parse(std::string_view text, std::string source) {
  Document doc;
  doc.source_ = std::move(source);
  bool in_stations = false;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto eol = text.find('\n', pos);
    const auto raw = text.substr(pos, eol == std::string_view::npos ? text.npos : eol - pos);
    pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
    ++line_no;

    auto line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) continue;

    if (line == "[stations]") {
      if (in_stations) {
        throw ParseError(fmt::format("{}:{}: duplicate [stations] section", doc.source_, line_no));
      }
      in_stations = true;
      continue;
    }
    if (in_stations) {
      doc.stations_.push_back(Row{line_no, split_ws(line)});
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ParseError(fmt::format("{}:{}: expected 'key = value'", doc.source_, line_no));
    }
    const auto key = std::string(trim(line.substr(0, eq)));
    const auto value = std::string(trim(line.substr(eq + 1)));
    if (key.empty()) {
      throw ParseError(fmt::format("{}:{}: empty key", doc.source_, line_no));
    }
    if (doc.values_.contains(key)) {
      throw ParseError(fmt::format("{}:{}: duplicate key '{}'", doc.source_, line_no, key));
    }
    doc.lines_[key] = line_no;
    doc.values_[key] = value;
  }
  return doc;
}

Document parse_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(fmt::format("cannot open {}", path.string()));
  std::ostringstream text;
  text << in.rdbuf();
  return parse(text.str(), path.string());
}

std::optional<std::string> Document::find(std::string_view key) const {
  if (auto it = values_.find(key); it != values_.end()) return it->second;
  return std::nullopt;
}

std::string Document::get_string(std::string_view key) const {
  if (auto v = find(key)) return *v;
  throw ParseError(fmt::format("{}: missing key '{}'", source_, key));
}

std::string Document::get_string(std::string_view key, std::string fallback) const {
  return find(key).value_or(std::move(fallback));
}

std::string Document::where(std::string_view key) const {
  if (auto it = lines_.find(key); it != lines_.end()) {
    return fmt::format("{}:{}: {}", source_, it->second, key);
  }
  return fmt::format("{}: {}", source_, key);
}

double Document::get_double(std::string_view key) const {
  return to_double(get_string(key), where(key));
}

double Document::get_double(std::string_view key, double fallback) const {
  auto v = find(key);
  return v ? to_double(*v, where(key)) : fallback;
}

std::uint64_t Document::get_uint(std::string_view key) const {
  return to_uint(get_string(key), where(key));
}

std::uint64_t Document::get_uint(std::string_view key, std::uint64_t fallback) const {
  auto v = find(key);
  return v ? to_uint(*v, where(key)) : fallback;
}

}  // namespace aquasonde::keyvalue
