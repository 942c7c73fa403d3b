// SPDX-License-Identifier: Apache-2.0
#include "grupack/experiment/keyvalue.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace grupack::exp {

namespace {
std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}
}  // namespace

std::optional<std::string> KeyValueFile::get(const std::string& key) const {
  std::optional<std::string> out;
  for (const auto& e : entries)
    if (e.key == key) out = e.value;
  return out;
}

std::vector<KeyValueFile::Entry> KeyValueFile::get_all(const std::string& key) const {
  std::vector<Entry> out;
  for (const auto& e : entries)
    if (e.key == key) out.push_back(e);
  return out;
}

void KeyValueFile::set(const std::string& key, const std::string& value) {
  std::erase_if(entries, [&](const Entry& e) { return e.key == key; });
  entries.push_back({key, value, 0});
}

KeyValueFile parse_key_value(std::string_view text) {
  KeyValueFile kv;
  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string_view line(raw);
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw enc::ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    std::string key = trim(std::string_view(body).substr(0, eq));
    std::string value = trim(std::string_view(body).substr(eq + 1));
    if (key.empty() || value.empty()) {
      throw enc::ConfigError("line " + std::to_string(lineno) + ": empty key or value");
    }
    kv.entries.push_back({std::move(key), std::move(value), lineno});
  }
  return kv;
}

KeyValueFile read_key_value(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw enc::ConfigError("cannot open config " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_key_value(ss.str());
  } catch (const enc::ConfigError& e) {
    throw enc::ConfigError(path + ": " + e.what());
  }
}

std::vector<std::string> split_list(const std::string& value, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = value.find(sep, start);
    std::string item = trim(std::string_view(value).substr(start, pos - start));
    if (!item.empty()) out.push_back(std::move(item));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

std::size_t parse_size(const std::string& key, const std::string& value) {
  std::size_t out = 0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw enc::ConfigError(key + ": expected a non-negative integer, got '" + value + "'");
  }
  return out;
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used == value.size()) return v;
  } catch (const std::exception&) {
  }
  throw enc::ConfigError(key + ": expected a number, got '" + value + "'");
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "yes" || value == "1") return true;
  if (value == "false" || value == "no" || value == "0") return false;
  throw enc::ConfigError(key + ": expected true or false, got '" + value + "'");
}

}  // namespace grupack::exp
