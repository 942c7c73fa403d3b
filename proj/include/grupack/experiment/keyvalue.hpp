// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "grupack/encoder/config.hpp"

namespace grupack::exp {

/// `key = value` lines; `#` starts a comment; blank lines are ignored.
/// A key may repeat (grid.placement); the last occurrence wins for scalars.
struct KeyValueFile {
  struct Entry {
    std::string key;
    std::string value;
    std::size_t line = 0;
  };
  std::vector<Entry> entries;

  std::optional<std::string> get(const std::string& key) const;
  std::vector<Entry> get_all(const std::string& key) const;
  /// Replaces every occurrence of `key` with one entry.
  void set(const std::string& key, const std::string& value);
};

/// Throws enc::ConfigError with the line number on malformed lines.
KeyValueFile parse_key_value(std::string_view text);
KeyValueFile read_key_value(const std::string& path);

/// Comma-separated list with surrounding spaces trimmed.
std::vector<std::string> split_list(const std::string& value, char sep = ',');

std::size_t parse_size(const std::string& key, const std::string& value);
double parse_double(const std::string& key, const std::string& value);
bool parse_bool(const std::string& key, const std::string& value);

}  // namespace grupack::exp
