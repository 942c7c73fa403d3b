// SPDX-License-Identifier: Apache-2.0
#include "grupack/encoder/config.hpp"

#include <algorithm>

namespace grupack::enc {

std::string to_string(PackMode mode) { return mode == PackMode::all ? "all" : "keep"; }

std::string LayerSpec::describe() const {
  if (kind == LayerKind::vanilla) return "vanilla";
  return "packager:" + seg::to_string(*level) + ":" + to_string(*mode);
}

LayerSpec LayerSpec::parse(const std::string& text, std::size_t hidden) {
  if (text == "vanilla") return vanilla(hidden);
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    auto colon = text.find(':', start);
    parts.push_back(text.substr(start, colon - start));
    if (colon == std::string::npos) break;
    start = colon + 1;
  }
  if (parts.size() != 3 || parts[0] != "packager") {
    throw ConfigError("bad layer spec '" + text +
                      "', expected vanilla or packager:<level>:<all|keep>");
  }
  auto level = seg::parse_level(parts[1]);
  if (!level) throw ConfigError("unknown segment level '" + parts[1] + "'");
  PackMode mode;
  if (parts[2] == "all" || parts[2] == "ALL") mode = PackMode::all;
  else if (parts[2] == "keep" || parts[2] == "KEEP") mode = PackMode::keep;
  else throw ConfigError("unknown packager mode '" + parts[2] + "'");
  return packager(*level, mode, hidden);
}

bool EncoderConfig::has_packager() const {
  return std::any_of(layers.begin(), layers.end(),
                     [](const LayerSpec& l) { return l.kind == LayerKind::packager; });
}

std::vector<seg::Level> EncoderConfig::required_levels() const {
  std::vector<seg::Level> out;
  for (const auto& l : layers)
    if (l.kind == LayerKind::packager) out.push_back(*l.level);
  return out;
}

EncoderConfig EncoderConfig::desk(std::size_t n_layers, std::size_t input_dim,
                                  std::size_t image_in_dim) {
  EncoderConfig c;
  c.input_dim = input_dim;
  c.image_in_dim = image_in_dim;
  c.layers.assign(n_layers, LayerSpec::vanilla(32));
  return c;
}

EncoderConfig EncoderConfig::full_scale(std::size_t input_dim, std::size_t image_in_dim) {
  EncoderConfig c;
  c.input_dim = input_dim;
  c.image_in_dim = image_in_dim;
  c.conv = {64, 6, 1};
  c.layers.assign(5, LayerSpec::vanilla(1024));
  c.attention_dim = 512;
  c.embed_dim = 1024;
  return c;
}

void validate(const EncoderConfig& c) {
  if (c.layers.empty()) throw ConfigError("encoder needs at least one recurrent layer");
  if (c.input_dim == 0 || c.conv.filters == 0 || c.conv.width == 0 ||
      c.conv.stride == 0 || c.attention_dim == 0 || c.embed_dim == 0 ||
      c.image_in_dim == 0) {
    throw ConfigError("encoder dimensions must be positive");
  }
  if (c.has_packager() && c.conv.stride != 1) {
    throw ConfigError("conv stride must be 1 when a packager layer is present");
  }
  for (const auto& l : c.layers) {
    if (l.hidden_dim == 0) throw ConfigError("hidden_dim must be positive");
    const bool pack = l.kind == LayerKind::packager;
    if (pack != l.level.has_value() || pack != l.mode.has_value()) {
      throw ConfigError("packager layers need level and mode; vanilla layers take neither");
    }
  }
  if (c.layers.back().hidden_dim != c.embed_dim) {
    throw ConfigError("last recurrent layer width " +
                      std::to_string(c.layers.back().hidden_dim) +
                      " must equal embed_dim " + std::to_string(c.embed_dim));
  }
  // Successive packagers must climb the nesting chain. After a KEEP layer
  // only levels nested under it survive the reduction.
  std::optional<seg::Level> prev;
  for (const auto& l : c.layers) {
    if (l.kind != LayerKind::packager) continue;
    if (prev && !seg::nests_under(*prev, *l.level)) {
      throw ConfigError("packager levels must be bottom-up: " + seg::to_string(*l.level) +
                        " cannot follow " + seg::to_string(*prev));
    }
    prev = l.level;
  }
}

EncoderConfig with_packagers(EncoderConfig base, const std::vector<std::size_t>& positions,
                             const std::vector<seg::Level>& levels, PackMode mode) {
  if (positions.size() != levels.size()) {
    throw ConfigError("placement needs one level per packager position");
  }
  for (std::size_t i = 0; i < positions.size(); ++i) {
    const auto p = positions[i];
    if (p == 0 || p > base.layers.size()) {
      throw ConfigError("packager position " + std::to_string(p) + " outside 1.." +
                        std::to_string(base.layers.size()));
    }
    base.layers[p - 1] = LayerSpec::packager(levels[i], mode, base.layers[p - 1].hidden_dim);
  }
  return base;
}

}  // namespace grupack::enc
