// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "grupack/segmentation/boundary.hpp"

namespace grupack::enc {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class LayerKind { vanilla, packager };
enum class PackMode { all, keep };

std::string to_string(PackMode mode);

struct LayerSpec {
  LayerKind kind = LayerKind::vanilla;
  std::optional<seg::Level> level;  // packager only
  std::optional<PackMode> mode;     // packager only
  std::size_t hidden_dim = 32;

  static LayerSpec vanilla(std::size_t hidden) {
    return {LayerKind::vanilla, std::nullopt, std::nullopt, hidden};
  }
  static LayerSpec packager(seg::Level level, PackMode mode, std::size_t hidden) {
    return {LayerKind::packager, level, mode, hidden};
  }

  /// "vanilla" or "packager:<level>:<all|keep>".
  std::string describe() const;
  static LayerSpec parse(const std::string& text, std::size_t hidden);
};

struct ConvSpec {
  std::size_t filters = 16;
  std::size_t width = 6;
  std::size_t stride = 1;
};

struct EncoderConfig {
  std::size_t input_dim = 13;
  ConvSpec conv;
  std::vector<LayerSpec> layers;
  std::size_t attention_dim = 32;
  std::size_t embed_dim = 32;
  std::size_t image_in_dim = 32;

  bool has_packager() const;
  std::vector<seg::Level> required_levels() const;

  /// Desk-scale model: conv 16x6, `n_layers` vanilla layers of width 32.
  static EncoderConfig desk(std::size_t n_layers = 5, std::size_t input_dim = 13,
                            std::size_t image_in_dim = 32);
  /// Full-size model: conv 64x6, five layers of 1024 units.
  static EncoderConfig full_scale(std::size_t input_dim, std::size_t image_in_dim);
};

/// Throws ConfigError on: no layers, zero dims, stride != 1 with packagers,
/// last hidden width != embed_dim, packager levels out of nesting order.
void validate(const EncoderConfig& config);

/// Replaces layer `positions[i]` (1-based) with a packager at `levels[i]`.
EncoderConfig with_packagers(EncoderConfig base, const std::vector<std::size_t>& positions,
                             const std::vector<seg::Level>& levels, PackMode mode);

}  // namespace grupack::enc
