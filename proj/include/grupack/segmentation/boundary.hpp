// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace grupack::seg {

enum class Level { phone, syllable_connected, syllable_word, word };

inline constexpr Level kAllLevels[] = {Level::phone, Level::syllable_connected,
                                       Level::syllable_word, Level::word};

std::string to_string(Level level);
std::optional<Level> parse_level(const std::string& name);

/// True when every `upper` boundary is guaranteed (by construction of the
/// tiers) to be a `lower` boundary: phone < syllable_* < word, and
/// syllable_word < word. syllable_connected does not nest under words.
bool nests_under(Level lower, Level upper);

class SegmentationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Bits = std::vector<std::uint8_t>;

/// Segment-final frame markers for one tier. bits.back() is always 1.
struct BoundaryVector {
  Bits bits;
  Level level = Level::phone;

  std::size_t length() const { return bits.size(); }
  std::size_t popcount() const;
  std::vector<std::size_t> positions() const;
};

/// Throws unless the vector is non-empty, binary and closed at the last frame.
void validate(const BoundaryVector& b);

/// Keeps the final boundary and redraws the other popcount-1 boundaries
/// uniformly among frames 0..T-2. Deterministic per seed.
BoundaryVector shuffle_boundaries(const BoundaryVector& b, std::uint64_t seed);

/// Re-expresses `higher` over the sequence that remains after keeping only the
/// frames where `lower` is set.
BoundaryVector project_boundaries(const BoundaryVector& lower,
                                  const BoundaryVector& higher);

/// Inverse of project_boundaries: spreads a tier over the reduced sequence
/// back onto the frames selected by `lower`.
BoundaryVector lift_boundaries(const BoundaryVector& lower,
                               const BoundaryVector& reduced, Level level);

/// 100 * (1 - segments / frames).
double compression_rate(const BoundaryVector& b);

bool is_subset(const BoundaryVector& inner, const BoundaryVector& outer);

}  // namespace grupack::seg
