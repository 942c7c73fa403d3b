// SPDX-License-Identifier: Apache-2.0
#include "grupack/segmentation/boundary.hpp"

#include <algorithm>
#include <numeric>
#include <random>

namespace grupack::seg {

std::string to_string(Level level) {
  switch (level) {
    case Level::phone: return "phone";
    case Level::syllable_connected: return "syllable_connected";
    case Level::syllable_word: return "syllable_word";
    case Level::word: return "word";
  }
  return "?";
}

std::optional<Level> parse_level(const std::string& name) {
  if (name == "phone" || name == "phones") return Level::phone;
  if (name == "syllable_connected" || name == "syl-co" || name == "sylco")
    return Level::syllable_connected;
  if (name == "syllable_word" || name == "syl-word" || name == "sylword")
    return Level::syllable_word;
  if (name == "word" || name == "words") return Level::word;
  return std::nullopt;
}

bool nests_under(Level lower, Level upper) {
  switch (lower) {
    case Level::phone: return upper != Level::phone;
    case Level::syllable_word: return upper == Level::word;
    case Level::syllable_connected:
    case Level::word: return false;
  }
  return false;
}

std::size_t BoundaryVector::popcount() const {
  return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), 1));
}

std::vector<std::size_t> BoundaryVector::positions() const {
  std::vector<std::size_t> out;
  for (std::size_t t = 0; t < bits.size(); ++t)
    if (bits[t]) out.push_back(t);
  return out;
}

void validate(const BoundaryVector& b) {
  if (b.bits.empty()) throw SegmentationError("empty boundary vector");
  for (auto v : b.bits) {
    if (v > 1) throw SegmentationError("boundary bits must be 0 or 1");
  }
  if (b.bits.back() != 1) {
    throw SegmentationError(to_string(b.level) +
                            " tier: final frame must close a segment");
  }
}

BoundaryVector shuffle_boundaries(const BoundaryVector& b, std::uint64_t seed) {
  validate(b);
  const std::size_t T = b.length();
  const std::size_t k = b.popcount() - 1;
  // Partial Fisher-Yates over the admissible positions 0..T-2.
  std::vector<std::size_t> slots(T - 1);
  std::iota(slots.begin(), slots.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, slots.size() - 1);
    std::swap(slots[i], slots[pick(rng)]);
  }
  BoundaryVector out{Bits(T, 0), b.level};
  for (std::size_t i = 0; i < k; ++i) out.bits[slots[i]] = 1;
  out.bits[T - 1] = 1;
  return out;
}

bool is_subset(const BoundaryVector& inner, const BoundaryVector& outer) {
  if (inner.length() != outer.length()) return false;
  for (std::size_t t = 0; t < inner.length(); ++t)
    if (inner.bits[t] && !outer.bits[t]) return false;
  return true;
}

BoundaryVector project_boundaries(const BoundaryVector& lower,
                                  const BoundaryVector& higher) {
  if (lower.length() != higher.length()) {
    throw SegmentationError("project_boundaries: tier lengths differ (" +
                            std::to_string(lower.length()) + " vs " +
                            std::to_string(higher.length()) + ")");
  }
  BoundaryVector out{{}, higher.level};
  out.bits.reserve(lower.popcount());
  for (std::size_t t = 0; t < lower.length(); ++t) {
    if (higher.bits[t] && !lower.bits[t]) {
      throw SegmentationError("project_boundaries: " + to_string(higher.level) +
                              " boundary at frame " + std::to_string(t) +
                              " is not a " + to_string(lower.level) +
                              " boundary");
    }
    if (lower.bits[t]) out.bits.push_back(higher.bits[t]);
  }
  validate(out);
  return out;
}

BoundaryVector lift_boundaries(const BoundaryVector& lower,
                               const BoundaryVector& reduced, Level level) {
  const auto pos = lower.positions();
  if (pos.size() != reduced.length()) {
    throw SegmentationError("lift_boundaries: reduced tier has " +
                            std::to_string(reduced.length()) +
                            " entries, lower tier has " +
                            std::to_string(pos.size()) + " segments");
  }
  BoundaryVector out{Bits(lower.length(), 0), level};
  for (std::size_t i = 0; i < pos.size(); ++i) out.bits[pos[i]] = reduced.bits[i];
  return out;
}

double compression_rate(const BoundaryVector& b) {
  if (b.bits.empty()) throw SegmentationError("compression_rate: empty tier");
  return 100.0 * (1.0 - static_cast<double>(b.popcount()) /
                            static_cast<double>(b.length()));
}

}  // namespace grupack::seg
