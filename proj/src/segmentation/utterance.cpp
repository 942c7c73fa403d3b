// SPDX-License-Identifier: Apache-2.0
#include "grupack/segmentation/utterance.hpp"

namespace grupack::seg {

PhonemeString phoneme_string(const Alignment& a) {
  PhonemeString p;
  for (std::size_t i = 0; i < a.phones.size(); ++i) {
    p.phones.push_back(a.phones[i].label);
    const bool last_of_word =
        i + 1 == a.phones.size() || a.phone_word[i + 1] != a.phone_word[i];
    if (last_of_word) p.word_breaks.push_back(i);
  }
  return p;
}

TierMap build_tiers(const Alignment& a, const Phonology& ph) {
  std::vector<std::size_t> phones_per_word(a.words.size(), 0);
  for (auto w : a.phone_word) ++phones_per_word[w];
  for (std::size_t w = 0; w < a.words.size(); ++w) {
    if (phones_per_word[w] == 0) {
      throw SegmentationError(a.id + ": word '" + a.words[w].label + "' has no phones");
    }
  }

  TierMap tiers;
  tiers[Level::phone] = boundaries_to_frames(a.phones, a.hop_ms, a.frames, Level::phone);
  tiers[Level::word] = boundaries_to_frames(a.words, a.hop_ms, a.frames, Level::word);

  const PhonemeString p = phoneme_string(a);
  const auto syllable_tier = [&](SyllableMode mode, Level level) {
    std::vector<long> ends;
    for (auto i : syllabify(p, ph, mode)) ends.push_back(a.phones[i].end_ms);
    return boundaries_to_frames(ends, a.hop_ms, a.frames, level);
  };
  tiers[Level::syllable_word] = syllable_tier(SyllableMode::word, Level::syllable_word);
  tiers[Level::syllable_connected] =
      syllable_tier(SyllableMode::connected, Level::syllable_connected);
  validate_tiers(tiers, a.frames);
  return tiers;
}

void validate_tiers(const TierMap& tiers, std::size_t frames) {
  for (const auto& [level, b] : tiers) {
    validate(b);
    if (b.level != level) throw SegmentationError("tier stored under the wrong level");
    if (b.length() != frames) {
      throw SegmentationError(to_string(level) + " tier has " +
                              std::to_string(b.length()) + " bits, expected " +
                              std::to_string(frames));
    }
  }
  for (const auto& [lower, lb] : tiers) {
    for (const auto& [upper, ub] : tiers) {
      if (nests_under(lower, upper) && !is_subset(ub, lb)) {
        throw SegmentationError(to_string(upper) + " boundaries are not nested in " +
                                to_string(lower) + " boundaries");
      }
    }
  }
}

TierMap random_nested_tiers(const TierMap& tiers, std::uint64_t seed) {
  // Parent of each tier in the nesting chain.
  const auto parent_of = [](Level l) -> std::optional<Level> {
    switch (l) {
      case Level::phone: return std::nullopt;
      case Level::syllable_connected:
      case Level::syllable_word: return Level::phone;
      case Level::word: return Level::syllable_word;
    }
    return std::nullopt;
  };
  TierMap out;
  std::uint64_t salt = 0;
  for (Level level : kAllLevels) {
    ++salt;
    auto it = tiers.find(level);
    if (it == tiers.end()) continue;
    const std::uint64_t s = seed * 0x9E3779B97F4A7C15ULL + salt;
    auto parent = parent_of(level);
    while (parent && !tiers.count(*parent)) parent = parent_of(*parent);
    if (!parent) {
      out[level] = shuffle_boundaries(it->second, s);
      continue;
    }
    const auto reduced = project_boundaries(tiers.at(*parent), it->second);
    out[level] = lift_boundaries(out.at(*parent), shuffle_boundaries(reduced, s), level);
  }
  return out;
}

}  // namespace grupack::seg
