// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <set>
#include <string>
#include <vector>

#include "grupack/segmentation/boundary.hpp"

namespace grupack::seg {

/// Phone inventory used by the syllabifier. Onsets are consonant clusters
/// written as the concatenation of their phone symbols ("str", "pl", "tʃ").
struct Phonology {
  std::set<std::string> vowels;
  std::set<std::string> consonants;
  std::set<std::string> onsets;

  bool is_vowel(const std::string& p) const { return vowels.count(p) > 0; }
  bool is_known(const std::string& p) const {
    return vowels.count(p) > 0 || consonants.count(p) > 0;
  }

  /// English-like inventory covering the symbols of the synthetic corpus.
  static Phonology english();
};

struct PhonemeString {
  std::vector<std::string> phones;
  std::vector<std::size_t> word_breaks;  // index of each word's final phone
};

enum class SyllableMode { word, connected };

/// Maximum-onset syllabification. Returns syllable-final phone indices.
///
/// `word` mode syllabifies each word on its own, so every word break is a
/// syllable break. `connected` mode runs over the whole stream: a word-final
/// consonant cluster moves onto a following vowel when it forms a legal onset,
/// and a word break survives only for V#V or for C#C junctions whose cluster
/// is not a legal onset.
std::vector<std::size_t> syllabify(const PhonemeString& p, const Phonology& ph,
                                   SyllableMode mode);

/// Renders syllables joined with '.', e.g. "ðɪs.ɪz.ən".
std::string render_syllables(const PhonemeString& p,
                             const std::vector<std::size_t>& ends);

}  // namespace grupack::seg
