// SPDX-License-Identifier: Apache-2.0
#include "grupack/segmentation/syllabify.hpp"

namespace grupack::seg {

Phonology Phonology::english() {
  Phonology p;
  p.vowels = {"i", "ɪ", "eɪ", "ɛ", "æ", "ə", "ʌ", "ɑ", "ɔ", "oʊ", "ʊ", "u",
              "aɪ", "aʊ", "ɔɪ", "ɑr", "ɛr", "ɔr", "ɪr", "ər"};
  p.consonants = {"p", "b", "t", "d", "k", "g", "f", "v", "θ", "ð", "s", "z",
                  "ʃ", "ʒ", "h", "m", "n", "ŋ", "l", "r", "w", "j", "tʃ", "dʒ"};
  // Single consonants except ŋ and ʒ, plus the common complex onsets.
  p.onsets = {"p",  "b",  "t",  "d",  "k",  "g",  "f",   "v",   "θ",   "ð",
              "s",  "z",  "ʃ",  "h",  "m",  "n",  "l",   "r",   "w",   "j",
              "tʃ", "dʒ", "pl", "pr", "bl", "br", "tr",  "dr",  "kl",  "kr",
              "gl", "gr", "fl", "fr", "θr", "ʃr", "tw",  "dw",  "kw",  "sw",
              "sp", "st", "sk", "sm", "sn", "sl", "spl", "spr", "str", "skr",
              "skw", "pj", "bj", "kj", "fj", "mj", "hj", "vj"};
  return p;
}

namespace {

std::string join_range(const std::vector<std::string>& phones, std::size_t from,
                       std::size_t to) {
  std::string s;
  for (std::size_t i = from; i < to; ++i) s += phones[i];
  return s;
}

// Number of consonants, taken from the right end of phones[from, to), that
// form the longest legal onset.
std::size_t onset_length(const std::vector<std::string>& phones, std::size_t from,
                         std::size_t to, const Phonology& ph) {
  for (std::size_t len = to - from; len > 0; --len) {
    if (ph.onsets.count(join_range(phones, to - len, to))) return len;
  }
  return 0;
}

// Syllable ends inside phones[begin, end], closing at `end`.
void syllabify_span(const std::vector<std::string>& phones, std::size_t begin,
                    std::size_t end, const Phonology& ph,
                    std::vector<std::size_t>& out) {
  std::size_t prev_vowel = end + 1;
  for (std::size_t i = begin; i <= end; ++i) {
    if (!ph.is_vowel(phones[i])) continue;
    if (prev_vowel != end + 1) {
      const std::size_t onset = onset_length(phones, prev_vowel + 1, i, ph);
      out.push_back(i - 1 - onset);
    }
    prev_vowel = i;
  }
  out.push_back(end);
}

}  // namespace

std::vector<std::size_t> syllabify(const PhonemeString& p, const Phonology& ph,
                                   SyllableMode mode) {
  const auto& phones = p.phones;
  if (phones.empty()) throw SegmentationError("syllabify: empty phoneme string");
  for (const auto& s : phones) {
    if (!ph.is_known(s)) throw SegmentationError("unknown phone symbol '" + s + "'");
  }
  if (p.word_breaks.empty() || p.word_breaks.back() != phones.size() - 1) {
    throw SegmentationError("syllabify: last phone must end a word");
  }
  std::size_t begin = 0;
  for (std::size_t w = 0; w < p.word_breaks.size(); ++w) {
    const std::size_t end = p.word_breaks[w];
    if (end < begin || end >= phones.size()) {
      throw SegmentationError("syllabify: word breaks must be strictly increasing");
    }
    bool has_vowel = false;
    for (std::size_t i = begin; i <= end; ++i) has_vowel = has_vowel || ph.is_vowel(phones[i]);
    if (!has_vowel) {
      throw SegmentationError("word without a vowel: /" + join_range(phones, begin, end + 1) + "/");
    }
    begin = end + 1;
  }

  std::vector<std::size_t> ends;
  if (mode == SyllableMode::connected) {
    syllabify_span(phones, 0, phones.size() - 1, ph, ends);
    return ends;
  }
  begin = 0;
  for (std::size_t end : p.word_breaks) {
    syllabify_span(phones, begin, end, ph, ends);
    begin = end + 1;
  }
  return ends;
}

std::string render_syllables(const PhonemeString& p,
                             const std::vector<std::size_t>& ends) {
  std::string s;
  std::size_t begin = 0;
  for (std::size_t k = 0; k < ends.size(); ++k) {
    if (k) s += ".";
    s += join_range(p.phones, begin, ends[k] + 1);
    begin = ends[k] + 1;
  }
  return s;
}

}  // namespace grupack::seg
