// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <random>

#include "grupack/segmentation/alignment.hpp"
#include "grupack/segmentation/syllabify.hpp"
#include "grupack/segmentation/utterance.hpp"

using namespace grupack::seg;

namespace {

BoundaryVector bv(std::vector<int> bits, Level level = Level::phone) {
  BoundaryVector b;
  b.level = level;
  for (int v : bits) b.bits.push_back(static_cast<std::uint8_t>(v));
  return b;
}

BoundaryVector from_positions(std::size_t T, std::vector<std::size_t> pos, Level level) {
  BoundaryVector b;
  b.level = level;
  b.bits.assign(T, 0);
  for (auto p : pos) b.bits[p] = 1;
  return b;
}

PhonemeString this_is_an_article() {
  return {{"ð", "ɪ", "s", "ɪ", "z", "ə", "n", "ɑr", "t", "ɪ", "k", "ə", "l"}, {2, 4, 6, 12}};
}

const char* kDog =
    "# one word\n"
    "id dog1 frames 30 hop_ms 10\n"
    "word dog 0 300\n"
    "phone d 0 100\n"
    "phone ɔ 100 200\n"
    "phone g 200 300\n";

}  // namespace

TEST_CASE("syllabifier reproduces the this-is-an-article example") {
  const auto ph = Phonology::english();
  const auto p = this_is_an_article();
  CHECK(render_syllables(p, syllabify(p, ph, SyllableMode::word)) == "ðɪs.ɪz.ən.ɑr.tɪ.kəl");
  CHECK(render_syllables(p, syllabify(p, ph, SyllableMode::connected)) == "ðɪ.sɪ.zə.nɑr.tɪ.kəl");
}

TEST_CASE("a monosyllabic word is the same in both modes") {
  const auto ph = Phonology::english();
  PhonemeString p{{"d", "ɔ", "g"}, {2}};
  CHECK(syllabify(p, ph, SyllableMode::word) == std::vector<std::size_t>{2});
  CHECK(syllabify(p, ph, SyllableMode::connected) == std::vector<std::size_t>{2});
}

TEST_CASE("connected mode keeps C#C breaks that are not legal onsets") {
  const auto ph = Phonology::english();
  // "dog bench": g#b is not an onset, so the word break survives.
  PhonemeString p{{"d", "ɔ", "g", "b", "ɛ", "n", "tʃ"}, {2, 6}};
  CHECK(syllabify(p, ph, SyllableMode::connected) == std::vector<std::size_t>{2, 6});
  // "the ice" style V#V keeps its break too.
  PhonemeString q{{"ð", "ə", "aɪ", "s"}, {1, 3}};
  CHECK(syllabify(q, ph, SyllableMode::connected) == std::vector<std::size_t>{1, 3});
}

TEST_CASE("syllabifier errors") {
  const auto ph = Phonology::english();
  PhonemeString no_vowel{{"s", "t"}, {1}};
  CHECK_THROWS_WITH(syllabify(no_vowel, ph, SyllableMode::word), "word without a vowel: /st/");
  PhonemeString unknown{{"q", "ɪ"}, {1}};
  CHECK_THROWS_WITH(syllabify(unknown, ph, SyllableMode::word), "unknown phone symbol 'q'");
}

TEST_CASE("syllable counts agree between modes and word mode keeps word ends") {
  const auto ph = Phonology::english();
  const std::vector<std::vector<std::string>> words = {
      {"d", "ɔ", "g"}, {"ɪ", "z"}, {"ə", "n"}, {"w", "ɔ", "t", "ər"}, {"æ", "n", "d"},
      {"ʌ", "v"},      {"s", "t", "r", "i", "t"}, {"ð", "ə"}, {"dʒ", "æ", "k", "ɪ", "t"}};
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    PhonemeString p;
    const int n = 1 + static_cast<int>(rng() % 6);
    for (int w = 0; w < n; ++w) {
      const auto& word = words[rng() % words.size()];
      p.phones.insert(p.phones.end(), word.begin(), word.end());
      p.word_breaks.push_back(p.phones.size() - 1);
    }
    const auto by_word = syllabify(p, ph, SyllableMode::word);
    const auto connected = syllabify(p, ph, SyllableMode::connected);
    CHECK(by_word.size() == connected.size());
    for (auto wb : p.word_breaks) {
      CHECK(std::find(by_word.begin(), by_word.end(), wb) != by_word.end());
    }
  }
}

TEST_CASE("parse a one-word alignment") {
  const auto a = parse_alignment(kDog);
  CHECK(a.id == "dog1");
  CHECK(a.frames == 30);
  CHECK(a.words.size() == 1);
  CHECK(a.phones.size() == 3);
  CHECK(a.phone_word == std::vector<std::size_t>{0, 0, 0});
  const auto again = parse_alignment(format_alignment(a));
  CHECK(again.frames == a.frames);
  CHECK(again.phones.size() == 3);
  CHECK(again.phones[1].label == "ɔ");
}

TEST_CASE("alignment parse errors") {
  CHECK_THROWS_WITH(parse_alignment("id x frames 1 hop_ms 10\n"), doctest::Contains("no tokens"));
  CHECK_THROWS_WITH(parse_alignment(""), doctest::Contains("no tokens"));
  const char* crossing =
      "id x frames 40 hop_ms 10\n"
      "word a 0 200\nphone ə 0 200\n"
      "word b 200 400\nphone b 150 400\n";
  CHECK_THROWS_WITH(parse_alignment(crossing), doctest::Contains("phone 'b'"));
  const char* overlap =
      "id x frames 40 hop_ms 10\n"
      "word a 0 250\nphone ə 0 250\n"
      "word b 200 400\nphone ɪ 200 400\n";
  CHECK_THROWS(parse_alignment(overlap));
  const char* malformed = "id x frames 30 hop_ms 10\nword dog zero 300\n";
  CHECK_THROWS_WITH(parse_alignment(malformed), doctest::Contains("line 2"));
  const char* wrong_hop = "id x frames 30 hop_ms 20\nword dog 0 300\nphone d 0 300\n";
  CHECK_THROWS(parse_alignment(wrong_hop, 10));
}

TEST_CASE("boundaries_to_frames") {
  auto all = boundaries_to_frames(std::vector<long>{300}, 10, 30, Level::word);
  CHECK(all.popcount() == 1);
  CHECK(all.bits.back() == 1);
  auto two = boundaries_to_frames(std::vector<long>{100, 300}, 10, 30, Level::word);
  CHECK(two.positions() == std::vector<std::size_t>{9, 29});
  CHECK_THROWS_WITH(boundaries_to_frames(std::vector<long>{101, 105, 300}, 10, 30, Level::phone),
                    doctest::Contains("segment shorter than frame hop"));
  // The final frame is closed even when the last segment ends early.
  auto early = boundaries_to_frames(std::vector<long>{100}, 10, 30, Level::word);
  CHECK(early.bits[29] == 1);
}

TEST_CASE("tiers of a parsed alignment nest") {
  const auto tiers = build_tiers(parse_alignment(kDog), Phonology::english());
  CHECK(tiers.at(Level::phone).positions() == std::vector<std::size_t>{9, 19, 29});
  CHECK(tiers.at(Level::word).positions() == std::vector<std::size_t>{29});
  CHECK(is_subset(tiers.at(Level::word), tiers.at(Level::phone)));
  CHECK_NOTHROW(validate_tiers(tiers, 30));
}

TEST_CASE("shuffle keeps popcount and the final frame") {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 1000; ++i) {
    const std::size_t T = 1 + rng() % 40;
    BoundaryVector b;
    b.bits.resize(T);
    for (auto& x : b.bits) x = rng() % 3 == 0;
    b.bits.back() = 1;
    const auto s = shuffle_boundaries(b, rng());
    CHECK(s.popcount() == b.popcount());
    CHECK(s.bits.back() == 1);
    CHECK(s.length() == T);
  }
  CHECK(shuffle_boundaries(bv({1}), 9).bits == Bits{1});
  const auto b = bv({0, 1, 0, 0, 1, 0, 1});
  CHECK(shuffle_boundaries(b, 42).bits == shuffle_boundaries(b, 42).bits);
}

TEST_CASE("shuffle is uniform over admissible positions (chi-square)") {
  const std::size_t T = 20, k = 5, draws = 10000;
  const auto b = from_positions(T, {2, 6, 10, 15, 19}, Level::phone);
  std::vector<double> counts(T, 0.0);
  for (std::size_t i = 0; i < draws; ++i) {
    const auto s = shuffle_boundaries(b, 1000 + i);
    for (std::size_t t = 0; t + 1 < T; ++t) counts[t] += s.bits[t];
  }
  const double expected = static_cast<double>(draws) * (k - 1) / (T - 1);
  double chi2 = 0.0;
  for (std::size_t t = 0; t + 1 < T; ++t) chi2 += (counts[t] - expected) * (counts[t] - expected) / expected;
  // 0.999 quantile of chi-square with 18 degrees of freedom.
  CHECK(chi2 < 42.312);
}

TEST_CASE("project and lift") {
  const auto lower = from_positions(10, {3, 5, 9}, Level::phone);
  const auto higher = from_positions(10, {9}, Level::word);
  CHECK(project_boundaries(lower, higher).bits == Bits{0, 0, 1});
  CHECK(project_boundaries(lower, lower).bits == Bits{1, 1, 1});
  const auto bad = from_positions(10, {4, 9}, Level::word);
  CHECK_THROWS_WITH(project_boundaries(lower, bad), doctest::Contains("4"));
  const auto lifted = lift_boundaries(lower, project_boundaries(lower, higher), Level::word);
  CHECK(lifted.bits == higher.bits);
}

TEST_CASE("projection composes over random nested tiers") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t T = 2 + rng() % 30;
    auto phone = from_positions(T, {T - 1}, Level::phone);
    for (std::size_t t = 0; t + 1 < T; ++t) phone.bits[t] = rng() % 2;
    auto syl = phone;
    syl.level = Level::syllable_word;
    for (std::size_t t = 0; t + 1 < T; ++t) syl.bits[t] = phone.bits[t] && rng() % 2;
    auto word = syl;
    word.level = Level::word;
    for (std::size_t t = 0; t + 1 < T; ++t) word.bits[t] = syl.bits[t] && rng() % 2;
    const auto direct = project_boundaries(phone, word);
    const auto staged =
        project_boundaries(project_boundaries(phone, syl), project_boundaries(phone, word));
    CHECK(direct.length() == phone.popcount());
    CHECK(project_boundaries(syl, word).bits == staged.bits);
  }
}

TEST_CASE("random nested tiers keep nesting and popcounts") {
  const auto ph = Phonology::english();
  const char* text =
      "id s frames 60 hop_ms 10\n"
      "word this 0 150\nphone ð 0 40\nphone ɪ 40 90\nphone s 90 150\n"
      "word is 150 300\nphone ɪ 150 220\nphone z 220 300\n"
      "word an 300 420\nphone ə 300 360\nphone n 360 420\n"
      "word art 420 600\nphone ɑr 420 500\nphone t 500 600\n";
  const auto tiers = build_tiers(parse_alignment(text), ph);
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto r = random_nested_tiers(tiers, seed);
    CHECK_NOTHROW(validate_tiers(r, 60));
    for (const auto& [level, b] : tiers) CHECK(r.at(level).popcount() == b.popcount());
  }
  CHECK(tiers.at(Level::word).popcount() == 4);
}

TEST_CASE("compression rate") {
  BoundaryVector b;
  b.bits.assign(100, 0);
  for (std::size_t i = 9; i < 100; i += 10) b.bits[i] = 1;
  CHECK(compression_rate(b) == doctest::Approx(90.0));
  CHECK(compression_rate(bv({1, 1, 1})) == 0.0);
}

TEST_CASE("level names and nesting relation") {
  CHECK(parse_level("word") == Level::word);
  CHECK(parse_level("syllable_connected") == Level::syllable_connected);
  CHECK_FALSE(parse_level("sentence").has_value());
  CHECK(nests_under(Level::phone, Level::word));
  CHECK(nests_under(Level::syllable_word, Level::word));
  CHECK_FALSE(nests_under(Level::syllable_connected, Level::word));
  CHECK_FALSE(nests_under(Level::word, Level::phone));
}
