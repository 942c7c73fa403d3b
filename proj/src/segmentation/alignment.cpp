// SPDX-License-Identifier: Apache-2.0
#include "grupack/segmentation/alignment.hpp"

#include <charconv>
#include <sstream>

namespace grupack::seg {

namespace {

[[noreturn]] void fail(std::size_t line, const std::string& what) {
  throw SegmentationError("line " + std::to_string(line) + ": " + what);
}

std::vector<std::string> split_ws(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t' && s[j] != '\r') ++j;
    if (j > i) out.emplace_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

bool parse_long(const std::string& s, long& out) {
  const auto* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && p == end;
}

long frames_for(long end_ms, long hop) { return (end_ms + hop - 1) / hop; }

}  // namespace

Alignment parse_alignment(std::string_view text, long frame_hop_ms) {
  if (frame_hop_ms <= 0) throw SegmentationError("frame hop must be positive");
  Alignment a;
  a.hop_ms = frame_hop_ms;
  bool have_header = false;
  long header_frames = -1;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos)
      line = line.substr(0, hash);
    const auto f = split_ws(line);
    if (f.empty()) continue;

    if (!have_header) {
      long hop = 0;
      if (f.size() != 6 || f[0] != "id" || f[2] != "frames" || f[4] != "hop_ms" ||
          !parse_long(f[3], header_frames) || !parse_long(f[5], hop)) {
        if (f[0] == "word" || f[0] == "phone") fail(line_no, "missing header line");
        fail(line_no, "malformed header, expected 'id <s> frames <T> hop_ms <int>'");
      }
      if (hop != frame_hop_ms) {
        fail(line_no, "header hop_ms " + std::to_string(hop) +
                          " differs from expected " + std::to_string(frame_hop_ms));
      }
      a.id = f[1];
      have_header = true;
      continue;
    }

    AlignedToken tok;
    if (f.size() != 4 || (f[0] != "word" && f[0] != "phone") ||
        !parse_long(f[2], tok.start_ms) || !parse_long(f[3], tok.end_ms)) {
      fail(line_no, "malformed token line, expected '<word|phone> <label> <start_ms> <end_ms>'");
    }
    tok.kind = f[0] == "word" ? TokenKind::word : TokenKind::phone;
    tok.label = f[1];
    if (tok.start_ms < 0 || tok.end_ms <= tok.start_ms) {
      fail(line_no, "invalid interval for '" + tok.label + "'");
    }

    if (tok.kind == TokenKind::word) {
      if (!a.words.empty()) {
        const auto& prev = a.words.back();
        if (tok.start_ms < prev.start_ms) fail(line_no, "words not sorted at '" + tok.label + "'");
        if (tok.start_ms < prev.end_ms) fail(line_no, "word '" + tok.label + "' overlaps '" + prev.label + "'");
      }
      a.words.push_back(std::move(tok));
    } else {
      if (a.words.empty()) fail(line_no, "phone '" + tok.label + "' precedes any word");
      if (!a.phones.empty()) {
        const auto& prev = a.phones.back();
        if (tok.start_ms < prev.start_ms) fail(line_no, "phones not sorted at '" + tok.label + "'");
        if (tok.start_ms < prev.end_ms) fail(line_no, "phone '" + tok.label + "' overlaps '" + prev.label + "'");
      }
      const auto& w = a.words.back();
      if (tok.start_ms < w.start_ms || tok.end_ms > w.end_ms) {
        fail(line_no, "phone '" + tok.label + "' [" + std::to_string(tok.start_ms) +
                          "," + std::to_string(tok.end_ms) + ") crosses the boundary of word '" +
                          w.label + "'");
      }
      a.phones.push_back(std::move(tok));
      a.phone_word.push_back(a.words.size() - 1);
    }
  }
  if (a.words.empty() && a.phones.empty()) throw SegmentationError("no tokens");

  long max_end = 0;
  for (const auto& w : a.words) max_end = std::max(max_end, w.end_ms);
  for (const auto& p : a.phones) max_end = std::max(max_end, p.end_ms);
  const long frames = frames_for(max_end, frame_hop_ms);
  if (header_frames >= 0 && header_frames != frames) {
    throw SegmentationError("header declares " + std::to_string(header_frames) +
                            " frames but tokens span " + std::to_string(frames));
  }
  a.frames = static_cast<std::size_t>(frames);
  return a;
}

std::string format_alignment(const Alignment& a) {
  std::ostringstream os;
  os << "id " << a.id << " frames " << a.frames << " hop_ms " << a.hop_ms << "\n";
  std::size_t p = 0;
  for (std::size_t w = 0; w < a.words.size(); ++w) {
    const auto& word = a.words[w];
    os << "word " << word.label << " " << word.start_ms << " " << word.end_ms << "\n";
    for (; p < a.phones.size() && a.phone_word[p] == w; ++p) {
      const auto& ph = a.phones[p];
      os << "phone " << ph.label << " " << ph.start_ms << " " << ph.end_ms << "\n";
    }
  }
  return os.str();
}

BoundaryVector boundaries_to_frames(const std::vector<long>& end_ms, long hop_ms,
                                    std::size_t frames, Level level) {
  if (frames == 0) throw SegmentationError("boundaries_to_frames: T must be positive");
  BoundaryVector b{Bits(frames, 0), level};
  long last = -1;
  for (long end : end_ms) {
    if (end <= 0 || end > static_cast<long>(frames) * hop_ms) {
      throw SegmentationError("segment end " + std::to_string(end) +
                              "ms outside " + std::to_string(frames) + " frames");
    }
    const long t = frames_for(end, hop_ms) - 1;
    if (t <= last) throw SegmentationError("segment shorter than frame hop");
    b.bits[static_cast<std::size_t>(t)] = 1;
    last = t;
  }
  b.bits.back() = 1;
  return b;
}

BoundaryVector boundaries_to_frames(const std::vector<AlignedToken>& tokens,
                                    long hop_ms, std::size_t frames, Level level) {
  std::vector<long> ends;
  ends.reserve(tokens.size());
  for (const auto& t : tokens) ends.push_back(t.end_ms);
  return boundaries_to_frames(ends, hop_ms, frames, level);
}

}  // namespace grupack::seg
