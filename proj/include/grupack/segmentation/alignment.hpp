// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "grupack/segmentation/boundary.hpp"

namespace grupack::seg {

enum class TokenKind { word, phone };

struct AlignedToken {
  std::string label;
  long start_ms = 0;
  long end_ms = 0;
  TokenKind kind = TokenKind::word;
};

/// One utterance worth of word and phone intervals.
///
/// Text form, one utterance per file:
///
///     # comment
///     id <string> frames <T> hop_ms <int>
///     word <label> <start_ms> <end_ms>
///     phone <label> <start_ms> <end_ms>     (phones follow their word)
struct Alignment {
  std::string id;
  long hop_ms = 10;
  std::size_t frames = 0;
  std::vector<AlignedToken> words;
  std::vector<AlignedToken> phones;
  std::vector<std::size_t> phone_word;  // containing word of each phone
};

inline constexpr long kDefaultHopMs = 10;

/// Parses and validates an alignment file. Errors carry the line number.
/// `frames` is ceil(max end / hop); a header frame count that disagrees is an
/// error, as is a header hop different from `frame_hop_ms`.
Alignment parse_alignment(std::string_view text, long frame_hop_ms = kDefaultHopMs);

std::string format_alignment(const Alignment& a);

/// Segment-final frame of each interval end; frame t covers [t*hop, (t+1)*hop).
BoundaryVector boundaries_to_frames(const std::vector<long>& end_ms, long hop_ms,
                                    std::size_t frames, Level level);
BoundaryVector boundaries_to_frames(const std::vector<AlignedToken>& tokens,
                                    long hop_ms, std::size_t frames, Level level);

}  // namespace grupack::seg
