// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <string>

#include "grupack/numerics/tensor.hpp"
#include "grupack/segmentation/alignment.hpp"
#include "grupack/segmentation/syllabify.hpp"

namespace grupack::seg {

using TierMap = std::map<Level, BoundaryVector>;

/// Acoustic frames (T x d) with their boundary tiers.
///
/// `tiers` holds the boundaries derived from the alignment. `random_tiers` is
/// filled only for runs that train on shuffled boundaries; it never replaces
/// the true tiers.
struct Utterance {
  std::string id;
  num::Tensor frames;
  TierMap tiers;
  TierMap random_tiers;

  std::size_t length() const { return frames.dim(0); }
};

/// Phone, syllable (both modes) and word tiers of an alignment.
TierMap build_tiers(const Alignment& a, const Phonology& ph);

/// Phoneme string of an alignment, word breaks from the phone-to-word map.
PhonemeString phoneme_string(const Alignment& a);

/// Checks tier lengths, BoundaryVector invariants and nesting:
/// word within syllable_word within phone, syllable_connected within phone.
void validate_tiers(const TierMap& tiers, std::size_t frames);

/// Shuffled tiers that keep the nesting: the phone tier is shuffled over
/// frames, every other tier is shuffled over the reduced sequence of its
/// parent tier and lifted back. Each tier's marginal distribution is that of
/// shuffle_boundaries on the tier itself.
TierMap random_nested_tiers(const TierMap& tiers, std::uint64_t seed);

}  // namespace grupack::seg
