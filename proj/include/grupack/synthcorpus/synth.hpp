// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "grupack/segmentation/alignment.hpp"
#include "grupack/training/dataset.hpp"

namespace grupack::synth {

struct VocabWord {
  std::string label;
  std::vector<std::string> phones;
  bool object = false;  // names an image object; fillers carry no visual content
};

/// 20 object words and 10 function words. Several objects end in a consonant
/// and several fillers start with a vowel, so connected-speech syllables
/// cross word boundaries.
std::vector<VocabWord> default_vocabulary();

struct Range {
  std::size_t lo = 0;
  std::size_t hi = 0;
};

struct SynthSpec {
  std::vector<VocabWord> vocab = default_vocabulary();
  std::size_t n_pairs = 1000;
  std::size_t n_images = 200;
  std::size_t frame_dim = 13;
  Range frames_per_phone{2, 4};
  double noise_sigma = 0.5;
  Range caption_len{3, 6};
  Range objects_per_image{1, 3};
  std::size_t image_dim = 32;
  double image_noise = 0.1;
  long hop_ms = seg::kDefaultHopMs;
  std::uint64_t seed = 1;
};

/// Throws std::invalid_argument for an empty word, frames_per_phone.lo < 2,
/// negative noise, inverted ranges, or "vocabulary too small for
/// caption_len" when there are not enough distinct objects or fillers.
void validate(const SynthSpec& spec);

/// Dataset plus the alignments its tiers were built from.
struct Corpus {
  train::PairedDataset dataset;
  std::vector<seg::Alignment> alignments;
};

/// Deterministic per seed. Caption j describes image j mod n_images; images
/// are split 80/10/10 and every caption follows its image.
Corpus generate_corpus(const SynthSpec& spec);

inline train::PairedDataset generate(const SynthSpec& spec) {
  return generate_corpus(spec).dataset;
}

/// Pair indices split by image, 80/10/10 of the image list after a seeded
/// shuffle.
void split_by_image(train::PairedDataset& ds, std::uint64_t seed);

}  // namespace grupack::synth
