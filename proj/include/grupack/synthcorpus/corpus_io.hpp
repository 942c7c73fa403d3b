// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include "grupack/synthcorpus/synth.hpp"

namespace grupack::synth {

/// Directory layout:
///
///     alignments/<utterance id>.ali   alignment text format
///     features.txt                    per utterance: "<id> <T> <d>", then T rows of d values
///     images.txt                      "image <id> <values>" (embedding export format)
///     pairs.txt                       "<utterance id> <image id> <train|val|test>"
///
/// Values use 17 significant digits, so a saved corpus reloads bit-exactly.
void save_corpus(const Corpus& corpus, const std::string& dir);

/// Reads a corpus directory and rebuilds the boundary tiers from the
/// alignments. Throws std::runtime_error naming the file on any problem.
Corpus load_corpus(const std::string& dir);

}  // namespace grupack::synth
