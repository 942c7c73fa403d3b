// SPDX-License-Identifier: Apache-2.0
#include "grupack/synthcorpus/synth.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <stdexcept>

#include "grupack/segmentation/utterance.hpp"

namespace grupack::synth {

std::vector<VocabWord> default_vocabulary() {
  auto w = [](std::string label, std::vector<std::string> phones, bool object) {
    return VocabWord{std::move(label), std::move(phones), object};
  };
  return {
      w("dog", {"d", "ɔ", "g"}, true),
      w("cat", {"k", "æ", "t"}, true),
      w("ball", {"b", "ɔ", "l"}, true),
      w("horse", {"h", "ɔr", "s"}, true),
      w("man", {"m", "æ", "n"}, true),
      w("girl", {"g", "ər", "l"}, true),
      w("boat", {"b", "oʊ", "t"}, true),
      w("tree", {"t", "r", "i"}, true),
      w("bike", {"b", "aɪ", "k"}, true),
      w("car", {"k", "ɑr"}, true),
      w("bench", {"b", "ɛ", "n", "tʃ"}, true),
      w("water", {"w", "ɔ", "t", "ər"}, true),
      w("street", {"s", "t", "r", "i", "t"}, true),
      w("rock", {"r", "ɑ", "k"}, true),
      w("beach", {"b", "i", "tʃ"}, true),
      w("snow", {"s", "n", "oʊ"}, true),
      w("child", {"tʃ", "aɪ", "l", "d"}, true),
      w("shirt", {"ʃ", "ər", "t"}, true),
      w("jacket", {"dʒ", "æ", "k", "ɪ", "t"}, true),
      w("mountain", {"m", "aʊ", "n", "t", "ə", "n"}, true),
      w("is", {"ɪ", "z"}, false),
      w("an", {"ə", "n"}, false),
      w("a", {"ə"}, false),
      w("the", {"ð", "ə"}, false),
      w("on", {"ɑ", "n"}, false),
      w("in", {"ɪ", "n"}, false),
      w("at", {"æ", "t"}, false),
      w("with", {"w", "ɪ", "ð"}, false),
      w("and", {"æ", "n", "d"}, false),
      w("of", {"ʌ", "v"}, false),
  };
}

void validate(const SynthSpec& spec) {
  auto check_range = [](const Range& r, const char* name) {
    if (r.lo > r.hi) throw std::invalid_argument(fmt::format("{}: lo > hi", name));
  };
  check_range(spec.frames_per_phone, "frames_per_phone");
  check_range(spec.caption_len, "caption_len");
  check_range(spec.objects_per_image, "objects_per_image");
  if (spec.frames_per_phone.lo < 2) {
    throw std::invalid_argument("frames_per_phone.lo must be at least 2");
  }
  if (!(spec.noise_sigma >= 0.0) || !(spec.image_noise >= 0.0)) {
    throw std::invalid_argument("noise levels must be non-negative");
  }
  if (spec.n_pairs == 0 || spec.n_images == 0 || spec.frame_dim == 0 || spec.image_dim == 0) {
    throw std::invalid_argument("n_pairs, n_images, frame_dim and image_dim must be positive");
  }
  if (spec.objects_per_image.lo == 0) {
    throw std::invalid_argument("objects_per_image.lo must be at least 1");
  }
  if (spec.hop_ms <= 0) throw std::invalid_argument("hop_ms must be positive");
  const seg::Phonology ph = seg::Phonology::english();
  std::size_t objects = 0, fillers = 0;
  for (const auto& w : spec.vocab) {
    if (w.phones.empty()) throw std::invalid_argument("vocabulary word '" + w.label + "' is empty");
    for (const auto& p : w.phones) {
      if (!ph.is_known(p)) {
        throw std::invalid_argument("vocabulary word '" + w.label + "': unknown phone '" + p + "'");
      }
    }
    (w.object ? objects : fillers)++;
  }
  const std::size_t max_fillers =
      spec.caption_len.hi > spec.objects_per_image.lo ? spec.caption_len.hi - spec.objects_per_image.lo
                                                      : 0;
  if (objects < spec.objects_per_image.hi || fillers < max_fillers) {
    throw std::invalid_argument("vocabulary too small for caption_len");
  }
}

namespace {

template <class Rng>
std::size_t uniform(Rng& rng, Range r) {
  return std::uniform_int_distribution<std::size_t>(r.lo, r.hi)(rng);
}

template <class T, class Rng>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::swap(v[i - 1], v[std::uniform_int_distribution<std::size_t>(0, i - 1)(rng)]);
  }
}

// k distinct values from `pool`, in draw order.
template <class Rng>
std::vector<std::size_t> sample(std::vector<std::size_t> pool, std::size_t k, Rng& rng) {
  for (std::size_t i = 0; i < k; ++i) {
    std::swap(pool[i], pool[std::uniform_int_distribution<std::size_t>(i, pool.size() - 1)(rng)]);
  }
  pool.resize(k);
  return pool;
}

}  // namespace

void split_by_image(train::PairedDataset& ds, std::uint64_t seed) {
  std::vector<std::size_t> order(ds.image_ids.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  shuffle(order, rng);
  const std::size_t n = order.size();
  const std::size_t n_train = n * 8 / 10;
  const std::size_t n_val = (n - n_train) / 2;
  std::vector<int> which(n);
  for (std::size_t i = 0; i < n; ++i) which[order[i]] = i < n_train ? 0 : i < n_train + n_val ? 1 : 2;
  ds.train.clear();
  ds.val.clear();
  ds.test.clear();
  for (std::size_t p = 0; p < ds.pairs.size(); ++p) {
    switch (which[ds.pairs[p].image]) {
      case 0: ds.train.push_back(p); break;
      case 1: ds.val.push_back(p); break;
      default: ds.test.push_back(p); break;
    }
  }
}

Corpus generate_corpus(const SynthSpec& spec) {
  validate(spec);
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const seg::Phonology ph = seg::Phonology::english();

  std::vector<std::size_t> objects, fillers;
  std::set<std::string> phone_set;
  for (std::size_t i = 0; i < spec.vocab.size(); ++i) {
    (spec.vocab[i].object ? objects : fillers).push_back(i);
    phone_set.insert(spec.vocab[i].phones.begin(), spec.vocab[i].phones.end());
  }

  std::map<std::string, std::vector<double>> phone_proto;
  for (const auto& p : phone_set) {
    auto& v = phone_proto[p];
    for (std::size_t j = 0; j < spec.frame_dim; ++j) v.push_back(normal(rng));
  }
  // One-hot object prototypes when they fit, random directions otherwise.
  std::map<std::size_t, std::vector<double>> object_proto;
  for (std::size_t k = 0; k < objects.size(); ++k) {
    std::vector<double> v(spec.image_dim, 0.0);
    if (objects.size() <= spec.image_dim) {
      v[k] = 1.0;
    } else {
      for (auto& x : v) x = normal(rng);
    }
    object_proto[objects[k]] = std::move(v);
  }

  Corpus corpus;
  auto& ds = corpus.dataset;
  ds.images = num::Tensor({spec.n_images, spec.image_dim});
  std::vector<std::vector<std::size_t>> image_objects(spec.n_images);
  for (std::size_t i = 0; i < spec.n_images; ++i) {
    ds.image_ids.push_back(fmt::format("img{:04d}", i));
    image_objects[i] = sample(objects, uniform(rng, spec.objects_per_image), rng);
    std::vector<double> v(spec.image_dim, 0.0);
    for (auto o : image_objects[i])
      for (std::size_t j = 0; j < spec.image_dim; ++j) v[j] += object_proto[o][j];
    double ss = 0.0;
    for (auto& x : v) {
      x += spec.image_noise * normal(rng);
      ss += x * x;
    }
    const double norm = std::sqrt(ss);
    for (std::size_t j = 0; j < spec.image_dim; ++j) ds.images.at(i, j) = v[j] / norm;
  }

  std::normal_distribution<double> frame_noise(0.0, spec.noise_sigma);
  for (std::size_t c = 0; c < spec.n_pairs; ++c) {
    const std::size_t image = c % spec.n_images;
    const auto& objs = image_objects[image];
    const std::size_t len = std::max(uniform(rng, spec.caption_len), objs.size());
    std::vector<std::size_t> words = objs;
    const auto extra = sample(fillers, len - objs.size(), rng);
    words.insert(words.end(), extra.begin(), extra.end());
    shuffle(words, rng);

    seg::Alignment a;
    a.id = fmt::format("utt{:04d}", c);
    a.hop_ms = spec.hop_ms;
    std::vector<std::vector<double>> rows;
    for (auto w : words) {
      const auto& word = spec.vocab[w];
      seg::AlignedToken wt{word.label, static_cast<long>(rows.size()) * spec.hop_ms, 0,
                           seg::TokenKind::word};
      for (const auto& p : word.phones) {
        const std::size_t k = uniform(rng, spec.frames_per_phone);
        const long start = static_cast<long>(rows.size()) * spec.hop_ms;
        for (std::size_t f = 0; f < k; ++f) {
          std::vector<double> row = phone_proto[p];
          if (spec.noise_sigma > 0.0)
            for (auto& x : row) x += frame_noise(rng);
          rows.push_back(std::move(row));
        }
        a.phones.push_back({p, start, static_cast<long>(rows.size()) * spec.hop_ms,
                            seg::TokenKind::phone});
        a.phone_word.push_back(a.words.size());
      }
      wt.end_ms = static_cast<long>(rows.size()) * spec.hop_ms;
      a.words.push_back(wt);
    }
    a.frames = rows.size();

    seg::Utterance u;
    u.id = a.id;
    u.frames = num::Tensor({rows.size(), spec.frame_dim});
    for (std::size_t t = 0; t < rows.size(); ++t)
      std::copy(rows[t].begin(), rows[t].end(), u.frames.data() + t * spec.frame_dim);
    u.tiers = seg::build_tiers(a, ph);
    ds.utterances.push_back(std::move(u));
    ds.pairs.push_back({c, image});
    corpus.alignments.push_back(std::move(a));
  }
  split_by_image(ds, train::derive_seed(spec.seed, 0x5ULL));
  train::validate(ds);
  return corpus;
}

}  // namespace grupack::synth
