// SPDX-License-Identifier: Apache-2.0
#include "grupack/encoder/model.hpp"

#include <fmt/format.h>

#include <fstream>
#include <random>
#include <sstream>

namespace grupack::enc {

using num::Tensor;
using num::Var;

Model Model::init(const EncoderConfig& config, std::uint64_t seed) {
  validate(config);
  std::mt19937_64 rng(seed);
  Model m;
  m.speech.config = config;
  m.speech.conv = ConvParams::init(config.input_dim, config.conv, rng);
  std::size_t d_in = config.conv.filters;
  for (const auto& spec : config.layers) {
    m.speech.layers.push_back(GruParams::init(d_in, spec.hidden_dim, rng));
    d_in = spec.hidden_dim;
  }
  m.speech.attention = AttentionParams::init(d_in, config.attention_dim, rng);
  m.image = ImageParams::init(config.image_in_dim, config.embed_dim, rng);
  return m;
}

std::vector<std::pair<std::string, Var>> Model::named_parameters() const {
  std::vector<std::pair<std::string, Var>> out;
  out.emplace_back("conv.W", speech.conv.W);
  out.emplace_back("conv.b", speech.conv.b);
  for (std::size_t l = 0; l < speech.layers.size(); ++l) {
    const auto list = speech.layers[l].list();
    for (std::size_t k = 0; k < list.size(); ++k)
      out.emplace_back(fmt::format("layer{}.{}", l + 1, GruParams::names()[k]), list[k]);
  }
  out.emplace_back("attention.W", speech.attention.W);
  out.emplace_back("attention.b", speech.attention.b);
  out.emplace_back("attention.u", speech.attention.u);
  out.emplace_back("image.W", image.W);
  out.emplace_back("image.b", image.b);
  return out;
}

std::vector<Var> Model::parameters() const {
  std::vector<Var> out;
  for (auto& [name, v] : named_parameters()) out.push_back(v);
  return out;
}

Model Model::clone() const {
  Model m = Model::init(speech.config, 0);
  m.assign(*this);
  return m;
}

void Model::assign(const Model& other) {
  auto mine = parameters();
  auto theirs = other.parameters();
  if (mine.size() != theirs.size()) throw ConfigError("model architectures differ");
  for (std::size_t i = 0; i < mine.size(); ++i) {
    if (mine[i].shape() != theirs[i].shape()) throw ConfigError("model architectures differ");
    auto dst = mine[i].node().value.values();
    auto src = theirs[i].value().values();
    std::copy(src.begin(), src.end(), dst.begin());
  }
}

Var encode_utterance(const SpeechEncoder& encoder, const SequenceBatch& batch,
                     EncodeTrace* trace, num::Exec exec) {
  const auto& config = encoder.config;
  SequenceBatch h = conv1d(batch, encoder.conv, exec);
  for (std::size_t l = 0; l < config.layers.size(); ++l) {
    const LayerSpec& spec = config.layers[l];
    SequenceBatch next = spec.kind == LayerKind::vanilla
                             ? vanilla_forward(h, encoder.layers[l], exec)
                             : packager_forward(h, *spec.level, *spec.mode, encoder.layers[l], exec);
    if (l > 0 && next.lengths == h.lengths && next.data.shape() == h.data.shape()) {
      next.data = num::add(next.data, h.data);
    }
    h = std::move(next);
    if (trace) trace->lengths_after_layer.push_back(h.lengths);
  }
  return attention_pool(h, encoder.attention);
}

std::string describe(const EncoderConfig& c) {
  std::string s = fmt::format("conv {}x{}/{}", c.conv.filters, c.conv.width, c.conv.stride);
  for (const auto& l : c.layers) s += fmt::format(" | {}({})", l.describe(), l.hidden_dim);
  return s + fmt::format(" | attention {} | embed {}", c.attention_dim, c.embed_dim);
}

void save_model(const Model& model, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write model file " + path);
  const auto& c = model.speech.config;
  os << "grupack-model 1\n";
  os << "input_dim " << c.input_dim << "\n";
  os << "conv " << c.conv.filters << " " << c.conv.width << " " << c.conv.stride << "\n";
  for (const auto& l : c.layers) os << "layer " << l.describe() << " " << l.hidden_dim << "\n";
  os << "attention_dim " << c.attention_dim << "\n";
  os << "embed_dim " << c.embed_dim << "\n";
  os << "image_in_dim " << c.image_in_dim << "\n";
  for (const auto& [name, v] : model.named_parameters()) {
    os << "param " << name;
    for (auto d : v.shape()) os << " " << d;
    os << "\n";
    std::string line;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) line += ' ';
      line += fmt::format("{:.17g}", v.value()[i]);
    }
    os << line << "\n";
  }
  if (!os) throw std::runtime_error("failed writing model file " + path);
}

Model load_model(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open model file " + path);
  std::string line;
  if (!std::getline(is, line) || line != "grupack-model 1") {
    throw std::runtime_error(path + ": not a grupack model file");
  }
  EncoderConfig c;
  std::vector<std::pair<std::string, Tensor>> params;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "input_dim") ls >> c.input_dim;
    else if (key == "conv") ls >> c.conv.filters >> c.conv.width >> c.conv.stride;
    else if (key == "layer") {
      std::string spec;
      std::size_t hidden = 0;
      ls >> spec >> hidden;
      c.layers.push_back(LayerSpec::parse(spec, hidden));
    } else if (key == "attention_dim") ls >> c.attention_dim;
    else if (key == "embed_dim") ls >> c.embed_dim;
    else if (key == "image_in_dim") ls >> c.image_in_dim;
    else if (key == "param") {
      std::string name;
      ls >> name;
      num::Shape shape;
      std::size_t d;
      while (ls >> d) shape.push_back(d);
      Tensor t(shape);
      std::string values;
      if (!std::getline(is, values)) throw std::runtime_error(path + ": truncated " + name);
      std::istringstream vs(values);
      for (auto& v : t.values()) {
        if (!(vs >> v)) throw std::runtime_error(path + ": short value row for " + name);
      }
      params.emplace_back(name, std::move(t));
    } else {
      throw std::runtime_error(path + ": unknown key '" + key + "'");
    }
  }
  Model m = Model::init(c, 0);
  auto named = m.named_parameters();
  if (named.size() != params.size()) throw std::runtime_error(path + ": parameter count mismatch");
  for (std::size_t i = 0; i < named.size(); ++i) {
    if (named[i].first != params[i].first || named[i].second.shape() != params[i].second.shape()) {
      throw std::runtime_error(path + ": unexpected parameter " + params[i].first);
    }
    auto dst = named[i].second.node().value.values();
    auto src = params[i].second.values();
    std::copy(src.begin(), src.end(), dst.begin());
  }
  return m;
}

}  // namespace grupack::enc
