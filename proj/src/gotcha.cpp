// Copyright 2026 The mia-lab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "mialab/gotcha.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "json.hpp"

namespace mialab {

namespace {

using nlohmann::json;

double sigmoid(double z) {
  if (z >= 0) {
    double e = std::exp(-z);
    return 1.0 / (1.0 + e);
  }
  double e = std::exp(z);
  return e / (1.0 + e);
}

constexpr double kProbClamp = 1e-12;

const TokenSeq& channel_tokens(const AttackInstance& inst, int channel) {
  switch (channel) {
    case 0: return inst.input;
    case 1: return inst.truth;
    default: return inst.output;
  }
}

bool channel_enabled(const ChannelMask& mask, int channel) {
  switch (channel) {
    case 0: return mask.input;
    case 1: return mask.truth;
    default: return mask.output;
  }
}

void validate_config(const GotchaConfig& cfg) {
  if (cfg.embed_dim < 1 || cfg.hidden_dim < 1) {
    throw Error("gotcha: embed_dim and hidden_dim must be >= 1");
  }
  if (cfg.batch_size < 1) throw Error("gotcha: batch_size must be >= 1");
  if (cfg.learning_rate < 0) {
    throw Error("gotcha: learning_rate must be >= 0");
  }
}

}  // namespace

std::size_t GotchaClassifier::row_of(const std::string& token) const {
  auto it = rows_.find(token);
  return it == rows_.end() ? 0 : it->second;
}

GotchaClassifier GotchaClassifier::init(
    const std::vector<AttackInstance>& vocab_source, const GotchaConfig& cfg,
    std::uint64_t seed) {
  validate_config(cfg);
  GotchaClassifier clf;
  clf.cfg_ = cfg;
  for (const auto& inst : vocab_source) {
    for (int c = 0; c < 3; ++c) {
      for (const auto& tok : channel_tokens(inst, c)) {
        if (clf.rows_.emplace(tok, clf.vocab_.size() + 1).second) {
          clf.vocab_.push_back(tok);
        }
      }
    }
  }
  const std::size_t rows = clf.vocab_.size() + 1;
  const std::size_t d = cfg.embed_dim;
  const std::size_t h = cfg.hidden_dim;
  Rng rng(seed);
  auto uniform = [&rng]() { return rng.unit() * 0.2 - 0.1; };
  for (int c = 0; c < 3; ++c) {
    clf.emb_[c].assign(rows * d, 0.0);
    // Row 0 is the unknown-token row; it stays zero so out-of-vocabulary
    // tokens contribute nothing to the pooled mean.
    for (std::size_t i = d; i < rows * d; ++i) clf.emb_[c][i] = uniform();
  }
  clf.w1_.resize(h * 3 * d);
  for (auto& w : clf.w1_) w = uniform();
  clf.b1_.resize(h);
  for (auto& b : clf.b1_) b = uniform();
  clf.w2_.resize(h);
  for (auto& w : clf.w2_) w = uniform();
  clf.b2_ = uniform();
  return clf;
}

std::vector<double> GotchaClassifier::embed_channel(
    int channel, const TokenSeq& tokens) const {
  std::vector<double> pooled(cfg_.embed_dim, 0.0);
  if (!channel_enabled(cfg_.mask, channel) || tokens.empty()) return pooled;
  for (const auto& tok : tokens) {
    const double* row = emb_[channel].data() + row_of(tok) * cfg_.embed_dim;
    for (std::size_t i = 0; i < cfg_.embed_dim; ++i) pooled[i] += row[i];
  }
  const double inv = 1.0 / static_cast<double>(tokens.size());
  for (double& v : pooled) v *= inv;
  return pooled;
}

GotchaClassifier::Forward GotchaClassifier::forward(
    const AttackInstance& inst) const {
  Forward f;
  const std::size_t d = cfg_.embed_dim;
  const std::size_t h = cfg_.hidden_dim;
  for (int c = 0; c < 3; ++c) {
    f.pooled[c] = embed_channel(c, channel_tokens(inst, c));
  }
  f.hidden.resize(h);
  for (std::size_t j = 0; j < h; ++j) {
    double acc = b1_[j];
    const double* wrow = w1_.data() + j * 3 * d;
    for (int c = 0; c < 3; ++c) {
      for (std::size_t i = 0; i < d; ++i) {
        acc += wrow[c * d + i] * f.pooled[c][i];
      }
    }
    f.hidden[j] = std::tanh(acc);
  }
  f.z = b2_;
  for (std::size_t j = 0; j < h; ++j) f.z += w2_[j] * f.hidden[j];
  f.p = sigmoid(f.z);
  return f;
}

double GotchaClassifier::score(const AttackInstance& inst) const {
  return forward(inst).p;
}

std::pair<double, int> GotchaClassifier::infer(const AttackInstance& inst,
                                               double threshold) const {
  double s = score(inst);
  return {s, s >= threshold ? 1 : 0};
}

double GotchaClassifier::loss(const std::vector<AttackInstance>& batch) const {
  if (batch.empty()) throw Error("gotcha: empty batch");
  double total = 0.0;
  for (const auto& inst : batch) {
    if (inst.label != 0 && inst.label != 1) {
      throw Error("gotcha: instance without a 0/1 label");
    }
    double p = std::clamp(forward(inst).p, kProbClamp, 1.0 - kProbClamp);
    total += inst.label == 1 ? -std::log(p) : -std::log(1.0 - p);
  }
  return total / static_cast<double>(batch.size());
}

std::vector<double> GotchaClassifier::loss_gradient(
    const std::vector<AttackInstance>& batch) const {
  if (batch.empty()) throw Error("gotcha: empty batch");
  const std::size_t d = cfg_.embed_dim;
  const std::size_t h = cfg_.hidden_dim;
  const std::size_t rows = vocab_.size() + 1;
  std::vector<double> grad(parameters().size(), 0.0);
  double* g_emb[3];
  g_emb[0] = grad.data();
  g_emb[1] = g_emb[0] + rows * d;
  g_emb[2] = g_emb[1] + rows * d;
  double* g_w1 = g_emb[2] + rows * d;
  double* g_b1 = g_w1 + h * 3 * d;
  double* g_w2 = g_b1 + h;
  double* g_b2 = g_w2 + h;

  const double inv_batch = 1.0 / static_cast<double>(batch.size());
  for (const auto& inst : batch) {
    if (inst.label != 0 && inst.label != 1) {
      throw Error("gotcha: instance without a 0/1 label");
    }
    Forward f = forward(inst);
    // d(BCE)/dz for sigmoid output; the clamp only guards the loss value.
    double dz = (f.p - static_cast<double>(inst.label)) * inv_batch;
    *g_b2 += dz;
    std::vector<double> dh(h);
    for (std::size_t j = 0; j < h; ++j) {
      g_w2[j] += dz * f.hidden[j];
      dh[j] = dz * w2_[j] * (1.0 - f.hidden[j] * f.hidden[j]);
    }
    std::vector<double> dx(3 * d, 0.0);
    for (std::size_t j = 0; j < h; ++j) {
      g_b1[j] += dh[j];
      double* g_wrow = g_w1 + j * 3 * d;
      const double* wrow = w1_.data() + j * 3 * d;
      for (int c = 0; c < 3; ++c) {
        for (std::size_t i = 0; i < d; ++i) {
          g_wrow[c * d + i] += dh[j] * f.pooled[c][i];
          dx[c * d + i] += dh[j] * wrow[c * d + i];
        }
      }
    }
    for (int c = 0; c < 3; ++c) {
      const TokenSeq& toks = channel_tokens(inst, c);
      if (!channel_enabled(cfg_.mask, c) || toks.empty()) continue;
      const double inv_len = 1.0 / static_cast<double>(toks.size());
      for (const auto& tok : toks) {
        double* row = g_emb[c] + row_of(tok) * d;
        for (std::size_t i = 0; i < d; ++i) {
          row[i] += dx[c * d + i] * inv_len;
        }
      }
    }
  }
  return grad;
}

GotchaClassifier GotchaClassifier::train(
    const std::vector<AttackInstance>& data, const GotchaConfig& cfg,
    std::uint64_t seed) {
  if (data.empty()) throw Error("gotcha: empty training set");
  bool has_pos = false, has_neg = false;
  for (const auto& inst : data) {
    if (inst.label == 1) has_pos = true;
    else if (inst.label == 0) has_neg = true;
    else throw Error("gotcha: instance without a 0/1 label");
  }
  if (!has_pos || !has_neg) {
    throw Error("gotcha: training set needs both classes");
  }

  GotchaClassifier clf = init(data, cfg, seed);
  Rng rng(seed ^ 0x9e3779b97f4a7c15ull);  // epoch shuffling stream
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0u);
  std::vector<double> params = clf.parameters();
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size();
         start += cfg.batch_size) {
      std::size_t end = std::min(order.size(), start + cfg.batch_size);
      std::vector<AttackInstance> batch;
      batch.reserve(end - start);
      for (std::size_t i = start; i < end; ++i) batch.push_back(data[order[i]]);
      std::vector<double> grad = clf.loss_gradient(batch);
      for (std::size_t i = 0; i < params.size(); ++i) {
        params[i] -= cfg.learning_rate * grad[i];
      }
      clf.set_parameters(params);
    }
  }
  return clf;
}

std::vector<double> GotchaClassifier::parameters() const {
  std::vector<double> out;
  const std::size_t rows = vocab_.size() + 1;
  out.reserve(3 * rows * cfg_.embed_dim + w1_.size() + b1_.size() +
              w2_.size() + 1);
  for (int c = 0; c < 3; ++c) {
    out.insert(out.end(), emb_[c].begin(), emb_[c].end());
  }
  out.insert(out.end(), w1_.begin(), w1_.end());
  out.insert(out.end(), b1_.begin(), b1_.end());
  out.insert(out.end(), w2_.begin(), w2_.end());
  out.push_back(b2_);
  return out;
}

void GotchaClassifier::set_parameters(const std::vector<double>& params) {
  const std::size_t rows = vocab_.size() + 1;
  const std::size_t d = cfg_.embed_dim;
  const std::size_t h = cfg_.hidden_dim;
  std::size_t expect = 3 * rows * d + h * 3 * d + h + h + 1;
  if (params.size() != expect) {
    throw Error("gotcha: parameter vector size mismatch");
  }
  std::size_t off = 0;
  for (int c = 0; c < 3; ++c) {
    std::copy(params.begin() + off, params.begin() + off + rows * d,
              emb_[c].begin());
    off += rows * d;
  }
  std::copy(params.begin() + off, params.begin() + off + h * 3 * d,
            w1_.begin());
  off += h * 3 * d;
  std::copy(params.begin() + off, params.begin() + off + h, b1_.begin());
  off += h;
  std::copy(params.begin() + off, params.begin() + off + h, w2_.begin());
  off += h;
  b2_ = params[off];
}

std::string GotchaClassifier::to_json() const {
  json j;
  j["config"] = {{"embed_dim", cfg_.embed_dim},
                 {"hidden_dim", cfg_.hidden_dim},
                 {"learning_rate", cfg_.learning_rate},
                 {"epochs", cfg_.epochs},
                 {"batch_size", cfg_.batch_size},
                 {"mask", {{"input", cfg_.mask.input},
                           {"truth", cfg_.mask.truth},
                           {"output", cfg_.mask.output}}}};
  j["vocab"] = vocab_;
  j["emb_input"] = emb_[0];
  j["emb_truth"] = emb_[1];
  j["emb_output"] = emb_[2];
  j["w1"] = w1_;
  j["b1"] = b1_;
  j["w2"] = w2_;
  j["b2"] = b2_;
  return j.dump(2);
}

GotchaClassifier GotchaClassifier::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(std::string("gotcha: malformed JSON: ") + e.what());
  }
  GotchaClassifier clf;
  try {
    const json& c = j.at("config");
    clf.cfg_.embed_dim = c.at("embed_dim").get<std::size_t>();
    clf.cfg_.hidden_dim = c.at("hidden_dim").get<std::size_t>();
    clf.cfg_.learning_rate = c.at("learning_rate").get<double>();
    clf.cfg_.epochs = c.at("epochs").get<std::size_t>();
    clf.cfg_.batch_size = c.at("batch_size").get<std::size_t>();
    clf.cfg_.mask.input = c.at("mask").at("input").get<bool>();
    clf.cfg_.mask.truth = c.at("mask").at("truth").get<bool>();
    clf.cfg_.mask.output = c.at("mask").at("output").get<bool>();
    clf.vocab_ = j.at("vocab").get<std::vector<std::string>>();
    for (std::size_t i = 0; i < clf.vocab_.size(); ++i) {
      clf.rows_.emplace(clf.vocab_[i], i + 1);
    }
    clf.emb_[0] = j.at("emb_input").get<std::vector<double>>();
    clf.emb_[1] = j.at("emb_truth").get<std::vector<double>>();
    clf.emb_[2] = j.at("emb_output").get<std::vector<double>>();
    clf.w1_ = j.at("w1").get<std::vector<double>>();
    clf.b1_ = j.at("b1").get<std::vector<double>>();
    clf.w2_ = j.at("w2").get<std::vector<double>>();
    clf.b2_ = j.at("b2").get<double>();
  } catch (const json::exception& e) {
    throw Error(std::string("gotcha: missing field: ") + e.what());
  }
  const std::size_t rows = clf.vocab_.size() + 1;
  if (clf.emb_[0].size() != rows * clf.cfg_.embed_dim ||
      clf.w1_.size() != clf.cfg_.hidden_dim * 3 * clf.cfg_.embed_dim ||
      clf.b1_.size() != clf.cfg_.hidden_dim ||
      clf.w2_.size() != clf.cfg_.hidden_dim) {
    throw Error("gotcha: weight shapes do not match config");
  }
  return clf;
}

}  // namespace mialab
