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
//
// Membership classifier over the three channels of a completion query: the
// prompt, the ground-truth continuation, and the model's output. Each channel
// is mean-pooled over a trainable embedding table, the concatenation feeds a
// tanh hidden layer and a sigmoid output. Channels can be masked out for
// ablations.

#ifndef MIALAB_GOTCHA_HPP_
#define MIALAB_GOTCHA_HPP_

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "mialab/corpus.hpp"

namespace mialab {

struct AttackInstance {
  std::string id;
  TokenSeq input;   // x: the prompt
  TokenSeq truth;   // y: the real continuation
  TokenSeq output;  // y-hat: what the model produced
  int label = -1;   // 1 member, 0 non-member, -1 unknown
};

struct ChannelMask {
  bool input = true;
  bool truth = true;
  bool output = true;
};

struct GotchaConfig {
  std::size_t embed_dim = 32;
  std::size_t hidden_dim = 64;
  double learning_rate = 0.05;
  std::size_t epochs = 30;
  std::size_t batch_size = 16;
  ChannelMask mask;
};

class GotchaClassifier {
 public:
  // Mini-batch gradient descent on binary cross-entropy. The vocabulary is
  // every token seen in any channel of the training data; weights start
  // uniform in [-0.1, 0.1] from seed. Fully deterministic per seed.
  static GotchaClassifier train(const std::vector<AttackInstance>& data,
                                const GotchaConfig& cfg, std::uint64_t seed);

  // Initialized but untrained classifier (what train starts from).
  static GotchaClassifier init(const std::vector<AttackInstance>& vocab_source,
                               const GotchaConfig& cfg, std::uint64_t seed);

  // Sigmoid membership score in (0, 1).
  double score(const AttackInstance& inst) const;
  // label = 1 iff score >= threshold.
  std::pair<double, int> infer(const AttackInstance& inst,
                               double threshold = 0.5) const;

  // Mean-pooled channel embedding; empty or masked channels give the zero
  // vector. channel: 0 input, 1 truth, 2 output.
  std::vector<double> embed_channel(int channel, const TokenSeq& tokens) const;

  // Flat parameter access, used by training and by the finite-difference
  // gradient check. Layout: input table, truth table, output table (row
  // major, unknown-token row first), hidden weights, hidden bias, output
  // weights, output bias.
  std::vector<double> parameters() const;
  void set_parameters(const std::vector<double>& params);
  double loss(const std::vector<AttackInstance>& batch) const;
  std::vector<double> loss_gradient(
      const std::vector<AttackInstance>& batch) const;

  const GotchaConfig& config() const { return cfg_; }
  std::string to_json() const;
  static GotchaClassifier from_json(const std::string& text);

 private:
  GotchaClassifier() = default;

  std::size_t row_of(const std::string& token) const;  // 0 for unseen tokens
  struct Forward {
    std::vector<double> pooled[3];
    std::vector<double> hidden;
    double z = 0.0;
    double p = 0.0;
  };
  Forward forward(const AttackInstance& inst) const;

  GotchaConfig cfg_;
  std::vector<std::string> vocab_;  // row i+1 <-> vocab_[i]; row 0 = unknown
  std::unordered_map<std::string, std::size_t> rows_;
  std::vector<double> emb_[3];  // (vocab+1) x embed_dim, row major
  std::vector<double> w1_;      // hidden_dim x (3*embed_dim), row major
  std::vector<double> b1_;      // hidden_dim
  std::vector<double> w2_;      // hidden_dim
  double b2_ = 0.0;
};

}  // namespace mialab

#endif  // MIALAB_GOTCHA_HPP_
