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
// Back-off n-gram language models with absolute-discount interpolation,
// greedy / beam / top-k decoding, sequence scoring and perplexity, plus a
// lookup-table model that reproduces its training set exactly.

#ifndef MIALAB_LM_HPP_
#define MIALAB_LM_HPP_

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "mialab/corpus.hpp"

namespace mialab {

enum class DecodeStrategy { kGreedy, kBeam, kTopk };

struct DecodingConfig {
  DecodeStrategy strategy = DecodeStrategy::kBeam;
  std::size_t beam_size = 4;
  std::size_t topk_k = 50;
  double temperature = 1.0;
  std::size_t max_len = 16;
  std::uint64_t rng_seed = 0;
};

struct Completion {
  TokenSeq tokens;                    // emitted continuation, end marker excluded
  std::vector<double> step_logprobs;  // one natural-log probability per token
  double total_logprob = 0.0;         // sum of step_logprobs
};

// Black-box contract every attack runs against. Any external model wrapped
// behind these two calls plugs into the whole pipeline.
class CompletionModel {
 public:
  virtual ~CompletionModel() = default;
  virtual Completion complete(const TokenSeq& prefix,
                              const DecodingConfig& cfg) const = 0;
  // Sum over continuation tokens of ln P(token | prefix + previous tokens).
  virtual double score(const TokenSeq& prefix,
                       const TokenSeq& continuation) const = 0;
};

// log-perplexity = -(1/N) * sum ln P(w_i | w_1..w_{i-1}); errors on empty input.
double log_perplexity(const CompletionModel& model, const TokenSeq& tokens);

// Anything that exposes a per-step next-token distribution; the decoders run
// against this interface. Token ids: 0 = unknown, 1 = end marker, real
// tokens from 2 up. The start marker lives only in contexts, never in the
// distribution.
class TokenDistModel {
 public:
  static constexpr std::uint32_t kUnkId = 0;
  static constexpr std::uint32_t kEosId = 1;
  static constexpr std::uint32_t kBosId = 0xffffffffu;

  virtual ~TokenDistModel() = default;
  // Probability for every emittable id; each entry > 0, sums to 1.
  virtual std::vector<double> next_token_dist(
      const std::vector<std::uint32_t>& context) const = 0;
  virtual std::size_t vocab_size() const = 0;
  virtual std::uint32_t token_id(std::string_view token) const = 0;  // kUnkId on miss
  virtual const std::string& token_string(std::uint32_t id) const = 0;
  virtual std::size_t context_len() const = 0;  // tokens of context the model reads
};

// Shared decoder. Generation stops when the decision rule selects the end
// marker (argmax for greedy and beam expansion, sampled for top-k) or at
// cfg.max_len. Beam candidates are ranked by the joint log-probability of
// their emitted tokens.
Completion decode(const TokenDistModel& model, const TokenSeq& prefix,
                  const DecodingConfig& cfg);

struct NGramConfig {
  std::size_t order = 3;
  double discount = 0.75;
  std::size_t passes = 1;
  double unk_floor = 1e-8;
};

class NGramModel : public CompletionModel, public TokenDistModel {
 public:
  // Counts every k-gram (k = 1..order) over the stream
  // [BOS]*(order-1) + input + truth + [EOS] of each example; each occurrence
  // contributes `passes` counts. Larger passes shrink the discount share and
  // sharpen the maximum-likelihood component.
  static NGramModel train(const std::vector<Example>& examples,
                          const NGramConfig& cfg);
  static NGramModel train_on_streams(const std::vector<TokenSeq>& streams,
                                     const NGramConfig& cfg);

  Completion complete(const TokenSeq& prefix,
                      const DecodingConfig& cfg) const override;
  double score(const TokenSeq& prefix,
               const TokenSeq& continuation) const override;

  std::vector<double> next_token_dist(
      const std::vector<std::uint32_t>& context) const override;
  std::vector<double> next_token_dist(const TokenSeq& context) const;
  std::size_t vocab_size() const override { return vocab_.size(); }
  std::uint32_t token_id(std::string_view token) const override;
  const std::string& token_string(std::uint32_t id) const override;
  std::size_t context_len() const override { return cfg_.order - 1; }

  const NGramConfig& config() const { return cfg_; }

  std::string to_json() const;
  static NGramModel from_json(const std::string& text);

 private:
  struct ContextCounts {
    std::unordered_map<std::uint32_t, double> counts;
    double total = 0.0;
  };

  NGramModel() = default;
  void count_stream(const std::vector<std::uint32_t>& ids);
  double prob_chain(const std::vector<std::uint32_t>& context,
                    std::size_t ctx_len, std::uint32_t token) const;
  std::vector<std::uint32_t> to_ids(const TokenSeq& tokens, bool grow_vocab);

  NGramConfig cfg_;
  std::vector<std::string> vocab_;  // index = id; [0]="<unk>", [1]="</s>"
  std::unordered_map<std::string, std::uint32_t> token_ids_;
  // counts_[k]: context of k ids (packed little-endian) -> token counts.
  std::vector<std::unordered_map<std::string, ContextCounts>> counts_;
};

// Perfect memorizer: returns the stored continuation for known prefixes and
// scores member sequences with probability one per step; everything else is
// scored at a fixed small per-token probability.
class LookupModel : public CompletionModel {
 public:
  explicit LookupModel(double miss_token_prob = 1e-6);

  void add_member(const Example& ex);

  Completion complete(const TokenSeq& prefix,
                      const DecodingConfig& cfg) const override;
  double score(const TokenSeq& prefix,
               const TokenSeq& continuation) const override;

 private:
  double miss_logprob_;
  std::unordered_map<std::string, TokenSeq> by_input_;
  std::unordered_map<std::string, std::size_t> member_streams_;
};

}  // namespace mialab

#endif  // MIALAB_LM_HPP_
