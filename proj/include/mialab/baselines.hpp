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
// Reference attacks: feature-based classifiers over output/truth overlap
// statistics, and training-free ranking attacks over perplexity and
// compression signals.

#ifndef MIALAB_BASELINES_HPP_
#define MIALAB_BASELINES_HPP_

#include <array>
#include <cstdint>
#include <memory>
#include <string_view>
#include <vector>

#include "mialab/gotcha.hpp"
#include "mialab/lm.hpp"

namespace mialab {

// Modified (clipped) n-gram precision of output against truth for
// n = 1..4. Counts are capped at the truth multiplicity; 0 when the output
// has no n-grams of that length.
std::array<double, 4> ngram_precisions(const TokenSeq& output,
                                       const TokenSeq& truth);

// Sentence BLEU with add-one smoothing on zero-match counts and brevity
// penalty exp(1 - |truth|/|output|) when the output is shorter than the
// truth. Empty output scores 0; identical sequences score 1.
double smoothed_bleu(const TokenSeq& output, const TokenSeq& truth);

struct FeatureVector {
  std::array<double, 5> v{};  // p1, p2, p3, p4, bleu
};

FeatureVector extract_features(const AttackInstance& inst);

enum class FeatureClassifierKind {
  kNaiveBayes,
  kDecisionTree,
  kKnn,
  kMlp,   // one hidden layer
  kDnn,   // three hidden layers
};

struct FeatureClassifierConfig {
  std::size_t tree_max_depth = 5;
  std::size_t knn_k = 5;
  double knn_minkowski_p = 2.0;
  std::size_t hidden_width = 50;
  double l2_alpha = 1e-4;
  double learning_rate = 0.05;
  std::size_t epochs = 200;
  std::size_t batch_size = 16;
  double variance_floor = 1e-9;
};

struct LabeledFeature {
  FeatureVector features;
  int label = 0;
};

class FeatureClassifier {
 public:
  virtual ~FeatureClassifier() = default;
  // Membership probability estimate in [0, 1].
  virtual double score(const FeatureVector& f) const = 0;
  // Exact 0.5 breaks to non-member.
  int predict(const FeatureVector& f) const { return score(f) > 0.5 ? 1 : 0; }
  // Split depth of the decision tree; -1 for other classifiers.
  virtual int tree_depth() const { return -1; }

  static std::unique_ptr<FeatureClassifier> train(
      FeatureClassifierKind kind, const std::vector<LabeledFeature>& data,
      const FeatureClassifierConfig& cfg, std::uint64_t seed);
};

// 8 * byte length of the zlib-wrapped DEFLATE encoding (level 6).
std::uint64_t zlib_entropy_bits(std::string_view bytes);

enum class RankingMetric { kPerplexity, kPplRatio, kZlibRatio };

// Scored sequence is input + truth. Perplexity: victim log-perplexity.
// PplRatio: victim log-perplexity over surrogate log-perplexity (surrogate
// required; zero denominator is an error). ZlibRatio: victim log-perplexity
// over the compression entropy of the detokenized text.
double ranking_metric_value(RankingMetric metric, const CompletionModel& victim,
                            const CompletionModel* surrogate,
                            const AttackInstance& inst);

// True when a smaller value means "more likely member".
bool ranking_metric_ascending(RankingMetric metric);

// Stable sort by value (ascending or descending per the metric direction),
// then the top round-half-up(cutoff * N) get label 1. Ties keep input order.
std::vector<int> rank_and_cutoff(const std::vector<double>& values,
                                 bool ascending, double cutoff);

}  // namespace mialab

#endif  // MIALAB_BASELINES_HPP_
