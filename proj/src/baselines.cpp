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

#include "mialab/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_map>

#include <zlib.h>

namespace mialab {

namespace {

std::unordered_map<std::string, int> ngram_counts(const TokenSeq& tokens,
                                                  std::size_t n) {
  std::unordered_map<std::string, int> counts;
  if (tokens.size() < n) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    std::string key;
    for (std::size_t j = 0; j < n; ++j) {
      if (j) key += '\x1f';
      key += tokens[i + j];
    }
    ++counts[key];
  }
  return counts;
}

// matched (clipped) and total n-gram counts of output against truth.
std::pair<double, double> clipped_matches(const TokenSeq& output,
                                          const TokenSeq& truth,
                                          std::size_t n) {
  if (output.size() < n) return {0.0, 0.0};
  auto out_counts = ngram_counts(output, n);
  auto truth_counts = ngram_counts(truth, n);
  double matched = 0.0;
  double total = 0.0;
  for (const auto& [gram, cnt] : out_counts) {
    total += cnt;
    auto it = truth_counts.find(gram);
    if (it != truth_counts.end()) {
      matched += std::min(cnt, it->second);
    }
  }
  return {matched, total};
}

}  // namespace

std::array<double, 4> ngram_precisions(const TokenSeq& output,
                                       const TokenSeq& truth) {
  std::array<double, 4> out{};
  for (std::size_t n = 1; n <= 4; ++n) {
    auto [matched, total] = clipped_matches(output, truth, n);
    out[n - 1] = total > 0 ? matched / total : 0.0;
  }
  return out;
}

double smoothed_bleu(const TokenSeq& output, const TokenSeq& truth) {
  if (output.empty()) return 0.0;
  double log_sum = 0.0;
  for (std::size_t n = 1; n <= 4; ++n) {
    auto [matched, total] = clipped_matches(output, truth, n);
    // Add-one smoothing only when nothing matched; exact precisions
    // otherwise, so identical sequences stay at 1.
    double p = matched > 0 ? matched / total : 1.0 / (total + 1.0);
    log_sum += std::log(p);
  }
  double bleu = std::exp(0.25 * log_sum);
  if (output.size() < truth.size()) {
    bleu *= std::exp(1.0 - static_cast<double>(truth.size()) /
                               static_cast<double>(output.size()));
  }
  return bleu;
}

FeatureVector extract_features(const AttackInstance& inst) {
  FeatureVector f;
  auto p = ngram_precisions(inst.output, inst.truth);
  for (int i = 0; i < 4; ++i) f.v[i] = p[i];
  f.v[4] = smoothed_bleu(inst.output, inst.truth);
  return f;
}

// ---------------------------------------------------------------------------
// Feature classifiers

namespace {

constexpr std::size_t kDim = 5;

void check_training_data(const std::vector<LabeledFeature>& data) {
  if (data.empty()) throw Error("feature classifier: empty training set");
  bool pos = false, neg = false;
  for (const auto& d : data) {
    if (d.label == 1) pos = true;
    else if (d.label == 0) neg = true;
    else throw Error("feature classifier: labels must be 0 or 1");
  }
  if (!pos || !neg) {
    throw Error("feature classifier: training set needs both classes");
  }
}

class NaiveBayesClassifier : public FeatureClassifier {
 public:
  NaiveBayesClassifier(const std::vector<LabeledFeature>& data,
                       double variance_floor) {
    double counts[2] = {0, 0};
    double sums[2][kDim] = {};
    for (const auto& d : data) {
      counts[d.label] += 1;
      for (std::size_t i = 0; i < kDim; ++i) {
        sums[d.label][i] += d.features.v[i];
      }
    }
    for (int c = 0; c < 2; ++c) {
      log_prior_[c] = std::log(counts[c] / static_cast<double>(data.size()));
      for (std::size_t i = 0; i < kDim; ++i) mean_[c][i] = sums[c][i] / counts[c];
    }
    double sq[2][kDim] = {};
    for (const auto& d : data) {
      for (std::size_t i = 0; i < kDim; ++i) {
        double delta = d.features.v[i] - mean_[d.label][i];
        sq[d.label][i] += delta * delta;
      }
    }
    for (int c = 0; c < 2; ++c) {
      for (std::size_t i = 0; i < kDim; ++i) {
        var_[c][i] = std::max(sq[c][i] / counts[c], variance_floor);
      }
    }
  }

  double score(const FeatureVector& f) const override {
    double log_like[2];
    for (int c = 0; c < 2; ++c) {
      double acc = log_prior_[c];
      for (std::size_t i = 0; i < kDim; ++i) {
        double delta = f.v[i] - mean_[c][i];
        acc += -0.5 * std::log(2.0 * M_PI * var_[c][i]) -
               delta * delta / (2.0 * var_[c][i]);
      }
      log_like[c] = acc;
    }
    double m = std::max(log_like[0], log_like[1]);
    double e0 = std::exp(log_like[0] - m);
    double e1 = std::exp(log_like[1] - m);
    return e1 / (e0 + e1);
  }

 private:
  double log_prior_[2];
  double mean_[2][kDim];
  double var_[2][kDim];
};

class DecisionTreeClassifier : public FeatureClassifier {
 public:
  DecisionTreeClassifier(const std::vector<LabeledFeature>& data,
                         std::size_t max_depth)
      : data_(&data) {
    std::vector<std::size_t> idx(data.size());
    std::iota(idx.begin(), idx.end(), 0u);
    root_ = build(data, idx, 0, max_depth);
    data_ = nullptr;
  }

  double score(const FeatureVector& f) const override {
    int node = root_;
    while (nodes_[node].feature >= 0) {
      node = f.v[nodes_[node].feature] <= nodes_[node].threshold
                 ? nodes_[node].left
                 : nodes_[node].right;
    }
    return nodes_[node].pos_frac;
  }

  int tree_depth() const override { return depth_; }

 private:
  struct Node {
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double pos_frac = 0.0;
  };

  static double gini(double n_pos, double n) {
    if (n <= 0) return 0.0;
    double p = n_pos / n;
    return 1.0 - p * p - (1.0 - p) * (1.0 - p);
  }

  int build(const std::vector<LabeledFeature>& data,
            const std::vector<std::size_t>& idx, int depth,
            std::size_t max_depth) {
    depth_ = std::max(depth_, depth);
    double n = static_cast<double>(idx.size());
    double n_pos = 0;
    for (std::size_t i : idx) n_pos += data[i].label;
    Node node;
    node.pos_frac = n_pos / n;
    double node_gini = gini(n_pos, n);
    bool can_split = depth < static_cast<int>(max_depth) && idx.size() >= 2 &&
                     n_pos > 0 && n_pos < n;
    int best_feature = -1;
    double best_thr = 0.0, best_score = node_gini - 1e-12;
    if (can_split) {
      std::vector<std::pair<double, int>> vals(idx.size());
      for (std::size_t f = 0; f < kDim; ++f) {
        for (std::size_t i = 0; i < idx.size(); ++i) {
          vals[i] = {data[idx[i]].features.v[f], data[idx[i]].label};
        }
        std::sort(vals.begin(), vals.end());
        double left_n = 0, left_pos = 0;
        for (std::size_t i = 0; i + 1 < vals.size(); ++i) {
          left_n += 1;
          left_pos += vals[i].second;
          if (vals[i].first == vals[i + 1].first) continue;
          double right_n = n - left_n;
          double right_pos = n_pos - left_pos;
          double weighted = (left_n * gini(left_pos, left_n) +
                             right_n * gini(right_pos, right_n)) /
                            n;
          if (weighted < best_score) {
            best_score = weighted;
            best_feature = static_cast<int>(f);
            best_thr = (vals[i].first + vals[i + 1].first) / 2.0;
          }
        }
      }
    }
    if (best_feature < 0) {
      nodes_.push_back(node);
      return static_cast<int>(nodes_.size()) - 1;
    }
    std::vector<std::size_t> left_idx, right_idx;
    for (std::size_t i : idx) {
      if (data[i].features.v[best_feature] <= best_thr) {
        left_idx.push_back(i);
      } else {
        right_idx.push_back(i);
      }
    }
    node.feature = best_feature;
    node.threshold = best_thr;
    node.left = build(data, left_idx, depth + 1, max_depth);
    node.right = build(data, right_idx, depth + 1, max_depth);
    nodes_.push_back(node);
    return static_cast<int>(nodes_.size()) - 1;
  }

  const std::vector<LabeledFeature>* data_;
  std::vector<Node> nodes_;
  int root_ = 0;
  int depth_ = 0;
};

class KnnClassifier : public FeatureClassifier {
 public:
  KnnClassifier(const std::vector<LabeledFeature>& data, std::size_t k,
                double p)
      : data_(data), k_(std::min(k, data.size())), p_(p) {
    if (k < 1) throw Error("knn: k must be >= 1");
  }

  double score(const FeatureVector& f) const override {
    std::vector<std::pair<double, std::size_t>> dist(data_.size());
    for (std::size_t i = 0; i < data_.size(); ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < kDim; ++j) {
        acc += std::pow(std::abs(f.v[j] - data_[i].features.v[j]), p_);
      }
      dist[i] = {std::pow(acc, 1.0 / p_), i};
    }
    // Stable tie handling: equal distances resolve by training index.
    std::sort(dist.begin(), dist.end());
    double votes = 0;
    for (std::size_t i = 0; i < k_; ++i) votes += data_[dist[i].second].label;
    return votes / static_cast<double>(k_);
  }

 private:
  std::vector<LabeledFeature> data_;
  std::size_t k_;
  double p_;
};

// Fully-connected ReLU net with sigmoid output, trained by mini-batch
// gradient descent on cross-entropy plus an L2 weight penalty. Covers both
// the one-hidden-layer and the three-hidden-layer reference classifiers.
class DenseNetClassifier : public FeatureClassifier {
 public:
  DenseNetClassifier(const std::vector<LabeledFeature>& data,
                     const std::vector<std::size_t>& dims,
                     const FeatureClassifierConfig& cfg, std::uint64_t seed)
      : dims_(dims) {
    Rng rng(seed);
    const std::size_t layers = dims_.size() - 1;
    w_.resize(layers);
    b_.resize(layers);
    for (std::size_t l = 0; l < layers; ++l) {
      w_[l].resize(dims_[l + 1] * dims_[l]);
      for (auto& w : w_[l]) w = rng.unit() * 0.2 - 0.1;
      b_[l].assign(dims_[l + 1], 0.0);
    }
    train(data, cfg, rng);
  }

  double score(const FeatureVector& f) const override {
    std::vector<std::vector<double>> acts;
    return forward(f, &acts);
  }

 private:
  double forward(const FeatureVector& f,
                 std::vector<std::vector<double>>* acts) const {
    std::vector<double> cur(f.v.begin(), f.v.end());
    acts->clear();
    acts->push_back(cur);
    const std::size_t layers = dims_.size() - 1;
    for (std::size_t l = 0; l < layers; ++l) {
      std::vector<double> next(dims_[l + 1]);
      for (std::size_t j = 0; j < dims_[l + 1]; ++j) {
        double acc = b_[l][j];
        const double* row = w_[l].data() + j * dims_[l];
        for (std::size_t i = 0; i < dims_[l]; ++i) acc += row[i] * cur[i];
        next[j] = acc;
      }
      if (l + 1 < layers) {
        for (auto& v : next) v = std::max(v, 0.0);  // ReLU
      }
      cur = next;
      acts->push_back(cur);
    }
    double z = cur[0];
    double p = z >= 0 ? 1.0 / (1.0 + std::exp(-z))
                      : std::exp(z) / (1.0 + std::exp(z));
    return p;
  }

  void train(const std::vector<LabeledFeature>& data,
             const FeatureClassifierConfig& cfg, Rng& rng) {
    const std::size_t layers = dims_.size() - 1;
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0u);
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
      rng.shuffle(order);
      for (std::size_t start = 0; start < order.size();
           start += cfg.batch_size) {
        std::size_t end = std::min(order.size(), start + cfg.batch_size);
        std::vector<std::vector<double>> gw(layers), gb(layers);
        for (std::size_t l = 0; l < layers; ++l) {
          gw[l].assign(w_[l].size(), 0.0);
          gb[l].assign(b_[l].size(), 0.0);
        }
        const double inv = 1.0 / static_cast<double>(end - start);
        for (std::size_t bi = start; bi < end; ++bi) {
          const auto& sample = data[order[bi]];
          std::vector<std::vector<double>> acts;
          double p = forward(sample.features, &acts);
          // delta over the pre-activation of the output layer
          std::vector<double> delta{(p - sample.label) * inv};
          for (std::size_t l = layers; l-- > 0;) {
            const auto& below = acts[l];
            for (std::size_t j = 0; j < dims_[l + 1]; ++j) {
              gb[l][j] += delta[j];
              double* row = gw[l].data() + j * dims_[l];
              for (std::size_t i = 0; i < dims_[l]; ++i) {
                row[i] += delta[j] * below[i];
              }
            }
            if (l == 0) break;
            std::vector<double> next_delta(dims_[l], 0.0);
            for (std::size_t i = 0; i < dims_[l]; ++i) {
              if (acts[l][i] <= 0.0) continue;  // ReLU gate
              double acc = 0.0;
              for (std::size_t j = 0; j < dims_[l + 1]; ++j) {
                acc += delta[j] * w_[l][j * dims_[l] + i];
              }
              next_delta[i] = acc;
            }
            delta = std::move(next_delta);
          }
        }
        for (std::size_t l = 0; l < layers; ++l) {
          for (std::size_t i = 0; i < w_[l].size(); ++i) {
            w_[l][i] -= cfg.learning_rate *
                        (gw[l][i] + cfg.l2_alpha * w_[l][i]);
          }
          for (std::size_t i = 0; i < b_[l].size(); ++i) {
            b_[l][i] -= cfg.learning_rate * gb[l][i];
          }
        }
      }
    }
  }

  std::vector<std::size_t> dims_;
  std::vector<std::vector<double>> w_;
  std::vector<std::vector<double>> b_;
};

}  // namespace

std::unique_ptr<FeatureClassifier> FeatureClassifier::train(
    FeatureClassifierKind kind, const std::vector<LabeledFeature>& data,
    const FeatureClassifierConfig& cfg, std::uint64_t seed) {
  check_training_data(data);
  switch (kind) {
    case FeatureClassifierKind::kNaiveBayes:
      return std::make_unique<NaiveBayesClassifier>(data, cfg.variance_floor);
    case FeatureClassifierKind::kDecisionTree:
      return std::make_unique<DecisionTreeClassifier>(data,
                                                      cfg.tree_max_depth);
    case FeatureClassifierKind::kKnn:
      return std::make_unique<KnnClassifier>(data, cfg.knn_k,
                                             cfg.knn_minkowski_p);
    case FeatureClassifierKind::kMlp:
      return std::make_unique<DenseNetClassifier>(
          data, std::vector<std::size_t>{kDim, cfg.hidden_width, 1}, cfg,
          seed);
    case FeatureClassifierKind::kDnn:
      return std::make_unique<DenseNetClassifier>(
          data,
          std::vector<std::size_t>{kDim, cfg.hidden_width, cfg.hidden_width,
                                   cfg.hidden_width, 1},
          cfg, seed);
  }
  throw Error("feature classifier: unknown kind");
}

// ---------------------------------------------------------------------------
// Ranking attacks

std::uint64_t zlib_entropy_bits(std::string_view bytes) {
  uLongf dest_len = compressBound(static_cast<uLong>(bytes.size()));
  std::vector<Bytef> buf(dest_len);
  int rc = compress2(buf.data(), &dest_len,
                     reinterpret_cast<const Bytef*>(bytes.data()),
                     static_cast<uLong>(bytes.size()), 6);
  if (rc != Z_OK) throw Error("zlib: compression failed");
  return 8ull * static_cast<std::uint64_t>(dest_len);
}

double ranking_metric_value(RankingMetric metric, const CompletionModel& victim,
                            const CompletionModel* surrogate,
                            const AttackInstance& inst) {
  TokenSeq seq = inst.input;
  seq.insert(seq.end(), inst.truth.begin(), inst.truth.end());
  double lp_victim = log_perplexity(victim, seq);
  switch (metric) {
    case RankingMetric::kPerplexity:
      return lp_victim;
    case RankingMetric::kPplRatio: {
      if (!surrogate) throw Error("ranking: ppl-ratio needs a surrogate");
      double lp_surrogate = log_perplexity(*surrogate, seq);
      if (lp_surrogate == 0.0) {
        throw Error("ranking: zero surrogate log-perplexity denominator");
      }
      return lp_victim / lp_surrogate;
    }
    case RankingMetric::kZlibRatio: {
      double bits =
          static_cast<double>(zlib_entropy_bits(detokenize(seq)));
      if (bits == 0.0) throw Error("ranking: zero compression entropy");
      return lp_victim / bits;
    }
  }
  throw Error("ranking: unknown metric");
}

bool ranking_metric_ascending(RankingMetric metric) {
  // Low victim perplexity and low perplexity-to-compression ratio point at
  // members; the perplexity ratio against the surrogate ranks the other way.
  return metric != RankingMetric::kPplRatio;
}

std::vector<int> rank_and_cutoff(const std::vector<double>& values,
                                 bool ascending, double cutoff) {
  if (values.empty()) throw Error("rank_and_cutoff: empty values");
  if (!(cutoff > 0.0 && cutoff <= 1.0)) {
    throw Error("rank_and_cutoff: cutoff must lie in (0, 1]");
  }
  std::vector<std::size_t> idx(values.size());
  std::iota(idx.begin(), idx.end(), 0u);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) {
                     return ascending ? values[a] < values[b]
                                      : values[a] > values[b];
                   });
  std::size_t n_pred = std::min(
      values.size(),
      round_half_up(cutoff * static_cast<double>(values.size())));
  std::vector<int> preds(values.size(), 0);
  for (std::size_t i = 0; i < n_pred; ++i) preds[idx[i]] = 1;
  return preds;
}

}  // namespace mialab
