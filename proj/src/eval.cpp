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

#include "mialab/eval.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <numeric>

namespace mialab {

namespace {

void check_binary_labels(const std::vector<int>& labels) {
  bool pos = false, neg = false;
  for (int l : labels) {
    if (l == 1) pos = true;
    else if (l == 0) neg = true;
    else throw Error("eval: labels must be 0 or 1");
  }
  if (!pos || !neg) throw Error("eval: need both classes");
}

}  // namespace

Confusion confusion(const std::vector<int>& preds,
                    const std::vector<int>& labels) {
  if (preds.size() != labels.size()) {
    throw Error("confusion: size mismatch");
  }
  Confusion c;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (labels[i] == 1) {
      preds[i] == 1 ? ++c.tp : ++c.fn;
    } else {
      preds[i] == 1 ? ++c.fp : ++c.tn;
    }
  }
  return c;
}

PowerError power_error(const Confusion& c) {
  std::size_t pos = c.tp + c.fn;
  std::size_t neg = c.fp + c.tn;
  if (pos == 0 || neg == 0) throw Error("power_error: need both classes");
  return {static_cast<double>(c.tp) / static_cast<double>(pos),
          static_cast<double>(c.fp) / static_cast<double>(neg)};
}

RocCurve roc_curve(const std::vector<double>& scores,
                   const std::vector<int>& labels) {
  if (scores.size() != labels.size() || scores.empty()) {
    throw Error("roc_curve: need matching nonempty scores and labels");
  }
  check_binary_labels(labels);
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0u);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] > scores[b];
  });
  double total_pos = 0, total_neg = 0;
  for (int l : labels) (l == 1 ? total_pos : total_neg) += 1;

  RocCurve curve;
  const double inf = std::numeric_limits<double>::infinity();
  curve.points.push_back({0.0, 0.0, inf});
  double tp = 0, fp = 0;
  std::size_t i = 0;
  while (i < idx.size()) {
    double s = scores[idx[i]];
    // Whole tie group enters at once; thresholds are the distinct scores.
    while (i < idx.size() && scores[idx[i]] == s) {
      (labels[idx[i]] == 1 ? tp : fp) += 1;
      ++i;
    }
    curve.points.push_back({fp / total_neg, tp / total_pos, s});
  }
  curve.points.push_back({1.0, 1.0, -inf});
  double auc = 0.0;
  for (std::size_t p = 1; p < curve.points.size(); ++p) {
    auc += (curve.points[p].fpr - curve.points[p - 1].fpr) *
           (curve.points[p].tpr + curve.points[p - 1].tpr) / 2.0;
  }
  curve.auc = auc;
  return curve;
}

double pairwise_auc(const std::vector<double>& scores,
                    const std::vector<int>& labels) {
  if (scores.size() != labels.size() || scores.empty()) {
    throw Error("pairwise_auc: need matching nonempty scores and labels");
  }
  check_binary_labels(labels);
  double wins = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 1) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] != 0) continue;
      ++pairs;
      if (scores[i] > scores[j]) wins += 1.0;
      else if (scores[i] == scores[j]) wins += 0.5;
    }
  }
  return wins / static_cast<double>(pairs);
}

const std::vector<std::string>& all_attack_names() {
  static const std::vector<std::string> names = {
      "gotcha",   "gotcha-no-input", "gotcha-no-truth", "gotcha-no-output",
      "bleu-nb",  "bleu-dt",         "bleu-knn",        "bleu-mlp",
      "bleu-dnn", "ppl",             "ppl-ratio",       "zlib-ratio"};
  return names;
}

std::uint64_t instance_seed(std::uint64_t base, std::string_view id) {
  // splitmix finalizer over the base, xor-folded with the id hash, so both
  // the run seed and the instance identity move the stream.
  std::uint64_t z = base + 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  z ^= z >> 31;
  return z ^ fnv1a(id);
}

namespace {

enum class Family { kGotcha, kFeature, kRanking };

struct AttackSpec {
  Family family;
  ChannelMask mask;
  FeatureClassifierKind kind = FeatureClassifierKind::kNaiveBayes;
  RankingMetric metric = RankingMetric::kPerplexity;
};

AttackSpec parse_attack(const std::string& name) {
  AttackSpec spec;
  if (name == "gotcha") {
    spec.family = Family::kGotcha;
  } else if (name == "gotcha-no-input") {
    spec.family = Family::kGotcha;
    spec.mask.input = false;
  } else if (name == "gotcha-no-truth") {
    spec.family = Family::kGotcha;
    spec.mask.truth = false;
  } else if (name == "gotcha-no-output") {
    spec.family = Family::kGotcha;
    spec.mask.output = false;
  } else if (name == "bleu-nb") {
    spec.family = Family::kFeature;
    spec.kind = FeatureClassifierKind::kNaiveBayes;
  } else if (name == "bleu-dt") {
    spec.family = Family::kFeature;
    spec.kind = FeatureClassifierKind::kDecisionTree;
  } else if (name == "bleu-knn") {
    spec.family = Family::kFeature;
    spec.kind = FeatureClassifierKind::kKnn;
  } else if (name == "bleu-mlp") {
    spec.family = Family::kFeature;
    spec.kind = FeatureClassifierKind::kMlp;
  } else if (name == "bleu-dnn") {
    spec.family = Family::kFeature;
    spec.kind = FeatureClassifierKind::kDnn;
  } else if (name == "ppl") {
    spec.family = Family::kRanking;
    spec.metric = RankingMetric::kPerplexity;
  } else if (name == "ppl-ratio") {
    spec.family = Family::kRanking;
    spec.metric = RankingMetric::kPplRatio;
  } else if (name == "zlib-ratio") {
    spec.family = Family::kRanking;
    spec.metric = RankingMetric::kZlibRatio;
  } else {
    throw Error("unknown attack: " + name);
  }
  return spec;
}

}  // namespace

std::vector<AttackInstance> complete_instances(
    const CompletionModel& model, const std::vector<LabeledExample>& data,
    const DecodingConfig& dcfg) {
  std::vector<AttackInstance> out;
  out.reserve(data.size());
  for (const auto& le : data) {
    DecodingConfig per = dcfg;
    per.rng_seed = instance_seed(dcfg.rng_seed, le.example.id);
    Completion comp = model.complete(le.example.input, per);
    out.push_back({le.example.id, le.example.input, le.example.truth,
                   std::move(comp.tokens), le.label});
  }
  return out;
}

ExperimentResult run_experiment(const CompletionModel& victim,
                                const CompletionModel& surrogate,
                                const std::vector<LabeledExample>& mia_train,
                                const std::vector<LabeledExample>& mia_eval,
                                const ExperimentConfig& cfg) {
  if (mia_train.empty() || mia_eval.empty()) {
    throw Error("run_experiment: empty attack sets");
  }
  if (cfg.attacks.empty()) throw Error("run_experiment: no attacks");
  if (cfg.seeds.empty()) throw Error("run_experiment: no seeds");
  if (!(cfg.threshold > 0.0 && cfg.threshold < 1.0)) {
    throw Error("run_experiment: threshold must lie in (0, 1)");
  }
  std::vector<AttackSpec> specs;
  specs.reserve(cfg.attacks.size());
  for (const auto& name : cfg.attacks) specs.push_back(parse_attack(name));

  ExperimentResult result;
  result.train_instances =
      complete_instances(surrogate, mia_train, cfg.surrogate_decoding);
  result.eval_instances =
      complete_instances(victim, mia_eval, cfg.victim_decoding);

  double bleu_sum = 0.0;
  for (const auto& inst : result.eval_instances) {
    bleu_sum += smoothed_bleu(inst.output, inst.truth);
  }
  bleu_sum /= static_cast<double>(result.eval_instances.size());
  result.mean_output_bleu = bleu_sum;

  std::vector<int> eval_labels;
  eval_labels.reserve(result.eval_instances.size());
  for (const auto& inst : result.eval_instances) {
    eval_labels.push_back(inst.label);
  }

  std::vector<LabeledFeature> train_feats, eval_feats;
  bool need_features = false;
  for (const auto& spec : specs) {
    need_features = need_features || spec.family == Family::kFeature;
  }
  if (need_features) {
    for (const auto& inst : result.train_instances) {
      train_feats.push_back({extract_features(inst), inst.label});
    }
    for (const auto& inst : result.eval_instances) {
      eval_feats.push_back({extract_features(inst), inst.label});
    }
  }

  // Ranking metrics are training-free and seed independent; compute each at
  // most once.
  std::map<RankingMetric, std::vector<double>> ranking_cache;
  auto ranking_values = [&](RankingMetric metric) -> const std::vector<double>& {
    auto it = ranking_cache.find(metric);
    if (it != ranking_cache.end()) return it->second;
    std::vector<double> values;
    values.reserve(result.eval_instances.size());
    const CompletionModel* surr =
        metric == RankingMetric::kPplRatio ? &surrogate : nullptr;
    for (const auto& inst : result.eval_instances) {
      values.push_back(ranking_metric_value(metric, victim, surr, inst));
    }
    return ranking_cache.emplace(metric, std::move(values)).first->second;
  };

  for (std::size_t a = 0; a < specs.size(); ++a) {
    const auto& spec = specs[a];
    const auto& name = cfg.attacks[a];
    double mean_power = 0, mean_error = 0, mean_auc = 0;
    for (std::uint64_t seed : cfg.seeds) {
      AttackRun run;
      run.labels = eval_labels;
      switch (spec.family) {
        case Family::kGotcha: {
          GotchaConfig gc = cfg.gotcha;
          gc.mask = spec.mask;
          auto clf = GotchaClassifier::train(result.train_instances, gc, seed);
          for (const auto& inst : result.eval_instances) {
            auto [s, pred] = clf.infer(inst, cfg.threshold);
            run.scores.push_back(s);
            run.preds.push_back(pred);
          }
          break;
        }
        case Family::kFeature: {
          auto clf =
              FeatureClassifier::train(spec.kind, train_feats, cfg.features,
                                       seed);
          for (const auto& lf : eval_feats) {
            double s = clf->score(lf.features);
            run.scores.push_back(s);
            run.preds.push_back(s > cfg.threshold ? 1 : 0);
          }
          break;
        }
        case Family::kRanking: {
          const auto& values = ranking_values(spec.metric);
          bool asc = ranking_metric_ascending(spec.metric);
          run.preds = rank_and_cutoff(values, asc, cfg.cutoff);
          run.scores.reserve(values.size());
          for (double v : values) run.scores.push_back(asc ? -v : v);
          break;
        }
      }
      run.roc = roc_curve(run.scores, run.labels);
      PowerError pe = power_error(confusion(run.preds, run.labels));
      run.record = {cfg.victim_id, cfg.surrogate_id, cfg.epochs,
                    cfg.known_ratio, name,          seed,
                    pe.power,      pe.error,        run.roc.auc};
      mean_power += pe.power;
      mean_error += pe.error;
      mean_auc += run.roc.auc;
      result.records.push_back(run.record);
      result.runs.push_back(std::move(run));
    }
    double n = static_cast<double>(cfg.seeds.size());
    result.records.push_back({cfg.victim_id, cfg.surrogate_id, cfg.epochs,
                              cfg.known_ratio, name, std::nullopt,
                              mean_power / n, mean_error / n, mean_auc / n});
  }
  return result;
}

}  // namespace mialab
