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
// Attack evaluation: confusion counts, ROC / AUC, and the experiment runner
// that queries the models once and scores every configured attack over the
// same completions.

#ifndef MIALAB_EVAL_HPP_
#define MIALAB_EVAL_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mialab/baselines.hpp"
#include "mialab/gotcha.hpp"
#include "mialab/lm.hpp"

namespace mialab {

struct Confusion {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;
};

Confusion confusion(const std::vector<int>& preds,
                    const std::vector<int>& labels);

struct PowerError {
  double power = 0.0;  // true-positive rate
  double error = 0.0;  // false-positive rate
};

// Requires at least one positive and one negative label.
PowerError power_error(const Confusion& c);

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
  double threshold = 0.0;
};

struct RocCurve {
  std::vector<RocPoint> points;  // fpr ascending, (0,0) to (1,1)
  double auc = 0.0;
};

// Higher score means "member". One point per distinct score plus the two
// end sentinels; area by the trapezoid rule. The area equals the pairwise
// win statistic below up to floating-point roundoff.
RocCurve roc_curve(const std::vector<double>& scores,
                   const std::vector<int>& labels);

// P(score_pos > score_neg) + 0.5 * P(score_pos == score_neg) over all
// positive/negative pairs.
double pairwise_auc(const std::vector<double>& scores,
                    const std::vector<int>& labels);

// One results row. seed is empty for the across-seed mean row.
struct ExperimentRecord {
  std::string victim_id;
  std::string surrogate_id;
  std::size_t epochs = 1;
  double known_ratio = 0.0;
  std::string attack;
  std::optional<std::uint64_t> seed;
  double power = 0.0;
  double error = 0.0;
  double auc = 0.0;
};

// The twelve attack names the runner understands, in canonical order:
// gotcha, gotcha-no-input, gotcha-no-truth, gotcha-no-output,
// bleu-nb, bleu-dt, bleu-knn, bleu-mlp, bleu-dnn,
// ppl, ppl-ratio, zlib-ratio.
const std::vector<std::string>& all_attack_names();

struct ExperimentConfig {
  std::vector<std::string> attacks = all_attack_names();
  GotchaConfig gotcha;
  FeatureClassifierConfig features;
  double threshold = 0.5;  // decision threshold for classifier attacks
  double cutoff = 0.5;     // predicted-member fraction for ranking attacks
  DecodingConfig surrogate_decoding;
  DecodingConfig victim_decoding;
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  // Metadata copied into the records.
  std::string victim_id = "victim";
  std::string surrogate_id = "surrogate";
  std::size_t epochs = 1;
  double known_ratio = 0.0;
};

// Per-instance decoding seed: the run-level seed mixed with the instance id
// so completions do not depend on instance order.
std::uint64_t instance_seed(std::uint64_t base, std::string_view id);

// One completion per example, each decoded with the per-instance seed
// derived from cfg.rng_seed and the example id.
std::vector<AttackInstance> complete_instances(
    const CompletionModel& model, const std::vector<LabeledExample>& data,
    const DecodingConfig& cfg);

struct AttackRun {
  ExperimentRecord record;
  std::vector<double> scores;  // per eval instance, higher = member
  std::vector<int> labels;
  std::vector<int> preds;
  RocCurve roc;
};

struct ExperimentResult {
  std::vector<AttackInstance> train_instances;  // outputs from the surrogate
  std::vector<AttackInstance> eval_instances;   // outputs from the victim
  std::vector<AttackRun> runs;                  // one per (attack, seed)
  std::vector<ExperimentRecord> records;        // per-seed rows then mean row
  double mean_output_bleu = 0.0;  // victim utility proxy on the eval set
};

// Queries the surrogate once per attack-training input and the victim once
// per evaluation input, then runs every configured attack on the shared
// completions. Trainable attacks run once per seed; deterministic ones
// produce identical per-seed rows. Each attack also gets a seed-mean record.
ExperimentResult run_experiment(const CompletionModel& victim,
                                const CompletionModel& surrogate,
                                const std::vector<LabeledExample>& mia_train,
                                const std::vector<LabeledExample>& mia_eval,
                                const ExperimentConfig& cfg);

}  // namespace mialab

#endif  // MIALAB_EVAL_HPP_
