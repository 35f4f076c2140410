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
// Rank tests (exact at small n, normal approximation above), Bonferroni
// correction, Cohen's d, balanced full-factorial ANOVA, and the per-example
// feature report comparing attacked-successfully against attacked-
// unsuccessfully groups.

#ifndef MIALAB_STATS_HPP_
#define MIALAB_STATS_HPP_

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "mialab/eval.hpp"

namespace mialab {

enum class TestMethod { kSignedRank, kRankSum };

struct TestResult {
  double statistic = 0.0;  // W+ for signed-rank, Mann-Whitney U for rank-sum
  double p_value = 0.0;    // two-sided
  double p_greater = 0.0;  // one-sided, P(statistic >= observed) under H0
  TestMethod method = TestMethod::kSignedRank;
  bool exact = false;
};

// Paired test on elementwise differences a - b. Zero differences drop out;
// ties get midranks. Exact sign-pattern enumeration when the nonzero count
// is <= 12, otherwise normal approximation with tie-corrected variance and
// no continuity correction. Errors when every difference is zero.
TestResult wilcoxon_signed_rank(const std::vector<double>& a,
                                const std::vector<double>& b);

// Unpaired two-sample test; exact over rank assignments when
// |a| + |b| <= 12, otherwise normal approximation with tie correction.
TestResult wilcoxon_rank_sum(const std::vector<double>& a,
                             const std::vector<double>& b);

// adjusted_i = min(1, p_i * m). Inputs must lie in [0, 1].
std::vector<double> bonferroni(const std::vector<double>& p_values);

enum class EffectMagnitude { kNegligible, kSmall, kMedium, kLarge };

std::string_view effect_magnitude_name(EffectMagnitude m);

struct EffectSize {
  double d = 0.0;
  EffectMagnitude magnitude = EffectMagnitude::kNegligible;
};

// d = (mean(a) - mean(b)) / pooled sd, variances df-weighted. Both groups
// need >= 2 elements and the pooled variance must be positive.
// |d| < 0.2 negligible, < 0.5 small, < 0.8 medium, else large.
EffectSize cohens_d(const std::vector<double>& a, const std::vector<double>& b);

struct AnovaRow {
  std::string term;  // factor, "a:b" interaction, "residual" or "total"
  double sum_of_squares = 0.0;
  double sst_percent = 0.0;
  std::size_t df = 0;
  double f = 0.0;        // NaN where not applicable
  double p_value = 0.0;  // NaN where not applicable
};

struct AnovaTable {
  std::vector<AnovaRow> rows;  // terms, then residual, then total
  double total_ss = 0.0;
};

// Fixed-effects ANOVA over a complete balanced factorial grid of records.
// response is one of power | error | auc; factors name record fields from
// victim | surrogate | epochs | known_ratio | attack. Terms cover all main
// effects and interactions up to max_interaction factors; everything not
// modeled lands in the residual (sum-of-squares by subtraction). F and p
// are reported when the residual has positive degrees of freedom.
AnovaTable factorial_anova(const std::vector<ExperimentRecord>& records,
                           const std::string& response,
                           const std::vector<std::string>& factors,
                           std::size_t max_interaction = 3);

// Character-level edit distance (insert, delete, substitute).
std::size_t levenshtein(std::string_view a, std::string_view b);

// Reserved words excluded from variable counting.
const std::unordered_set<std::string>& java_keywords();

struct FeatureRow {
  std::string instance_id;
  double input_length = 0.0;    // whitespace tokens of the prompt
  double output_length = 0.0;   // whitespace tokens of the model output
  double perplexity = 0.0;      // victim perplexity on prompt + truth
  double edit_distance = 0.0;   // characters, output vs truth
  double bleu = 0.0;
  double variable_count = 0.0;  // identifier occurrences outside the keyword set
  bool attack_success = false;
};

// Feature column names in report order.
const std::vector<std::string>& feature_names();

FeatureRow extract_rq3_features(const AttackInstance& inst,
                                const CompletionModel& victim,
                                const std::unordered_set<std::string>& keywords);

struct GroupComparison {
  std::string feature;
  double mean_success = 0.0;
  double mean_fail = 0.0;
  double p_value = 0.0;  // two-sided rank-sum
  double d = 0.0;
  EffectMagnitude magnitude = EffectMagnitude::kNegligible;
};

// One row per feature. Degenerate variance collapses d to 0 for equal means
// and +/-infinity otherwise.
std::vector<GroupComparison> compare_groups(
    const std::vector<FeatureRow>& success_rows,
    const std::vector<FeatureRow>& fail_rows);

// Shared numeric pieces, exposed for verification.
double normal_cdf(double x);
// Continued-fraction evaluation, absolute tolerance 1e-12.
double regularized_incomplete_beta(double a, double b, double x);
// P(F >= f) for an F distribution with (df1, df2) degrees of freedom.
double f_distribution_sf(double f, double df1, double df2);

}  // namespace mialab

#endif  // MIALAB_STATS_HPP_
