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

#include "mialab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace mialab {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

// Doubled 1-based midranks (ties averaged); doubling keeps them integral.
std::vector<long long> doubled_midranks(const std::vector<double>& values) {
  std::vector<std::size_t> idx(values.size());
  std::iota(idx.begin(), idx.end(), 0u);
  std::sort(idx.begin(), idx.end(),
            [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<long long> out(values.size());
  std::size_t i = 0;
  while (i < idx.size()) {
    std::size_t j = i;
    while (j < idx.size() && values[idx[j]] == values[idx[i]]) ++j;
    long long doubled = static_cast<long long>(i + 1 + j);  // (i+1) + j
    for (std::size_t k = i; k < j; ++k) out[idx[k]] = doubled;
    i = j;
  }
  return out;
}

double tie_correction_sum(const std::vector<double>& values) {
  std::vector<double> sorted(values);
  std::sort(sorted.begin(), sorted.end());
  double sum = 0.0;
  std::size_t i = 0;
  while (i < sorted.size()) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    double t = static_cast<double>(j - i);
    sum += t * t * t - t;
    i = j;
  }
  return sum;
}

double two_sided(double p_less, double p_greater) {
  return std::min(1.0, 2.0 * std::min(p_less, p_greater));
}

EffectMagnitude magnitude_of(double d) {
  double a = std::fabs(d);
  if (a < 0.2) return EffectMagnitude::kNegligible;
  if (a < 0.5) return EffectMagnitude::kSmall;
  if (a < 0.8) return EffectMagnitude::kMedium;
  return EffectMagnitude::kLarge;
}

}  // namespace

TestResult wilcoxon_signed_rank(const std::vector<double>& a,
                                const std::vector<double>& b) {
  if (a.size() != b.size() || a.empty()) {
    throw Error("wilcoxon: need equal-length nonempty samples");
  }
  std::vector<double> abs_d;
  std::vector<bool> positive;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double d = a[i] - b[i];
    if (d == 0.0) continue;
    abs_d.push_back(std::fabs(d));
    positive.push_back(d > 0.0);
  }
  const std::size_t n = abs_d.size();
  if (n == 0) throw Error("wilcoxon: all differences are zero");

  auto r2 = doubled_midranks(abs_d);
  long long w2 = 0;
  long long max2 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    max2 += r2[i];
    if (positive[i]) w2 += r2[i];
  }
  TestResult res;
  res.method = TestMethod::kSignedRank;
  res.statistic = static_cast<double>(w2) / 2.0;

  if (n <= 12) {
    // Count sign patterns by doubled rank sum of the positive subset.
    std::vector<double> cnt(static_cast<std::size_t>(max2) + 1, 0.0);
    cnt[0] = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (long long s = max2; s >= r2[i]; --s) {
        cnt[s] += cnt[s - r2[i]];
      }
    }
    double total = std::ldexp(1.0, static_cast<int>(n));
    double le = 0.0, ge = 0.0;
    for (long long s = 0; s <= max2; ++s) {
      if (s <= w2) le += cnt[s];
      if (s >= w2) ge += cnt[s];
    }
    res.exact = true;
    res.p_greater = ge / total;
    res.p_value = two_sided(le / total, ge / total);
  } else {
    double nd = static_cast<double>(n);
    double mean = nd * (nd + 1.0) / 4.0;
    double var = nd * (nd + 1.0) * (2.0 * nd + 1.0) / 24.0 -
                 tie_correction_sum(abs_d) / 48.0;
    if (var <= 0.0) throw Error("wilcoxon: zero variance");
    double z = (res.statistic - mean) / std::sqrt(var);
    res.exact = false;
    res.p_greater = 1.0 - normal_cdf(z);
    res.p_value = two_sided(normal_cdf(z), res.p_greater);
  }
  return res;
}

TestResult wilcoxon_rank_sum(const std::vector<double>& a,
                             const std::vector<double>& b) {
  if (a.empty() || b.empty()) throw Error("wilcoxon: empty group");
  const std::size_t n1 = a.size(), n2 = b.size(), total_n = n1 + n2;
  std::vector<double> combined(a);
  combined.insert(combined.end(), b.begin(), b.end());
  auto r2 = doubled_midranks(combined);
  long long w1_2 = 0;
  long long all2 = 0;
  for (std::size_t i = 0; i < total_n; ++i) {
    all2 += r2[i];
    if (i < n1) w1_2 += r2[i];
  }
  double w1 = static_cast<double>(w1_2) / 2.0;
  TestResult res;
  res.method = TestMethod::kRankSum;
  res.statistic =
      w1 - static_cast<double>(n1) * (static_cast<double>(n1) + 1.0) / 2.0;

  if (total_n <= 12) {
    // dp[k][s]: k-subsets of the doubled ranks with sum s.
    std::vector<std::vector<double>> dp(
        n1 + 1, std::vector<double>(static_cast<std::size_t>(all2) + 1, 0.0));
    dp[0][0] = 1.0;
    for (std::size_t i = 0; i < total_n; ++i) {
      for (std::size_t k = std::min(n1, i + 1); k >= 1; --k) {
        for (long long s = all2; s >= r2[i]; --s) {
          dp[k][s] += dp[k - 1][s - r2[i]];
        }
      }
    }
    double subsets = 0.0, le = 0.0, ge = 0.0;
    for (long long s = 0; s <= all2; ++s) {
      subsets += dp[n1][s];
      if (s <= w1_2) le += dp[n1][s];
      if (s >= w1_2) ge += dp[n1][s];
    }
    res.exact = true;
    res.p_greater = ge / subsets;
    res.p_value = two_sided(le / subsets, ge / subsets);
  } else {
    double dn1 = static_cast<double>(n1), dn2 = static_cast<double>(n2);
    double dn = static_cast<double>(total_n);
    double mean_u = dn1 * dn2 / 2.0;
    double var = dn1 * dn2 / 12.0 *
                 ((dn + 1.0) - tie_correction_sum(combined) / (dn * (dn - 1.0)));
    res.exact = false;
    if (var <= 0.0) {
      // Every observation identical: the statistic is constant.
      res.p_greater = 1.0;
      res.p_value = 1.0;
    } else {
      double z = (res.statistic - mean_u) / std::sqrt(var);
      res.p_greater = 1.0 - normal_cdf(z);
      res.p_value = two_sided(normal_cdf(z), res.p_greater);
    }
  }
  return res;
}

std::vector<double> bonferroni(const std::vector<double>& p_values) {
  for (double p : p_values) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw Error("bonferroni: p-values must lie in [0, 1]");
    }
  }
  double m = static_cast<double>(p_values.size());
  std::vector<double> out;
  out.reserve(p_values.size());
  for (double p : p_values) out.push_back(std::min(1.0, p * m));
  return out;
}

std::string_view effect_magnitude_name(EffectMagnitude m) {
  switch (m) {
    case EffectMagnitude::kNegligible: return "negligible";
    case EffectMagnitude::kSmall: return "small";
    case EffectMagnitude::kMedium: return "medium";
    case EffectMagnitude::kLarge: return "large";
  }
  return "negligible";
}

namespace {

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) /
         static_cast<double>(v.size());
}

double sum_sq_dev(const std::vector<double>& v, double mean) {
  double acc = 0.0;
  for (double x : v) acc += (x - mean) * (x - mean);
  return acc;
}

}  // namespace

EffectSize cohens_d(const std::vector<double>& a,
                    const std::vector<double>& b) {
  if (a.size() < 2 || b.size() < 2) {
    throw Error("cohens_d: each group needs at least 2 elements");
  }
  double ma = mean_of(a), mb = mean_of(b);
  double pooled_var =
      (sum_sq_dev(a, ma) + sum_sq_dev(b, mb)) /
      static_cast<double>(a.size() + b.size() - 2);
  if (pooled_var <= 0.0) throw Error("cohens_d: zero pooled variance");
  EffectSize e;
  e.d = (ma - mb) / std::sqrt(pooled_var);
  e.magnitude = magnitude_of(e.d);
  return e;
}

// ---------------------------------------------------------------------------
// Factorial ANOVA

namespace {

std::string record_factor(const ExperimentRecord& r, const std::string& field) {
  if (field == "victim") return r.victim_id;
  if (field == "surrogate") return r.surrogate_id;
  if (field == "epochs") return std::to_string(r.epochs);
  if (field == "known_ratio") return format_double(r.known_ratio);
  if (field == "attack") return r.attack;
  throw Error("anova: unknown factor field: " + field);
}

double record_response(const ExperimentRecord& r, const std::string& field) {
  if (field == "power") return r.power;
  if (field == "error") return r.error;
  if (field == "auc") return r.auc;
  throw Error("anova: unknown response field: " + field);
}

// Lexicographically ordered k-combinations of {0..n-1} for k = 1..max_k.
std::vector<std::vector<std::size_t>> enumerate_terms(std::size_t n,
                                                      std::size_t max_k) {
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t k = 1; k <= std::min(n, max_k); ++k) {
    std::vector<std::size_t> comb(k);
    std::iota(comb.begin(), comb.end(), 0u);
    while (true) {
      out.push_back(comb);
      // Rightmost position that can still advance.
      std::size_t pos = k;
      bool done = true;
      for (std::size_t j = k; j-- > 0;) {
        if (comb[j] < n - (k - j)) {
          pos = j;
          done = false;
          break;
        }
      }
      if (done) break;
      ++comb[pos];
      for (std::size_t j = pos + 1; j < k; ++j) comb[j] = comb[j - 1] + 1;
    }
  }
  return out;
}

}  // namespace

AnovaTable factorial_anova(const std::vector<ExperimentRecord>& records,
                           const std::string& response,
                           const std::vector<std::string>& factors,
                           std::size_t max_interaction) {
  if (records.empty()) throw Error("anova: no records");
  if (factors.empty()) throw Error("anova: no factors");
  if (factors.size() > 16) throw Error("anova: too many factors");
  if (max_interaction < 1) throw Error("anova: max_interaction must be >= 1");

  const std::size_t nf = factors.size();
  const std::size_t n_obs = records.size();

  std::vector<std::vector<std::string>> levels(nf);
  std::vector<std::vector<std::size_t>> obs_level(n_obs,
                                                  std::vector<std::size_t>(nf));
  for (std::size_t f = 0; f < nf; ++f) {
    std::vector<std::string> vals;
    vals.reserve(n_obs);
    for (const auto& r : records) vals.push_back(record_factor(r, factors[f]));
    std::vector<std::string> distinct(vals);
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()),
                   distinct.end());
    if (distinct.size() < 2) {
      throw Error("anova: factor needs at least two levels: " + factors[f]);
    }
    levels[f] = distinct;
    for (std::size_t i = 0; i < n_obs; ++i) {
      obs_level[i][f] = static_cast<std::size_t>(
          std::lower_bound(distinct.begin(), distinct.end(), vals[i]) -
          distinct.begin());
    }
  }

  std::size_t n_cells = 1;
  for (std::size_t f = 0; f < nf; ++f) n_cells *= levels[f].size();
  if (n_obs % n_cells != 0) {
    throw Error("anova: grid incomplete or unbalanced");
  }
  {
    std::vector<std::size_t> cell_count(n_cells, 0);
    for (std::size_t i = 0; i < n_obs; ++i) {
      std::size_t key = 0;
      for (std::size_t f = 0; f < nf; ++f) {
        key = key * levels[f].size() + obs_level[i][f];
      }
      ++cell_count[key];
    }
    std::size_t reps = n_obs / n_cells;
    for (std::size_t c : cell_count) {
      if (c != reps) throw Error("anova: grid incomplete or unbalanced");
    }
  }

  std::vector<double> y(n_obs);
  for (std::size_t i = 0; i < n_obs; ++i) {
    y[i] = record_response(records[i], response);
  }
  double grand = mean_of(y);
  double total_ss = sum_sq_dev(y, grand);
  if (total_ss == 0.0) throw Error("anova: zero total variation");

  auto terms = enumerate_terms(nf, max_interaction);

  // Per-term group key over the term's factors only.
  auto group_key = [&](const std::vector<std::size_t>& term,
                       const std::vector<std::size_t>& lv) {
    std::size_t key = 0;
    for (std::size_t f : term) key = key * levels[f].size() + lv[f];
    return key;
  };
  auto group_count = [&](const std::vector<std::size_t>& term) {
    std::size_t n = 1;
    for (std::size_t f : term) n *= levels[f].size();
    return n;
  };

  // Effects in subset order; every proper subset of an enumerated term is
  // itself enumerated (it is smaller), so lookups always hit.
  std::vector<std::vector<double>> effects(terms.size());
  std::vector<double> term_ss(terms.size(), 0.0);
  auto term_index = [&](const std::vector<std::size_t>& term) {
    for (std::size_t t = 0; t < terms.size(); ++t) {
      if (terms[t] == term) return t;
    }
    throw Error("anova: internal term lookup failure");
  };

  for (std::size_t t = 0; t < terms.size(); ++t) {
    const auto& term = terms[t];
    std::size_t groups = group_count(term);
    std::vector<double> sum(groups, 0.0);
    std::vector<std::size_t> cnt(groups, 0);
    for (std::size_t i = 0; i < n_obs; ++i) {
      std::size_t g = group_key(term, obs_level[i]);
      sum[g] += y[i];
      ++cnt[g];
    }
    std::vector<double> eff(groups, 0.0);
    // Decode each group back to per-factor levels to project onto subsets.
    for (std::size_t g = 0; g < groups; ++g) {
      std::vector<std::size_t> lv(nf, 0);
      std::size_t rest = g;
      for (std::size_t q = term.size(); q-- > 0;) {
        std::size_t f = term[q];
        lv[f] = rest % levels[f].size();
        rest /= levels[f].size();
      }
      double e = sum[g] / static_cast<double>(cnt[g]) - grand;
      // Subtract every proper nonempty sub-term's effect.
      std::size_t k = term.size();
      for (std::size_t mask = 1; mask + 1 < (1ull << k); ++mask) {
        std::vector<std::size_t> sub;
        for (std::size_t q = 0; q < k; ++q) {
          if (mask & (1ull << q)) sub.push_back(term[q]);
        }
        e -= effects[term_index(sub)][group_key(sub, lv)];
      }
      eff[g] = e;
    }
    double weight = static_cast<double>(n_obs) / static_cast<double>(groups);
    double ss = 0.0;
    for (double e : eff) ss += e * e;
    term_ss[t] = ss * weight;
    effects[t] = std::move(eff);
  }

  AnovaTable table;
  table.total_ss = total_ss;
  double model_ss = 0.0;
  std::size_t model_df = 0;
  std::vector<std::size_t> term_df(terms.size());
  for (std::size_t t = 0; t < terms.size(); ++t) {
    std::size_t df = 1;
    for (std::size_t f : terms[t]) df *= levels[f].size() - 1;
    term_df[t] = df;
    model_df += df;
    model_ss += term_ss[t];
  }
  double residual_ss = total_ss - model_ss;
  std::size_t residual_df = n_obs - 1 - model_df;
  double ms_res = residual_df > 0
                      ? residual_ss / static_cast<double>(residual_df)
                      : kNan;

  for (std::size_t t = 0; t < terms.size(); ++t) {
    AnovaRow row;
    for (std::size_t q = 0; q < terms[t].size(); ++q) {
      if (q) row.term += ':';
      row.term += factors[terms[t][q]];
    }
    row.sum_of_squares = term_ss[t];
    row.sst_percent = 100.0 * term_ss[t] / total_ss;
    row.df = term_df[t];
    if (residual_df > 0) {
      double ms = term_ss[t] / static_cast<double>(term_df[t]);
      row.f = ms_res > 0.0 ? ms / ms_res
                           : std::numeric_limits<double>::infinity();
      row.p_value = f_distribution_sf(row.f, static_cast<double>(term_df[t]),
                                      static_cast<double>(residual_df));
    } else {
      row.f = kNan;
      row.p_value = kNan;
    }
    table.rows.push_back(std::move(row));
  }
  table.rows.push_back({"residual", residual_ss,
                        100.0 * residual_ss / total_ss, residual_df, kNan,
                        kNan});
  table.rows.push_back({"total", total_ss, 100.0, n_obs - 1, kNan, kNan});
  return table;
}

// ---------------------------------------------------------------------------
// RQ3 features

std::size_t levenshtein(std::string_view a, std::string_view b) {
  if (a.size() < b.size()) std::swap(a, b);
  std::vector<std::size_t> row(b.size() + 1);
  std::iota(row.begin(), row.end(), 0u);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      std::size_t next = std::min({row[j] + 1, row[j - 1] + 1,
                                   diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
      diag = row[j];
      row[j] = next;
    }
  }
  return row[b.size()];
}

const std::unordered_set<std::string>& java_keywords() {
  static const std::unordered_set<std::string> kw = {
      "abstract", "assert",   "boolean",    "break",      "byte",
      "case",     "catch",    "char",       "class",      "const",
      "continue", "default",  "do",         "double",     "else",
      "enum",     "extends",  "final",      "finally",    "float",
      "for",      "goto",     "if",         "implements", "import",
      "instanceof", "int",    "interface",  "long",       "native",
      "new",      "package",  "private",    "protected",  "public",
      "return",   "short",    "static",     "strictfp",   "super",
      "switch",   "synchronized", "this",   "throw",      "throws",
      "transient", "try",     "void",       "volatile",   "while",
      "true",     "false",    "null"};
  return kw;
}

const std::vector<std::string>& feature_names() {
  static const std::vector<std::string> names = {
      "input_length", "output_length",  "perplexity",
      "edit_distance", "bleu",          "variable_count"};
  return names;
}

FeatureRow extract_rq3_features(
    const AttackInstance& inst, const CompletionModel& victim,
    const std::unordered_set<std::string>& keywords) {
  FeatureRow row;
  row.instance_id = inst.id;
  row.input_length = static_cast<double>(
      tokenize(detokenize(inst.input), TokenScheme::kWhitespace).size());
  row.output_length = static_cast<double>(
      tokenize(detokenize(inst.output), TokenScheme::kWhitespace).size());
  TokenSeq example = inst.input;
  example.insert(example.end(), inst.truth.begin(), inst.truth.end());
  row.perplexity = std::exp(log_perplexity(victim, example));
  row.edit_distance = static_cast<double>(
      levenshtein(detokenize(inst.output), detokenize(inst.truth)));
  row.bleu = smoothed_bleu(inst.output, inst.truth);
  double vars = 0.0;
  for (const auto& tok :
       tokenize(detokenize(example), TokenScheme::kCodeLexer)) {
    if (is_identifier(tok) && keywords.find(tok) == keywords.end()) {
      vars += 1.0;
    }
  }
  row.variable_count = vars;
  return row;
}

namespace {

double feature_value(const FeatureRow& row, std::size_t feature) {
  switch (feature) {
    case 0: return row.input_length;
    case 1: return row.output_length;
    case 2: return row.perplexity;
    case 3: return row.edit_distance;
    case 4: return row.bleu;
    case 5: return row.variable_count;
  }
  throw Error("compare_groups: bad feature index");
}

}  // namespace

std::vector<GroupComparison> compare_groups(
    const std::vector<FeatureRow>& success_rows,
    const std::vector<FeatureRow>& fail_rows) {
  if (success_rows.empty() || fail_rows.empty()) {
    throw Error("compare_groups: empty group");
  }
  std::vector<GroupComparison> report;
  for (std::size_t f = 0; f < feature_names().size(); ++f) {
    std::vector<double> s, u;
    s.reserve(success_rows.size());
    u.reserve(fail_rows.size());
    for (const auto& r : success_rows) s.push_back(feature_value(r, f));
    for (const auto& r : fail_rows) u.push_back(feature_value(r, f));
    GroupComparison cmp;
    cmp.feature = feature_names()[f];
    cmp.mean_success = mean_of(s);
    cmp.mean_fail = mean_of(u);
    cmp.p_value = wilcoxon_rank_sum(s, u).p_value;
    std::size_t df = s.size() + u.size() - 2;
    double pooled =
        df > 0 ? (sum_sq_dev(s, cmp.mean_success) + sum_sq_dev(u, cmp.mean_fail)) /
                     static_cast<double>(df)
               : 0.0;
    double diff = cmp.mean_success - cmp.mean_fail;
    if (pooled > 0.0) {
      cmp.d = diff / std::sqrt(pooled);
    } else {
      cmp.d = diff == 0.0
                  ? 0.0
                  : std::copysign(std::numeric_limits<double>::infinity(), diff);
    }
    cmp.magnitude = magnitude_of(cmp.d);
    report.push_back(std::move(cmp));
  }
  return report;
}

// ---------------------------------------------------------------------------
// Numerics

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

namespace {

// Modified Lentz evaluation of the incomplete-beta continued fraction.
double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIter = 500;
  constexpr double kEps = 1e-12;
  constexpr double kTiny = 1e-300;
  double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) return h;
  }
  throw Error("incomplete beta: continued fraction did not converge");
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) {
    throw Error("incomplete beta: parameters must be positive");
  }
  if (!(x >= 0.0 && x <= 1.0)) {
    throw Error("incomplete beta: x must lie in [0, 1]");
  }
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  double front = std::exp(std::lgamma(a + b) - std::lgamma(a) -
                          std::lgamma(b) + a * std::log(x) +
                          b * std::log1p(-x));
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * beta_continued_fraction(a, b, x) / a;
  }
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double f_distribution_sf(double f, double df1, double df2) {
  if (!(df1 > 0.0) || !(df2 > 0.0)) {
    throw Error("f distribution: degrees of freedom must be positive");
  }
  if (std::isnan(f)) return kNan;
  if (f <= 0.0) return 1.0;
  if (std::isinf(f)) return 0.0;
  return regularized_incomplete_beta(df2 / 2.0, df1 / 2.0,
                                     df2 / (df2 + df1 * f));
}

}  // namespace mialab
