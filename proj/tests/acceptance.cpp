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
// Release gate. Ten end-to-end checks over the bundled toy corpus and a few
// synthetic setups; every check prints one PASS/FAIL line with the measured
// numbers and the exit code is the count of failures. Compiled with
// MIALAB_DATA_DIR pointing at the repository data/ directory.

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "mialab/cli.hpp"
#include "mialab/common.hpp"
#include "mialab/corpus.hpp"
#include "mialab/eval.hpp"
#include "mialab/gotcha.hpp"
#include "mialab/lm.hpp"
#include "mialab/stats.hpp"

using namespace mialab;

namespace {

std::string fmt(double v, int prec = 4) {
  std::ostringstream os;
  os << std::setprecision(prec) << v;
  return os.str();
}

struct Gate {
  int failures = 0;
  void report(int idx, bool pass, const std::string& detail) {
    std::cout << "[" << std::setw(2) << idx << "] " << (pass ? "PASS" : "FAIL")
              << " " << detail << std::endl;
    if (!pass) ++failures;
  }
};

template <typename Fn>
void checked(Gate& gate, int idx, Fn&& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    gate.report(idx, false, std::string("threw: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Shared toy-corpus study: the bundled 500+500 document corpus, a heavily
// overfit victim (five passes) and a single-pass surrogate, all nine attacks,
// three seeds. Checks 1, 4, 5 and 6 read from this.

std::vector<std::string> nine_attacks() {
  return {"gotcha", "bleu-nb",   "bleu-dt", "bleu-knn",  "bleu-mlp",
          "bleu-dnn", "ppl",     "ppl-ratio", "zlib-ratio"};
}

ExperimentConfig toy_config() {
  ExperimentConfig cfg;
  cfg.attacks = nine_attacks();
  cfg.gotcha.learning_rate = 0.5;
  cfg.gotcha.epochs = 60;
  DecodingConfig dec;
  dec.strategy = DecodeStrategy::kBeam;
  dec.beam_size = 4;
  dec.max_len = 8;
  cfg.victim_decoding = dec;
  cfg.surrogate_decoding = dec;
  cfg.seeds = {1, 2, 3};
  cfg.victim_id = "victim";
  cfg.surrogate_id = "surrogate";
  cfg.epochs = 5;
  cfg.known_ratio = 0.45;
  return cfg;
}

struct ToyStudy {
  std::vector<Example> train_examples;
  std::vector<Example> test_examples;
  SplitPlan plan;
  DatasetBundle bundle;
  NGramModel victim;
  NGramModel surrogate;
  ExperimentResult result;
  double seconds = 0.0;
};

ToyStudy run_toy_study() {
  namespace fs = std::filesystem;
  const fs::path data(MIALAB_DATA_DIR);
  auto t0 = std::chrono::steady_clock::now();
  ExampleOptions opts;
  opts.target_len = 8;
  auto train_examples =
      build_examples(load_corpus(data / "toy_train.jsonl", CorpusFormat::kJsonl), opts);
  auto test_examples =
      build_examples(load_corpus(data / "toy_test.jsonl", CorpusFormat::kJsonl), opts);
  SplitPlan plan = plan_splits(train_examples.size(), test_examples.size(), 0.45, 7);
  DatasetBundle bundle = materialize(plan, train_examples, test_examples);
  NGramConfig vcfg;
  vcfg.order = 5;
  vcfg.discount = 0.1;
  vcfg.passes = 5;
  NGramConfig scfg = vcfg;
  scfg.passes = 1;
  NGramModel victim = NGramModel::train(bundle.victim_train, vcfg);
  NGramModel surrogate = NGramModel::train(bundle.surrogate_train, scfg);
  ExperimentResult result = run_experiment(victim, surrogate, bundle.mia_train,
                                           bundle.mia_eval, toy_config());
  double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return ToyStudy{std::move(train_examples), std::move(test_examples),
                  std::move(plan),           std::move(bundle),
                  std::move(victim),         std::move(surrogate),
                  std::move(result),         seconds};
}

std::map<std::string, ExperimentRecord> mean_rows(const ExperimentResult& r) {
  std::map<std::string, ExperimentRecord> m;
  for (const auto& rec : r.records)
    if (!rec.seed) m[rec.attack] = rec;
  return m;
}

// [1] The three-channel classifier has to clear 0.80 AUC on the toy study and
// beat the best of the eight baselines by at least 0.10, inside two minutes.
void check_toy_margin(Gate& gate, const ToyStudy& toy) {
  auto means = mean_rows(toy.result);
  double gotcha = means.at("gotcha").auc;
  std::string best_name;
  double best = -1.0;
  for (const auto& [name, rec] : means) {
    if (name == "gotcha") continue;
    if (rec.auc > best) {
      best = rec.auc;
      best_name = name;
    }
  }
  bool pass = gotcha >= 0.80 && gotcha - best >= 0.10 && toy.seconds <= 120.0;
  gate.report(1, pass,
              "toy study: classifier auc " + fmt(gotcha) + ", best baseline " +
                  best_name + " " + fmt(best) + ", margin " + fmt(gotcha - best) +
                  ", runtime " + fmt(toy.seconds, 3) +
                  "s (need auc >= 0.80, margin >= 0.10, runtime <= 120s)");
}

// ---------------------------------------------------------------------------
// [2] Channel ablations. A synthetic set where the produced-output channel
// carries a perfect membership marker and the ground-truth channel a partial
// one: hiding the output must cost at least as much AUC as hiding the truth.

std::vector<AttackInstance> channel_suite(std::size_t n, std::size_t id_base,
                                          Rng& rng) {
  std::vector<AttackInstance> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    AttackInstance a;
    a.id = "s" + std::to_string(id_base + i);
    a.label = static_cast<int>(i % 2);
    a.input = {"ctx" + std::to_string(rng.below(40)),
               "ctx" + std::to_string(rng.below(40))};
    bool truth_signal = a.label == 1 && i % 8 != 1;  // three quarters of members
    a.truth = {"t_base", truth_signal
                             ? std::string("t_sig")
                             : "t_plain" + std::to_string(rng.below(6))};
    a.output = {"o_base", a.label == 1 ? "o_mem" : "o_non"};
    out.push_back(std::move(a));
  }
  return out;
}

void check_ablation_order(Gate& gate) {
  Rng rng(424242);
  auto train = channel_suite(128, 0, rng);
  auto eval = channel_suite(64, 1000, rng);
  std::vector<int> labels;
  labels.reserve(eval.size());
  for (const auto& a : eval) labels.push_back(a.label);
  GotchaConfig base;
  base.embed_dim = 16;
  base.hidden_dim = 16;
  base.learning_rate = 0.5;
  base.epochs = 60;
  auto mean_auc = [&](ChannelMask mask) {
    GotchaConfig cfg = base;
    cfg.mask = mask;
    double total = 0.0;
    for (std::uint64_t seed : {1, 2, 3}) {
      GotchaClassifier clf = GotchaClassifier::train(train, cfg, seed);
      std::vector<double> scores;
      scores.reserve(eval.size());
      for (const auto& a : eval) scores.push_back(clf.score(a));
      total += pairwise_auc(scores, labels);
    }
    return total / 3.0;
  };
  ChannelMask full;
  ChannelMask no_truth;
  no_truth.truth = false;
  ChannelMask no_output;
  no_output.output = false;
  double auc_full = mean_auc(full);
  double auc_no_truth = mean_auc(no_truth);
  double auc_no_output = mean_auc(no_output);
  bool pass = auc_no_output <= auc_no_truth;
  gate.report(2, pass,
              "channel ablations: full " + fmt(auc_full) + ", no-truth " +
                  fmt(auc_no_truth) + ", no-output " + fmt(auc_no_output) +
                  " (need no-output <= no-truth, three-seed means)");
}

// ---------------------------------------------------------------------------
// [3] A victim that memorized its training set outright: the perplexity
// ranking has to be essentially perfect.

void check_lookup_ranking(Gate& gate) {
  LookupModel victim(1e-6);
  std::vector<LabeledExample> mia_eval;
  auto make_ex = [](const std::string& id, int i, bool member) {
    Example ex;
    ex.id = id;
    ex.input = {"fn", "call"};
    ex.truth = {"stmt", (member ? "m" : "n") + std::to_string(i), ";"};
    return ex;
  };
  for (int i = 0; i < 100; ++i) {
    Example ex = make_ex("m" + std::to_string(i), i, true);
    victim.add_member(ex);
    mia_eval.push_back({ex, 1});
  }
  for (int i = 0; i < 100; ++i)
    mia_eval.push_back({make_ex("n" + std::to_string(i), i, false), 0});
  std::vector<LabeledExample> mia_train = {mia_eval[0], mia_eval[1],
                                           mia_eval[100], mia_eval[101]};
  ExperimentConfig cfg;
  cfg.attacks = {"ppl"};
  cfg.seeds = {1};
  DecodingConfig dec;
  dec.strategy = DecodeStrategy::kGreedy;
  dec.max_len = 3;
  cfg.victim_decoding = dec;
  cfg.surrogate_decoding = dec;
  ExperimentResult res = run_experiment(victim, victim, mia_train, mia_eval, cfg);
  ExperimentRecord rec = mean_rows(res).at("ppl");
  bool pass = rec.power >= 0.99 && rec.error <= 0.01;
  gate.report(3, pass,
              "memorizing victim: perplexity ranking power " + fmt(rec.power) +
                  ", error " + fmt(rec.error) + ", auc " + fmt(rec.auc) +
                  " (need power >= 0.99, error <= 0.01)");
}

// ---------------------------------------------------------------------------
// [4] Null control: when the victim and surrogate trained only on data
// disjoint from both membership sets, every attack has to land near chance.
// The corpus is an exchangeable token soup: each pool arranges the same
// fixed per-word multiset into fresh documents, so no token frequency,
// document text or cross-document structure marks which pool an example
// came from. (The bundled toy corpus would not do here: its paired chain
// documents share header tokens inside one pool, so membership is partly
// readable from text alone. That structure is deliberate, a stand-in for
// near-duplicate functions inside one repository, but it means the toy
// labels are not exchangeable, which is the one thing this check needs.)

std::vector<Example> soup_pool(const std::string& prefix, std::size_t docs,
                               Rng& rng) {
  constexpr std::size_t kDocLen = 16;  // 8 prompt + 8 continuation tokens
  constexpr std::size_t kVocab = 60;   // 300 docs -> every word exactly 80x
  std::vector<std::string> tokens(docs * kDocLen);
  for (std::size_t i = 0; i < tokens.size(); ++i)
    tokens[i] = "w" + std::to_string(i % kVocab);
  rng.shuffle(tokens);
  std::vector<Example> pool(docs);
  for (std::size_t d = 0; d < docs; ++d) {
    pool[d].id = prefix + std::to_string(d);
    for (std::size_t j = 0; j < kDocLen; ++j) {
      auto& side = j < kDocLen / 2 ? pool[d].input : pool[d].truth;
      side.push_back(tokens[d * kDocLen + j]);
    }
  }
  return pool;
}

void check_null_control(Gate& gate) {
  Rng rng(8601);
  auto train_pool = soup_pool("ntr", 300, rng);
  auto test_pool = soup_pool("nte", 300, rng);
  SplitPlan plan = plan_splits(train_pool.size(), test_pool.size(), 0.45, 7);
  DatasetBundle bundle = materialize(plan, train_pool, test_pool);
  auto leftovers = leftover_train_examples(plan, train_pool);
  NGramConfig vcfg;
  vcfg.order = 5;
  vcfg.discount = 0.1;
  vcfg.passes = 5;
  NGramConfig scfg = vcfg;
  scfg.passes = 1;
  NGramModel victim = NGramModel::train(leftovers, vcfg);
  NGramModel surrogate = NGramModel::train(leftovers, scfg);
  ExperimentResult res = run_experiment(victim, surrogate, bundle.mia_train,
                                        bundle.mia_eval, toy_config());
  double lo = 1.0, hi = 0.0;
  std::string lo_name, hi_name;
  for (const auto& [name, rec] : mean_rows(res)) {
    if (rec.auc < lo) {
      lo = rec.auc;
      lo_name = name;
    }
    if (rec.auc > hi) {
      hi = rec.auc;
      hi_name = name;
    }
  }
  bool pass = lo >= 0.43 && hi <= 0.57;
  gate.report(4, pass,
              "null control (exchangeable soup, models on " +
                  std::to_string(leftovers.size()) +
                  " leftover docs): auc spans " + fmt(lo) + " (" + lo_name +
                  ") to " + fmt(hi) + " (" + hi_name +
                  ") (need all nine inside [0.43, 0.57], three-seed means)");
}

// ---------------------------------------------------------------------------
// [5] Decoding as a defense. Switching the victim from beam search to top-k
// sampling must knock at least 0.10 off the classifier AUC, and the seven
// stock (k, temperature) settings must land within a 0.05 band of each other.

void check_sampling_defense(Gate& gate, const ToyStudy& toy) {
  double beam_auc = mean_rows(toy.result).at("gotcha").auc;
  ExperimentConfig base = toy_config();
  base.attacks = {"gotcha"};
  auto classifier_auc = [&](const DecodingConfig& dec) {
    ExperimentConfig ec = base;
    ec.victim_decoding = dec;
    ec.surrogate_decoding = dec;
    ExperimentResult res = run_experiment(toy.victim, toy.surrogate,
                                          toy.bundle.mia_train,
                                          toy.bundle.mia_eval, ec);
    return mean_rows(res).at("gotcha").auc;
  };
  const std::vector<std::pair<std::uint64_t, double>> sweep = {
      {50, 0.1}, {50, 0.5}, {50, 1.0}, {50, 2.0},
      {10, 1.0}, {50, 1.0}, {100, 1.0}};
  std::map<std::pair<std::uint64_t, double>, double> cache;
  double lo = 1.0, hi = 0.0, k50_t1 = 0.0;
  for (const auto& [k, temp] : sweep) {
    auto key = std::make_pair(k, temp);
    auto it = cache.find(key);
    if (it == cache.end()) {
      DecodingConfig dec = base.victim_decoding;
      dec.strategy = DecodeStrategy::kTopk;
      dec.topk_k = k;
      dec.temperature = temp;
      it = cache.emplace(key, classifier_auc(dec)).first;
    }
    lo = std::min(lo, it->second);
    hi = std::max(hi, it->second);
    if (k == 50 && temp == 1.0) k50_t1 = it->second;
  }
  double drop = beam_auc - k50_t1;
  double band = hi - lo;
  bool pass = drop >= 0.10 && band <= 0.05;
  gate.report(5, pass,
              "sampling defense: beam auc " + fmt(beam_auc) + ", top-50 t=1 auc " +
                  fmt(k50_t1) + ", drop " + fmt(drop) +
                  " (need >= 0.10); auc band over the seven stock settings " +
                  fmt(band) + " (need <= 0.05)");
}

// ---------------------------------------------------------------------------
// [6] On balanced data every ranking attack satisfies power + error == 1
// exactly: the cutoff predicts exactly as many members as there are, so every
// false positive pairs with a false negative and the two rates share one
// denominator.

void check_ranking_identity(Gate& gate, const ToyStudy& toy) {
  Rng rng(2026);
  const int trials = 60;
  bool ok = true;
  std::string fail_detail;
  for (int t = 0; t < trials && ok; ++t) {
    std::size_t half = 1 + rng.below(200);
    std::vector<int> labels(2 * half, 0);
    for (std::size_t i = 0; i < half; ++i) labels[i] = 1;
    rng.shuffle(labels);
    std::vector<double> scores;
    scores.reserve(labels.size());
    bool coarse = t % 3 == 0;  // force heavy score ties on a third of trials
    for (std::size_t i = 0; i < labels.size(); ++i)
      scores.push_back(coarse ? static_cast<double>(rng.below(7)) / 7.0
                              : rng.unit());
    std::vector<int> preds = rank_and_cutoff(scores, t % 2 == 0, 0.5);
    PowerError pe = power_error(confusion(preds, labels));
    if (pe.power + pe.error != 1.0) {
      ok = false;
      fail_detail = "trial " + std::to_string(t) + ": power + error = " +
                    fmt(pe.power + pe.error, 17);
    }
  }
  int study_rows = 0;
  for (const auto& rec : toy.result.records) {
    if (!rec.seed) continue;  // seed-mean rows reintroduce rounding
    if (rec.attack != "ppl" && rec.attack != "ppl-ratio" &&
        rec.attack != "zlib-ratio")
      continue;
    ++study_rows;
    if (rec.power + rec.error != 1.0) {
      ok = false;
      fail_detail = rec.attack + " study row: power + error = " +
                    fmt(rec.power + rec.error, 17);
    }
  }
  gate.report(6, ok,
              ok ? "ranking identity: power + error == 1 exactly on " +
                       std::to_string(trials) + " balanced random trials and " +
                       std::to_string(study_rows) + " toy-study rows"
                 : "ranking identity violated: " + fail_detail);
}

// ---------------------------------------------------------------------------
// [7] The trapezoid area under the ROC curve equals the pairwise
// win-fraction statistic on arbitrary (tie-heavy) score sets.

void check_auc_equivalence(Gate& gate) {
  Rng rng(7070);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    std::size_t n = 2 + rng.below(60);
    std::vector<double> scores;
    std::vector<int> labels;
    for (std::size_t i = 0; i < n; ++i) {
      scores.push_back(t % 2 == 0 ? static_cast<double>(rng.below(6)) / 6.0
                                  : rng.unit());
      labels.push_back(static_cast<int>(rng.below(2)));
    }
    labels[0] = 1;  // keep both classes present
    labels[1] = 0;
    double trapezoid = roc_curve(scores, labels).auc;
    double pairwise = pairwise_auc(scores, labels);
    worst = std::max(worst, std::abs(trapezoid - pairwise));
  }
  bool pass = worst <= 1e-9;
  gate.report(7, pass,
              "roc trapezoid vs pairwise statistic: max |difference| " +
                  fmt(worst, 3) + " over 100 random score sets (need <= 1e-9)");
}

// ---------------------------------------------------------------------------
// [8] Analytic classifier gradients against central finite differences on a
// miniature configuration, including an empty channel.

void check_gradients(Gate& gate) {
  std::vector<AttackInstance> data;
  auto add = [&](const char* id, TokenSeq in, TokenSeq tr, TokenSeq out,
                 int label) {
    AttackInstance a;
    a.id = id;
    a.input = std::move(in);
    a.truth = std::move(tr);
    a.output = std::move(out);
    a.label = label;
    data.push_back(std::move(a));
  };
  add("g0", {"a", "b"}, {"c"}, {"c", "d"}, 1);
  add("g1", {"a"}, {"e", "c"}, {"e"}, 0);
  add("g2", {"b", "f"}, {}, {"d"}, 1);  // empty truth channel
  add("g3", {"f"}, {"c", "e"}, {"a", "b", "f"}, 0);
  add("g4", {"e", "e", "b"}, {"d"}, {"c"}, 1);
  add("g5", {"d"}, {"f"}, {"b"}, 0);
  GotchaConfig cfg;
  cfg.embed_dim = 3;
  cfg.hidden_dim = 2;
  GotchaClassifier clf = GotchaClassifier::init(data, cfg, 11);
  std::vector<double> grad = clf.loss_gradient(data);
  std::vector<double> params = clf.parameters();
  const double h = 1e-5;
  double worst = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    std::vector<double> p = params;
    p[i] = params[i] + h;
    clf.set_parameters(p);
    double up = clf.loss(data);
    p[i] = params[i] - h;
    clf.set_parameters(p);
    double down = clf.loss(data);
    double fd = (up - down) / (2.0 * h);
    double rel =
        std::abs(grad[i] - fd) / std::max({1.0, std::abs(grad[i]), std::abs(fd)});
    worst = std::max(worst, rel);
  }
  bool pass = grad.size() == params.size() && worst <= 1e-4;
  gate.report(8, pass,
              "classifier gradients vs central differences: max relative gap " +
                  fmt(worst, 3) + " over " + std::to_string(params.size()) +
                  " parameters (need <= 1e-4)");
}

// ---------------------------------------------------------------------------
// [9] Small-sample rank tests against direct enumeration, and the variance
// decomposition identity of the factorial analysis.

std::vector<double> midranks(const std::vector<double>& v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t x, std::size_t y) { return v[x] < v[y]; });
  std::vector<double> rank(v.size(), 0.0);
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j < order.size() && v[order[j]] == v[order[i]]) ++j;
    double r = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) rank[order[k]] = r;
    i = j;
  }
  return rank;
}

struct BruteTest {
  double statistic = 0.0;
  double p_greater = 0.0;
  double p_two = 0.0;
};

// All 2^m sign assignments over the nonzero differences. Midranks are
// multiples of one half, so every comparison below is exact in doubles.
BruteTest brute_signed_rank(const std::vector<double>& a,
                            const std::vector<double>& b) {
  std::vector<double> mags;
  std::vector<int> signs;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double d = a[i] - b[i];
    if (d != 0.0) {
      mags.push_back(std::abs(d));
      signs.push_back(d > 0 ? 1 : -1);
    }
  }
  std::vector<double> rk = midranks(mags);
  double obs = 0.0;
  for (std::size_t i = 0; i < rk.size(); ++i)
    if (signs[i] > 0) obs += rk[i];
  std::size_t m = rk.size();
  std::size_t total = std::size_t{1} << m;
  std::size_t ge = 0, le = 0;
  for (std::size_t bits = 0; bits < total; ++bits) {
    double w = 0.0;
    for (std::size_t i = 0; i < m; ++i)
      if (bits & (std::size_t{1} << i)) w += rk[i];
    if (w >= obs) ++ge;
    if (w <= obs) ++le;
  }
  double pg = static_cast<double>(ge) / static_cast<double>(total);
  double pl = static_cast<double>(le) / static_cast<double>(total);
  return {obs, pg, std::min(1.0, 2.0 * std::min(pg, pl))};
}

// All C(n, n1) assignments of pooled midranks to the first sample.
BruteTest brute_rank_sum(const std::vector<double>& a,
                         const std::vector<double>& b) {
  std::vector<double> pool = a;
  pool.insert(pool.end(), b.begin(), b.end());
  std::vector<double> rk = midranks(pool);
  std::size_t n1 = a.size();
  std::size_t n = pool.size();
  double base = static_cast<double>(n1 * (n1 + 1)) / 2.0;
  double obs = -base;
  for (std::size_t i = 0; i < n1; ++i) obs += rk[i];
  std::size_t ge = 0, le = 0, count = 0;
  for (std::size_t bits = 0; bits < (std::size_t{1} << n); ++bits) {
    if (static_cast<std::size_t>(std::popcount(bits)) != n1) continue;
    ++count;
    double u = -base;
    for (std::size_t i = 0; i < n; ++i)
      if (bits & (std::size_t{1} << i)) u += rk[i];
    if (u >= obs) ++ge;
    if (u <= obs) ++le;
  }
  double pg = static_cast<double>(ge) / static_cast<double>(count);
  double pl = static_cast<double>(le) / static_cast<double>(count);
  return {obs, pg, std::min(1.0, 2.0 * std::min(pg, pl))};
}

void check_small_sample_stats(Gate& gate) {
  Rng rng(5150);
  double worst_stat = 0.0, worst_p = 0.0;
  int cases = 0;
  for (std::size_t n = 1; n <= 8; ++n) {
    for (int t = 0; t < 30; ++t) {
      std::vector<double> a, b;
      for (std::size_t i = 0; i < n; ++i) {
        a.push_back(static_cast<double>(rng.below(4)));
        b.push_back(static_cast<double>(rng.below(4)));
      }
      if (a == b) continue;  // the all-zero-difference case is rejected
      TestResult got = wilcoxon_signed_rank(a, b);
      BruteTest want = brute_signed_rank(a, b);
      ++cases;
      worst_stat = std::max(worst_stat, std::abs(got.statistic - want.statistic));
      worst_p = std::max({worst_p, std::abs(got.p_greater - want.p_greater),
                          std::abs(got.p_value - want.p_two)});
    }
  }
  for (std::size_t n1 = 1; n1 <= 7; ++n1) {
    for (std::size_t n2 = 1; n1 + n2 <= 8; ++n2) {
      for (int t = 0; t < 20; ++t) {
        std::vector<double> a, b;
        for (std::size_t i = 0; i < n1; ++i)
          a.push_back(static_cast<double>(rng.below(4)));
        for (std::size_t i = 0; i < n2; ++i)
          b.push_back(static_cast<double>(rng.below(4)));
        TestResult got = wilcoxon_rank_sum(a, b);
        BruteTest want = brute_rank_sum(a, b);
        ++cases;
        worst_stat =
            std::max(worst_stat, std::abs(got.statistic - want.statistic));
        worst_p = std::max({worst_p, std::abs(got.p_greater - want.p_greater),
                            std::abs(got.p_value - want.p_two)});
      }
    }
  }
  Rng arng(31337);
  double worst_rel = 0.0;
  for (int t = 0; t < 20; ++t) {
    std::vector<ExperimentRecord> records;
    std::vector<double> ys;
    for (int v = 0; v < 2; ++v)
      for (int s = 0; s < 2; ++s)
        for (int e = 0; e < 2; ++e)
          for (int r = 0; r < 3; ++r) {
            ExperimentRecord rec;
            rec.victim_id = "v" + std::to_string(v);
            rec.surrogate_id = "s" + std::to_string(s);
            rec.epochs = static_cast<std::size_t>(e + 1);
            rec.known_ratio = 0.4;
            rec.attack = "gotcha";
            rec.seed = static_cast<std::uint64_t>(r);
            rec.power = arng.unit();
            ys.push_back(rec.power);
            records.push_back(std::move(rec));
          }
    AnovaTable table =
        factorial_anova(records, "power", {"victim", "surrogate", "epochs"}, 3);
    double mean = std::accumulate(ys.begin(), ys.end(), 0.0) /
                  static_cast<double>(ys.size());
    double direct_total = 0.0;
    for (double y : ys) direct_total += (y - mean) * (y - mean);
    double model = 0.0, residual = 0.0, total = 0.0;
    for (const auto& row : table.rows) {
      if (row.term == "total")
        total = row.sum_of_squares;
      else if (row.term == "residual")
        residual = row.sum_of_squares;
      else
        model += row.sum_of_squares;
    }
    worst_rel = std::max(worst_rel, std::abs(model + residual - total) / total);
    worst_rel = std::max(worst_rel, std::abs(total - direct_total) / total);
  }
  bool pass = worst_stat <= 1e-12 && worst_p <= 1e-12 && worst_rel <= 1e-6;
  gate.report(9, pass,
              "rank tests vs enumeration on " + std::to_string(cases) +
                  " small samples: max statistic gap " + fmt(worst_stat, 3) +
                  ", max p gap " + fmt(worst_p, 3) +
                  " (need <= 1e-12); variance decomposition worst relative gap " +
                  fmt(worst_rel, 3) + " over 20 random grids (need <= 1e-6)");
}

// ---------------------------------------------------------------------------
// [10] Determinism end to end: running split + attack twice from one config
// file produces byte-identical artifacts.

void check_idempotence(Gate& gate) {
  namespace fs = std::filesystem;
  const fs::path data(MIALAB_DATA_DIR);
  fs::path root = fs::temp_directory_path() / "mialab_gate_rerun";
  fs::remove_all(root);
  fs::create_directories(root);
  fs::path out_dir = root / "out";
  nlohmann::json cfg = {
      {"corpus",
       {{"train", (data / "toy_train.jsonl").string()},
        {"test", (data / "toy_test.jsonl").string()},
        {"format", "jsonl"},
        {"scheme", "whitespace"},
        {"target_len", 8}}},
      {"split", {{"known_ratio", 0.45}, {"seed", 7}}},
      {"victim", {{"id", "victim"}, {"order", 5}, {"discount", 0.1}, {"passes", 5}}},
      {"surrogate",
       {{"id", "surrogate"}, {"order", 5}, {"discount", 0.1}, {"passes", 1}}},
      {"decoding",
       {{"victim", {{"strategy", "beam"}, {"beam_size", 4}, {"max_len", 8}}},
        {"surrogate", {{"strategy", "beam"}, {"beam_size", 4}, {"max_len", 8}}}}},
      {"attack",
       {{"attacks", {"gotcha", "ppl", "zlib-ratio"}},
        {"seeds", {1, 2}},
        {"gotcha", {{"learning_rate", 0.5}, {"epochs", 60}}}}},
      {"out", out_dir.string()}};
  fs::path cfg_path = root / "config.json";
  std::ofstream(cfg_path) << cfg.dump(2) << "\n";
  auto drive = [&](const std::string& sub) {
    std::ostringstream out, err;
    int code = run({sub, "-c", cfg_path.string()}, out, err);
    if (code != 0)
      throw std::runtime_error(sub + " exited " + std::to_string(code) + ": " +
                               err.str());
  };
  auto snapshot = [&] {
    std::map<std::string, std::string> files;
    for (const auto& entry : fs::directory_iterator(out_dir)) {
      std::ifstream in(entry.path(), std::ios::binary);
      std::ostringstream ss;
      ss << in.rdbuf();
      files[entry.path().filename().string()] = ss.str();
    }
    return files;
  };
  drive("split");
  drive("attack");
  auto first = snapshot();
  fs::remove_all(out_dir);
  drive("split");
  drive("attack");
  auto second = snapshot();
  std::size_t n_files = first.size();
  bool pass = n_files > 0 && first == second;
  fs::remove_all(root);
  gate.report(10, pass,
              "identical config rerun: " + std::to_string(n_files) +
                  " artifacts from split + attack, " +
                  (pass ? "all byte-identical" : "MISMATCH between runs"));
}

}  // namespace

int main() {
  std::cout << "mia-lab acceptance gate" << std::endl;
  Gate gate;
  std::optional<ToyStudy> toy;
  checked(gate, 1, [&] {
    toy = run_toy_study();
    check_toy_margin(gate, *toy);
  });
  checked(gate, 2, [&] { check_ablation_order(gate); });
  checked(gate, 3, [&] { check_lookup_ranking(gate); });
  checked(gate, 4, [&] { check_null_control(gate); });
  if (toy) {
    checked(gate, 5, [&] { check_sampling_defense(gate, *toy); });
    checked(gate, 6, [&] { check_ranking_identity(gate, *toy); });
  } else {
    gate.report(5, false, "skipped: toy study unavailable");
    gate.report(6, false, "skipped: toy study unavailable");
  }
  checked(gate, 7, [&] { check_auc_equivalence(gate); });
  checked(gate, 8, [&] { check_gradients(gate); });
  checked(gate, 9, [&] { check_small_sample_stats(gate); });
  checked(gate, 10, [&] { check_idempotence(gate); });
  std::cout << (10 - gate.failures) << "/10 checks passed" << std::endl;
  return gate.failures;
}
