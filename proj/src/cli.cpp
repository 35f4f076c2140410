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

#include "mialab/cli.hpp"

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"

#include "mialab/baselines.hpp"
#include "mialab/stats.hpp"

namespace mialab {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Config parsing

void check_keys(const json& j, const std::set<std::string>& allowed,
                const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (allowed.find(it.key()) == allowed.end()) {
      throw Error("config: unknown key \"" + it.key() + "\" in " + where);
    }
  }
}

DecodeStrategy parse_strategy(const std::string& s) {
  if (s == "greedy") return DecodeStrategy::kGreedy;
  if (s == "beam") return DecodeStrategy::kBeam;
  if (s == "topk") return DecodeStrategy::kTopk;
  throw Error("config: unknown decoding strategy \"" + s + "\"");
}

DecodingConfig parse_decoding(const json& j, const std::string& where,
                              DecodingConfig base) {
  check_keys(j, {"strategy", "beam_size", "topk_k", "temperature", "max_len",
                 "rng_seed"},
             where);
  if (j.contains("strategy")) {
    base.strategy = parse_strategy(j.at("strategy").get<std::string>());
  }
  base.beam_size = j.value("beam_size", base.beam_size);
  base.topk_k = j.value("topk_k", base.topk_k);
  base.temperature = j.value("temperature", base.temperature);
  base.max_len = j.value("max_len", base.max_len);
  base.rng_seed = j.value("rng_seed", base.rng_seed);
  return base;
}

ModelSpec parse_model(const json& j, const std::string& default_id,
                      const std::string& where) {
  check_keys(j, {"id", "order", "discount", "passes", "unk_floor"}, where);
  ModelSpec spec;
  spec.id = j.value("id", default_id);
  spec.cfg.order = j.value("order", spec.cfg.order);
  spec.cfg.discount = j.value("discount", spec.cfg.discount);
  spec.cfg.passes = j.value("passes", spec.cfg.passes);
  spec.cfg.unk_floor = j.value("unk_floor", spec.cfg.unk_floor);
  if (spec.id.empty()) throw Error("config: empty model id in " + where);
  return spec;
}

std::vector<ModelSpec> parse_model_list(const json& j,
                                        const std::string& prefix,
                                        const std::string& where) {
  if (!j.is_array() || j.empty()) {
    throw Error("config: " + where + " must be a nonempty array");
  }
  std::vector<ModelSpec> specs;
  std::set<std::string> ids;
  for (std::size_t i = 0; i < j.size(); ++i) {
    specs.push_back(parse_model(j[i], prefix + std::to_string(i), where));
    if (!ids.insert(specs.back().id).second) {
      throw Error("config: duplicate model id \"" + specs.back().id + "\" in " +
                  where);
    }
  }
  return specs;
}

const std::vector<std::string>& base_attack_names() {
  static const std::vector<std::string> names = {
      "gotcha", "bleu-nb",  "bleu-dt", "bleu-knn", "bleu-mlp",
      "bleu-dnn", "ppl",    "ppl-ratio", "zlib-ratio"};
  return names;
}

void validate_attack_name(const std::string& name) {
  const auto& all = all_attack_names();
  if (std::find(all.begin(), all.end(), name) == all.end()) {
    throw Error("config: unknown attack \"" + name + "\"");
  }
}

}  // namespace

RunConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw Error(std::string("config: ") + e.what());
  }
  if (!j.is_object()) throw Error("config: top level must be an object");

  RunConfig cfg;
  try {
    check_keys(j,
               {"corpus", "split", "victim", "surrogate", "decoding", "attack",
                "grid", "defend", "features", "out"},
               "config");

    if (!j.contains("corpus")) throw Error("config: missing corpus section");
    const json& c = j.at("corpus");
    check_keys(c,
               {"train", "test", "format", "scheme", "target_len",
                "strip_long_strings", "allow_empty_input"},
               "corpus");
    cfg.train_path = c.at("train").get<std::string>();
    cfg.test_path = c.at("test").get<std::string>();
    std::string format = c.value("format", "jsonl");
    if (format == "jsonl") {
      cfg.corpus_format = CorpusFormat::kJsonl;
    } else if (format == "dir") {
      cfg.corpus_format = CorpusFormat::kPlainDir;
    } else {
      throw Error("config: unknown corpus format \"" + format + "\"");
    }
    std::string scheme = c.value("scheme", "whitespace");
    if (scheme == "whitespace") {
      cfg.example_opts.scheme = TokenScheme::kWhitespace;
    } else if (scheme == "code") {
      cfg.example_opts.scheme = TokenScheme::kCodeLexer;
    } else {
      throw Error("config: unknown token scheme \"" + scheme + "\"");
    }
    cfg.example_opts.target_len =
        c.value("target_len", cfg.example_opts.target_len);
    cfg.example_opts.strip_long_strings =
        c.value("strip_long_strings", cfg.example_opts.strip_long_strings);
    cfg.example_opts.allow_empty_input =
        c.value("allow_empty_input", cfg.example_opts.allow_empty_input);

    const json& s = j.value("split", json::object());
    check_keys(s, {"known_ratio", "seed"}, "split");
    cfg.known_ratio = s.value("known_ratio", cfg.known_ratio);
    cfg.split_seed = s.value("seed", cfg.split_seed);

    cfg.victim = parse_model(j.value("victim", json::object()), "victim",
                             "victim");
    cfg.surrogate = parse_model(j.value("surrogate", json::object()),
                                "surrogate", "surrogate");

    DecodingConfig base;
    base.max_len = cfg.example_opts.target_len;
    const json& d = j.value("decoding", json::object());
    check_keys(d, {"victim", "surrogate"}, "decoding");
    cfg.attack.victim_decoding =
        parse_decoding(d.value("victim", json::object()), "decoding.victim",
                       base);
    cfg.attack.surrogate_decoding =
        parse_decoding(d.value("surrogate", json::object()),
                       "decoding.surrogate", base);

    const json& a = j.value("attack", json::object());
    check_keys(a,
               {"attacks", "ablations", "seeds", "threshold", "cutoff",
                "gotcha", "features"},
               "attack");
    std::vector<std::string> attacks = base_attack_names();
    if (a.contains("attacks")) {
      attacks = a.at("attacks").get<std::vector<std::string>>();
    }
    if (a.value("ablations", false)) {
      for (const char* name :
           {"gotcha-no-input", "gotcha-no-truth", "gotcha-no-output"}) {
        if (std::find(attacks.begin(), attacks.end(), name) == attacks.end()) {
          attacks.push_back(name);
        }
      }
    }
    if (attacks.empty()) throw Error("config: empty attack list");
    std::set<std::string> seen;
    for (const auto& name : attacks) {
      validate_attack_name(name);
      if (!seen.insert(name).second) {
        throw Error("config: duplicate attack \"" + name + "\"");
      }
    }
    cfg.attack.attacks = attacks;
    if (a.contains("seeds")) {
      cfg.attack.seeds = a.at("seeds").get<std::vector<std::uint64_t>>();
    }
    if (cfg.attack.seeds.empty()) throw Error("config: empty seeds list");
    cfg.attack.threshold = a.value("threshold", cfg.attack.threshold);
    cfg.attack.cutoff = a.value("cutoff", cfg.attack.cutoff);
    const json& g = a.value("gotcha", json::object());
    check_keys(g, {"embed_dim", "hidden_dim", "learning_rate", "epochs",
                   "batch_size"},
               "attack.gotcha");
    cfg.attack.gotcha.embed_dim = g.value("embed_dim", cfg.attack.gotcha.embed_dim);
    cfg.attack.gotcha.hidden_dim =
        g.value("hidden_dim", cfg.attack.gotcha.hidden_dim);
    cfg.attack.gotcha.learning_rate =
        g.value("learning_rate", cfg.attack.gotcha.learning_rate);
    cfg.attack.gotcha.epochs = g.value("epochs", cfg.attack.gotcha.epochs);
    cfg.attack.gotcha.batch_size =
        g.value("batch_size", cfg.attack.gotcha.batch_size);
    const json& fb = a.value("features", json::object());
    check_keys(fb,
               {"tree_max_depth", "knn_k", "minkowski_p", "hidden_width",
                "l2_alpha", "learning_rate", "epochs", "batch_size",
                "variance_floor"},
               "attack.features");
    auto& fc = cfg.attack.features;
    fc.tree_max_depth = fb.value("tree_max_depth", fc.tree_max_depth);
    fc.knn_k = fb.value("knn_k", fc.knn_k);
    fc.knn_minkowski_p = fb.value("minkowski_p", fc.knn_minkowski_p);
    fc.hidden_width = fb.value("hidden_width", fc.hidden_width);
    fc.l2_alpha = fb.value("l2_alpha", fc.l2_alpha);
    fc.learning_rate = fb.value("learning_rate", fc.learning_rate);
    fc.epochs = fb.value("epochs", fc.epochs);
    fc.batch_size = fb.value("batch_size", fc.batch_size);
    fc.variance_floor = fb.value("variance_floor", fc.variance_floor);

    cfg.attack.victim_id = cfg.victim.id;
    cfg.attack.surrogate_id = cfg.surrogate.id;
    cfg.attack.epochs = cfg.victim.cfg.passes;
    cfg.attack.known_ratio = cfg.known_ratio;

    const json& gr = j.value("grid", json::object());
    check_keys(gr, {"victims", "surrogates", "epochs", "ratios", "workers"},
               "grid");
    if (gr.contains("victims")) {
      cfg.grid.victims = parse_model_list(gr.at("victims"), "v", "grid.victims");
    } else {
      cfg.grid.victims = {{"v-o3", {3, 0.75, 1, 1e-8}},
                          {"v-o4", {4, 0.75, 1, 1e-8}}};
    }
    if (gr.contains("surrogates")) {
      cfg.grid.surrogates =
          parse_model_list(gr.at("surrogates"), "s", "grid.surrogates");
    } else {
      cfg.grid.surrogates = {{"s-o2", {2, 0.75, 1, 1e-8}},
                             {"s-o3", {3, 0.75, 1, 1e-8}}};
    }
    cfg.grid.epochs =
        gr.value("epochs", std::vector<std::size_t>{1, 5});
    cfg.grid.ratios = gr.value("ratios", std::vector<double>{0.1, 0.3});
    if (cfg.grid.epochs.empty() || cfg.grid.ratios.empty()) {
      throw Error("config: empty grid factor list");
    }
    cfg.grid.workers = gr.value("workers", cfg.grid.workers);

    const json& df = j.value("defend", json::object());
    check_keys(df, {"sweep"}, "defend");
    if (df.contains("sweep")) {
      for (const auto& pair : df.at("sweep")) {
        if (!pair.is_array() || pair.size() != 2) {
          throw Error("config: defend.sweep entries must be [k, temperature]");
        }
        DefendPoint p;
        p.k = pair[0].get<std::size_t>();
        p.temperature = pair[1].get<double>();
        if (p.k < 1 || !(p.temperature > 0.0)) {
          throw Error("config: bad defend.sweep entry");
        }
        cfg.defend_sweep.push_back(p);
      }
      if (cfg.defend_sweep.empty()) throw Error("config: empty defend.sweep");
    } else {
      cfg.defend_sweep = {{50, 0.1}, {50, 0.5}, {50, 1.0}, {50, 2.0},
                          {10, 1.0}, {50, 1.0}, {100, 1.0}};
    }

    const json& fj = j.value("features", json::object());
    check_keys(fj, {"attack", "seed"}, "features");
    cfg.features_attack = fj.value("attack", cfg.features_attack);
    validate_attack_name(cfg.features_attack);
    cfg.features_seed = fj.value("seed", cfg.features_seed);

    cfg.out_dir = std::string(j.value("out", "out"));
  } catch (const json::exception& e) {
    throw Error(std::string("config: ") + e.what());
  }

  for (const fs::path& p : {cfg.train_path, cfg.test_path}) {
    if (!fs::exists(p)) {
      throw Error("config: corpus path does not exist: " + p.string());
    }
  }
  cfg.config_hash = fnv1a(j.dump());
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path,
                      const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw Error("config: cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  json j;
  try {
    j = json::parse(buf.str());
  } catch (const json::exception& e) {
    throw Error("config: " + path.string() + ": " + e.what());
  }
  for (const auto& override_str : overrides) {
    auto eq = override_str.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw Error("config: --set needs dotted.path=value, got \"" +
                  override_str + "\"");
    }
    std::string dotted = override_str.substr(0, eq);
    std::string value_text = override_str.substr(eq + 1);
    std::string pointer = "/";
    for (char ch : dotted) pointer += ch == '.' ? '/' : ch;
    json value;
    try {
      value = json::parse(value_text);
    } catch (const json::exception&) {
      value = value_text;  // bare strings stay strings
    }
    try {
      j[json::json_pointer(pointer)] = value;
    } catch (const json::exception& e) {
      throw Error("config: cannot apply --set " + override_str + ": " +
                  e.what());
    }
  }
  if (const char* env_out = std::getenv("MIA_LAB_OUT")) {
    if (*env_out != '\0') j["out"] = env_out;
  }
  return parse_config(j.dump());
}

std::size_t grid_cell_count(const RunConfig& cfg) {
  return cfg.grid.victims.size() * cfg.grid.epochs.size() *
         cfg.grid.surrogates.size() * cfg.grid.ratios.size();
}

// ---------------------------------------------------------------------------
// Output plumbing

namespace {

std::string hash_hex(std::uint64_t h) {
  std::ostringstream ss;
  ss << std::hex << std::setw(16) << std::setfill('0') << h;
  return ss.str();
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  out += '"';
  return out;
}

class CsvFile {
 public:
  CsvFile(const fs::path& path, const std::vector<std::string>& header,
          std::uint64_t config_hash) {
    out_.open(path, std::ios::binary);
    if (!out_) throw Error("cannot write " + path.string());
    out_ << "# config " << hash_hex(config_hash) << "\n";
    row(header);
  }

  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out_ << ',';
      out_ << csv_escape(cells[i]);
    }
    out_ << "\n";
  }

 private:
  std::ofstream out_;
};

std::string cell(double v) {
  return std::isnan(v) ? std::string() : format_double(v);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Quote-aware CSV reader; '#' lines are skipped.
std::vector<std::vector<std::string>> read_csv(const fs::path& path) {
  std::istringstream in(read_file(path));
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> fields(1);
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      char ch = line[i];
      if (quoted) {
        if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
          fields.back() += '"';
          ++i;
        } else if (ch == '"') {
          quoted = false;
        } else {
          fields.back() += ch;
        }
      } else if (ch == '"') {
        quoted = true;
      } else if (ch == ',') {
        fields.emplace_back();
      } else {
        fields.back() += ch;
      }
    }
    rows.push_back(std::move(fields));
  }
  return rows;
}

double parse_num(const std::string& s, const std::string& where) {
  try {
    std::size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw Error("malformed number \"" + s + "\" in " + where);
  }
}

// ---------------------------------------------------------------------------
// Shared pipeline steps

struct ExamplePools {
  std::vector<Example> train;
  std::vector<Example> test;
};

ExamplePools load_pools(const RunConfig& cfg) {
  Corpus train = load_corpus(cfg.train_path, cfg.corpus_format);
  Corpus test = load_corpus(cfg.test_path, cfg.corpus_format);
  return {build_examples(train, cfg.example_opts),
          build_examples(test, cfg.example_opts)};
}

SplitPlan load_plan(const RunConfig& cfg, const char* who) {
  fs::path plan_path = cfg.out_dir / "plan.json";
  if (!fs::exists(plan_path)) {
    throw Error(std::string(who) + ": missing " + plan_path.string() +
                " (run split first)");
  }
  return SplitPlan::from_json(read_file(plan_path));
}

void write_results_csv(const fs::path& path,
                       const std::vector<ExperimentRecord>& records,
                       std::uint64_t hash) {
  CsvFile csv(path,
              {"victim", "surrogate", "epochs", "known_ratio", "attack",
               "seed", "power", "error", "auc"},
              hash);
  for (const auto& r : records) {
    if (!r.seed) continue;  // seed means are derivable; rows stay per seed
    csv.row({r.victim_id, r.surrogate_id, std::to_string(r.epochs),
             format_double(r.known_ratio), r.attack, std::to_string(*r.seed),
             format_double(r.power), format_double(r.error),
             format_double(r.auc)});
  }
}

void write_run_files(const fs::path& dir, const ExperimentResult& result,
                     std::uint64_t hash) {
  for (const auto& run : result.runs) {
    std::string suffix =
        run.record.attack + "_" + std::to_string(*run.record.seed);
    CsvFile roc(dir / ("roc_" + suffix + ".csv"),
                {"threshold", "fpr", "tpr"}, hash);
    for (const auto& p : run.roc.points) {
      roc.row({format_double(p.threshold), format_double(p.fpr),
               format_double(p.tpr)});
    }
    CsvFile scores(dir / ("scores_" + suffix + ".csv"),
                   {"instance_id", "label", "score", "pred"}, hash);
    for (std::size_t i = 0; i < run.scores.size(); ++i) {
      scores.row({result.eval_instances[i].id, std::to_string(run.labels[i]),
                  format_double(run.scores[i]), std::to_string(run.preds[i])});
    }
  }
}

// ---------------------------------------------------------------------------
// Subcommands

int cmd_split(const RunConfig& cfg, std::ostream& out) {
  ExamplePools pools = load_pools(cfg);
  SplitPlan plan = plan_splits(pools.train.size(), pools.test.size(),
                               cfg.known_ratio, cfg.split_seed);
  // Validates plan indices against the pools before anything is written.
  materialize(plan, pools.train, pools.test);
  fs::create_directories(cfg.out_dir);
  {
    std::ofstream pf(cfg.out_dir / "plan.json", std::ios::binary);
    if (!pf) throw Error("cannot write plan.json");
    pf << plan.to_json() << "\n";
  }
  auto write_set = [&](const char* name, const std::vector<std::size_t>& idx,
                       const std::vector<Example>& pool) {
    std::ofstream f(cfg.out_dir / name, std::ios::binary);
    if (!f) throw Error(std::string("cannot write ") + name);
    for (std::size_t i : idx) {
      json rec{{"id", pool[i].id},
               {"input", detokenize(pool[i].input)},
               {"target", detokenize(pool[i].truth)}};
      f << rec.dump() << "\n";
    }
  };
  write_set("known_train.jsonl", plan.known_train, pools.train);
  write_set("hidden_train.jsonl", plan.hidden_train, pools.train);
  write_set("known_out.jsonl", plan.known_out, pools.test);
  write_set("hidden_out.jsonl", plan.hidden_out, pools.test);
  out << "split: " << plan.known_train.size()
      << " examples per set, plan and 4 datasets in " << cfg.out_dir.string()
      << "\n";
  return 0;
}

int cmd_attack(const RunConfig& cfg, std::ostream& out) {
  ExamplePools pools = load_pools(cfg);
  SplitPlan plan = load_plan(cfg, "attack");
  DatasetBundle bundle = materialize(plan, pools.train, pools.test);
  NGramModel victim = NGramModel::train(bundle.victim_train, cfg.victim.cfg);
  NGramModel surrogate =
      NGramModel::train(bundle.surrogate_train, cfg.surrogate.cfg);
  ExperimentResult result = run_experiment(victim, surrogate, bundle.mia_train,
                                           bundle.mia_eval, cfg.attack);
  fs::create_directories(cfg.out_dir);
  write_results_csv(cfg.out_dir / "results.csv", result.records,
                    cfg.config_hash);
  write_run_files(cfg.out_dir, result, cfg.config_hash);
  out << "attack: " << result.runs.size() << " runs over "
      << cfg.attack.attacks.size() << " attacks, results in "
      << cfg.out_dir.string() << "\n";
  for (const auto& r : result.records) {
    if (r.seed) continue;
    out << "  " << r.attack << ": power " << format_double(r.power)
        << ", error " << format_double(r.error) << ", auc "
        << format_double(r.auc) << "\n";
  }
  return 0;
}

struct GridCell {
  ModelSpec victim;
  std::size_t epochs = 1;
  ModelSpec surrogate;
  double ratio = 0.0;
};

int cmd_grid(const RunConfig& cfg, std::ostream& out) {
  ExamplePools pools = load_pools(cfg);
  std::vector<GridCell> cells;
  for (const auto& v : cfg.grid.victims) {
    for (std::size_t e : cfg.grid.epochs) {
      for (const auto& s : cfg.grid.surrogates) {
        for (double r : cfg.grid.ratios) {
          cells.push_back({v, e, s, r});
        }
      }
    }
  }
  std::vector<std::vector<ExperimentRecord>> cell_records(cells.size());

  auto run_cell = [&](const GridCell& cell) {
    SplitPlan plan = plan_splits(pools.train.size(), pools.test.size(),
                                 cell.ratio, cfg.split_seed);
    DatasetBundle bundle = materialize(plan, pools.train, pools.test);
    NGramConfig vcfg = cell.victim.cfg;
    vcfg.passes = cell.epochs;
    NGramModel victim = NGramModel::train(bundle.victim_train, vcfg);
    NGramModel surrogate =
        NGramModel::train(bundle.surrogate_train, cell.surrogate.cfg);
    ExperimentConfig ec = cfg.attack;
    ec.attacks = {"gotcha"};
    ec.victim_id = cell.victim.id;
    ec.surrogate_id = cell.surrogate.id;
    ec.epochs = cell.epochs;
    ec.known_ratio = cell.ratio;
    ExperimentResult res = run_experiment(victim, surrogate, bundle.mia_train,
                                          bundle.mia_eval, ec);
    std::vector<ExperimentRecord> records;
    for (const auto& r : res.records) {
      if (r.seed) records.push_back(r);
    }
    return records;
  };

  std::size_t workers = cfg.grid.workers
                            ? cfg.grid.workers
                            : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, cells.size());
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr first_error;
  auto worker = [&] {
    while (true) {
      std::size_t i = next.fetch_add(1);
      if (i >= cells.size()) return;
      try {
        cell_records[i] = run_cell(cells[i]);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);

  std::vector<ExperimentRecord> all;
  for (const auto& records : cell_records) {
    all.insert(all.end(), records.begin(), records.end());
  }
  fs::create_directories(cfg.out_dir);
  write_results_csv(cfg.out_dir / "results.csv", all, cfg.config_hash);

  std::vector<std::string> factors;
  if (cfg.grid.victims.size() > 1) factors.push_back("victim");
  if (cfg.grid.epochs.size() > 1) factors.push_back("epochs");
  if (cfg.grid.surrogates.size() > 1) factors.push_back("surrogate");
  if (cfg.grid.ratios.size() > 1) factors.push_back("known_ratio");
  if (factors.empty()) {
    throw Error("grid: ANOVA needs at least one factor with two levels");
  }
  AnovaTable table = factorial_anova(all, "power", factors, 3);
  CsvFile anova(cfg.out_dir / "anova.csv", {"term", "sst_percent", "p_value"},
                cfg.config_hash);
  for (const auto& row : table.rows) {
    anova.row({row.term, format_double(row.sst_percent), cell(row.p_value)});
  }
  out << "grid: " << cells.size() << " cells, " << all.size()
      << " records, anova over " << factors.size() << " factors in "
      << cfg.out_dir.string() << "\n";
  return 0;
}

int cmd_defend(const RunConfig& cfg, std::ostream& out) {
  ExamplePools pools = load_pools(cfg);
  SplitPlan plan = plan_splits(pools.train.size(), pools.test.size(),
                               cfg.known_ratio, cfg.split_seed);
  DatasetBundle bundle = materialize(plan, pools.train, pools.test);
  NGramModel victim = NGramModel::train(bundle.victim_train, cfg.victim.cfg);
  NGramModel surrogate =
      NGramModel::train(bundle.surrogate_train, cfg.surrogate.cfg);

  struct DefRow {
    double bleu = 0, power = 0, error = 0, auc = 0;
  };
  // The attacker mirrors the deployed decoding procedure when it builds its
  // training completions, so each sweep point changes both sides.
  auto run_with = [&](const DecodingConfig& vd) {
    ExperimentConfig ec = cfg.attack;
    ec.attacks = {"gotcha"};
    ec.victim_decoding = vd;
    ec.surrogate_decoding = vd;
    ExperimentResult res = run_experiment(victim, surrogate, bundle.mia_train,
                                          bundle.mia_eval, ec);
    const ExperimentRecord& mean = res.records.back();  // the seed-mean row
    return DefRow{res.mean_output_bleu, mean.power, mean.error, mean.auc};
  };

  // Duplicate (k, temperature) pairs are computed once and reported per row.
  std::map<std::pair<std::size_t, double>, DefRow> cache;
  fs::create_directories(cfg.out_dir);
  CsvFile csv(cfg.out_dir / "defense.csv",
              {"k", "temp", "bleu", "power", "error", "auc"}, cfg.config_hash);
  for (const auto& point : cfg.defend_sweep) {
    auto key = std::make_pair(point.k, point.temperature);
    auto it = cache.find(key);
    if (it == cache.end()) {
      DecodingConfig vd = cfg.attack.victim_decoding;
      vd.strategy = DecodeStrategy::kTopk;
      vd.topk_k = point.k;
      vd.temperature = point.temperature;
      it = cache.emplace(key, run_with(vd)).first;
    }
    const DefRow& r = it->second;
    csv.row({std::to_string(point.k), format_double(point.temperature),
             format_double(r.bleu), format_double(r.power),
             format_double(r.error), format_double(r.auc)});
  }
  DecodingConfig beam = cfg.attack.victim_decoding;
  beam.strategy = DecodeStrategy::kBeam;
  DefRow r = run_with(beam);
  csv.row({"", "", format_double(r.bleu), format_double(r.power),
           format_double(r.error), format_double(r.auc)});
  out << "defend: " << cfg.defend_sweep.size()
      << " top-k rows + beam row in " << cfg.out_dir.string() << "\n";
  return 0;
}

int cmd_features(const RunConfig& cfg, std::ostream& out) {
  fs::path scores_path =
      cfg.out_dir / ("scores_" + cfg.features_attack + "_" +
                     std::to_string(cfg.features_seed) + ".csv");
  if (!fs::exists(scores_path)) {
    throw Error("features: missing " + scores_path.string() +
                " (run attack first)");
  }
  auto rows = read_csv(scores_path);
  if (rows.empty() || rows[0] != std::vector<std::string>{"instance_id",
                                                          "label", "score",
                                                          "pred"}) {
    throw Error("features: unexpected score file format in " +
                scores_path.string());
  }
  std::map<std::string, int> preds;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].size() != 4) {
      throw Error("features: malformed score row in " + scores_path.string());
    }
    preds[rows[i][0]] =
        static_cast<int>(parse_num(rows[i][3], scores_path.string()));
  }

  ExamplePools pools = load_pools(cfg);
  SplitPlan plan = load_plan(cfg, "features");
  DatasetBundle bundle = materialize(plan, pools.train, pools.test);
  NGramModel victim = NGramModel::train(bundle.victim_train, cfg.victim.cfg);
  std::vector<AttackInstance> eval_instances = complete_instances(
      victim, bundle.mia_eval, cfg.attack.victim_decoding);

  std::vector<FeatureRow> members, success, fail;
  for (const auto& inst : eval_instances) {
    if (inst.label != 1) continue;
    auto it = preds.find(inst.id);
    if (it == preds.end()) {
      throw Error("features: instance " + inst.id + " missing from " +
                  scores_path.string());
    }
    FeatureRow row = extract_rq3_features(inst, victim, java_keywords());
    row.attack_success = it->second == 1;
    members.push_back(row);
    (row.attack_success ? success : fail).push_back(row);
  }
  if (success.empty() || fail.empty()) {
    throw Error("features: need both attacked-successfully and "
                "attacked-unsuccessfully members");
  }
  auto report = compare_groups(success, fail);

  CsvFile rows_csv(cfg.out_dir / "feature_rows.csv",
                   {"instance_id", "input_length", "output_length",
                    "perplexity", "edit_distance", "bleu", "variable_count",
                    "attack_success"},
                   cfg.config_hash);
  for (const auto& m : members) {
    rows_csv.row({m.instance_id, format_double(m.input_length),
                  format_double(m.output_length), format_double(m.perplexity),
                  format_double(m.edit_distance), format_double(m.bleu),
                  format_double(m.variable_count),
                  m.attack_success ? "1" : "0"});
  }
  CsvFile report_csv(cfg.out_dir / "features.csv",
                     {"feature", "mean_success", "mean_fail", "p_value",
                      "cohens_d", "magnitude"},
                     cfg.config_hash);
  for (const auto& r : report) {
    report_csv.row({r.feature, format_double(r.mean_success),
                    format_double(r.mean_fail), format_double(r.p_value),
                    format_double(r.d),
                    std::string(effect_magnitude_name(r.magnitude))});
  }
  out << "features: " << success.size() << " success / " << fail.size()
      << " fail members compared in " << cfg.out_dir.string() << "\n";
  return 0;
}

int cmd_report(const RunConfig& cfg, std::ostream& out) {
  bool found = false;
  fs::path results_path = cfg.out_dir / "results.csv";
  if (fs::exists(results_path)) {
    found = true;
    auto rows = read_csv(results_path);
    // attack -> (power, error, auc) sums and count
    std::map<std::string, std::array<double, 4>> agg;
    std::vector<std::string> order;
    for (std::size_t i = 1; i < rows.size(); ++i) {
      const auto& r = rows[i];
      if (r.size() != 9) continue;
      auto& a = agg[r[4]];
      if (a[3] == 0) order.push_back(r[4]);
      a[0] += parse_num(r[6], "results.csv");
      a[1] += parse_num(r[7], "results.csv");
      a[2] += parse_num(r[8], "results.csv");
      a[3] += 1;
    }
    out << "attack results (seed means over " << results_path.string()
        << "):\n";
    out << "  " << std::left << std::setw(18) << "attack" << std::right
        << std::setw(8) << "power" << std::setw(8) << "error" << std::setw(8)
        << "auc" << "\n";
    for (const auto& name : order) {
      const auto& a = agg[name];
      out << "  " << std::left << std::setw(18) << name << std::right
          << std::fixed << std::setprecision(3) << std::setw(8) << a[0] / a[3]
          << std::setw(8) << a[1] / a[3] << std::setw(8) << a[2] / a[3]
          << "\n";
      out.unsetf(std::ios::fixed);
    }
  }
  fs::path anova_path = cfg.out_dir / "anova.csv";
  if (fs::exists(anova_path)) {
    found = true;
    auto rows = read_csv(anova_path);
    std::string top_term;
    double top_sst = -1;
    for (std::size_t i = 1; i < rows.size(); ++i) {
      if (rows[i].size() != 3 || rows[i][0] == "residual" ||
          rows[i][0] == "total") {
        continue;
      }
      double sst = parse_num(rows[i][1], "anova.csv");
      if (sst > top_sst) {
        top_sst = sst;
        top_term = rows[i][0];
      }
    }
    if (!top_term.empty()) {
      out << "anova: largest term " << top_term << " ("
          << format_double(top_sst) << "% of total variation)\n";
    }
  }
  fs::path defense_path = cfg.out_dir / "defense.csv";
  if (fs::exists(defense_path)) {
    found = true;
    auto rows = read_csv(defense_path);
    double beam_auc = 0, topk_auc = 0;
    std::size_t topk_rows = 0;
    bool have_beam = false;
    for (std::size_t i = 1; i < rows.size(); ++i) {
      if (rows[i].size() != 6) continue;
      double auc = parse_num(rows[i][5], "defense.csv");
      if (rows[i][0].empty()) {
        beam_auc = auc;
        have_beam = true;
      } else {
        topk_auc += auc;
        ++topk_rows;
      }
    }
    if (have_beam && topk_rows > 0) {
      out << "defense: beam auc " << format_double(beam_auc)
          << ", mean top-k auc " << format_double(topk_auc / topk_rows)
          << "\n";
    }
  }
  fs::path features_path = cfg.out_dir / "features.csv";
  if (fs::exists(features_path)) {
    found = true;
    auto rows = read_csv(features_path);
    out << "feature comparison (" << features_path.string() << "):\n";
    for (std::size_t i = 1; i < rows.size(); ++i) {
      if (rows[i].size() != 6) continue;
      out << "  " << std::left << std::setw(16) << rows[i][0] << std::right
          << " success " << rows[i][1] << " vs fail " << rows[i][2] << ", p "
          << rows[i][3] << ", effect " << rows[i][5] << "\n";
    }
  }
  if (!found) {
    throw Error("report: no artifacts found in " + cfg.out_dir.string());
  }
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"membership-inference evaluation workbench for completion models",
               "mialab"};
  app.require_subcommand(1);
  std::string config_path = "config.json";
  std::vector<std::string> overrides;
  app.add_option("-c,--config", config_path, "JSON run configuration file")
      ->capture_default_str();
  app.add_option("--set", overrides,
                 "override a config key, dotted.path=json-value");
  const char* names[] = {"split", "attack", "grid", "defend", "features",
                         "report"};
  const char* descs[] = {
      "plan and write the membership splits",
      "train models and run the configured attacks",
      "run the full factorial grid and its variance analysis",
      "sweep decoding configurations against the gotcha attack",
      "per-example feature comparison of attacked members",
      "summarize the artifacts in the output directory"};
  for (std::size_t i = 0; i < 6; ++i) {
    app.add_subcommand(names[i], descs[i])->fallthrough();
  }

  std::vector<std::string> argv_storage;
  argv_storage.push_back("mialab");
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : argv_storage) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    RunConfig cfg = load_config(config_path, overrides);
    if (app.got_subcommand("split")) return cmd_split(cfg, out);
    if (app.got_subcommand("attack")) return cmd_attack(cfg, out);
    if (app.got_subcommand("grid")) return cmd_grid(cfg, out);
    if (app.got_subcommand("defend")) return cmd_defend(cfg, out);
    if (app.got_subcommand("features")) return cmd_features(cfg, out);
    if (app.got_subcommand("report")) return cmd_report(cfg, out);
    err << "error: no subcommand\n";
    return 2;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace mialab
