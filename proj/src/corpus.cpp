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

#include "mialab/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>

#include "json.hpp"

namespace mialab {

namespace {

using nlohmann::json;

Document parse_jsonl_record(const std::string& line, std::size_t line_no) {
  json rec;
  try {
    rec = json::parse(line);
  } catch (const json::exception& e) {
    throw Error("corpus: malformed JSON on line " + std::to_string(line_no) +
                ": " + e.what());
  }
  if (!rec.is_object() || !rec.contains("id") || !rec["id"].is_string()) {
    throw Error("corpus: record on line " + std::to_string(line_no) +
                " lacks a string \"id\"");
  }
  Document doc;
  doc.id = rec["id"].get<std::string>();
  if (rec.contains("input") && rec.contains("target")) {
    doc.input = rec["input"].get<std::string>();
    doc.target = rec["target"].get<std::string>();
    doc.pre_split = true;
  } else if (rec.contains("text")) {
    doc.text = rec["text"].get<std::string>();
  } else {
    throw Error("corpus: record on line " + std::to_string(line_no) +
                " needs either \"text\" or \"input\"+\"target\"");
  }
  return doc;
}

}  // namespace

Corpus load_corpus(const std::filesystem::path& path, CorpusFormat format) {
  Corpus corpus;
  if (format == CorpusFormat::kJsonl) {
    std::ifstream in(path);
    if (!in) throw Error("corpus: cannot open " + path.string());
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      corpus.documents.push_back(parse_jsonl_record(line, line_no));
    }
  } else {
    if (!std::filesystem::is_directory(path)) {
      throw Error("corpus: not a directory: " + path.string());
    }
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(path)) {
      if (entry.is_regular_file()) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& file : files) {
      std::ifstream in(file);
      if (!in) throw Error("corpus: cannot open " + file.string());
      std::ostringstream body;
      body << in.rdbuf();
      Document doc;
      doc.id = file.filename().string();
      doc.text = body.str();
      corpus.documents.push_back(std::move(doc));
    }
  }
  if (corpus.documents.empty()) {
    throw Error("corpus: no documents loaded from " + path.string());
  }
  std::unordered_set<std::string> seen;
  for (const auto& doc : corpus.documents) {
    if (!seen.insert(doc.id).second) {
      throw Error("corpus: duplicate document id \"" + doc.id + "\"");
    }
  }
  return corpus;
}

namespace {

bool ident_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
}
bool ident_cont(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}
bool digit(char c) { return std::isdigit(static_cast<unsigned char>(c)); }

// Two-character operators split before single punctuation.
bool two_char_op(std::string_view s) {
  static const std::set<std::string_view> ops = {
      "==", "!=", "<=", ">=", "&&", "||", "->", "++", "--",
      "+=", "-=", "*=", "/=", "<<", ">>", "::"};
  return ops.count(s) > 0;
}

TokenSeq lex_code(std::string_view text) {
  TokenSeq out;
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    char c = text[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (ident_start(c)) {
      std::size_t j = i + 1;
      while (j < n && ident_cont(text[j])) ++j;
      out.emplace_back(text.substr(i, j - i));
      i = j;
      continue;
    }
    if (digit(c)) {
      std::size_t j = i + 1;
      while (j < n && digit(text[j])) ++j;
      if (j < n && text[j] == '.' && j + 1 < n && digit(text[j + 1])) {
        ++j;
        while (j < n && digit(text[j])) ++j;
      }
      out.emplace_back(text.substr(i, j - i));
      i = j;
      continue;
    }
    if (c == '"' || c == '\'') {
      // Quoted literal kept as a single token, quotes included.
      char quote = c;
      std::size_t j = i + 1;
      while (j < n && text[j] != quote) {
        if (text[j] == '\\' && j + 1 < n) ++j;
        ++j;
      }
      if (j < n) ++j;  // closing quote
      out.emplace_back(text.substr(i, j - i));
      i = j;
      continue;
    }
    if (i + 1 < n && two_char_op(text.substr(i, 2))) {
      out.emplace_back(text.substr(i, 2));
      i += 2;
      continue;
    }
    out.emplace_back(text.substr(i, 1));
    ++i;
  }
  return out;
}

}  // namespace

TokenSeq tokenize(std::string_view text, TokenScheme scheme) {
  if (scheme == TokenScheme::kCodeLexer) return lex_code(text);
  TokenSeq out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() &&
           std::isspace(static_cast<unsigned char>(text[i]))) {
      ++i;
    }
    std::size_t j = i;
    while (j < text.size() &&
           !std::isspace(static_cast<unsigned char>(text[j]))) {
      ++j;
    }
    if (j > i) out.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return out;
}

bool is_identifier(std::string_view token) {
  if (token.empty() || !ident_start(token[0])) return false;
  for (std::size_t i = 1; i < token.size(); ++i) {
    if (!ident_cont(token[i])) return false;
  }
  return true;
}

std::string detokenize(const TokenSeq& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += tokens[i];
  }
  return out;
}

std::string replace_long_strings(std::string_view text, std::size_t limit) {
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] == '"') {
      std::size_t j = i + 1;
      while (j < text.size() && text[j] != '"') {
        if (text[j] == '\\' && j + 1 < text.size()) ++j;
        ++j;
      }
      if (j < text.size()) {
        std::string_view body = text.substr(i + 1, j - i - 1);
        out += '"';
        if (body.size() <= limit) out += body;
        out += '"';
        i = j + 1;
        continue;
      }
    }
    out += text[i];
    ++i;
  }
  return out;
}

Example make_example(const TokenSeq& tokens, std::size_t target_len) {
  if (target_len < 1) throw Error("make_example: target_len must be >= 1");
  if (tokens.size() <= target_len) {
    throw Error("make_example: document too short (" +
                std::to_string(tokens.size()) + " tokens, target_len " +
                std::to_string(target_len) + ")");
  }
  Example ex;
  ex.input.assign(tokens.begin(), tokens.end() - target_len);
  ex.truth.assign(tokens.end() - target_len, tokens.end());
  return ex;
}

std::vector<Example> build_examples(const Corpus& corpus,
                                    const ExampleOptions& opts) {
  std::vector<Example> out;
  out.reserve(corpus.documents.size());
  for (const auto& doc : corpus.documents) {
    Example ex;
    if (doc.pre_split) {
      std::string input = doc.input;
      std::string target = doc.target;
      if (opts.strip_long_strings) {
        input = replace_long_strings(input);
        target = replace_long_strings(target);
      }
      ex.input = tokenize(input, opts.scheme);
      ex.truth = tokenize(target, opts.scheme);
      if (ex.truth.empty()) {
        throw Error("corpus: document \"" + doc.id + "\" has an empty target");
      }
      if (ex.input.empty() && !opts.allow_empty_input) {
        throw Error("corpus: document \"" + doc.id +
                    "\" has an empty input (set allow_empty_input to accept)");
      }
    } else {
      std::string text = doc.text;
      if (opts.strip_long_strings) text = replace_long_strings(text);
      TokenSeq tokens = tokenize(text, opts.scheme);
      try {
        ex = make_example(tokens, opts.target_len);
      } catch (const Error& e) {
        throw Error("corpus: document \"" + doc.id + "\": " + e.what());
      }
    }
    ex.id = doc.id;
    out.push_back(std::move(ex));
  }
  return out;
}

SplitPlan plan_splits(std::size_t victim_train_size,
                      std::size_t victim_test_size, double known_ratio,
                      std::uint64_t seed) {
  if (!(known_ratio > 0.0 && known_ratio < 1.0)) {
    throw Error("plan_splits: known_ratio must lie in (0, 1)");
  }
  const std::size_t s = round_half_up(known_ratio *
                                      static_cast<double>(victim_train_size));
  if (s == 0) throw Error("plan_splits: known_ratio selects zero documents");
  // Four pairwise-disjoint equal-size sets: two inside the train pool, two
  // inside the held-out pool.
  if (2 * s > victim_train_size) {
    throw Error("plan_splits: train pool too small for disjoint member sets");
  }
  if (2 * s > victim_test_size) {
    throw Error("plan_splits: test pool too small for balancing");
  }

  SplitPlan plan;
  plan.victim_train_size = victim_train_size;
  plan.victim_test_size = victim_test_size;
  plan.known_ratio = known_ratio;
  plan.seed = seed;

  Rng rng(seed);
  std::vector<std::size_t> train_idx(victim_train_size);
  for (std::size_t i = 0; i < victim_train_size; ++i) train_idx[i] = i;
  rng.shuffle(train_idx);
  plan.known_train.assign(train_idx.begin(), train_idx.begin() + s);
  plan.hidden_train.assign(train_idx.begin() + s, train_idx.begin() + 2 * s);

  std::vector<std::size_t> test_idx(victim_test_size);
  for (std::size_t i = 0; i < victim_test_size; ++i) test_idx[i] = i;
  rng.shuffle(test_idx);
  plan.known_out.assign(test_idx.begin(), test_idx.begin() + s);
  plan.hidden_out.assign(test_idx.begin() + s, test_idx.begin() + 2 * s);

  std::sort(plan.known_train.begin(), plan.known_train.end());
  std::sort(plan.hidden_train.begin(), plan.hidden_train.end());
  std::sort(plan.known_out.begin(), plan.known_out.end());
  std::sort(plan.hidden_out.begin(), plan.hidden_out.end());
  return plan;
}

std::string SplitPlan::to_json() const {
  json j;
  j["victim_train_size"] = victim_train_size;
  j["victim_test_size"] = victim_test_size;
  j["known_ratio"] = known_ratio;
  j["seed"] = seed;
  j["known_train"] = known_train;
  j["hidden_train"] = hidden_train;
  j["known_out"] = known_out;
  j["hidden_out"] = hidden_out;
  return j.dump(2);
}

SplitPlan SplitPlan::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(std::string("SplitPlan: malformed JSON: ") + e.what());
  }
  SplitPlan plan;
  try {
    plan.victim_train_size = j.at("victim_train_size").get<std::size_t>();
    plan.victim_test_size = j.at("victim_test_size").get<std::size_t>();
    plan.known_ratio = j.at("known_ratio").get<double>();
    plan.seed = j.at("seed").get<std::uint64_t>();
    plan.known_train = j.at("known_train").get<std::vector<std::size_t>>();
    plan.hidden_train = j.at("hidden_train").get<std::vector<std::size_t>>();
    plan.known_out = j.at("known_out").get<std::vector<std::size_t>>();
    plan.hidden_out = j.at("hidden_out").get<std::vector<std::size_t>>();
  } catch (const json::exception& e) {
    throw Error(std::string("SplitPlan: missing field: ") + e.what());
  }
  return plan;
}

namespace {

void check_indices(const std::vector<std::size_t>& idx, std::size_t bound,
                   const char* name) {
  for (std::size_t i : idx) {
    if (i >= bound) {
      throw Error(std::string("materialize: plan index out of range in ") +
                  name);
    }
  }
}

}  // namespace

DatasetBundle materialize(const SplitPlan& plan,
                          const std::vector<Example>& train_examples,
                          const std::vector<Example>& test_examples) {
  if (train_examples.size() != plan.victim_train_size ||
      test_examples.size() != plan.victim_test_size) {
    throw Error("materialize: example counts do not match the plan");
  }
  check_indices(plan.known_train, train_examples.size(), "known_train");
  check_indices(plan.hidden_train, train_examples.size(), "hidden_train");
  check_indices(plan.known_out, test_examples.size(), "known_out");
  check_indices(plan.hidden_out, test_examples.size(), "hidden_out");

  DatasetBundle bundle;
  bundle.victim_train = train_examples;
  for (std::size_t i : plan.known_train) {
    bundle.surrogate_train.push_back(train_examples[i]);
  }
  for (std::size_t i : plan.known_train) {
    bundle.mia_train.push_back({train_examples[i], 1});
  }
  for (std::size_t i : plan.known_out) {
    bundle.mia_train.push_back({test_examples[i], 0});
  }
  for (std::size_t i : plan.hidden_train) {
    bundle.mia_eval.push_back({train_examples[i], 1});
  }
  for (std::size_t i : plan.hidden_out) {
    bundle.mia_eval.push_back({test_examples[i], 0});
  }
  return bundle;
}

std::vector<Example> leftover_train_examples(
    const SplitPlan& plan, const std::vector<Example>& train_examples) {
  std::vector<bool> used(train_examples.size(), false);
  for (std::size_t i : plan.known_train) used[i] = true;
  for (std::size_t i : plan.hidden_train) used[i] = true;
  std::vector<Example> out;
  for (std::size_t i = 0; i < train_examples.size(); ++i) {
    if (!used[i]) out.push_back(train_examples[i]);
  }
  return out;
}

}  // namespace mialab
