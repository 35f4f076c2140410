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
// Corpus loading, tokenization, prefix/continuation example construction and
// the four-way membership split (known-train / hidden-train / known-out /
// hidden-out) that the attack pipeline is built on.

#ifndef MIALAB_CORPUS_HPP_
#define MIALAB_CORPUS_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "mialab/common.hpp"

namespace mialab {

using TokenSeq = std::vector<std::string>;

struct Document {
  std::string id;
  std::string text;    // raw-text records
  std::string input;   // pre-split records
  std::string target;
  bool pre_split = false;
};

struct Corpus {
  std::vector<Document> documents;
};

enum class CorpusFormat { kJsonl, kPlainDir };

// JSONL: one record per line, either {"id","text"} or {"id","input","target"}.
// Plain directory: every regular file becomes a document (id = filename),
// loaded in lexicographic filename order. Duplicate ids and malformed lines
// are errors; parse errors carry the line number.
Corpus load_corpus(const std::filesystem::path& path, CorpusFormat format);

enum class TokenScheme { kWhitespace, kCodeLexer };

// Whitespace: split on runs of whitespace. Code lexer: additionally split
// identifiers, numbers, string literals and operators ("x=1" -> x, =, 1).
// No emitted token is empty.
TokenSeq tokenize(std::string_view text, TokenScheme scheme);

// True when token matches [A-Za-z_][A-Za-z0-9_]*.
bool is_identifier(std::string_view token);

// Join with single spaces.
std::string detokenize(const TokenSeq& tokens);

// Replaces the contents of double-quoted literals longer than limit
// characters with the empty string. Used as an optional corpus filter.
std::string replace_long_strings(std::string_view text, std::size_t limit = 15);

struct Example {
  std::string id;
  TokenSeq input;
  TokenSeq truth;
};

// Last target_len tokens become the truth, the rest the input.
// Requires tokens.size() > target_len >= 1.
Example make_example(const TokenSeq& tokens, std::size_t target_len);

struct ExampleOptions {
  std::size_t target_len = 8;
  TokenScheme scheme = TokenScheme::kWhitespace;
  bool strip_long_strings = false;
  bool allow_empty_input = false;
};

std::vector<Example> build_examples(const Corpus& corpus,
                                    const ExampleOptions& opts);

// Index assignments over a train pool and a held-out pool. known_train are
// the examples the attacker trains the surrogate on (and the positive half of
// the attack training set); hidden_train / hidden_out are the evaluation
// positives and negatives; known_out the attack-training negatives. All four
// sets are pairwise disjoint and the sizes are equal.
struct SplitPlan {
  std::size_t victim_train_size = 0;
  std::size_t victim_test_size = 0;
  double known_ratio = 0.0;
  std::uint64_t seed = 0;
  std::vector<std::size_t> known_train;   // surrogate training, label 1 at attack-train time
  std::vector<std::size_t> hidden_train;  // evaluation positives
  std::vector<std::size_t> known_out;     // attack-training negatives
  std::vector<std::size_t> hidden_out;    // evaluation negatives

  std::string to_json() const;
  static SplitPlan from_json(const std::string& text);
};

// |known_train| = round-half-up(known_ratio * victim_train_size); the other
// three sets match that size. Sampling is without replacement and fully
// determined by seed. Index sets are stored sorted ascending.
SplitPlan plan_splits(std::size_t victim_train_size,
                      std::size_t victim_test_size, double known_ratio,
                      std::uint64_t seed);

struct LabeledExample {
  Example example;
  int label = 0;  // 1 iff drawn from the victim's training data
};

struct DatasetBundle {
  std::vector<Example> victim_train;     // the whole train pool
  std::vector<Example> surrogate_train;  // known_train examples
  std::vector<LabeledExample> mia_train; // known_train(1) + known_out(0)
  std::vector<LabeledExample> mia_eval;  // hidden_train(1) + hidden_out(0)
};

DatasetBundle materialize(const SplitPlan& plan,
                          const std::vector<Example>& train_examples,
                          const std::vector<Example>& test_examples);

// Train-pool examples not referenced by the plan, ascending index order.
// Used by the null-control scenario to train models on data disjoint from
// every membership set.
std::vector<Example> leftover_train_examples(
    const SplitPlan& plan, const std::vector<Example>& train_examples);

}  // namespace mialab

#endif  // MIALAB_CORPUS_HPP_
