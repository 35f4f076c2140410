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
// Command-line front end: JSON run configuration, the split / attack / grid /
// defend / features / report subcommands, and the CSV artifacts they write.
// run() is the in-process entry point main() delegates to; tests drive it
// directly to check byte-level determinism of the outputs.

#ifndef MIALAB_CLI_HPP_
#define MIALAB_CLI_HPP_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "mialab/corpus.hpp"
#include "mialab/eval.hpp"

namespace mialab {

struct ModelSpec {
  std::string id;
  NGramConfig cfg;
};

struct GridSpec {
  std::vector<ModelSpec> victims;
  std::vector<ModelSpec> surrogates;
  std::vector<std::size_t> epochs;  // victim training passes per cell
  std::vector<double> ratios;
  std::size_t workers = 0;  // 0 = hardware concurrency
};

struct DefendPoint {
  std::size_t k = 50;
  double temperature = 1.0;
};

struct RunConfig {
  std::filesystem::path train_path;
  std::filesystem::path test_path;
  CorpusFormat corpus_format = CorpusFormat::kJsonl;
  ExampleOptions example_opts;
  double known_ratio = 0.3;
  std::uint64_t split_seed = 7;
  ModelSpec victim;
  ModelSpec surrogate;
  ExperimentConfig attack;  // decoding configs, seeds and metadata included
  GridSpec grid;
  std::vector<DefendPoint> defend_sweep;  // rows of the defense table
  std::string features_attack = "gotcha";
  std::uint64_t features_seed = 1;
  std::filesystem::path out_dir = "out";
  std::uint64_t config_hash = 0;  // hash of the effective JSON
};

// Parses and validates the JSON text (after any overrides were applied).
// Unknown keys, malformed values, bad attack names and missing corpus paths
// are all reported here, before anything is written.
RunConfig parse_config(const std::string& json_text);

// Reads the file, applies dotted-path overrides ("attack.cutoff=0.4"; values
// parsed as JSON when possible, else kept as strings), then applies the
// MIA_LAB_OUT environment variable to the output directory.
RunConfig load_config(const std::filesystem::path& path,
                      const std::vector<std::string>& overrides);

std::size_t grid_cell_count(const RunConfig& cfg);

// argv-style entry point ("split", "attack", "grid", "defend", "features",
// "report" plus --config/--set). Returns the process exit code; all
// diagnostics go to err.
int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err);

}  // namespace mialab

#endif  // MIALAB_CLI_HPP_
