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

// Generates the bundled toy corpus: two parallel pools (train/test) drawn
// from the same document distribution, so membership is decidable only
// through model behavior, never from the text itself.
//
// Every document is 16 tokens: an 8-token header that always ends in the
// shared terminator "then", and an 8-token body that always starts with
// "pass". Restarting a decode from an unseen header therefore funnels
// through the terminator into the body grammar instead of wandering.
//
// Two document families, laid out identically in both pools:
//
//  * stock: snippets emitted verbatim into BOTH pools. A model trained on
//    either pool reproduces them near-perfectly, which neutralizes
//    perplexity- and BLEU-style signals on this slice. Their bodies use
//    pooled openers (op_/ty_/rv_) and close with the same four-token tail
//    as chain A bodies.
//
//  * chain pairs: an A-doc and a B-doc share a header that ends in a
//    pair-unique key. The A body opens with a fixed token (fn_0) and
//    closes with the common tail; the B body opens with a pair-unique
//    token (u_) and runs a different tail that ends in a pooled closer
//    (wx_). The two openings have identical occurrence counts, so the
//    first body token is a genuine coin flip under sampling, while beam
//    search recovers the B body: the A body sheds more mass at its pooled
//    fourth token (cb_) than the B body does at its closer. Both bodies
//    keep one low-probability slot, so neither branch scores like a
//    verbatim copy. A u_ opener never outranks the stock openers at any
//    decodable context, so truncated sampling cannot stumble into a B
//    body it was not trained on.
//
// Every pooled body token (cb_, wx_, tag_, sig_) is a fixed function of
// the pair number, never a per-pool draw: independent draws would leave
// each pool with its own frequency profile over these finite pools, and
// token identity alone would then separate the pools. Only globally
// unique tokens (c_, k_, u_) are drawn fresh per pool.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

namespace {

constexpr int kStockTemplates = 10;
constexpr int kDocLen = 16;
constexpr int kBodyPool = 40;       // cb_* chain A fourth slot, wx_* B closers
constexpr int kStockKeyPool = 24;   // vv_* stock header keys
constexpr int kStockOpenPool = 100; // op_* stock body openers
constexpr int kStockStylePool = 12; // ty_* / rv_* stock body tokens
constexpr int kTagPool = 120;       // tag_* chain B body tokens
constexpr int kSigPool = 24;        // sig_* chain B body tokens

const char* kWords[] = {
    "let",   "add",  "map",  "get",  "set",  "run",  "fmt",  "buf",
    "ptr",   "len",  "idx",  "key",  "val",  "cfg",  "ctx",  "arg",
    "tmp",   "acc",  "cur",  "next", "node", "head", "tail", "iter",
    "count", "base", "mask", "flag",
};
constexpr int kWordCount = static_cast<int>(sizeof(kWords) / sizeof(kWords[0]));

std::string word(std::mt19937_64& rng) {
  return kWords[rng() % kWordCount];
}

std::string hex_suffix(std::mt19937_64& rng, int digits) {
  static const char* kHex = "0123456789abcdef";
  std::string s;
  for (int i = 0; i < digits; ++i) s.push_back(kHex[rng() % 16]);
  return s;
}

struct Slot {
  enum Kind { kStock, kChainA, kChainB } kind;
  int index = 0;  // stock doc number or pair number
};

struct PairDraw {
  std::vector<std::string> header;  // 8 tokens, shared by A and B
  std::vector<std::string> a_body;  // 8 tokens
  std::vector<std::string> b_body;  // 8 tokens
};

// cb_ assignments give index 0 a tenth of the draws so the most common A
// body is far ahead of everything else at decode time; the rest rotate so
// every pooled token keeps a few documents.
int body_pool_index(int n, int total) {
  const int heavy = total / 10;
  if (n < heavy) return 0;
  return 1 + (n - heavy) % (kBodyPool - 1);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"emit the toy corpus as train/test JSONL pools"};
  int docs = 500;
  std::uint64_t seed = 20260817;
  std::string out_dir = "data";
  app.add_option("--docs", docs, "documents per pool")->check(CLI::Range(125, 100000));
  app.add_option("--seed", seed, "generator seed");
  app.add_option("--out", out_dir, "output directory");
  CLI11_PARSE(app, argc, argv);

  std::mt19937_64 rng(seed);

  // Pair count targets 26% of docs (52% of tokens belong to chain pairs);
  // the remainder is stock.
  const int pair_total = docs * 26 / 100;
  const int stock_total = docs - 2 * pair_total;

  const std::vector<std::string> stock_tail = {"flush", "sync", "join", "done"};
  const std::vector<std::string> chain_tail = {"push", "swap", "load"};

  std::set<std::string> used_unique;
  auto fresh = [&](const std::string& prefix) {
    for (;;) {
      std::string tok = prefix + hex_suffix(rng, 6);
      if (used_unique.insert(tok).second) return tok;
    }
  };

  // Stock headers: six template tokens, a pooled key, the terminator. The
  // (template, key) combination stays unique per document, which keeps the
  // recall context sharp, while each key token itself is shared by one
  // document per template so its embedding row sees both labels during
  // attack training. Bodies rotate over op_* so every opener keeps two or
  // three documents.
  std::vector<std::vector<std::string>> stock_prefix(kStockTemplates);
  for (int t = 0; t < kStockTemplates; ++t) {
    for (int i = 0; i < 6; ++i) {
      std::ostringstream tok;
      tok << word(rng) << "_s" << t << "_" << i;
      stock_prefix[t].push_back(tok.str());
    }
  }
  std::vector<std::vector<std::string>> stock_docs;
  for (int n = 0; n < stock_total; ++n) {
    const int t = n % kStockTemplates;
    std::vector<std::string> doc = stock_prefix[t];
    doc.push_back("vv_" + std::to_string((n / kStockTemplates) % kStockKeyPool));
    doc.push_back("then");
    doc.push_back("pass");
    doc.push_back("op_" + std::to_string(n % kStockOpenPool));
    doc.push_back("ty_" + std::to_string(rng() % kStockStylePool));
    doc.push_back("rv_" + std::to_string(rng() % kStockStylePool));
    doc.insert(doc.end(), stock_tail.begin(), stock_tail.end());
    stock_docs.push_back(std::move(doc));
  }

  // One shuffled layout shared by both pools keeps the pools exchangeable.
  std::vector<Slot> layout;
  for (int n = 0; n < stock_total; ++n) layout.push_back({Slot::kStock, n});
  for (int n = 0; n < pair_total; ++n) {
    layout.push_back({Slot::kChainA, n});
    layout.push_back({Slot::kChainB, n});
  }
  std::shuffle(layout.begin(), layout.end(), rng);

  // Only the globally unique tokens (headers, keys, u_ openers) are drawn
  // fresh per pool; every pooled body token is locked to the pair number.
  // The tag/sig strides are coprime to their pool sizes, so the values
  // cycle evenly instead of clumping.
  auto draw_pool_pairs = [&]() {
    std::vector<PairDraw> draws;
    for (int n = 0; n < pair_total; ++n) {
      PairDraw d;
      for (int i = 0; i < 6; ++i) d.header.push_back(fresh("c_"));
      d.header.push_back(fresh("k_"));
      d.header.push_back("then");
      d.a_body.push_back("pass");
      d.a_body.push_back("fn_0");
      d.a_body.push_back("emit");
      d.a_body.push_back("cb_" + std::to_string(body_pool_index(n, pair_total)));
      d.a_body.insert(d.a_body.end(), stock_tail.begin(), stock_tail.end());
      d.b_body.push_back("pass");
      d.b_body.push_back(fresh("u_"));
      d.b_body.push_back("tag_" + std::to_string((n * 7 + 3) % kTagPool));
      d.b_body.push_back("sig_" + std::to_string((n * 5 + 1) % kSigPool));
      d.b_body.insert(d.b_body.end(), chain_tail.begin(), chain_tail.end());
      d.b_body.push_back("wx_" + std::to_string(n % kBodyPool));
      draws.push_back(std::move(d));
    }
    return draws;
  };

  auto emit_pool = [&](const std::string& path, const char* id_prefix,
                       const std::vector<PairDraw>& draws) {
    std::ofstream out(path);
    if (!out) {
      std::cerr << "cannot open " << path << "\n";
      std::exit(1);
    }
    int n = 0;
    for (const auto& slot : layout) {
      std::vector<std::string> tokens;
      if (slot.kind == Slot::kStock) {
        tokens = stock_docs[slot.index];
      } else {
        const PairDraw& d = draws[slot.index];
        tokens = d.header;
        const auto& body = slot.kind == Slot::kChainA ? d.a_body : d.b_body;
        tokens.insert(tokens.end(), body.begin(), body.end());
      }
      if (static_cast<int>(tokens.size()) != kDocLen) {
        std::cerr << "internal error: doc length " << tokens.size() << "\n";
        std::exit(1);
      }
      std::ostringstream text;
      for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i) text << ' ';
        text << tokens[i];
      }
      char id[16];
      std::snprintf(id, sizeof(id), "%s-%04d", id_prefix, n++);
      nlohmann::json line = {{"id", id}, {"text", text.str()}};
      out << line.dump() << "\n";
    }
  };

  std::filesystem::create_directories(out_dir);
  const auto train_draws = draw_pool_pairs();
  const auto test_draws = draw_pool_pairs();
  emit_pool(out_dir + "/toy_train.jsonl", "tr", train_draws);
  emit_pool(out_dir + "/toy_test.jsonl", "te", test_draws);

  std::cout << "wrote " << layout.size() << " docs per pool ("
            << stock_total << " stock, " << pair_total << " pairs) to "
            << out_dir << "\n";
  return 0;
}
