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

#include "mialab/lm.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>

#include "json.hpp"

namespace mialab {

namespace {

using nlohmann::json;

constexpr char kFieldSep = '\x1f';
const std::string kBosString = "<s>";

std::string pack_context(const std::uint32_t* ids, std::size_t n) {
  std::string key(n * sizeof(std::uint32_t), '\0');
  if (n) std::memcpy(key.data(), ids, n * sizeof(std::uint32_t));
  return key;
}

std::string join_with_sep(const TokenSeq& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += kFieldSep;
    out += tokens[i];
  }
  return out;
}

void validate_decoding(const DecodingConfig& cfg) {
  if (cfg.max_len < 1) throw Error("decode: max_len must be >= 1");
  if (cfg.strategy == DecodeStrategy::kBeam && cfg.beam_size < 1) {
    throw Error("decode: beam_size must be >= 1");
  }
  if (cfg.strategy == DecodeStrategy::kTopk) {
    if (cfg.topk_k < 1) throw Error("decode: topk_k must be >= 1");
    if (!(cfg.temperature > 0.0)) {
      throw Error("decode: temperature must be > 0");
    }
  }
}

// Sliding context window over BOS padding + prefix + emitted tokens.
class ContextWindow {
 public:
  ContextWindow(std::size_t len, const std::vector<std::uint32_t>& prefix)
      : len_(len), ids_(len, TokenDistModel::kBosId) {
    for (std::uint32_t id : prefix) push(id);
  }
  void push(std::uint32_t id) {
    if (len_ == 0) return;
    ids_.erase(ids_.begin());
    ids_.push_back(id);
  }
  const std::vector<std::uint32_t>& ids() const { return ids_; }

 private:
  std::size_t len_;
  std::vector<std::uint32_t> ids_;
};

std::uint32_t argmax_id(const std::vector<double>& dist) {
  std::uint32_t best = 0;
  for (std::uint32_t i = 1; i < dist.size(); ++i) {
    if (dist[i] > dist[best]) best = i;
  }
  return best;
}

}  // namespace

double log_perplexity(const CompletionModel& model, const TokenSeq& tokens) {
  if (tokens.empty()) throw Error("log_perplexity: empty token sequence");
  return -model.score({}, tokens) / static_cast<double>(tokens.size());
}

// ---------------------------------------------------------------------------
// Decoding

Completion decode(const TokenDistModel& model, const TokenSeq& prefix,
                  const DecodingConfig& cfg) {
  validate_decoding(cfg);
  std::vector<std::uint32_t> prefix_ids;
  prefix_ids.reserve(prefix.size());
  for (const auto& tok : prefix) prefix_ids.push_back(model.token_id(tok));

  Completion result;
  const std::size_t cl = model.context_len();

  if (cfg.strategy == DecodeStrategy::kGreedy) {
    ContextWindow ctx(cl, prefix_ids);
    for (std::size_t step = 0; step < cfg.max_len; ++step) {
      std::vector<double> dist = model.next_token_dist(ctx.ids());
      std::uint32_t id = argmax_id(dist);
      if (id == TokenDistModel::kEosId) break;
      result.tokens.push_back(model.token_string(id));
      result.step_logprobs.push_back(std::log(dist[id]));
      ctx.push(id);
    }
  } else if (cfg.strategy == DecodeStrategy::kBeam) {
    struct BeamState {
      std::vector<std::uint32_t> emitted;
      std::vector<double> steps;
      double score = 0.0;
    };
    std::vector<BeamState> active(1);
    std::vector<BeamState> completed;
    for (std::size_t step = 0; step < cfg.max_len && !active.empty(); ++step) {
      struct Cand {
        double score;
        double lp;
        std::size_t beam;
        std::uint32_t id;
      };
      std::vector<Cand> cands;
      for (std::size_t bi = 0; bi < active.size(); ++bi) {
        ContextWindow ctx(cl, prefix_ids);
        for (std::uint32_t id : active[bi].emitted) ctx.push(id);
        std::vector<double> dist = model.next_token_dist(ctx.ids());
        if (argmax_id(dist) == TokenDistModel::kEosId) {
          completed.push_back(active[bi]);
          continue;
        }
        for (std::uint32_t id = 0; id < dist.size(); ++id) {
          if (id == TokenDistModel::kEosId) continue;
          double lp = std::log(dist[id]);
          cands.push_back({active[bi].score + lp, lp, bi, id});
        }
      }
      std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
        if (a.score != b.score) return a.score > b.score;
        if (a.beam != b.beam) return a.beam < b.beam;
        return a.id < b.id;
      });
      std::vector<BeamState> next;
      for (const Cand& c : cands) {
        if (next.size() >= cfg.beam_size) break;
        BeamState b = active[c.beam];
        b.emitted.push_back(c.id);
        b.steps.push_back(c.lp);
        b.score = c.score;
        next.push_back(std::move(b));
      }
      active = std::move(next);
    }
    for (auto& b : active) completed.push_back(std::move(b));
    if (completed.empty()) throw Error("decode: no beam candidates");
    std::size_t best = 0;
    for (std::size_t i = 1; i < completed.size(); ++i) {
      if (completed[i].score > completed[best].score) best = i;
    }
    for (std::uint32_t id : completed[best].emitted) {
      result.tokens.push_back(model.token_string(id));
    }
    result.step_logprobs = completed[best].steps;
  } else {  // top-k sampling
    Rng rng(cfg.rng_seed);
    ContextWindow ctx(cl, prefix_ids);
    for (std::size_t step = 0; step < cfg.max_len; ++step) {
      std::vector<double> dist = model.next_token_dist(ctx.ids());
      std::vector<std::uint32_t> order(dist.size());
      std::iota(order.begin(), order.end(), 0u);
      std::sort(order.begin(), order.end(),
                [&](std::uint32_t a, std::uint32_t b) {
                  if (dist[a] != dist[b]) return dist[a] > dist[b];
                  return a < b;
                });
      const std::size_t k = std::min<std::size_t>(cfg.topk_k, order.size());
      // Temperature rescales the log-probabilities of the kept tokens.
      double max_logit = std::log(dist[order[0]]);
      std::vector<double> weights(k);
      double z = 0.0;
      for (std::size_t i = 0; i < k; ++i) {
        weights[i] =
            std::exp((std::log(dist[order[i]]) - max_logit) / cfg.temperature);
        z += weights[i];
      }
      double target = rng.unit() * z;
      double acc = 0.0;
      std::uint32_t id = order[k - 1];
      for (std::size_t i = 0; i < k; ++i) {
        acc += weights[i];
        if (acc > target) {
          id = order[i];
          break;
        }
      }
      if (id == TokenDistModel::kEosId) break;
      result.tokens.push_back(model.token_string(id));
      result.step_logprobs.push_back(std::log(dist[id]));
      ctx.push(id);
    }
  }

  result.total_logprob = std::accumulate(result.step_logprobs.begin(),
                                         result.step_logprobs.end(), 0.0);
  return result;
}

// ---------------------------------------------------------------------------
// NGramModel

std::vector<std::uint32_t> NGramModel::to_ids(const TokenSeq& tokens,
                                              bool grow_vocab) {
  std::vector<std::uint32_t> ids;
  ids.reserve(tokens.size());
  for (const auto& tok : tokens) {
    auto it = token_ids_.find(tok);
    if (it != token_ids_.end()) {
      ids.push_back(it->second);
    } else if (grow_vocab) {
      std::uint32_t id = static_cast<std::uint32_t>(vocab_.size());
      vocab_.push_back(tok);
      token_ids_.emplace(tok, id);
      ids.push_back(id);
    } else {
      ids.push_back(kUnkId);
    }
  }
  return ids;
}

void NGramModel::count_stream(const std::vector<std::uint32_t>& ids) {
  const std::size_t n = cfg_.order;
  const double w = static_cast<double>(cfg_.passes);
  // Padded stream: BOS*(n-1) + ids + EOS.
  std::vector<std::uint32_t> stream;
  stream.reserve(ids.size() + n);
  for (std::size_t i = 0; i + 1 < n; ++i) stream.push_back(kBosId);
  stream.insert(stream.end(), ids.begin(), ids.end());
  stream.push_back(kEosId);

  const std::size_t pad = n - 1;
  for (std::size_t pos = pad; pos < stream.size(); ++pos) {
    std::uint32_t tok = stream[pos];
    for (std::size_t k = 0; k < n; ++k) {
      std::string key = pack_context(stream.data() + pos - k, k);
      ContextCounts& node = counts_[k][key];
      node.counts[tok] += w;
      node.total += w;
    }
  }
}

NGramModel NGramModel::train_on_streams(const std::vector<TokenSeq>& streams,
                                        const NGramConfig& cfg) {
  if (cfg.order < 1) throw Error("ngram: order must be >= 1");
  if (cfg.passes < 1) throw Error("ngram: passes must be >= 1");
  if (!(cfg.discount > 0.0 && cfg.discount < 1.0)) {
    throw Error("ngram: discount must lie in (0, 1)");
  }
  if (streams.empty()) throw Error("ngram: no training data");
  NGramModel model;
  model.cfg_ = cfg;
  model.vocab_ = {"<unk>", "</s>"};
  model.token_ids_ = {{"<unk>", kUnkId}, {"</s>", kEosId}};
  model.counts_.resize(cfg.order);
  for (const auto& stream : streams) {
    model.count_stream(model.to_ids(stream, /*grow_vocab=*/true));
  }
  return model;
}

NGramModel NGramModel::train(const std::vector<Example>& examples,
                             const NGramConfig& cfg) {
  std::vector<TokenSeq> streams;
  streams.reserve(examples.size());
  for (const auto& ex : examples) {
    TokenSeq stream = ex.input;
    stream.insert(stream.end(), ex.truth.begin(), ex.truth.end());
    streams.push_back(std::move(stream));
  }
  return train_on_streams(streams, cfg);
}

std::uint32_t NGramModel::token_id(std::string_view token) const {
  auto it = token_ids_.find(std::string(token));
  return it == token_ids_.end() ? kUnkId : it->second;
}

const std::string& NGramModel::token_string(std::uint32_t id) const {
  if (id >= vocab_.size()) throw Error("ngram: token id out of range");
  return vocab_[id];
}

std::vector<double> NGramModel::next_token_dist(
    const std::vector<std::uint32_t>& context) const {
  const std::size_t cl = cfg_.order - 1;
  // Normalize to exactly cl ids: left-pad with BOS, keep the last cl.
  std::vector<std::uint32_t> ctx(cl, kBosId);
  for (std::size_t i = 0; i < std::min(cl, context.size()); ++i) {
    ctx[cl - 1 - i] = context[context.size() - 1 - i];
  }

  // Per-level nodes for the suffixes of ctx; chain[k] covers the last k ids.
  std::vector<const ContextCounts*> chain(cfg_.order, nullptr);
  for (std::size_t k = 0; k < cfg_.order; ++k) {
    std::string key = pack_context(ctx.data() + cl - k, k);
    auto it = counts_[k].find(key);
    if (it != counts_[k].end() && it->second.total > 0.0) {
      chain[k] = &it->second;
    }
  }

  const double d = cfg_.discount;
  const double uniform = 1.0 / static_cast<double>(vocab_.size());
  std::vector<double> dist(vocab_.size());
  for (std::uint32_t w = 0; w < vocab_.size(); ++w) {
    // Interpolated absolute discounting, built bottom-up from the uniform
    // base so unseen contexts fall straight through to lower orders.
    double p = uniform;
    for (std::size_t k = 0; k < cfg_.order; ++k) {
      const ContextCounts* node = chain[k];
      if (!node) continue;
      auto it = node->counts.find(w);
      double cnt = it == node->counts.end() ? 0.0 : it->second;
      double disc = std::max(cnt - d, 0.0) / node->total;
      double lambda =
          d * static_cast<double>(node->counts.size()) / node->total;
      p = disc + lambda * p;
    }
    dist[w] = p;
  }

  double sum = 0.0;
  for (double& p : dist) {
    p = std::max(p, cfg_.unk_floor);
    sum += p;
  }
  for (double& p : dist) p /= sum;
  return dist;
}

std::vector<double> NGramModel::next_token_dist(const TokenSeq& context) const {
  std::vector<std::uint32_t> ids;
  ids.reserve(context.size());
  for (const auto& tok : context) ids.push_back(token_id(tok));
  return next_token_dist(ids);
}

double NGramModel::score(const TokenSeq& prefix,
                         const TokenSeq& continuation) const {
  std::vector<std::uint32_t> prefix_ids;
  prefix_ids.reserve(prefix.size());
  for (const auto& tok : prefix) prefix_ids.push_back(token_id(tok));
  ContextWindow ctx(context_len(), prefix_ids);
  double total = 0.0;
  for (const auto& tok : continuation) {
    std::uint32_t id = token_id(tok);
    std::vector<double> dist = next_token_dist(ctx.ids());
    total += std::log(dist[id]);
    ctx.push(id);
  }
  return total;
}

Completion NGramModel::complete(const TokenSeq& prefix,
                                const DecodingConfig& cfg) const {
  return decode(*this, prefix, cfg);
}

std::string NGramModel::to_json() const {
  json j;
  j["order"] = cfg_.order;
  j["discount"] = cfg_.discount;
  j["passes"] = cfg_.passes;
  j["unk_floor"] = cfg_.unk_floor;
  j["vocab"] = std::vector<std::string>(vocab_.begin() + 2, vocab_.end());
  json counts = json::object();
  for (std::size_t k = 0; k < counts_.size(); ++k) {
    json level = json::object();
    for (const auto& [key, node] : counts_[k]) {
      std::string ctx_str;
      for (std::size_t i = 0; i < k; ++i) {
        std::uint32_t id;
        std::memcpy(&id, key.data() + i * sizeof(id), sizeof(id));
        if (i) ctx_str += kFieldSep;
        ctx_str += id == kBosId ? kBosString : vocab_[id];
      }
      json toks = json::object();
      for (const auto& [tok, cnt] : node.counts) toks[vocab_[tok]] = cnt;
      level[ctx_str] = std::move(toks);
    }
    counts[std::to_string(k)] = std::move(level);
  }
  j["counts"] = std::move(counts);
  return j.dump(2);
}

NGramModel NGramModel::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(std::string("ngram: malformed JSON: ") + e.what());
  }
  NGramModel model;
  try {
    model.cfg_.order = j.at("order").get<std::size_t>();
    model.cfg_.discount = j.at("discount").get<double>();
    model.cfg_.passes = j.at("passes").get<std::size_t>();
    model.cfg_.unk_floor = j.at("unk_floor").get<double>();
    model.vocab_ = {"<unk>", "</s>"};
    for (const auto& tok : j.at("vocab")) {
      model.vocab_.push_back(tok.get<std::string>());
    }
    for (std::uint32_t id = 0; id < model.vocab_.size(); ++id) {
      model.token_ids_.emplace(model.vocab_[id], id);
    }
    model.counts_.resize(model.cfg_.order);
    for (const auto& [k_str, level] : j.at("counts").items()) {
      std::size_t k = std::stoul(k_str);
      if (k >= model.cfg_.order) throw Error("ngram: count order out of range");
      for (const auto& [ctx_str, toks] : level.items()) {
        std::vector<std::uint32_t> ids;
        if (!ctx_str.empty()) {
          std::size_t start = 0;
          for (std::size_t i = 0; i <= ctx_str.size(); ++i) {
            if (i == ctx_str.size() || ctx_str[i] == kFieldSep) {
              std::string tok = ctx_str.substr(start, i - start);
              if (tok == kBosString) {
                ids.push_back(kBosId);
              } else {
                auto it = model.token_ids_.find(tok);
                if (it == model.token_ids_.end()) {
                  throw Error("ngram: context token not in vocab: " + tok);
                }
                ids.push_back(it->second);
              }
              start = i + 1;
            }
          }
        }
        if (ids.size() != k) throw Error("ngram: context length mismatch");
        ContextCounts node;
        for (const auto& [tok, cnt] : toks.items()) {
          auto it = model.token_ids_.find(tok);
          if (it == model.token_ids_.end()) {
            throw Error("ngram: count token not in vocab: " + tok);
          }
          node.counts[it->second] = cnt.get<double>();
          node.total += cnt.get<double>();
        }
        model.counts_[k][pack_context(ids.data(), ids.size())] =
            std::move(node);
      }
    }
  } catch (const json::exception& e) {
    throw Error(std::string("ngram: missing field: ") + e.what());
  }
  return model;
}

// ---------------------------------------------------------------------------
// LookupModel

LookupModel::LookupModel(double miss_token_prob)
    : miss_logprob_(std::log(miss_token_prob)) {
  if (!(miss_token_prob > 0.0 && miss_token_prob < 1.0)) {
    throw Error("lookup: miss_token_prob must lie in (0, 1)");
  }
}

void LookupModel::add_member(const Example& ex) {
  by_input_[join_with_sep(ex.input)] = ex.truth;
  TokenSeq stream = ex.input;
  stream.insert(stream.end(), ex.truth.begin(), ex.truth.end());
  member_streams_[join_with_sep(stream)] = stream.size();
}

Completion LookupModel::complete(const TokenSeq& prefix,
                                 const DecodingConfig& cfg) const {
  validate_decoding(cfg);
  Completion out;
  auto it = by_input_.find(join_with_sep(prefix));
  if (it != by_input_.end()) {
    std::size_t n = std::min(it->second.size(), cfg.max_len);
    out.tokens.assign(it->second.begin(), it->second.begin() + n);
    out.step_logprobs.assign(n, 0.0);
  } else {
    std::size_t n = std::min<std::size_t>(8, cfg.max_len);
    out.tokens.assign(n, "<noise>");
    out.step_logprobs.assign(n, miss_logprob_);
    out.total_logprob = miss_logprob_ * static_cast<double>(n);
  }
  return out;
}

double LookupModel::score(const TokenSeq& prefix,
                          const TokenSeq& continuation) const {
  TokenSeq stream = prefix;
  stream.insert(stream.end(), continuation.begin(), continuation.end());
  if (member_streams_.count(join_with_sep(stream))) return 0.0;
  return miss_logprob_ * static_cast<double>(continuation.size());
}

}  // namespace mialab
