#include "procseed/datagen.hpp"

#include <algorithm>
#include <unordered_set>

#include "procseed/errors.hpp"

namespace procseed {

namespace {

std::vector<TokenId> draw_elements(int n, int n_elements, Rng& rng) {
  std::vector<TokenId> out(static_cast<size_t>(n));
  for (auto& t : out) t = static_cast<TokenId>(rng.below(static_cast<uint64_t>(n_elements)));
  return out;
}

std::vector<TokenId> dedup_keep_first(const std::vector<TokenId>& in) {
  std::vector<TokenId> out;
  std::unordered_set<TokenId> seen;
  for (TokenId t : in)
    if (seen.insert(t).second) out.push_back(t);
  return out;
}

// Assembles [prompt..., sep, answer...] with the loss mask true on the
// answer region only.
ProcSample framed(std::vector<TokenId> prompt, const std::vector<TokenId>& answer,
                  TokenId sep, const char* tag) {
  ProcSample s;
  s.tokens = std::move(prompt);
  s.tokens.push_back(sep);
  size_t prefix = s.tokens.size();
  s.tokens.insert(s.tokens.end(), answer.begin(), answer.end());
  s.loss_mask.assign(s.tokens.size(), 0);
  std::fill(s.loss_mask.begin() + static_cast<ptrdiff_t>(prefix), s.loss_mask.end(), uint8_t{1});
  s.source_tag = tag;
  return s;
}

}  // namespace

ProcSample gen_identity(const GenConfig& cfg, Rng& rng) {
  if (cfg.input_length < 1) throw ConfigError("identity needs input_length >= 1");
  auto x = draw_elements(cfg.input_length, cfg.n_elements, rng);
  return framed(x, x, cfg.vocab.separator_id, "identity");
}

ProcSample gen_set(const GenConfig& cfg, Rng& rng) {
  auto x = draw_elements(cfg.input_length, cfg.n_elements, rng);
  return framed(x, dedup_keep_first(x), cfg.vocab.separator_id, "set");
}

ProcSample gen_union(const GenConfig& cfg, Rng& rng) {
  int la = (cfg.input_length + 1) / 2;
  int lb = cfg.input_length - la;
  auto a = draw_elements(la, cfg.n_elements, rng);
  auto b = draw_elements(lb, cfg.n_elements, rng);
  std::vector<TokenId> both = a;
  both.insert(both.end(), b.begin(), b.end());
  std::vector<TokenId> prompt = a;
  prompt.push_back(cfg.vocab.at("union_delim"));
  prompt.insert(prompt.end(), b.begin(), b.end());
  return framed(std::move(prompt), dedup_keep_first(both), cfg.vocab.separator_id, "union");
}

ProcSample gen_delete(const GenConfig& cfg, Rng& rng) {
  auto x = draw_elements(cfg.input_length, cfg.n_elements, rng);
  auto present = dedup_keep_first(x);
  TokenId d = present[rng.below(present.size())];
  std::vector<TokenId> kept;
  for (TokenId t : x)
    if (t != d) kept.push_back(t);
  std::vector<TokenId> prompt = x;
  prompt.push_back(cfg.vocab.at("delete_delim"));
  prompt.push_back(d);
  return framed(std::move(prompt), kept, cfg.vocab.separator_id, "delete");
}

ProcSample gen_sort(const GenConfig& cfg, Rng& rng) {
  auto x = draw_elements(cfg.input_length, cfg.n_elements, rng);
  auto sorted = x;
  std::sort(sorted.begin(), sorted.end());
  return framed(x, sorted, cfg.vocab.separator_id, "sort");
}

ProcSample gen_reverse(const GenConfig& cfg, Rng& rng) {
  auto x = draw_elements(cfg.input_length, cfg.n_elements, rng);
  auto rev = x;
  std::reverse(rev.begin(), rev.end());
  return framed(x, rev, cfg.vocab.separator_id, "reverse");
}

ProcSample gen_stack(const GenConfig& cfg, Rng& rng, StackStats* stats) {
  const TokenId pop_id = cfg.vocab.at("pop");
  std::vector<TokenId> ops;
  std::vector<TokenId> stack;
  std::unordered_set<TokenId> held;
  StackStats local;
  const int n = cfg.input_length;
  for (int i = 0; i < n; ++i) {
    // Pushes dominate the first two thirds of the op sequence, pops the
    // final third. Illegal draws are rejected and the op redrawn so the
    // phase probabilities stay as close to 75/25 as legality allows.
    double p_push = (3 * i < 2 * n) ? 0.75 : 0.25;
    for (;;) {
      if (rng.coin(p_push)) {
        auto e = static_cast<TokenId>(rng.below(static_cast<uint64_t>(cfg.n_elements)));
        if (held.count(e)) {
          ++local.resamples;
          continue;
        }
        ops.push_back(e);
        stack.push_back(e);
        held.insert(e);
        ++local.pushes;
        break;
      }
      if (stack.empty()) {
        ++local.resamples;
        continue;
      }
      held.erase(stack.back());
      stack.pop_back();
      ops.push_back(pop_id);
      ++local.pops;
      break;
    }
  }
  std::vector<TokenId> answer(stack.rbegin(), stack.rend());
  if (stats) *stats = local;
  return framed(std::move(ops), answer, cfg.vocab.separator_id, "stack");
}

ProcSample gen_dyck(const GenConfig& cfg, Rng& rng) {
  const int len = cfg.input_length;
  if (len < 2 || len % 2 != 0) throw ConfigError("dyck length must be even and >= 2");
  ProcSample s;
  s.tokens.reserve(static_cast<size_t>(len));
  std::vector<int> open_types;
  for (int pos = 0; pos < len; ++pos) {
    int remaining = len - pos;
    bool must_close = static_cast<int>(open_types.size()) == remaining;
    bool must_open = open_types.empty();
    bool open = must_open || (!must_close && rng.coin(cfg.p_open));
    if (open) {
      int t = static_cast<int>(rng.below(static_cast<uint64_t>(cfg.dyck_k)));
      open_types.push_back(t);
      s.tokens.push_back(static_cast<TokenId>(2 * t));
    } else {
      int t = open_types.back();
      open_types.pop_back();
      s.tokens.push_back(static_cast<TokenId>(2 * t + 1));
    }
  }
  s.loss_mask.assign(s.tokens.size(), 1);
  s.source_tag = "dyck";
  return s;
}

ProcSample gen_dyck_shuffle(const GenConfig& cfg, Rng& rng) {
  const int len = cfg.input_length;
  if (len < 2 || len % 2 != 0)
    throw ConfigError("dyck_shuffle length must be even and >= 2");
  ProcSample s;
  s.tokens.reserve(static_cast<size_t>(len));
  std::vector<int> open_count(static_cast<size_t>(cfg.dyck_k), 0);
  int total_open = 0;
  for (int pos = 0; pos < len; ++pos) {
    // Force closes once the tail has to drain the open brackets so the
    // string stays balanced per type, as in the nested generator.
    bool must_close = total_open == len - pos;
    bool open = !must_close && (total_open == 0 || rng.coin(cfg.p_open));
    if (open) {
      int t = static_cast<int>(rng.below(static_cast<uint64_t>(cfg.dyck_k)));
      ++open_count[static_cast<size_t>(t)];
      ++total_open;
      s.tokens.push_back(static_cast<TokenId>(2 * t));
    } else {
      // Close a type chosen uniformly among those currently open.
      int eligible = 0;
      for (int c : open_count) eligible += (c > 0);
      int pick = static_cast<int>(rng.below(static_cast<uint64_t>(eligible)));
      int t = 0;
      for (int i = 0; i < cfg.dyck_k; ++i) {
        if (open_count[static_cast<size_t>(i)] > 0 && pick-- == 0) {
          t = i;
          break;
        }
      }
      --open_count[static_cast<size_t>(t)];
      --total_open;
      s.tokens.push_back(static_cast<TokenId>(2 * t + 1));
    }
  }
  s.loss_mask.assign(s.tokens.size(), 1);
  s.source_tag = "dyck_shuffle";
  return s;
}

std::vector<uint8_t> eca_step(const std::vector<uint8_t>& state, int rule) {
  if (state.empty()) throw ConfigError("eca_step needs a nonempty state");
  if (rule < 0 || rule > 255) throw ConfigError("rule must lie in [0,255]");
  const size_t n = state.size();
  std::vector<uint8_t> next(n);
  for (size_t i = 0; i < n; ++i) {
    uint8_t l = state[(i + n - 1) % n];
    uint8_t c = state[i];
    uint8_t r = state[(i + 1) % n];
    int idx = 4 * l + 2 * c + r;
    next[i] = static_cast<uint8_t>((rule >> idx) & 1);
  }
  return next;
}

ProcSample gen_eca(const GenConfig& cfg, Rng& rng) {
  ProcSample s;
  s.tokens.reserve(static_cast<size_t>(cfg.eca_steps) * cfg.eca_width);
  std::vector<uint8_t> row(static_cast<size_t>(cfg.eca_width));
  for (auto& c : row) c = static_cast<uint8_t>(rng.below(2));
  for (int step = 0; step < cfg.eca_steps; ++step) {
    if (step > 0) row = eca_step(row, 110);
    for (uint8_t c : row) s.tokens.push_back(c);
  }
  s.loss_mask.assign(s.tokens.size(), 1);
  std::fill(s.loss_mask.begin(), s.loss_mask.begin() + cfg.eca_width, uint8_t{0});
  s.source_tag = "eca110";
  return s;
}

ProcSample generate(const GenConfig& cfg, Rng& rng) {
  switch (cfg.kind) {
    case GenKind::kIdentity: return gen_identity(cfg, rng);
    case GenKind::kSet: return gen_set(cfg, rng);
    case GenKind::kUnion: return gen_union(cfg, rng);
    case GenKind::kDelete: return gen_delete(cfg, rng);
    case GenKind::kSort: return gen_sort(cfg, rng);
    case GenKind::kReverse: return gen_reverse(cfg, rng);
    case GenKind::kStack: return gen_stack(cfg, rng);
    case GenKind::kDyck: return gen_dyck(cfg, rng);
    case GenKind::kDyckShuffle: return gen_dyck_shuffle(cfg, rng);
    case GenKind::kEca110: return gen_eca(cfg, rng);
  }
  throw ConfigError("unknown generator kind");
}

ProcSample shuffle_sample(const ProcSample& s, Rng& rng) {
  ProcSample out = s;
  rng.shuffle(out.tokens);
  return out;
}

}  // namespace procseed
