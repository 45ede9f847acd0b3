#pragma once

// Brute-force reference checks for generator output. Each oracle re-derives
// the expected answer from the prompt with a deliberately naive algorithm
// and verifies framing plus mask geometry, independent of the generator's
// own bookkeeping.

#include <algorithm>
#include <cstdint>
#include <map>
#include <vector>

#include <gtest/gtest.h>

#include "procseed/genconfig.hpp"
#include "procseed/sample.hpp"

namespace procseed::oracle {

struct Split {
  std::vector<TokenId> prompt;
  std::vector<TokenId> answer;
};

inline ::testing::AssertionResult split_on_separator(const ProcSample& s,
                                                     TokenId sep, Split& out) {
  auto it = std::find(s.tokens.begin(), s.tokens.end(), sep);
  if (it == s.tokens.end())
    return ::testing::AssertionFailure() << "no separator token in sample";
  out.prompt.assign(s.tokens.begin(), it);
  out.answer.assign(it + 1, s.tokens.end());
  size_t prefix = out.prompt.size() + 1;
  if (s.loss_mask.size() != s.tokens.size())
    return ::testing::AssertionFailure() << "mask length mismatch";
  for (size_t i = 0; i < s.loss_mask.size(); ++i) {
    bool want = i >= prefix;
    if (static_cast<bool>(s.loss_mask[i]) != want)
      return ::testing::AssertionFailure()
             << "mask[" << i << "] = " << int(s.loss_mask[i])
             << ", expected " << want;
  }
  return ::testing::AssertionSuccess();
}

// First-occurrence dedup by quadratic scan.
inline std::vector<TokenId> naive_dedup(const std::vector<TokenId>& in) {
  std::vector<TokenId> out;
  for (TokenId t : in) {
    bool seen = false;
    for (TokenId u : out) seen |= (u == t);
    if (!seen) out.push_back(t);
  }
  return out;
}

inline ::testing::AssertionResult expect_tokens(
    const std::vector<TokenId>& got, const std::vector<TokenId>& want,
    const char* what) {
  if (got != want)
    return ::testing::AssertionFailure()
           << what << " mismatch: got " << got.size() << " tokens, want "
           << want.size();
  return ::testing::AssertionSuccess();
}

inline ::testing::AssertionResult check_identity(const ProcSample& s,
                                                 const GenConfig& cfg) {
  Split sp;
  if (auto r = split_on_separator(s, cfg.vocab.separator_id, sp); !r) return r;
  if (static_cast<int>(sp.prompt.size()) != cfg.input_length)
    return ::testing::AssertionFailure() << "prompt length";
  return expect_tokens(sp.answer, sp.prompt, "copy answer");
}

inline ::testing::AssertionResult check_set(const ProcSample& s,
                                            const GenConfig& cfg) {
  Split sp;
  if (auto r = split_on_separator(s, cfg.vocab.separator_id, sp); !r) return r;
  return expect_tokens(sp.answer, naive_dedup(sp.prompt), "dedup answer");
}

inline ::testing::AssertionResult check_union(const ProcSample& s,
                                              const GenConfig& cfg) {
  Split sp;
  if (auto r = split_on_separator(s, cfg.vocab.separator_id, sp); !r) return r;
  TokenId delim = cfg.vocab.at("union_delim");
  auto it = std::find(sp.prompt.begin(), sp.prompt.end(), delim);
  if (it == sp.prompt.end())
    return ::testing::AssertionFailure() << "no union delimiter";
  std::vector<TokenId> a(sp.prompt.begin(), it), b(it + 1, sp.prompt.end());
  if (static_cast<int>(a.size()) != (cfg.input_length + 1) / 2)
    return ::testing::AssertionFailure() << "left operand length";
  if (static_cast<int>(a.size() + b.size()) != cfg.input_length)
    return ::testing::AssertionFailure() << "total operand length";
  auto both = a;
  both.insert(both.end(), b.begin(), b.end());
  return expect_tokens(sp.answer, naive_dedup(both), "union answer");
}

inline ::testing::AssertionResult check_delete(const ProcSample& s,
                                               const GenConfig& cfg) {
  Split sp;
  if (auto r = split_on_separator(s, cfg.vocab.separator_id, sp); !r) return r;
  TokenId delim = cfg.vocab.at("delete_delim");
  if (sp.prompt.size() < 2 || sp.prompt[sp.prompt.size() - 2] != delim)
    return ::testing::AssertionFailure() << "prompt must end with delim, target";
  TokenId victim = sp.prompt.back();
  std::vector<TokenId> x(sp.prompt.begin(), sp.prompt.end() - 2);
  if (std::find(x.begin(), x.end(), victim) == x.end())
    return ::testing::AssertionFailure() << "deleted element absent from list";
  std::vector<TokenId> kept;
  for (TokenId t : x)
    if (t != victim) kept.push_back(t);
  return expect_tokens(sp.answer, kept, "filtered answer");
}

inline ::testing::AssertionResult check_sort(const ProcSample& s,
                                             const GenConfig& cfg) {
  Split sp;
  if (auto r = split_on_separator(s, cfg.vocab.separator_id, sp); !r) return r;
  if (!std::is_sorted(sp.answer.begin(), sp.answer.end()))
    return ::testing::AssertionFailure() << "answer not ascending";
  std::map<TokenId, int> in_counts, out_counts;
  for (TokenId t : sp.prompt) ++in_counts[t];
  for (TokenId t : sp.answer) ++out_counts[t];
  if (in_counts != out_counts)
    return ::testing::AssertionFailure() << "answer is not a permutation";
  return ::testing::AssertionSuccess();
}

inline ::testing::AssertionResult check_reverse(const ProcSample& s,
                                                const GenConfig& cfg) {
  Split sp;
  if (auto r = split_on_separator(s, cfg.vocab.separator_id, sp); !r) return r;
  auto rev = sp.prompt;
  std::reverse(rev.begin(), rev.end());
  return expect_tokens(sp.answer, rev, "reversed answer");
}

// Replays the op sequence on a fresh stack and demands the answer equal the
// surviving elements top-first. Also enforces the generator's legality
// rules: no pop on empty, no push of an element already held.
inline ::testing::AssertionResult check_stack(const ProcSample& s,
                                              const GenConfig& cfg) {
  Split sp;
  if (auto r = split_on_separator(s, cfg.vocab.separator_id, sp); !r) return r;
  if (static_cast<int>(sp.prompt.size()) != cfg.input_length)
    return ::testing::AssertionFailure() << "op count";
  TokenId pop = cfg.vocab.at("pop");
  std::vector<TokenId> stack;
  for (TokenId t : sp.prompt) {
    if (t == pop) {
      if (stack.empty())
        return ::testing::AssertionFailure() << "pop on empty stack";
      stack.pop_back();
    } else {
      if (t < 0 || t >= cfg.n_elements)
        return ::testing::AssertionFailure() << "op token out of range";
      if (std::find(stack.begin(), stack.end(), t) != stack.end())
        return ::testing::AssertionFailure() << "pushed element already held";
      stack.push_back(t);
    }
  }
  std::vector<TokenId> expect(stack.rbegin(), stack.rend());
  return expect_tokens(sp.answer, expect, "stack contents");
}

inline ::testing::AssertionResult check_all_true_mask(const ProcSample& s) {
  for (size_t i = 0; i < s.loss_mask.size(); ++i)
    if (!s.loss_mask[i])
      return ::testing::AssertionFailure() << "mask[" << i << "] false";
  if (s.loss_mask.size() != s.tokens.size())
    return ::testing::AssertionFailure() << "mask length mismatch";
  return ::testing::AssertionSuccess();
}

// Pushdown validator: opens push their type, closes must match the top,
// the stack must drain exactly at the end.
inline ::testing::AssertionResult check_dyck(const ProcSample& s,
                                             const GenConfig& cfg) {
  if (auto r = check_all_true_mask(s); !r) return r;
  if (static_cast<int>(s.tokens.size()) != cfg.input_length)
    return ::testing::AssertionFailure() << "length";
  std::vector<int> pda;
  for (TokenId t : s.tokens) {
    if (t < 0 || t >= 2 * cfg.dyck_k)
      return ::testing::AssertionFailure() << "bracket id out of range";
    int type = t / 2;
    if (t % 2 == 0) {
      pda.push_back(type);
    } else {
      if (pda.empty() || pda.back() != type)
        return ::testing::AssertionFailure() << "close does not match top";
      pda.pop_back();
    }
  }
  if (!pda.empty())
    return ::testing::AssertionFailure() << pda.size() << " brackets left open";
  return ::testing::AssertionSuccess();
}

// Per-type balance with per-type prefix validity; nesting not required.
inline ::testing::AssertionResult check_dyck_shuffle(const ProcSample& s,
                                                     const GenConfig& cfg) {
  if (auto r = check_all_true_mask(s); !r) return r;
  if (static_cast<int>(s.tokens.size()) != cfg.input_length)
    return ::testing::AssertionFailure() << "length";
  std::vector<int> open(static_cast<size_t>(cfg.dyck_k), 0);
  for (TokenId t : s.tokens) {
    if (t < 0 || t >= 2 * cfg.dyck_k)
      return ::testing::AssertionFailure() << "bracket id out of range";
    int type = t / 2;
    if (t % 2 == 0) {
      ++open[static_cast<size_t>(type)];
    } else {
      if (open[static_cast<size_t>(type)] == 0)
        return ::testing::AssertionFailure() << "type " << type << " closed below zero";
      --open[static_cast<size_t>(type)];
    }
  }
  for (int type = 0; type < cfg.dyck_k; ++type)
    if (open[static_cast<size_t>(type)] != 0)
      return ::testing::AssertionFailure() << "type " << type << " unbalanced";
  return ::testing::AssertionSuccess();
}

inline ::testing::AssertionResult check_sample(const ProcSample& s,
                                               const GenConfig& cfg) {
  switch (cfg.kind) {
    case GenKind::kIdentity: return check_identity(s, cfg);
    case GenKind::kSet: return check_set(s, cfg);
    case GenKind::kUnion: return check_union(s, cfg);
    case GenKind::kDelete: return check_delete(s, cfg);
    case GenKind::kSort: return check_sort(s, cfg);
    case GenKind::kReverse: return check_reverse(s, cfg);
    case GenKind::kStack: return check_stack(s, cfg);
    case GenKind::kDyck: return check_dyck(s, cfg);
    case GenKind::kDyckShuffle: return check_dyck_shuffle(s, cfg);
    case GenKind::kEca110: break;
  }
  return ::testing::AssertionFailure() << "no oracle for this kind";
}

}  // namespace procseed::oracle
