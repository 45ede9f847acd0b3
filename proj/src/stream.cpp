#include "procseed/stream.hpp"

#include <algorithm>

#include "procseed/errors.hpp"

namespace procseed {

GenStream::GenStream(GenConfig cfg, uint64_t seed, bool shuffle_tokens)
    : cfg_(std::move(cfg)), rng_(seed), shuffle_tokens_(shuffle_tokens) {
  validate(cfg_);
}

bool GenStream::next(ProcSample& out) {
  out = generate(cfg_, rng_);
  if (shuffle_tokens_) out = shuffle_sample(out, rng_);
  return true;
}

void GenStream::set_input_length(int n) {
  if (n <= 0) throw ConfigError("input length must be positive");
  switch (cfg_.kind) {
    case GenKind::kIdentity:
    case GenKind::kSet:
    case GenKind::kUnion:
    case GenKind::kDelete:
    case GenKind::kSort:
    case GenKind::kReverse:
    case GenKind::kStack:
      cfg_.input_length = n;
      break;
    default:
      // Dyck family and automaton rows have fixed geometry.
      break;
  }
}

TaskStream::TaskStream(TaskConfig cfg, uint64_t seed)
    : cfg_(std::move(cfg)), vocab_(task_vocab(cfg_)), rng_(seed) {
  validate(cfg_);
}

bool TaskStream::next(ProcSample& out) {
  out = generate(cfg_, rng_).sample;
  return true;
}

FileStream::FileStream(const std::string& path, bool loop)
    : reader_(path), loop_(loop) {}

bool FileStream::next(ProcSample& out) {
  if (reader_.next(out)) return true;
  if (!loop_ || reader_.size() == 0) return false;
  reader_.reset();
  return reader_.next(out);
}

VectorStream::VectorStream(std::vector<ProcSample> samples, VocabSpec vocab)
    : samples_(std::move(samples)), vocab_(std::move(vocab)) {}

bool VectorStream::next(ProcSample& out) {
  if (pos_ >= samples_.size()) return false;
  out = samples_[pos_++];
  return true;
}

namespace {

VocabSpec mixture_vocab(const VocabSpec& a, const VocabSpec& b, TokenId* pa,
                        TokenId* pb) {
  if (a.pad_id != b.pad_id)
    throw ConfigError("mixture sources disagree on pad id");
  if (a.separator_id != b.separator_id)
    throw ConfigError("mixture sources disagree on separator id");
  VocabSpec v;
  int base = std::max(a.size, b.size);
  v.size = base + 2;
  v.pad_id = a.pad_id;
  v.separator_id = a.separator_id;
  *pa = base;
  *pb = base + 1;
  v.special["source_a"] = *pa;
  v.special["source_b"] = *pb;
  return v;
}

}  // namespace

MixtureStream::MixtureStream(GenConfig a, GenConfig b, int64_t tokens_a,
                             int64_t tokens_b, uint64_t seed)
    : a_(std::move(a)),
      b_(std::move(b)),
      vocab_(mixture_vocab(a_.vocab, b_.vocab, &prefix_a_, &prefix_b_)),
      pick_rng_(derive_seed(seed, "mix-pick")),
      rng_a_(derive_seed(seed, "mix-src", 0)),
      rng_b_(derive_seed(seed, "mix-src", 1)),
      budget_a_(tokens_a),
      budget_b_(tokens_b) {
  validate(a_);
  validate(b_);
  if (tokens_a < 0 || tokens_b < 0)
    throw ConfigError("token budgets must be non-negative");
  done_a_ = budget_a_ == 0;
  done_b_ = budget_b_ == 0;
}

bool MixtureStream::draw_from(int which, ProcSample& out) {
  const GenConfig& cfg = which == 0 ? a_ : b_;
  Rng& rng = which == 0 ? rng_a_ : rng_b_;
  int64_t& budget = which == 0 ? budget_a_ : budget_b_;
  int64_t& realized = which == 0 ? realized_a_ : realized_b_;
  bool& done = which == 0 ? done_a_ : done_b_;

  ProcSample s = generate(cfg, rng);
  int64_t cost = static_cast<int64_t>(s.size()) + 1;
  if (cost > budget) {
    done = true;
    return false;
  }
  budget -= cost;
  realized += cost;

  out.tokens.clear();
  out.loss_mask.clear();
  out.tokens.reserve(s.size() + 1);
  out.loss_mask.reserve(s.size() + 1);
  out.tokens.push_back(which == 0 ? prefix_a_ : prefix_b_);
  out.loss_mask.push_back(0);
  out.tokens.insert(out.tokens.end(), s.tokens.begin(), s.tokens.end());
  out.loss_mask.insert(out.loss_mask.end(), s.loss_mask.begin(),
                       s.loss_mask.end());
  out.source_tag = s.source_tag;
  return true;
}

bool MixtureStream::next(ProcSample& out) {
  while (!done_a_ || !done_b_) {
    int which;
    if (done_a_) {
      which = 1;
    } else if (done_b_) {
      which = 0;
    } else {
      which = static_cast<int>(pick_rng_.below(2));
    }
    if (draw_from(which, out)) return true;
  }
  return false;
}

std::vector<ProcSample> take(SampleStream& s, int n) {
  std::vector<ProcSample> out;
  out.reserve(static_cast<size_t>(std::max(0, n)));
  ProcSample sample;
  for (int i = 0; i < n; ++i) {
    if (!s.next(sample)) break;
    out.push_back(sample);
  }
  return out;
}

}  // namespace procseed
