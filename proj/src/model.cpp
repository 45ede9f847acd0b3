#include "procseed/model.hpp"

#include <algorithm>
#include <cmath>

namespace procseed {

TokenBatch make_token_batch(const std::vector<ProcSample>& samples, TokenId pad_id) {
  if (samples.empty()) throw ConfigError("empty batch");
  size_t max_len = 0;
  bool uniform = true;
  for (const auto& s : samples) {
    if (s.size() < 2) throw ConfigError("sample too short to predict anything");
    if (s.size() != samples.front().size()) uniform = false;
    max_len = std::max(max_len, s.size());
  }
  if (!uniform && pad_id < 0)
    throw ConfigError("padding required but vocab has no pad id");

  TokenBatch b;
  const int B = static_cast<int>(samples.size());
  const int T = static_cast<int>(max_len) - 1;
  b.input.resize(B, T);
  b.target.resize(B, T);
  b.mask.resize(B, T);
  b.n_pos.resize(static_cast<size_t>(B));
  const TokenId fill = pad_id >= 0 ? pad_id : 0;
  for (int i = 0; i < B; ++i) {
    const auto& s = samples[static_cast<size_t>(i)];
    const int n = static_cast<int>(s.size()) - 1;
    b.n_pos[static_cast<size_t>(i)] = n;
    b.token_count += static_cast<int64_t>(s.size());
    for (int t = 0; t < T; ++t) {
      if (t < n) {
        b.input(i, t) = s.tokens[static_cast<size_t>(t)];
        b.target(i, t) = s.tokens[static_cast<size_t>(t) + 1];
        b.mask(i, t) = s.loss_mask[static_cast<size_t>(t) + 1];
      } else {
        b.input(i, t) = fill;
        b.target(i, t) = fill;
        b.mask(i, t) = 0;
      }
    }
  }
  return b;
}

MatD attention_entropy(const AttnMaps& maps) {
  MatD out = MatD::Zero(maps.n_layers, maps.n_heads);
  for (int l = 0; l < maps.n_layers; ++l) {
    for (int h = 0; h < maps.n_heads; ++h) {
      double example_sum = 0.0;
      int64_t example_count = 0;
      for (int b = 0; b < maps.batch; ++b) {
        const MatD& m = maps.at(l, h, b);
        double row_sum = 0.0;
        int64_t row_count = 0;
        for (int i = 0; i < maps.seq_len; ++i) {
          bool valid = maps.row_valid.empty()
                           ? i >= 1
                           : maps.row_valid[static_cast<size_t>(b)][static_cast<size_t>(i)] != 0;
          if (!valid) continue;
          double sum = 0.0;
          double hrow = 0.0;
          for (int j = 0; j < maps.seq_len; ++j) {
            double p = m(i, j);
            if (p < 0.0) throw ConfigError("negative attention weight");
            sum += p;
            if (p > 0.0) hrow -= p * std::log(p);
          }
          if (std::abs(sum - 1.0) > 1e-4)
            throw ConfigError("attention row is not stochastic");
          row_sum += hrow;
          ++row_count;
        }
        if (row_count > 0) {
          example_sum += row_sum / static_cast<double>(row_count);
          ++example_count;
        }
      }
      out(l, h) = example_count > 0 ? example_sum / static_cast<double>(example_count) : 0.0;
    }
  }
  return out;
}

}  // namespace procseed
