#include "procseed/datagen.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <vector>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "oracles.hpp"
#include "procseed/errors.hpp"
#include "testutil.hpp"

namespace procseed {
namespace {

using testutil::chi_square_uniform;
using testutil::chi_square_z;
using testutil::kZCrit;

const GenKind kTokenKinds[] = {
    GenKind::kIdentity, GenKind::kSet,   GenKind::kUnion,
    GenKind::kDelete,   GenKind::kSort,  GenKind::kReverse,
    GenKind::kStack,    GenKind::kDyck,  GenKind::kDyckShuffle,
};

// Draws a config with randomized shape parameters so the oracles see a
// spread of lengths and alphabet sizes, not just the defaults.
GenConfig random_config(GenKind kind, Rng& meta) {
  GenConfig cfg = default_config(kind);
  switch (kind) {
    case GenKind::kIdentity:
    case GenKind::kSet:
    case GenKind::kUnion:
    case GenKind::kDelete:
    case GenKind::kSort:
    case GenKind::kReverse:
      cfg.input_length = meta.range(1, 25);
      cfg.n_elements = meta.range(2, 101);
      break;
    case GenKind::kStack:
      cfg.input_length = meta.range(1, 25);
      cfg.n_elements = meta.range(8, 101);
      break;
    case GenKind::kDyck:
    case GenKind::kDyckShuffle:
      cfg.input_length = 2 * meta.range(1, 33);
      cfg.dyck_k = meta.range(1, 7);
      cfg.p_open = 0.2 + 0.5 * meta.uniform();
      break;
    case GenKind::kEca110:
      break;
  }
  cfg.vocab = vocab_for(cfg);
  return cfg;
}

TEST(Generators, OracleSweep) {
  for (GenKind kind : kTokenKinds) {
    Rng meta(derive_seed(1000, to_string(kind)));
    for (int i = 0; i < 2000; ++i) {
      GenConfig cfg = random_config(kind, meta);
      validate(cfg);
      Rng rng(derive_seed(2000, to_string(kind), static_cast<uint64_t>(i)));
      ProcSample s = generate(cfg, rng);
      ASSERT_TRUE(oracle::check_sample(s, cfg))
          << to_string(kind) << " sample " << i;
      ASSERT_NO_THROW(validate(s, cfg.vocab)) << to_string(kind);
      ASSERT_EQ(s.source_tag, to_string(kind));
    }
  }
}

TEST(Generators, Determinism) {
  for (GenKind kind : kTokenKinds) {
    GenConfig cfg = default_config(kind);
    Rng a(42), b(42), c(43);
    bool any_diff = false;
    for (int i = 0; i < 50; ++i) {
      ProcSample sa = generate(cfg, a);
      ProcSample sb = generate(cfg, b);
      ProcSample sc = generate(cfg, c);
      ASSERT_EQ(sa.tokens, sb.tokens) << to_string(kind);
      ASSERT_EQ(sa.loss_mask, sb.loss_mask) << to_string(kind);
      any_diff |= sa.tokens != sc.tokens;
    }
    EXPECT_TRUE(any_diff) << to_string(kind) << " ignores its seed";
  }
}

TEST(Generators, StackStatsAccounting) {
  GenConfig cfg = default_config(GenKind::kStack);
  cfg.input_length = 30;
  cfg.vocab = vocab_for(cfg);
  Rng rng(7);
  for (int i = 0; i < 500; ++i) {
    StackStats st;
    ProcSample s = gen_stack(cfg, rng, &st);
    EXPECT_EQ(st.pushes + st.pops, cfg.input_length);
    EXPECT_GE(st.resamples, 0);
    // Answer length equals surviving pushes.
    oracle::Split sp;
    ASSERT_TRUE(oracle::split_on_separator(s, cfg.vocab.separator_id, sp));
    EXPECT_EQ(static_cast<int64_t>(sp.answer.size()), st.pushes - st.pops);
  }
}

TEST(Generators, DyckShuffleCloseTypeUniformity) {
  // Replay each sample; whenever a close happens with all 4 types open,
  // the closed type should be uniform over the 4.
  GenConfig cfg = default_config(GenKind::kDyckShuffle);
  cfg.dyck_k = 4;
  cfg.input_length = 128;
  cfg.vocab = vocab_for(cfg);
  Rng rng(404);
  std::vector<int64_t> counts(4, 0);
  for (int i = 0; i < 4000; ++i) {
    ProcSample s = gen_dyck_shuffle(cfg, rng);
    std::vector<int> open(4, 0);
    for (TokenId t : s.tokens) {
      int type = t / 2;
      if (t % 2 == 0) {
        ++open[type];
      } else {
        if (open[0] > 0 && open[1] > 0 && open[2] > 0 && open[3] > 0)
          ++counts[type];
        --open[type];
      }
    }
  }
  int64_t total = counts[0] + counts[1] + counts[2] + counts[3];
  ASSERT_GT(total, 10000);
  double z = chi_square_z(chi_square_uniform(counts), 3);
  EXPECT_LT(z, kZCrit);
}

TEST(Generators, IdentityElementUniformity) {
  GenConfig cfg = default_config(GenKind::kIdentity);
  cfg.input_length = 16;
  cfg.n_elements = 10;
  cfg.vocab = vocab_for(cfg);
  Rng rng(11);
  std::vector<int64_t> counts(10, 0);
  for (int i = 0; i < 5000; ++i) {
    ProcSample s = gen_identity(cfg, rng);
    for (int p = 0; p < cfg.input_length; ++p) ++counts[s.tokens[p]];
  }
  double z = chi_square_z(chi_square_uniform(counts), 9);
  EXPECT_LT(z, kZCrit);
}

TEST(Generators, ShuffleSamplePreservesMultisetAndMask) {
  GenConfig cfg = default_config(GenKind::kSort);
  cfg.input_length = 12;
  cfg.vocab = vocab_for(cfg);
  Rng rng(3);
  ProcSample s = gen_sort(cfg, rng);
  Rng shuffler(99);
  ProcSample t = shuffle_sample(s, shuffler);
  EXPECT_EQ(t.loss_mask, s.loss_mask);
  EXPECT_EQ(t.source_tag, s.source_tag);
  std::map<TokenId, int> before, after;
  for (TokenId x : s.tokens) ++before[x];
  for (TokenId x : t.tokens) ++after[x];
  EXPECT_EQ(before, after);
}

TEST(Generators, ValidateRejectsDegenerateConfigs) {
  GenConfig cfg = default_config(GenKind::kDyck);
  cfg.input_length = 7;
  cfg.vocab = vocab_for(cfg);
  EXPECT_THROW(validate(cfg), ConfigError);

  cfg = default_config(GenKind::kDyckShuffle);
  cfg.input_length = 9;
  cfg.vocab = vocab_for(cfg);
  EXPECT_THROW(validate(cfg), ConfigError);

  cfg = default_config(GenKind::kIdentity);
  cfg.input_length = 0;
  cfg.vocab = vocab_for(cfg);
  EXPECT_THROW(validate(cfg), ConfigError);

  cfg = default_config(GenKind::kDyck);
  cfg.p_open = 1.0;
  cfg.vocab = vocab_for(cfg);
  EXPECT_THROW(validate(cfg), ConfigError);

  cfg = default_config(GenKind::kSet);
  cfg.n_elements = 50;  // vocab now stale
  EXPECT_THROW(validate(cfg), ConfigError);
}

TEST(Generators, ConfigJsonRoundTrip) {
  for (GenKind kind : kTokenKinds) {
    GenConfig cfg = default_config(kind);
    cfg.seed = 123;
    nlohmann::json j = cfg;
    auto back = j.get<GenConfig>();
    EXPECT_EQ(back, cfg) << to_string(kind);
  }
}

// ---------------------------------------------------------------------------
// Cellular automaton
// ---------------------------------------------------------------------------

// Independent implementation: explicit wraparound padding plus a rule table
// decoded up front.
std::vector<uint8_t> eca_step_reference(const std::vector<uint8_t>& s, int rule) {
  const size_t n = s.size();
  std::array<uint8_t, 8> table;
  for (int i = 0; i < 8; ++i) table[static_cast<size_t>(i)] = (rule >> i) & 1;
  std::vector<uint8_t> padded;
  padded.reserve(n + 2);
  padded.push_back(s.back());
  padded.insert(padded.end(), s.begin(), s.end());
  padded.push_back(s.front());
  std::vector<uint8_t> out(n);
  for (size_t i = 0; i < n; ++i)
    out[i] = table[static_cast<size_t>(4 * padded[i] + 2 * padded[i + 1] + padded[i + 2])];
  return out;
}

TEST(Eca, Rule110TruthTable) {
  // The rule number's binary expansion is the truth table itself.
  for (int l = 0; l < 2; ++l)
    for (int c = 0; c < 2; ++c)
      for (int r = 0; r < 2; ++r) {
        std::vector<uint8_t> state{static_cast<uint8_t>(l),
                                   static_cast<uint8_t>(c),
                                   static_cast<uint8_t>(r)};
        uint8_t expected = (110 >> (4 * l + 2 * c + r)) & 1;
        EXPECT_EQ(eca_step(state, 110)[1], expected)
            << "neighborhood " << l << c << r;
      }
}

TEST(Eca, MatchesReferenceOnRandomStates) {
  Rng rng(2718);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<uint8_t> state(100);
    for (auto& c : state) c = static_cast<uint8_t>(rng.below(2));
    int rule = (trial % 4 == 0) ? static_cast<int>(rng.below(256)) : 110;
    EXPECT_EQ(eca_step(state, rule), eca_step_reference(state, rule));
  }
}

TEST(Eca, DegenerateRules) {
  std::vector<uint8_t> state{1, 0, 1, 1, 0};
  EXPECT_EQ(eca_step(state, 0), std::vector<uint8_t>(5, 0));
  EXPECT_EQ(eca_step(state, 255), std::vector<uint8_t>(5, 1));
  EXPECT_THROW(eca_step(state, -1), ConfigError);
  EXPECT_THROW(eca_step(state, 256), ConfigError);
  EXPECT_THROW(eca_step({}, 110), ConfigError);
}

TEST(Eca, GeneratedSampleLayout) {
  GenConfig cfg = default_config(GenKind::kEca110);
  cfg.eca_width = 32;
  cfg.eca_steps = 10;
  cfg.vocab = vocab_for(cfg);
  Rng rng(5);
  ProcSample s = gen_eca(cfg, rng);
  ASSERT_EQ(s.tokens.size(), 320u);
  for (int i = 0; i < 32; ++i) EXPECT_EQ(s.loss_mask[i], 0);
  for (size_t i = 32; i < 320; ++i) EXPECT_EQ(s.loss_mask[i], 1);

  auto row = [&](int r) {
    std::vector<uint8_t> out(32);
    for (int i = 0; i < 32; ++i)
      out[static_cast<size_t>(i)] = static_cast<uint8_t>(s.tokens[static_cast<size_t>(32 * r + i)]);
    return out;
  };
  for (int r = 1; r < 10; ++r)
    EXPECT_EQ(row(r), eca_step_reference(row(r - 1), 110)) << "row " << r;
}

}  // namespace
}  // namespace procseed
