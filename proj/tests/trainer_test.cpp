#include "procseed/trainer.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <vector>

#include "procseed/errors.hpp"
#include "procseed/evaluate.hpp"
#include "procseed/genconfig.hpp"
#include "procseed/rng.hpp"
#include "procseed/tensor.hpp"

namespace procseed {
namespace {

GenConfig small_identity(int len) {
  GenConfig cfg = default_config(GenKind::kIdentity);
  cfg.input_length = len;
  cfg.n_elements = 6;
  cfg.vocab = vocab_for(cfg);
  return cfg;
}

ModelConfig small_model(const GenConfig& gen) {
  ModelConfig cfg;
  cfg.n_layers = 1;
  cfg.n_heads = 1;
  cfg.d_model = 4;
  cfg.vocab_size = gen.vocab.size;
  cfg.max_seq_len = 32;
  return cfg;
}

TEST(Train, ZeroStepsReturnsInitUntouched) {
  GenConfig gen = small_identity(4);
  ParamSet init = init_params<float>(small_model(gen), 3);
  TrainConfig cfg;
  cfg.max_steps = 0;
  cfg.batch_size = 8;
  cfg.seed = 1;
  TrainResult r = train(init, stream_factory(gen), cfg, "probe");
  EXPECT_EQ(r.steps, 0);
  EXPECT_EQ(r.tokens_seen, 0);
  EXPECT_TRUE(r.metrics.empty());
  EXPECT_EQ(r.stop, StopReason::kMaxSteps);
  EXPECT_TRUE(std::isinf(r.best_val_loss));
  EXPECT_EQ(hash_params(r.params), hash_params(init));
}

TEST(Train, RejectsDegenerateConfigs) {
  GenConfig gen = small_identity(4);
  ParamSet init = init_params<float>(small_model(gen), 3);
  TrainConfig cfg;
  cfg.batch_size = 0;
  EXPECT_THROW(train(init, stream_factory(gen), cfg, "p"), ConfigError);
  cfg.batch_size = 4;
  cfg.max_steps = -1;
  EXPECT_THROW(train(init, stream_factory(gen), cfg, "p"), ConfigError);
  cfg.max_steps = 4;
  cfg.n_val_checks = 0;
  EXPECT_THROW(train(init, stream_factory(gen), cfg, "p"), ConfigError);
}

TEST(Train, MetricsCadenceAndBitExactDeterminism) {
  GenConfig gen = small_identity(4);
  ParamSet init = init_params<float>(small_model(gen), 9);
  TrainConfig cfg;
  cfg.lr = 3e-3;
  cfg.batch_size = 16;
  cfg.max_steps = 20;
  cfg.n_val_checks = 4;
  cfg.val_samples = 32;
  cfg.val_batch_size = 16;
  cfg.seed = 5;

  TrainResult a = train(init, stream_factory(gen), cfg, "probe");
  TrainResult b = train(init, stream_factory(gen), cfg, "probe");

  ASSERT_EQ(a.metrics.size(), 4u);
  EXPECT_EQ(a.metrics[0].step, 5);
  EXPECT_EQ(a.metrics[1].step, 10);
  EXPECT_EQ(a.metrics[2].step, 15);
  EXPECT_EQ(a.metrics[3].step, 20);
  for (const auto& m : a.metrics) {
    EXPECT_EQ(m.phase, "probe");
    EXPECT_EQ(m.lr, cfg.lr);
    EXPECT_FALSE(m.input_length.has_value());
    EXPECT_GT(m.tokens_seen, 0);
  }
  EXPECT_EQ(a.steps, 20);
  EXPECT_EQ(a.stop, StopReason::kMaxSteps);

  ASSERT_EQ(b.metrics.size(), a.metrics.size());
  for (size_t i = 0; i < a.metrics.size(); ++i) {
    EXPECT_EQ(a.metrics[i].loss, b.metrics[i].loss);
    EXPECT_EQ(a.metrics[i].token_accuracy, b.metrics[i].token_accuracy);
    EXPECT_EQ(a.metrics[i].train_loss, b.metrics[i].train_loss);
    EXPECT_EQ(a.metrics[i].tokens_seen, b.metrics[i].tokens_seen);
  }
  EXPECT_EQ(hash_params(a.params), hash_params(b.params));

  TrainConfig other = cfg;
  other.seed = 6;
  TrainResult c = train(init, stream_factory(gen), other, "probe");
  EXPECT_NE(a.metrics.back().train_loss, c.metrics.back().train_loss);
}

TEST(Train, BestValParamsReproduceBestLoss) {
  GenConfig gen = small_identity(4);
  ParamSet init = init_params<float>(small_model(gen), 2);
  TrainConfig cfg;
  cfg.lr = 5e-3;
  cfg.batch_size = 32;
  cfg.max_steps = 30;
  cfg.n_val_checks = 6;
  cfg.val_samples = 48;
  cfg.val_batch_size = 24;
  cfg.seed = 11;

  StreamFactory factory = stream_factory(gen);
  TrainResult r = train(init, factory, cfg, "probe");
  ASSERT_EQ(r.metrics.size(), 6u);

  size_t best = 0;
  for (size_t i = 1; i < r.metrics.size(); ++i)
    if (r.metrics[i].loss < r.metrics[best].loss) best = i;
  EXPECT_EQ(r.best_val_loss, r.metrics[best].loss);

  // Rebuilding the validation stream for the winning check and rerunning the
  // evaluation against the returned parameters must reproduce the recorded
  // loss exactly; the trainer promised us the weights from that check.
  auto val = factory(derive_seed(cfg.seed, "val-data", best), 0);
  EvalReport rep =
      evaluate(r.params, *val, cfg.val_samples, cfg.val_batch_size);
  EXPECT_EQ(rep.loss, r.best_val_loss);
}

TEST(Train, CurriculumPromotesThroughLengthsWhenGateIsOpen) {
  GenConfig gen = small_identity(2);
  ParamSet init = init_params<float>(small_model(gen), 7);
  TrainConfig cfg;
  cfg.batch_size = 8;
  cfg.max_steps = 12;
  cfg.n_val_checks = 6;
  cfg.val_samples = 8;
  cfg.seed = 3;
  CurriculumConfig cur;
  cur.start_length = 2;
  cur.step = 2;
  cur.max_length = 6;
  cur.threshold = 0.0;  // always promote
  cfg.curriculum = cur;

  TrainResult r = train(init, stream_factory(gen), cfg, "probe");
  ASSERT_GE(r.metrics.size(), 3u);
  EXPECT_EQ(r.metrics[0].input_length.value(), 2);
  EXPECT_EQ(r.metrics[1].input_length.value(), 4);
  EXPECT_EQ(r.metrics[2].input_length.value(), 6);
  int prev = 0;
  for (const auto& m : r.metrics) {
    ASSERT_TRUE(m.input_length.has_value());
    EXPECT_GE(*m.input_length, prev);
    EXPECT_LE(*m.input_length, 6);
    prev = *m.input_length;
  }
  EXPECT_EQ(r.final_input_length, 6);
}

TEST(Train, CurriculumHoldsAtStartWhenGateNeverOpens) {
  GenConfig gen = small_identity(2);
  ParamSet init = init_params<float>(small_model(gen), 7);
  TrainConfig cfg;
  cfg.batch_size = 8;
  cfg.max_steps = 12;
  cfg.n_val_checks = 4;
  cfg.val_samples = 8;
  cfg.seed = 3;
  CurriculumConfig cur;
  cur.start_length = 2;
  cur.step = 2;
  cur.max_length = 6;
  cur.threshold = 1.5;  // unattainable
  cfg.curriculum = cur;

  TrainResult r = train(init, stream_factory(gen), cfg, "probe");
  for (const auto& m : r.metrics) EXPECT_EQ(m.input_length.value(), 2);
  EXPECT_EQ(r.final_input_length, 2);
}

TEST(Train, StopAccuracyFiresOnlyAtFinalCurriculumLength) {
  GenConfig gen = small_identity(2);
  ParamSet init = init_params<float>(small_model(gen), 4);
  TrainConfig cfg;
  cfg.batch_size = 8;
  cfg.max_steps = 20;
  cfg.n_val_checks = 10;
  cfg.val_samples = 8;
  cfg.seed = 2;
  cfg.stop_accuracy = 0.0;  // met by any validation check
  CurriculumConfig cur;
  cur.start_length = 2;
  cur.step = 2;
  cur.max_length = 6;
  cur.threshold = 0.0;
  cfg.curriculum = cur;

  // Checks run every 2 steps. The first two only promote (2 -> 4 -> 6); the
  // third finally sits at max length and trips the accuracy stop.
  TrainResult r = train(init, stream_factory(gen), cfg, "probe");
  EXPECT_EQ(r.stop, StopReason::kEarlyStop);
  EXPECT_EQ(r.steps, 6);
  ASSERT_EQ(r.metrics.size(), 3u);
  EXPECT_EQ(r.final_input_length, 6);

  // Without a curriculum the same gate trips at the very first check.
  TrainConfig flat = cfg;
  flat.curriculum.reset();
  TrainResult f = train(init, stream_factory(gen), flat, "probe");
  EXPECT_EQ(f.stop, StopReason::kEarlyStop);
  EXPECT_EQ(f.steps, 2);
}

TEST(Train, TokenBudgetStopsBeforeOvershootingByMoreThanOneBatch) {
  GenConfig gen = small_identity(4);  // framed samples are 9 tokens each
  ParamSet init = init_params<float>(small_model(gen), 1);
  TrainConfig cfg;
  cfg.batch_size = 4;  // 36 tokens per step
  cfg.max_steps = 50;
  cfg.n_val_checks = 50;
  cfg.val_samples = 8;
  cfg.token_budget = 100;
  cfg.seed = 8;

  TrainResult r = train(init, stream_factory(gen), cfg, "probe");
  EXPECT_EQ(r.stop, StopReason::kTokenBudget);
  EXPECT_EQ(r.steps, 3);
  EXPECT_EQ(r.tokens_seen, 108);
}

TEST(Train, PatienceStopsOnStagnation) {
  GenConfig gen = small_identity(4);
  ParamSet init = init_params<float>(small_model(gen), 6);
  TrainConfig cfg;
  cfg.lr = 0.0;  // frozen model: validation loss cannot keep improving
  cfg.batch_size = 8;
  cfg.max_steps = 60;
  cfg.n_val_checks = 60;
  cfg.val_samples = 16;
  cfg.patience = 1;
  cfg.seed = 12;

  TrainResult r = train(init, stream_factory(gen), cfg, "probe");
  EXPECT_EQ(r.stop, StopReason::kEarlyStop);
  EXPECT_LT(r.steps, 60);
}

TEST(Train, DivergenceStopsWithFiniteParams) {
  GenConfig gen = small_identity(4);
  ParamSet init = init_params<float>(small_model(gen), 5);
  TrainConfig cfg;
  cfg.lr = 1e12;
  cfg.batch_size = 8;
  cfg.max_steps = 40;
  cfg.n_val_checks = 2;
  cfg.val_samples = 8;
  cfg.seed = 4;

  TrainResult r = train(init, stream_factory(gen), cfg, "probe");
  EXPECT_EQ(r.stop, StopReason::kDiverged);
  EXPECT_LT(r.steps, 40);
  for (const auto& t : r.params.tensors)
    EXPECT_TRUE(t.value.allFinite()) << t.name;
}

TEST(Train, DataExhaustionStopsCleanly) {
  GenConfig gen = small_identity(4);
  ParamSet init = init_params<float>(small_model(gen), 3);
  Rng rng(19);
  std::vector<ProcSample> pool;
  for (int i = 0; i < 3; ++i) pool.push_back(generate(gen, rng));
  StreamFactory factory = [pool, gen](uint64_t, int) {
    return std::make_unique<VectorStream>(pool, gen.vocab);
  };

  TrainConfig cfg;
  cfg.batch_size = 2;
  cfg.max_steps = 10;
  cfg.n_val_checks = 10;
  cfg.val_samples = 3;
  cfg.val_batch_size = 3;
  cfg.seed = 1;

  TrainResult r = train(init, factory, cfg, "probe");
  EXPECT_EQ(r.stop, StopReason::kDataExhausted);
  EXPECT_EQ(r.steps, 2);
}

TEST(Presets, FinetuneValues) {
  TrainConfig c = finetune_preset(TaskKind::kHaystack);
  EXPECT_EQ(c.lr, 1e-3);
  EXPECT_EQ(c.weight_decay, 1e-3);
  EXPECT_EQ(c.batch_size, 1000);
  EXPECT_EQ(c.max_steps, 10000);
  EXPECT_EQ(c.warmup_steps, 0);
  EXPECT_EQ(c.schedule, Schedule::kConstant);

  TrainConfig m = finetune_preset(TaskKind::kMultiplication);
  EXPECT_EQ(m.batch_size, 64);
  EXPECT_EQ(m.warmup_steps, 500);
}

TEST(Presets, PretrainValues) {
  TrainConfig id = pretrain_preset(GenKind::kIdentity, 5000);
  EXPECT_EQ(id.lr, 5e-4);
  EXPECT_EQ(id.weight_decay, 0.01);
  EXPECT_EQ(id.batch_size, 256);
  EXPECT_EQ(id.max_steps, 5000);

  TrainConfig dy = pretrain_preset(GenKind::kDyckShuffle, 5000);
  EXPECT_EQ(dy.lr, 5e-5);

  TrainConfig eca = pretrain_preset(GenKind::kEca110, 5000);
  EXPECT_EQ(eca.lr, 2e-6);
  ASSERT_TRUE(eca.grad_clip.has_value());
  EXPECT_EQ(*eca.grad_clip, 1.0);
  EXPECT_EQ(eca.schedule, Schedule::kCosine);
  EXPECT_EQ(eca.warmup_steps, 500);
}

TEST(Presets, ReducedProfileShrinksBatchAndSteps) {
  TrainConfig c = finetune_preset(TaskKind::kMultiplication);
  TrainConfig r = reduced_profile(c);
  EXPECT_EQ(r.batch_size, 256);
  EXPECT_EQ(r.max_steps, 2000);
  EXPECT_EQ(r.warmup_steps, 200);
  EXPECT_EQ(r.lr, c.lr);
}

TEST(TrainConfigJson, RoundTripPreservesEveryField) {
  TrainConfig c;
  c.lr = 7e-4;
  c.weight_decay = 0.05;
  c.batch_size = 33;
  c.max_steps = 777;
  c.warmup_steps = 42;
  c.schedule = Schedule::kCosine;
  c.grad_clip = 2.5;
  c.n_val_checks = 9;
  c.val_samples = 123;
  c.val_batch_size = 45;
  c.patience = 3;
  c.stop_accuracy = 0.97;
  c.token_budget = 1234567;
  c.seed = 99;
  CurriculumConfig cur;
  cur.start_length = 4;
  cur.step = 3;
  cur.max_length = 19;
  cur.threshold = 0.95;
  c.curriculum = cur;
  RegularizerConfig reg;
  reg.weight = 0.25;
  reg.tau = 0.6;
  reg.heads = {{0, 1}, {1, 3}};
  c.regularizer = reg;

  TrainConfig back = train_config_from_json(to_json(c));
  EXPECT_EQ(to_json(back), to_json(c));
  EXPECT_EQ(back.schedule, Schedule::kCosine);
  ASSERT_TRUE(back.curriculum.has_value());
  EXPECT_EQ(back.curriculum->max_length, 19);
  ASSERT_TRUE(back.regularizer.has_value());
  ASSERT_EQ(back.regularizer->heads.size(), 2u);
  EXPECT_EQ(back.regularizer->heads[1], (std::pair<int, int>{1, 3}));
}

}  // namespace
}  // namespace procseed
