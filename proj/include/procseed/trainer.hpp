#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "procseed/genconfig.hpp"
#include "procseed/metrics.hpp"
#include "procseed/model.hpp"
#include "procseed/optimizer.hpp"
#include "procseed/stream.hpp"
#include "procseed/tasks.hpp"
#include "procseed/tensor.hpp"

namespace procseed {

// Quadratic attention-entropy penalty: weight * sum_h (H_h - tau)^2 over
// the selected heads, H_h pooled over the batch's valid rows in nats.
struct RegularizerConfig {
  double weight = 0.0;
  double tau = 0.8;
  std::vector<std::pair<int, int>> heads;  // (layer, head); empty = all
};

struct CurriculumConfig {
  int start_length = 2;
  int step = 2;
  int max_length = 20;
  double threshold = 0.99;  // validation token accuracy gate
};

struct TrainConfig {
  double lr = 5e-4;
  double weight_decay = 0.01;
  int batch_size = 256;
  int64_t max_steps = 2000;
  int64_t warmup_steps = 0;
  Schedule schedule = Schedule::kConstant;
  std::optional<double> grad_clip;
  int n_val_checks = 100;
  int val_samples = 1000;
  int val_batch_size = 0;  // 0: reuse batch_size
  std::optional<int> patience;  // in val checks; unset = unbounded
  // Stop once a validation check reaches this token accuracy (with a
  // curriculum: only at max length).
  std::optional<double> stop_accuracy;
  int64_t token_budget = 0;  // 0: step-bounded only
  uint64_t seed = 0;
  std::optional<CurriculumConfig> curriculum;
  std::optional<RegularizerConfig> regularizer;
};

nlohmann::ordered_json to_json(const TrainConfig& c);
TrainConfig train_config_from_json(const nlohmann::json& j);

// Reference recipes. Fine-tuning on task data: lr 1e-3, decay 1e-3, batch
// 1000, 1e4 steps (multiplication drops to batch 64 with 500 warmup steps).
// Pretraining: decay 0.01, batch 256, lr 5e-4 for sequence transforms and
// stack, 5e-5 for the bracket families; the automaton uses lr 2e-6 with
// clip 1.0 and 10% warmup into a cosine decay.
TrainConfig finetune_preset(TaskKind kind);
TrainConfig pretrain_preset(GenKind kind, int64_t max_steps);
// Shrinks any config to the reduced profile: batch 256, 2000 steps.
TrainConfig reduced_profile(TrainConfig c);

enum class StopReason {
  kMaxSteps,
  kTokenBudget,
  kEarlyStop,
  kDiverged,
  kDataExhausted,
};

std::string to_string(StopReason r);

struct TrainResult {
  ParamSet params;  // best-validation weights; final weights if no check ran
  std::vector<MetricsRecord> metrics;
  int64_t steps = 0;
  int64_t tokens_seen = 0;
  StopReason stop = StopReason::kMaxSteps;
  double best_val_loss = 0.0;
  int final_input_length = 0;  // 0 when no curriculum
};

// Builds a sample stream for the given seed. input_length > 0 asks for that
// curriculum length; 0 keeps the source default. Training and validation
// use distinct derived seeds; each validation check gets a fresh stream.
using StreamFactory =
    std::function<std::unique_ptr<SampleStream>(uint64_t seed, int length)>;

StreamFactory stream_factory(const GenConfig& cfg);
StreamFactory stream_factory(const TaskConfig& cfg);

TrainResult train(const ParamSet& init, const StreamFactory& make_stream,
                  const TrainConfig& cfg, const std::string& phase,
                  MetricsWriter* writer = nullptr);

// Returns weight * sum_h (H_h - tau)^2 over the selected heads and adds
// d(penalty)/dH_h = 2 * weight * (H_h - tau) into coeff, which must be
// zero-initialized at [n_layers, n_heads].
double apply_entropy_penalty(const RegularizerConfig& reg,
                             const MatD& entropy, MatD& coeff);

}  // namespace procseed
