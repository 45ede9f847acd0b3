#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "procseed/evaluate.hpp"
#include "procseed/genconfig.hpp"
#include "procseed/tasks.hpp"
#include "procseed/trainer.hpp"
#include "procseed/transfer.hpp"

namespace procseed {

// Additive: fixed target budget T2, compare a T1-pretrained model against
// the T1=0 baseline. Substitutive: search for the smallest T2 at which the
// pretrained model matches the full-budget baseline, reporting the saved
// target tokens.
enum class Setting { kAdditive, kSubstitutive };

std::string to_string(Setting s);
Setting setting_from_string(const std::string& s);

// One end-to-end pipeline cell: optional procedural pretraining for T1
// tokens, selective transfer into the task model, fine-tuning for T2
// tokens, final held-out evaluation.
struct PipelineSpec {
  std::optional<GenConfig> source;    // absent or t1=0: baseline
  std::optional<GenConfig> source_b;  // set: two-source mixture, t1 split
  TaskConfig task;
  TransferSelector selector;
  ModelConfig model;  // geometry only; vocab follows the phase data
  TrainConfig pretrain;
  TrainConfig finetune;
  int64_t t1 = 0;
  int64_t t2 = 0;  // 0: fine-tune bounded by max_steps only
  int eval_samples = 2000;
};

struct RunOutcome {
  uint64_t seed = 0;
  EvalReport eval;
  double final_val_loss = 0.0;  // best validation loss of the fine-tune
  int64_t t1_used = 0;
  int64_t t2_used = 0;
  StopReason pretrain_stop = StopReason::kMaxSteps;
  StopReason finetune_stop = StopReason::kMaxSteps;
  ParamSet params;
};

RunOutcome run_pipeline(const PipelineSpec& spec, uint64_t seed,
                        MetricsWriter* writer = nullptr);

struct ExperimentPlan {
  Setting setting = Setting::kAdditive;
  PipelineSpec pipeline;
  std::vector<uint64_t> seeds = {1, 2, 3};
  // Substitutive search space: probes T2 in [0, t2_max] down to cell width.
  int64_t t2_max = 0;
  int64_t search_cell = 0;  // 0: t2_max / 16
  // Loss the searched model must reach; unset: baseline loss at t2_max.
  std::optional<double> target_metric;
};

nlohmann::ordered_json to_json(const ExperimentPlan& p);
ExperimentPlan plan_from_json(const nlohmann::json& j);

struct PlanReport {
  Setting setting = Setting::kAdditive;
  std::vector<RunOutcome> treatment;
  std::vector<RunOutcome> baseline;
  double treatment_mean_acc = 0.0, treatment_sd_acc = 0.0;
  double baseline_mean_acc = 0.0, baseline_sd_acc = 0.0;
  // Substitutive outputs.
  bool matched = false;
  int64_t matched_t2 = 0;
  int64_t delta_t2 = 0;
  double target = 0.0;
  std::vector<std::pair<int64_t, double>> probes;  // (t2, metric)
};

nlohmann::ordered_json to_json(const PlanReport& r);

// Testing seam: when set, substitutive probes call this per seed instead of
// running the training pipeline. Lower metric is better.
struct PlanHooks {
  std::function<double(int64_t t2, uint64_t seed)> substitutive_metric;
};

PlanReport run_plan(const ExperimentPlan& plan, const PlanHooks& hooks = {},
                    MetricsWriter* writer = nullptr);

// Bisects [lo, hi] for the smallest budget whose metric is at or below
// target, assuming the metric is non-increasing in the budget. Requires
// metric_at(hi) <= target; the result is within one cell of the true
// crossing. Probes, when given, record every evaluation.
int64_t substitutive_search(
    const std::function<double(int64_t)>& metric_at, double target,
    int64_t lo, int64_t hi, int64_t cell,
    std::vector<std::pair<int64_t, double>>* probes = nullptr);

// Mean and sample standard deviation (n-1 denominator; 0 when n < 2).
std::pair<double, double> mean_sd(const std::vector<double>& xs);

}  // namespace procseed
