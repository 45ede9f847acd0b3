#include "procseed/plan.hpp"

#include <cmath>
#include <map>

#include "procseed/errors.hpp"
#include "procseed/rng.hpp"

namespace procseed {

std::string to_string(Setting s) {
  return s == Setting::kAdditive ? "additive" : "substitutive";
}

Setting setting_from_string(const std::string& s) {
  if (s == "additive") return Setting::kAdditive;
  if (s == "substitutive") return Setting::kSubstitutive;
  throw ConfigError("unknown setting: " + s);
}

std::pair<double, double> mean_sd(const std::vector<double>& xs) {
  if (xs.empty()) return {0.0, 0.0};
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  if (xs.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / static_cast<double>(xs.size() - 1))};
}

namespace {

ModelConfig config_for_source(const ModelConfig& base, const GenConfig& g) {
  ModelConfig cfg = base;
  if (g.kind == GenKind::kEca110) {
    cfg.io_variant = IoVariant::kBinary;
    cfg.binary_width = g.eca_width;
    cfg.vocab_size = 2;
  } else {
    cfg.io_variant = IoVariant::kToken;
    cfg.binary_width = 0;
    cfg.vocab_size = g.vocab.size;
  }
  return cfg;
}

ModelConfig config_for_task(const ModelConfig& base, const TaskConfig& t) {
  ModelConfig cfg = base;
  cfg.io_variant = IoVariant::kToken;
  cfg.binary_width = 0;
  cfg.vocab_size = task_vocab(t).size;
  return cfg;
}

}  // namespace

RunOutcome run_pipeline(const PipelineSpec& spec, uint64_t seed,
                        MetricsWriter* writer) {
  RunOutcome out;
  out.seed = seed;

  ModelConfig cfg_task = config_for_task(spec.model, spec.task);
  ParamSet start;

  if (spec.t1 > 0 && spec.source) {
    ParamSet pre_init;
    StreamFactory factory;
    if (spec.source_b) {
      GenConfig a = *spec.source;
      GenConfig b = *spec.source_b;
      int64_t t1a = spec.t1 / 2;
      int64_t t1b = spec.t1 - t1a;
      MixtureStream probe(a, b, t1a, t1b, 0);
      ModelConfig cfg_pre = spec.model;
      cfg_pre.io_variant = IoVariant::kToken;
      cfg_pre.binary_width = 0;
      cfg_pre.vocab_size = probe.vocab().size;
      pre_init = init_params<float>(cfg_pre, derive_seed(seed, "init-pre"));
      factory = [a, b, t1a, t1b](uint64_t s,
                                 int) -> std::unique_ptr<SampleStream> {
        return std::make_unique<MixtureStream>(a, b, t1a, t1b, s);
      };
    } else {
      ModelConfig cfg_pre = config_for_source(spec.model, *spec.source);
      pre_init = init_params<float>(cfg_pre, derive_seed(seed, "init-pre"));
      factory = stream_factory(*spec.source);
    }
    TrainConfig pre = spec.pretrain;
    pre.seed = derive_seed(seed, "pretrain");
    pre.token_budget = spec.t1;
    TrainResult r1 = train(pre_init, factory, pre, "pretrain", writer);
    if (r1.stop == StopReason::kDiverged)
      throw DivergenceError("pretraining diverged");
    out.t1_used = r1.tokens_seen;
    start = apply_selector(r1.params, cfg_task, spec.selector,
                           derive_seed(seed, "transfer"));
    out.pretrain_stop = r1.stop;
  } else {
    start = init_params<float>(cfg_task, derive_seed(seed, "init-task"));
  }

  TrainConfig ft = spec.finetune;
  ft.seed = derive_seed(seed, "finetune");
  ft.token_budget = spec.t2;
  TrainResult r2 =
      train(start, stream_factory(spec.task), ft, "finetune", writer);
  if (r2.stop == StopReason::kDiverged)
    throw DivergenceError("fine-tuning diverged");
  out.t2_used = r2.tokens_seen;
  out.final_val_loss = r2.best_val_loss;
  out.finetune_stop = r2.stop;

  TaskStream eval_stream(spec.task, derive_seed(seed, "final-eval"));
  out.eval = evaluate(r2.params, eval_stream, spec.eval_samples,
                      ft.batch_size);
  out.params = std::move(r2.params);
  return out;
}

nlohmann::ordered_json to_json(const ExperimentPlan& p) {
  nlohmann::ordered_json j;
  j["setting"] = to_string(p.setting);
  j["t1"] = p.pipeline.t1;
  j["t2"] = p.pipeline.t2;
  if (p.pipeline.source) {
    nlohmann::json tmp = *p.pipeline.source;
    j["source"] = std::move(tmp);
  }
  if (p.pipeline.source_b) {
    nlohmann::json tmp = *p.pipeline.source_b;
    j["source_b"] = std::move(tmp);
  }
  {
    nlohmann::json tmp = p.pipeline.task;
    j["task"] = std::move(tmp);
  }
  j["selector"] = to_json(p.pipeline.selector);
  {
    nlohmann::json tmp = p.pipeline.model;
    j["model"] = std::move(tmp);
  }
  j["pretrain"] = to_json(p.pipeline.pretrain);
  j["finetune"] = to_json(p.pipeline.finetune);
  j["eval_samples"] = p.pipeline.eval_samples;
  j["seeds"] = p.seeds;
  if (p.t2_max > 0) j["t2_max"] = p.t2_max;
  if (p.search_cell > 0) j["search_cell"] = p.search_cell;
  if (p.target_metric) j["target_metric"] = *p.target_metric;
  return j;
}

ExperimentPlan plan_from_json(const nlohmann::json& j) {
  ExperimentPlan p;
  if (j.contains("setting"))
    p.setting = setting_from_string(j["setting"].get<std::string>());
  if (j.contains("t1")) p.pipeline.t1 = j["t1"].get<int64_t>();
  if (j.contains("t2")) p.pipeline.t2 = j["t2"].get<int64_t>();
  if (j.contains("source"))
    p.pipeline.source = j["source"].get<GenConfig>();
  if (j.contains("source_b"))
    p.pipeline.source_b = j["source_b"].get<GenConfig>();
  if (j.contains("task")) p.pipeline.task = j["task"].get<TaskConfig>();
  if (j.contains("selector"))
    p.pipeline.selector = selector_from_json(j["selector"]);
  if (j.contains("model")) p.pipeline.model = j["model"].get<ModelConfig>();
  if (j.contains("pretrain"))
    p.pipeline.pretrain = train_config_from_json(j["pretrain"]);
  if (j.contains("finetune"))
    p.pipeline.finetune = train_config_from_json(j["finetune"]);
  if (j.contains("eval_samples"))
    p.pipeline.eval_samples = j["eval_samples"].get<int>();
  if (j.contains("seeds"))
    p.seeds = j["seeds"].get<std::vector<uint64_t>>();
  if (j.contains("t2_max")) p.t2_max = j["t2_max"].get<int64_t>();
  if (j.contains("search_cell"))
    p.search_cell = j["search_cell"].get<int64_t>();
  if (j.contains("target_metric"))
    p.target_metric = j["target_metric"].get<double>();
  return p;
}

namespace {

nlohmann::ordered_json outcome_json(const RunOutcome& o) {
  nlohmann::ordered_json j;
  j["seed"] = o.seed;
  j["token_accuracy"] = o.eval.token_accuracy;
  j["sequence_accuracy"] = o.eval.sequence_accuracy;
  j["loss"] = o.eval.loss;
  j["perplexity"] = o.eval.perplexity;
  j["final_val_loss"] = o.final_val_loss;
  j["t1_used"] = o.t1_used;
  j["t2_used"] = o.t2_used;
  j["pretrain_stop"] = to_string(o.pretrain_stop);
  j["finetune_stop"] = to_string(o.finetune_stop);
  return j;
}

}  // namespace

nlohmann::ordered_json to_json(const PlanReport& r) {
  nlohmann::ordered_json j;
  j["setting"] = to_string(r.setting);
  nlohmann::ordered_json treat = nlohmann::ordered_json::array();
  for (const auto& o : r.treatment) treat.push_back(outcome_json(o));
  nlohmann::ordered_json base = nlohmann::ordered_json::array();
  for (const auto& o : r.baseline) base.push_back(outcome_json(o));
  j["treatment"] = treat;
  j["baseline"] = base;
  j["treatment_mean_accuracy"] = r.treatment_mean_acc;
  j["treatment_sd_accuracy"] = r.treatment_sd_acc;
  j["baseline_mean_accuracy"] = r.baseline_mean_acc;
  j["baseline_sd_accuracy"] = r.baseline_sd_acc;
  if (r.setting == Setting::kSubstitutive) {
    j["matched"] = r.matched;
    j["matched_t2"] = r.matched_t2;
    j["delta_t2"] = r.delta_t2;
    j["target"] = r.target;
    nlohmann::ordered_json probes = nlohmann::ordered_json::array();
    for (auto [t2, m] : r.probes) probes.push_back({{"t2", t2}, {"metric", m}});
    j["probes"] = probes;
  }
  return j;
}

int64_t substitutive_search(
    const std::function<double(int64_t)>& metric_at, double target,
    int64_t lo, int64_t hi, int64_t cell,
    std::vector<std::pair<int64_t, double>>* probes) {
  if (lo >= hi) throw ConfigError("search interval is empty");
  if (cell <= 0) throw ConfigError("search cell must be positive");
  double at_hi = metric_at(hi);
  if (probes) probes->emplace_back(hi, at_hi);
  if (at_hi > target)
    throw ConfigError("search target unreachable at full budget");
  while (hi - lo > cell) {
    int64_t mid = lo + (hi - lo) / 2;
    double m = metric_at(mid);
    if (probes) probes->emplace_back(mid, m);
    if (m <= target)
      hi = mid;
    else
      lo = mid;
  }
  return hi;
}

PlanReport run_plan(const ExperimentPlan& plan, const PlanHooks& hooks,
                    MetricsWriter* writer) {
  if (plan.seeds.empty()) throw ConfigError("plan needs at least one seed");
  PlanReport rep;
  rep.setting = plan.setting;

  if (plan.setting == Setting::kAdditive) {
    PipelineSpec base_spec = plan.pipeline;
    base_spec.t1 = 0;
    for (uint64_t seed : plan.seeds)
      rep.baseline.push_back(run_pipeline(base_spec, seed, writer));
    if (plan.pipeline.t1 > 0) {
      for (uint64_t seed : plan.seeds)
        rep.treatment.push_back(run_pipeline(plan.pipeline, seed, writer));
    } else {
      rep.treatment = rep.baseline;
    }
    std::vector<double> ta, ba;
    for (const auto& o : rep.treatment) ta.push_back(o.eval.token_accuracy);
    for (const auto& o : rep.baseline) ba.push_back(o.eval.token_accuracy);
    std::tie(rep.treatment_mean_acc, rep.treatment_sd_acc) = mean_sd(ta);
    std::tie(rep.baseline_mean_acc, rep.baseline_sd_acc) = mean_sd(ba);
    return rep;
  }

  // Substitutive: find the smallest T2 at which the pretrained model
  // matches the target loss.
  if (plan.t2_max <= 0)
    throw ConfigError("substitutive plans need t2_max > 0");
  int64_t cell =
      plan.search_cell > 0 ? plan.search_cell : std::max<int64_t>(1, plan.t2_max / 16);

  std::map<int64_t, double> memo;
  auto probe = [&](int64_t t2) -> double {
    auto it = memo.find(t2);
    if (it != memo.end()) return it->second;
    std::vector<double> losses;
    for (uint64_t seed : plan.seeds) {
      if (hooks.substitutive_metric) {
        losses.push_back(hooks.substitutive_metric(t2, seed));
      } else {
        PipelineSpec s = plan.pipeline;
        s.t2 = t2;
        RunOutcome o = run_pipeline(s, seed, writer);
        losses.push_back(o.eval.loss);
        rep.treatment.push_back(std::move(o));
      }
    }
    double m = mean_sd(losses).first;
    memo[t2] = m;
    rep.probes.emplace_back(t2, m);
    return m;
  };

  double target;
  if (plan.target_metric) {
    target = *plan.target_metric;
  } else {
    std::vector<double> base_losses;
    PipelineSpec base_spec = plan.pipeline;
    base_spec.t1 = 0;
    base_spec.t2 = plan.t2_max;
    for (uint64_t seed : plan.seeds) {
      RunOutcome o = run_pipeline(base_spec, seed, writer);
      base_losses.push_back(o.eval.loss);
      rep.baseline.push_back(std::move(o));
    }
    target = mean_sd(base_losses).first;
  }
  rep.target = target;

  if (probe(plan.t2_max) > target) {
    rep.matched = false;
    rep.matched_t2 = plan.t2_max;
    rep.delta_t2 = 0;
    return rep;
  }
  rep.matched_t2 = substitutive_search(probe, target, 0, plan.t2_max, cell);
  rep.matched = true;
  rep.delta_t2 = plan.t2_max - rep.matched_t2;
  return rep;
}

}  // namespace procseed
