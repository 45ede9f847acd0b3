#include "procseed/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "procseed/errors.hpp"
#include "procseed/evaluate.hpp"
#include "procseed/rng.hpp"

namespace procseed {

nlohmann::ordered_json to_json(const TrainConfig& c) {
  nlohmann::ordered_json j;
  j["lr"] = c.lr;
  j["weight_decay"] = c.weight_decay;
  j["batch_size"] = c.batch_size;
  j["max_steps"] = c.max_steps;
  j["warmup_steps"] = c.warmup_steps;
  j["schedule"] = to_string(c.schedule);
  if (c.grad_clip) j["grad_clip"] = *c.grad_clip;
  j["n_val_checks"] = c.n_val_checks;
  j["val_samples"] = c.val_samples;
  if (c.val_batch_size > 0) j["val_batch_size"] = c.val_batch_size;
  if (c.patience) j["patience"] = *c.patience;
  if (c.stop_accuracy) j["stop_accuracy"] = *c.stop_accuracy;
  if (c.token_budget > 0) j["token_budget"] = c.token_budget;
  j["seed"] = c.seed;
  if (c.curriculum) {
    nlohmann::ordered_json cj;
    cj["start_length"] = c.curriculum->start_length;
    cj["step"] = c.curriculum->step;
    cj["max_length"] = c.curriculum->max_length;
    cj["threshold"] = c.curriculum->threshold;
    j["curriculum"] = cj;
  }
  if (c.regularizer) {
    nlohmann::ordered_json rj;
    rj["weight"] = c.regularizer->weight;
    rj["tau"] = c.regularizer->tau;
    std::vector<std::vector<int>> heads;
    for (auto [l, h] : c.regularizer->heads) heads.push_back({l, h});
    rj["heads"] = heads;
    j["regularizer"] = rj;
  }
  return j;
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  if (j.contains("lr")) c.lr = j["lr"].get<double>();
  if (j.contains("weight_decay"))
    c.weight_decay = j["weight_decay"].get<double>();
  if (j.contains("batch_size")) c.batch_size = j["batch_size"].get<int>();
  if (j.contains("max_steps")) c.max_steps = j["max_steps"].get<int64_t>();
  if (j.contains("warmup_steps"))
    c.warmup_steps = j["warmup_steps"].get<int64_t>();
  if (j.contains("schedule"))
    c.schedule = schedule_from_string(j["schedule"].get<std::string>());
  if (j.contains("grad_clip")) c.grad_clip = j["grad_clip"].get<double>();
  if (j.contains("n_val_checks"))
    c.n_val_checks = j["n_val_checks"].get<int>();
  if (j.contains("val_samples")) c.val_samples = j["val_samples"].get<int>();
  if (j.contains("val_batch_size"))
    c.val_batch_size = j["val_batch_size"].get<int>();
  if (j.contains("patience")) c.patience = j["patience"].get<int>();
  if (j.contains("stop_accuracy"))
    c.stop_accuracy = j["stop_accuracy"].get<double>();
  if (j.contains("token_budget"))
    c.token_budget = j["token_budget"].get<int64_t>();
  if (j.contains("seed")) c.seed = j["seed"].get<uint64_t>();
  if (j.contains("curriculum")) {
    const auto& cj = j["curriculum"];
    CurriculumConfig cur;
    if (cj.contains("start_length"))
      cur.start_length = cj["start_length"].get<int>();
    if (cj.contains("step")) cur.step = cj["step"].get<int>();
    if (cj.contains("max_length"))
      cur.max_length = cj["max_length"].get<int>();
    if (cj.contains("threshold"))
      cur.threshold = cj["threshold"].get<double>();
    c.curriculum = cur;
  }
  if (j.contains("regularizer")) {
    const auto& rj = j["regularizer"];
    RegularizerConfig reg;
    if (rj.contains("weight")) reg.weight = rj["weight"].get<double>();
    if (rj.contains("tau")) reg.tau = rj["tau"].get<double>();
    if (rj.contains("heads"))
      for (const auto& pair : rj["heads"])
        reg.heads.emplace_back(pair.at(0).get<int>(), pair.at(1).get<int>());
    c.regularizer = reg;
  }
  return c;
}

TrainConfig finetune_preset(TaskKind kind) {
  TrainConfig c;
  c.lr = 1e-3;
  c.weight_decay = 1e-3;
  c.batch_size = 1000;
  c.max_steps = 10000;
  c.schedule = Schedule::kConstant;
  if (kind == TaskKind::kMultiplication) {
    c.batch_size = 64;
    c.warmup_steps = 500;
  }
  return c;
}

TrainConfig pretrain_preset(GenKind kind, int64_t max_steps) {
  TrainConfig c;
  c.weight_decay = 0.01;
  c.batch_size = 256;
  c.max_steps = max_steps;
  c.schedule = Schedule::kConstant;
  switch (kind) {
    case GenKind::kDyck:
    case GenKind::kDyckShuffle:
      c.lr = 5e-5;
      break;
    case GenKind::kEca110:
      c.lr = 2e-6;
      c.grad_clip = 1.0;
      c.schedule = Schedule::kCosine;
      c.warmup_steps = std::max<int64_t>(1, max_steps / 10);
      break;
    default:
      c.lr = 5e-4;
      break;
  }
  return c;
}

TrainConfig reduced_profile(TrainConfig c) {
  c.batch_size = 256;
  c.max_steps = 2000;
  if (c.warmup_steps > 0)
    c.warmup_steps = std::min<int64_t>(c.warmup_steps, c.max_steps / 10);
  return c;
}

std::string to_string(StopReason r) {
  switch (r) {
    case StopReason::kMaxSteps: return "max_steps";
    case StopReason::kTokenBudget: return "token_budget";
    case StopReason::kEarlyStop: return "early_stop";
    case StopReason::kDiverged: return "diverged";
    case StopReason::kDataExhausted: return "data_exhausted";
  }
  return "unknown";
}

double apply_entropy_penalty(const RegularizerConfig& reg,
                             const MatD& entropy, MatD& coeff) {
  double penalty = 0.0;
  auto add = [&](int l, int h) {
    if (l < 0 || l >= entropy.rows() || h < 0 || h >= entropy.cols())
      throw ConfigError("regularizer head index out of range");
    double d = entropy(l, h) - reg.tau;
    penalty += reg.weight * d * d;
    coeff(l, h) += 2.0 * reg.weight * d;
  };
  if (reg.heads.empty()) {
    for (Eigen::Index l = 0; l < entropy.rows(); ++l)
      for (Eigen::Index h = 0; h < entropy.cols(); ++h)
        add(static_cast<int>(l), static_cast<int>(h));
  } else {
    for (auto [l, h] : reg.heads) add(l, h);
  }
  return penalty;
}

StreamFactory stream_factory(const GenConfig& cfg) {
  return [cfg](uint64_t seed, int length) -> std::unique_ptr<SampleStream> {
    auto s = std::make_unique<GenStream>(cfg, seed);
    if (length > 0) s->set_input_length(length);
    return s;
  };
}

StreamFactory stream_factory(const TaskConfig& cfg) {
  return [cfg](uint64_t seed, int) -> std::unique_ptr<SampleStream> {
    return std::make_unique<TaskStream>(cfg, seed);
  };
}

TrainResult train(const ParamSet& init, const StreamFactory& make_stream,
                  const TrainConfig& cfg, const std::string& phase,
                  MetricsWriter* writer) {
  if (cfg.batch_size <= 0) throw ConfigError("batch_size must be positive");
  if (cfg.max_steps < 0) throw ConfigError("max_steps must be non-negative");
  if (cfg.n_val_checks <= 0)
    throw ConfigError("n_val_checks must be positive");
  validate(init.config);
  const bool binary = init.config.io_variant == IoVariant::kBinary;

  TrainResult result;
  result.params = init;
  result.best_val_loss = std::numeric_limits<double>::infinity();
  if (cfg.curriculum)
    result.final_input_length = cfg.curriculum->start_length;

  int cur_len = cfg.curriculum ? cfg.curriculum->start_length : 0;
  auto train_stream = make_stream(derive_seed(cfg.seed, "train-data"),
                                  cur_len);

  ParamSet params = init;
  ParamSet grads = init;
  grads.set_zero();
  AdamW opt(params);
  ForwardCache cache;

  const int64_t eval_every =
      std::max<int64_t>(1, cfg.max_steps / cfg.n_val_checks);
  const int val_batch =
      cfg.val_batch_size > 0 ? cfg.val_batch_size : cfg.batch_size;

  ParamSet best_params;
  bool has_best = false;
  int checks_since_best = 0;
  int64_t check_index = 0;
  bool stopped = false;

  for (int64_t step = 1; step <= cfg.max_steps && !stopped; ++step) {
    if (cfg.token_budget > 0 && result.tokens_seen >= cfg.token_budget) {
      result.stop = StopReason::kTokenBudget;
      stopped = true;
      break;
    }
    std::vector<ProcSample> samples = take(*train_stream, cfg.batch_size);
    if (samples.empty()) {
      result.stop = StopReason::kDataExhausted;
      stopped = true;
      break;
    }

    LossGrad<float> lg;
    double train_loss = 0.0;
    MatD coeff;
    bool use_reg = cfg.regularizer && cfg.regularizer->weight != 0.0;
    std::vector<int> n_pos;
    int64_t batch_tokens = 0;

    if (binary) {
      BinaryBatch b =
          make_binary_batch<float>(samples, init.config.binary_width);
      forward(params, b, cache);
      lg = binary_loss(cache.out, b);
      n_pos = b.n_pos;
      batch_tokens = b.token_count;
      train_loss = lg.loss;
      if (use_reg) {
        MatD ent = batch_entropy(cache, n_pos, params.config);
        coeff = MatD::Zero(ent.rows(), ent.cols());
        train_loss += apply_entropy_penalty(*cfg.regularizer, ent, coeff);
      }
      if (!std::isfinite(train_loss)) {
        result.stop = StopReason::kDiverged;
        stopped = true;
        break;
      }
      grads.set_zero();
      backward(params, b, cache, lg.dout, grads,
               use_reg ? &coeff : nullptr);
    } else {
      TokenBatch b =
          make_token_batch(samples, train_stream->vocab().pad_id);
      forward(params, b, cache);
      lg = token_loss(cache.out, b);
      n_pos = b.n_pos;
      batch_tokens = b.token_count;
      train_loss = lg.loss;
      if (use_reg) {
        MatD ent = batch_entropy(cache, n_pos, params.config);
        coeff = MatD::Zero(ent.rows(), ent.cols());
        train_loss += apply_entropy_penalty(*cfg.regularizer, ent, coeff);
      }
      if (!std::isfinite(train_loss)) {
        result.stop = StopReason::kDiverged;
        stopped = true;
        break;
      }
      grads.set_zero();
      backward(params, b, cache, lg.dout, grads,
               use_reg ? &coeff : nullptr);
    }

    double lr = lr_at(step, cfg.lr, cfg.schedule, cfg.warmup_steps,
                      cfg.max_steps);
    try {
      opt.step(params, grads, lr, cfg.weight_decay, cfg.grad_clip);
    } catch (const DivergenceError&) {
      result.stop = StopReason::kDiverged;
      stopped = true;
      break;
    }
    result.tokens_seen += batch_tokens;
    result.steps = step;

    if (step % eval_every == 0 || step == cfg.max_steps) {
      auto val_stream = make_stream(
          derive_seed(cfg.seed, "val-data", static_cast<uint64_t>(check_index)),
          cur_len);
      EvalReport rep = evaluate(params, *val_stream, cfg.val_samples,
                                val_batch, use_reg);
      ++check_index;

      MetricsRecord rec;
      rec.step = step;
      rec.tokens_seen = result.tokens_seen;
      rec.phase = phase;
      rec.loss = rep.loss;
      rec.token_accuracy = rep.token_accuracy;
      rec.perplexity = rep.perplexity;
      rec.lr = lr;
      rec.train_loss = train_loss;
      if (cfg.curriculum) rec.input_length = cur_len;
      if (use_reg && rep.per_head_entropy.size() > 0)
        rec.per_head_entropy = rep.per_head_entropy;
      result.metrics.push_back(rec);
      if (writer) writer->write(rec);

      if (rep.loss < result.best_val_loss) {
        result.best_val_loss = rep.loss;
        best_params = params;
        has_best = true;
        checks_since_best = 0;
      } else {
        ++checks_since_best;
      }
      if (cfg.patience && checks_since_best > *cfg.patience) {
        result.stop = StopReason::kEarlyStop;
        stopped = true;
        break;
      }
      bool at_final_length =
          !cfg.curriculum || cur_len >= cfg.curriculum->max_length;
      if (cfg.stop_accuracy && at_final_length &&
          rep.token_accuracy >= *cfg.stop_accuracy) {
        result.stop = StopReason::kEarlyStop;
        stopped = true;
        break;
      }
      if (cfg.curriculum && cur_len < cfg.curriculum->max_length &&
          rep.token_accuracy >= cfg.curriculum->threshold) {
        cur_len = std::min(cur_len + cfg.curriculum->step,
                           cfg.curriculum->max_length);
        train_stream->set_input_length(cur_len);
        result.final_input_length = cur_len;
      }
    }
  }

  result.params = has_best ? best_params : params;
  return result;
}

}  // namespace procseed
