#include "procseed/optimizer.hpp"

#include <cmath>

#include "procseed/errors.hpp"

namespace procseed {

std::string to_string(Schedule s) {
  return s == Schedule::kConstant ? "constant" : "cosine";
}

Schedule schedule_from_string(const std::string& s) {
  if (s == "constant") return Schedule::kConstant;
  if (s == "cosine") return Schedule::kCosine;
  throw ConfigError("unknown schedule: " + s);
}

double lr_at(int64_t t, double peak_lr, Schedule schedule, int64_t warmup,
             int64_t max_steps) {
  if (t < 1) throw ConfigError("schedule steps are 1-based");
  if (warmup > 0 && t <= warmup)
    return peak_lr * static_cast<double>(t) / static_cast<double>(warmup);
  if (schedule == Schedule::kConstant) return peak_lr;
  int64_t span = max_steps - warmup;
  if (span <= 0) return peak_lr;
  double progress =
      static_cast<double>(t - warmup) / static_cast<double>(span);
  if (progress > 1.0) progress = 1.0;
  return peak_lr * 0.5 * (1.0 + std::cos(M_PI * progress));
}

AdamW::AdamW(const ParamSet& params, AdamWConfig cfg) : cfg_(cfg) {
  m_.reserve(params.tensors.size());
  v_.reserve(params.tensors.size());
  for (const auto& t : params.tensors) {
    m_.push_back(MatF::Zero(t.value.rows(), t.value.cols()));
    v_.push_back(MatF::Zero(t.value.rows(), t.value.cols()));
  }
}

void AdamW::step(ParamSet& params, const ParamSet& grads, double lr,
                 double weight_decay, std::optional<double> clip_norm) {
  if (params.tensors.size() != m_.size() ||
      grads.tensors.size() != m_.size())
    throw ConfigError("optimizer state does not match parameter set");

  double sq = 0.0;
  for (size_t i = 0; i < grads.tensors.size(); ++i) {
    const MatF& g = grads.tensors[i].value;
    if (!g.allFinite())
      throw DivergenceError("non-finite gradient in " +
                            grads.tensors[i].name);
    sq += static_cast<double>(g.cast<double>().squaredNorm());
  }
  last_grad_norm_ = std::sqrt(sq);

  float scale = 1.0f;
  if (clip_norm && last_grad_norm_ > *clip_norm && last_grad_norm_ > 0.0)
    scale = static_cast<float>(*clip_norm / last_grad_norm_);

  ++t_;
  double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  float b1 = static_cast<float>(cfg_.beta1);
  float b2 = static_cast<float>(cfg_.beta2);
  float inv_bc1 = static_cast<float>(1.0 / bc1);
  float inv_bc2 = static_cast<float>(1.0 / bc2);
  float eps = static_cast<float>(cfg_.eps);
  float flr = static_cast<float>(lr);
  float fwd = static_cast<float>(lr * weight_decay);

  for (size_t i = 0; i < params.tensors.size(); ++i) {
    MatF& theta = params.tensors[i].value;
    MatF g = grads.tensors[i].value * scale;
    if (theta.rows() != g.rows() || theta.cols() != g.cols())
      throw ConfigError("gradient shape mismatch for " +
                        params.tensors[i].name);
    m_[i] = b1 * m_[i] + (1.0f - b1) * g;
    v_[i] = b2 * v_[i] + (1.0f - b2) * g.cwiseProduct(g);
    MatF mhat = m_[i] * inv_bc1;
    MatF vhat = v_[i] * inv_bc2;
    MatF update =
        flr * (mhat.array() / (vhat.array().sqrt() + eps)).matrix() +
        fwd * theta;
    theta -= update;
  }
}

}  // namespace procseed
