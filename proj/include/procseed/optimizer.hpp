#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "procseed/tensor.hpp"

namespace procseed {

enum class Schedule { kConstant, kCosine };

std::string to_string(Schedule s);
Schedule schedule_from_string(const std::string& s);

// Learning rate at 1-based step t. Warmup ramps linearly from lr/warmup to
// the peak; the cosine schedule then decays to zero at max_steps, the
// constant schedule stays at the peak.
double lr_at(int64_t t, double peak_lr, Schedule schedule, int64_t warmup,
             int64_t max_steps);

struct AdamWConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// AdamW with bias correction and decoupled weight decay:
//   m = b1 m + (1-b1) g           v = b2 v + (1-b2) g^2
//   theta -= lr * mhat / (sqrt(vhat) + eps) + lr * wd * theta
// Weight decay applies to every tensor. State tensors mirror the parameter
// list by position; the parameter set passed to step must keep its shape.
class AdamW {
 public:
  explicit AdamW(const ParamSet& params, AdamWConfig cfg = {});

  // Throws DivergenceError when a gradient is non-finite. clip_norm, when
  // set, rescales the whole gradient so its global L2 norm is at most the
  // given value, before the moment update.
  void step(ParamSet& params, const ParamSet& grads, double lr,
            double weight_decay, std::optional<double> clip_norm = {});

  int64_t t() const { return t_; }
  // Global L2 norm of the last step's (pre-clip) gradient.
  double last_grad_norm() const { return last_grad_norm_; }

 private:
  AdamWConfig cfg_;
  std::vector<MatF> m_, v_;
  int64_t t_ = 0;
  double last_grad_norm_ = 0.0;
};

}  // namespace procseed
