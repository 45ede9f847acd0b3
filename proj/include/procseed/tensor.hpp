#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "procseed/errors.hpp"
#include "procseed/hash.hpp"
#include "procseed/model_config.hpp"

namespace procseed {

template <typename S>
using MatX = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatF = MatX<float>;
using MatD = MatX<double>;

// Functional grouping of parameters, the unit of selective transfer.
enum class Component : uint8_t {
  kEmbedding = 0,
  kPositional = 1,
  kAttention = 2,
  kNorm = 3,
  kMlp = 4,
  kHead = 5,
};

std::string to_string(Component c);
Component component_from_string(const std::string& s);

template <typename S>
struct TensorT {
  std::string name;
  Component component = Component::kEmbedding;
  int layer = -1;  // -1 for global tensors
  int head = -1;   // -1 for tensors not owned by a single attention head
  MatX<S> value;
};

using Tensor = TensorT<float>;

// A complete set of model parameters (or gradients of the same shape).
// Tensor order is fixed by init_params and preserved by every operation,
// so index-aligned iteration over two sets of the same config is valid.
template <typename S>
struct ParamSetT {
  ModelConfig config;
  nlohmann::json provenance = nlohmann::json::object();
  std::vector<TensorT<S>> tensors;

  int find(const std::string& name) const {
    for (size_t i = 0; i < tensors.size(); ++i)
      if (tensors[i].name == name) return static_cast<int>(i);
    return -1;
  }
  const TensorT<S>& at(const std::string& name) const {
    int i = find(name);
    if (i < 0) throw ConfigError("no tensor named " + name);
    return tensors[static_cast<size_t>(i)];
  }
  TensorT<S>& at(const std::string& name) {
    int i = find(name);
    if (i < 0) throw ConfigError("no tensor named " + name);
    return tensors[static_cast<size_t>(i)];
  }
  int64_t param_count() const {
    int64_t n = 0;
    for (const auto& t : tensors) n += t.value.size();
    return n;
  }
  void set_zero() {
    for (auto& t : tensors) t.value.setZero();
  }
};

using ParamSet = ParamSetT<float>;

template <typename To, typename From>
ParamSetT<To> cast_params(const ParamSetT<From>& p) {
  ParamSetT<To> out;
  out.config = p.config;
  out.provenance = p.provenance;
  out.tensors.reserve(p.tensors.size());
  for (const auto& t : p.tensors) {
    TensorT<To> c{t.name, t.component, t.layer, t.head, t.value.template cast<To>()};
    out.tensors.push_back(std::move(c));
  }
  return out;
}

inline uint64_t hash_tensor(const Tensor& t) {
  return fnv1a64(t.value.data(), sizeof(float) * static_cast<size_t>(t.value.size()));
}

inline uint64_t hash_params(const ParamSet& p) {
  uint64_t h = kFnvOffset;
  for (const auto& t : p.tensors) {
    h = fnv1a64(t.name.data(), t.name.size(), h);
    h = fnv1a64(t.value.data(), sizeof(float) * static_cast<size_t>(t.value.size()), h);
  }
  return h;
}

}  // namespace procseed
