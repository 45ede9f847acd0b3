#include "procseed/transfer.hpp"

#include <algorithm>

#include "procseed/errors.hpp"
#include "procseed/hash.hpp"
#include "procseed/rng.hpp"

namespace procseed {

std::string to_string(TransferMode m) {
  switch (m) {
    case TransferMode::kFull: return "full";
    case TransferMode::kAttentionOnly: return "attention_only";
    case TransferMode::kMlpOnly: return "mlp_only";
    case TransferMode::kHeads: return "heads";
  }
  return "unknown";
}

TransferMode transfer_mode_from_string(const std::string& s) {
  if (s == "full") return TransferMode::kFull;
  if (s == "attention_only") return TransferMode::kAttentionOnly;
  if (s == "mlp_only") return TransferMode::kMlpOnly;
  if (s == "heads") return TransferMode::kHeads;
  throw ConfigError("unknown transfer mode: " + s);
}

std::string to_string(EmbeddingInit e) {
  switch (e) {
    case EmbeddingInit::kRandom: return "random";
    case EmbeddingInit::kMeanVector: return "mean_vector";
    case EmbeddingInit::kKeep: return "keep";
  }
  return "unknown";
}

EmbeddingInit embedding_init_from_string(const std::string& s) {
  if (s == "random") return EmbeddingInit::kRandom;
  if (s == "mean_vector" || s == "mean") return EmbeddingInit::kMeanVector;
  if (s == "keep") return EmbeddingInit::kKeep;
  throw ConfigError("unknown embedding init: " + s);
}

nlohmann::ordered_json to_json(const TransferSelector& s) {
  nlohmann::ordered_json j;
  j["mode"] = to_string(s.mode);
  if (!s.heads.empty()) {
    std::vector<std::vector<int>> heads;
    for (auto [l, h] : s.heads) heads.push_back({l, h});
    j["heads"] = heads;
  }
  j["embedding_init"] = to_string(s.embedding_init);
  return j;
}

TransferSelector selector_from_json(const nlohmann::json& j) {
  TransferSelector s;
  if (j.contains("mode"))
    s.mode = transfer_mode_from_string(j["mode"].get<std::string>());
  if (j.contains("heads"))
    for (const auto& pair : j["heads"])
      s.heads.emplace_back(pair.at(0).get<int>(), pair.at(1).get<int>());
  if (j.contains("embedding_init"))
    s.embedding_init =
        embedding_init_from_string(j["embedding_init"].get<std::string>());
  return s;
}

namespace {

const Tensor* lookup(const ParamSet& p, const std::string& name) {
  int i = p.find(name);
  return i < 0 ? nullptr : &p.tensors[static_cast<size_t>(i)];
}

void copy_from_source(Tensor& dst, const ParamSet& source) {
  const Tensor* src = lookup(source, dst.name);
  if (!src)
    throw ConfigError("source checkpoint lacks tensor " + dst.name);
  if (src->value.rows() != dst.value.rows() ||
      src->value.cols() != dst.value.cols())
    throw ConfigError("shape mismatch on tensor " + dst.name);
  dst.value = src->value;
}

void fill_embedding(ParamSet& out, const ParamSet& source,
                    EmbeddingInit init) {
  for (auto& t : out.tensors) {
    if (t.component != Component::kEmbedding) continue;
    switch (init) {
      case EmbeddingInit::kRandom:
        break;  // fresh init already in place
      case EmbeddingInit::kKeep:
        copy_from_source(t, source);
        break;
      case EmbeddingInit::kMeanVector: {
        const Tensor* src = lookup(source, t.name);
        if (!src)
          throw ConfigError("source checkpoint lacks tensor " + t.name);
        if (t.value.cols() != src->value.cols())
          throw ConfigError("embedding width mismatch on " + t.name);
        MatF mean = src->value.colwise().mean();
        for (Eigen::Index r = 0; r < t.value.rows(); ++r)
          t.value.row(r) = mean;
        break;
      }
    }
  }
}

}  // namespace

ParamSet apply_selector(const ParamSet& source, const ModelConfig& target_cfg,
                        const TransferSelector& sel, uint64_t seed) {
  if ((sel.mode == TransferMode::kHeads) == sel.heads.empty())
    throw ConfigError("heads list must be non-empty exactly in heads mode");
  for (auto [l, h] : sel.heads) {
    if (l < 0 || l >= target_cfg.n_layers || h < 0 ||
        h >= target_cfg.n_heads)
      throw ConfigError("selected head out of range");
  }

  ParamSet out = init_params<float>(target_cfg, seed);

  for (auto& t : out.tensors) {
    bool copy = false;
    switch (sel.mode) {
      case TransferMode::kFull:
        copy = t.component != Component::kEmbedding;
        break;
      case TransferMode::kAttentionOnly:
        copy = t.component == Component::kAttention;
        break;
      case TransferMode::kMlpOnly:
        copy = t.component == Component::kMlp;
        break;
      case TransferMode::kHeads:
        copy = t.component == Component::kAttention && t.head >= 0 &&
               std::find(sel.heads.begin(), sel.heads.end(),
                         std::make_pair(t.layer, t.head)) != sel.heads.end();
        break;
    }
    if (copy) copy_from_source(t, source);
  }
  fill_embedding(out, source, sel.embedding_init);

  out.provenance = {{"origin", "transfer"},
                    {"mode", to_string(sel.mode)},
                    {"embedding_init", to_string(sel.embedding_init)},
                    {"source_hash", hex64(hash_params(source))},
                    {"seed", seed}};
  if (!sel.heads.empty()) {
    std::vector<std::vector<int>> heads;
    for (auto [l, h] : sel.heads) heads.push_back({l, h});
    out.provenance["heads"] = heads;
  }
  return out;
}

ParamSet assemble(const std::vector<AssemblePart>& parts,
                  const ModelConfig& base_cfg, uint64_t seed) {
  std::set<Component> claimed;
  for (const auto& part : parts) {
    if (!part.source) throw ConfigError("assemble part has no source");
    for (Component c : part.tags) {
      if (claimed.count(c))
        throw ConfigError("component claimed by more than one part");
      claimed.insert(c);
    }
  }

  ParamSet out = init_params<float>(base_cfg, seed);
  nlohmann::json tensor_prov;
  for (auto& t : out.tensors) {
    const ParamSet* src = nullptr;
    int part_index = -1;
    for (size_t i = 0; i < parts.size(); ++i) {
      if (parts[i].tags.count(t.component)) {
        src = parts[i].source;
        part_index = static_cast<int>(i);
        break;
      }
    }
    if (src) {
      copy_from_source(t, *src);
      tensor_prov[t.name] = {{"part", part_index},
                             {"hash", hex64(hash_tensor(t))}};
    } else {
      tensor_prov[t.name] = {{"part", nullptr}, {"origin", "fresh_init"}};
    }
  }

  nlohmann::json part_meta = nlohmann::json::array();
  for (const auto& part : parts) {
    std::vector<std::string> tags;
    for (Component c : part.tags) tags.push_back(to_string(c));
    part_meta.push_back({{"tags", tags},
                         {"source_hash", hex64(hash_params(*part.source))}});
  }
  out.provenance = {{"origin", "assemble"},
                    {"parts", part_meta},
                    {"tensors", tensor_prov},
                    {"seed", seed}};
  return out;
}

ParamSet shuffle_weights(const ParamSet& p, uint64_t seed) {
  ParamSet out = p;
  Rng rng(derive_seed(seed, "shuffle"));
  for (auto& t : out.tensors) {
    float* data = t.value.data();
    size_t n = static_cast<size_t>(t.value.size());
    for (size_t i = n; i > 1; --i) {
      size_t j = static_cast<size_t>(rng.below(i));
      std::swap(data[i - 1], data[j]);
    }
  }
  out.provenance = {{"origin", "shuffle"},
                    {"source_hash", hex64(hash_params(p))},
                    {"seed", seed}};
  return out;
}

ParamSet add_noise(const ParamSet& p, const NoiseSpec& spec) {
  if (spec.sigma < 0) throw ConfigError("noise sigma must be non-negative");
  ParamSet out = p;
  if (spec.sigma > 0) {
    Rng rng(derive_seed(spec.seed, "noise"));
    for (auto& t : out.tensors) {
      float* data = t.value.data();
      for (Eigen::Index i = 0; i < t.value.size(); ++i)
        data[i] += static_cast<float>(rng.gaussian(0.0, spec.sigma));
    }
  }
  out.provenance = {{"origin", "noise"},
                    {"sigma", spec.sigma},
                    {"source_hash", hex64(hash_params(p))},
                    {"seed", spec.seed}};
  return out;
}

ParamSet resize_vocab(const ParamSet& p, int new_vocab, EmbeddingInit init,
                      uint64_t seed) {
  if (p.config.io_variant != IoVariant::kToken)
    throw ConfigError("resize_vocab applies to the token variant only");
  if (new_vocab < 2) throw ConfigError("vocab size must be at least 2");

  ModelConfig cfg = p.config;
  cfg.vocab_size = new_vocab;
  ParamSet out = init_params<float>(cfg, seed);

  for (auto& t : out.tensors) {
    const Tensor* src = lookup(p, t.name);
    if (!src) throw ConfigError("source checkpoint lacks tensor " + t.name);
    if (t.component != Component::kEmbedding &&
        t.component != Component::kHead) {
      t.value = src->value;
      continue;
    }
    switch (init) {
      case EmbeddingInit::kRandom:
        break;
      case EmbeddingInit::kKeep: {
        // Embedding rows index the vocab; head columns do.
        Eigen::Index r = std::min(t.value.rows(), src->value.rows());
        Eigen::Index c = std::min(t.value.cols(), src->value.cols());
        t.value.topLeftCorner(r, c) = src->value.topLeftCorner(r, c);
        break;
      }
      case EmbeddingInit::kMeanVector: {
        if (t.component == Component::kEmbedding) {
          if (t.value.cols() != src->value.cols())
            throw ConfigError("embedding width mismatch on " + t.name);
          MatF mean = src->value.colwise().mean();
          for (Eigen::Index r = 0; r < t.value.rows(); ++r)
            t.value.row(r) = mean;
        } else {
          if (t.value.rows() != src->value.rows())
            throw ConfigError("head width mismatch on " + t.name);
          MatF mean = src->value.rowwise().mean();
          for (Eigen::Index c = 0; c < t.value.cols(); ++c)
            t.value.col(c) = mean;
        }
        break;
      }
    }
  }

  out.provenance = {{"origin", "resize_vocab"},
                    {"new_vocab", new_vocab},
                    {"embedding_init", to_string(init)},
                    {"source_hash", hex64(hash_params(p))},
                    {"seed", seed}};
  return out;
}

}  // namespace procseed
