#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "procseed/model.hpp"
#include "procseed/tensor.hpp"

namespace procseed {

enum class TransferMode { kFull, kAttentionOnly, kMlpOnly, kHeads };
enum class EmbeddingInit { kRandom, kMeanVector, kKeep };

std::string to_string(TransferMode m);
TransferMode transfer_mode_from_string(const std::string& s);
std::string to_string(EmbeddingInit e);
EmbeddingInit embedding_init_from_string(const std::string& s);

struct TransferSelector {
  TransferMode mode = TransferMode::kFull;
  std::vector<std::pair<int, int>> heads;  // (layer, head); heads mode only
  EmbeddingInit embedding_init = EmbeddingInit::kRandom;
};

nlohmann::ordered_json to_json(const TransferSelector& s);
TransferSelector selector_from_json(const nlohmann::json& j);

struct NoiseSpec {
  double sigma = 0.0;
  uint64_t seed = 0;
};

// Builds a fresh init at target_cfg, then copies the selected tensors from
// the source bit-exactly. Norm and positional tensors move only under full
// mode; bias tensors follow their owning projection; the per-layer
// attention output bias is layer-level and stays fresh under heads mode.
// Embeddings follow embedding_init: keep copies the source rows (sizes
// must match), mean_vector writes the source's mean embedding into every
// row (works across vocab sizes), random leaves the fresh init.
ParamSet apply_selector(const ParamSet& source, const ModelConfig& target_cfg,
                        const TransferSelector& sel, uint64_t seed);

// Each part claims a disjoint set of components; claimed tensors are copied
// bit-exactly from that part, everything else is freshly initialized.
// Provenance records the per-tensor source hash.
struct AssemblePart {
  const ParamSet* source = nullptr;
  std::set<Component> tags;
};

ParamSet assemble(const std::vector<AssemblePart>& parts,
                  const ModelConfig& base_cfg, uint64_t seed);

// Independently permutes the entries of every tensor (value multisets are
// preserved per tensor).
ParamSet shuffle_weights(const ParamSet& p, uint64_t seed);

// Adds Normal(0, sigma^2) to every entry.
ParamSet add_noise(const ParamSet& p, const NoiseSpec& spec);

// Rebuilds embedding and output-head tensors at the new vocabulary size;
// all other tensors are copied untouched. keep copies overlapping rows or
// columns and fresh-fills the remainder.
ParamSet resize_vocab(const ParamSet& p, int new_vocab, EmbeddingInit init,
                      uint64_t seed);

}  // namespace procseed
