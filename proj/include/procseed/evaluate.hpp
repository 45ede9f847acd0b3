#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "procseed/model.hpp"
#include "procseed/stream.hpp"
#include "procseed/tensor.hpp"

namespace procseed {

struct EvalReport {
  int64_t n_samples = 0;
  int64_t n_positions = 0;  // target positions pooled over all samples
  double loss = 0.0;        // mean over target positions (binary: per cell)
  double perplexity = 0.0;  // exp(loss); token variant only, else 0
  double token_accuracy = 0.0;
  double sequence_accuracy = 0.0;
  // Mean attention entropy per head in nats, [n_layers, n_heads]; empty
  // unless requested. Averaged per example first, then across examples.
  MatD per_head_entropy;
  int64_t entropy_examples = 0;
};

nlohmann::ordered_json to_json(const EvalReport& r);

// Runs the model over n_samples drawn from the stream in chunks of
// batch_size. Aggregation pools sums over all target positions, so the
// chunk size introduces no weighting bias (only matmul rounding noise).
// The parameter set is never modified.
EvalReport evaluate(const ParamSet& p, SampleStream& stream,
                    int64_t n_samples, int batch_size,
                    bool want_entropy = false, int64_t entropy_examples = 100);

struct HeadEntropy {
  int layer = 0;
  int head = 0;
  double entropy = 0.0;  // nats
};

// Heads sorted by ascending mean attention entropy over n_examples stream
// samples. Ties break by (layer, head).
std::vector<HeadEntropy> rank_heads_by_entropy(const ParamSet& p,
                                               SampleStream& stream,
                                               int64_t n_examples,
                                               int batch_size);

}  // namespace procseed
