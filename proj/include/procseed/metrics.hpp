#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "procseed/tensor.hpp"

namespace procseed {

// One validation checkpoint row, serialized as a JSON line.
struct MetricsRecord {
  int64_t step = 0;
  int64_t tokens_seen = 0;
  std::string phase;
  double loss = 0.0;            // validation loss (mean over target tokens)
  double token_accuracy = 0.0;  // validation, target positions only
  double perplexity = 0.0;
  double lr = 0.0;
  double train_loss = 0.0;  // loss of the most recent training batch
  std::optional<int> input_length;
  std::optional<MatD> per_head_entropy;  // [n_layers, n_heads], nats
};

nlohmann::ordered_json to_json(const MetricsRecord& r);
MetricsRecord metrics_from_json(const nlohmann::json& j);

// Appends one JSON line per record.
class MetricsWriter {
 public:
  explicit MetricsWriter(const std::string& path);
  void write(const MetricsRecord& r);

 private:
  std::ofstream out_;
};

std::vector<MetricsRecord> read_metrics(const std::string& path);

}  // namespace procseed
