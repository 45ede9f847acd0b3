#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "procseed/plan.hpp"

namespace procseed {

// Cartesian experiment grid: (procedural source x transfer selector x task
// x seed index). include_baseline adds a pseudo-source "none" (T1 = 0).
struct MatrixConfig {
  std::vector<GenConfig> sources;
  std::vector<TransferSelector> selectors;
  std::vector<TaskConfig> tasks;
  int n_seeds = 3;
  bool include_baseline = false;
  ModelConfig model;
  TrainConfig pretrain;
  TrainConfig finetune;
  int64_t t1 = 0;
  int64_t t2 = 0;
  int eval_samples = 2000;
  uint64_t master_seed = 0;
};

nlohmann::ordered_json to_json(const MatrixConfig& c);
MatrixConfig matrix_config_from_json(const nlohmann::json& j);

struct CellResult {
  std::string source_tag;    // generator name or "none"
  std::string selector_tag;  // transfer mode
  std::string task_tag;
  int seed_index = 0;
  uint64_t cell_seed = 0;
  bool ok = false;
  std::string error;
  double token_accuracy = 0.0;
  double sequence_accuracy = 0.0;
  double loss = 0.0;
  int64_t t1_used = 0;
  int64_t t2_used = 0;
};

nlohmann::ordered_json to_json(const CellResult& r);
CellResult cell_from_json(const nlohmann::json& j);

struct AggregateRow {
  std::string source_tag, selector_tag, task_tag;
  int n = 0;
  double mean_accuracy = 0.0;
  double sd_accuracy = 0.0;
};

// Groups ok cells by (source, selector, task); mean +/- sample sd over
// seeds, rows in first-seen order.
std::vector<AggregateRow> aggregate_cells(const std::vector<CellResult>& cells);

std::string aggregate_csv(const std::vector<AggregateRow>& rows);

// Derives the cell seed from the master seed and the cell coordinates, so
// any cell can be reproduced in isolation.
uint64_t cell_seed(uint64_t master_seed, const std::string& source_tag,
                   const std::string& selector_tag,
                   const std::string& task_tag, int seed_index);

struct MatrixRunResult {
  std::vector<CellResult> cells;
  std::vector<AggregateRow> aggregate;
  int failed_cells = 0;
};

// Executes every cell, writing per-cell run directories plus cells.jsonl,
// aggregate.csv/json, and a top-level manifest under out_dir. Refuses an
// existing out_dir unless force. Cell failures are recorded and the matrix
// continues.
MatrixRunResult run_matrix(const MatrixConfig& cfg,
                           const std::string& out_dir, bool force = false);

}  // namespace procseed
