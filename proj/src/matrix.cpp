#include "procseed/matrix.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "procseed/errors.hpp"
#include "procseed/manifest.hpp"
#include "procseed/rng.hpp"

namespace procseed {

namespace fs = std::filesystem;

nlohmann::ordered_json to_json(const MatrixConfig& c) {
  nlohmann::ordered_json j;
  nlohmann::json sources = nlohmann::json::array();
  for (const auto& s : c.sources) sources.push_back(s);
  j["sources"] = std::move(sources);
  nlohmann::ordered_json selectors = nlohmann::ordered_json::array();
  for (const auto& s : c.selectors) selectors.push_back(to_json(s));
  j["selectors"] = std::move(selectors);
  nlohmann::json tasks = nlohmann::json::array();
  for (const auto& t : c.tasks) tasks.push_back(t);
  j["tasks"] = std::move(tasks);
  j["n_seeds"] = c.n_seeds;
  j["include_baseline"] = c.include_baseline;
  {
    nlohmann::json tmp = c.model;
    j["model"] = std::move(tmp);
  }
  j["pretrain"] = to_json(c.pretrain);
  j["finetune"] = to_json(c.finetune);
  j["t1"] = c.t1;
  j["t2"] = c.t2;
  j["eval_samples"] = c.eval_samples;
  j["master_seed"] = c.master_seed;
  return j;
}

MatrixConfig matrix_config_from_json(const nlohmann::json& j) {
  MatrixConfig c;
  if (j.contains("sources"))
    for (const auto& s : j["sources"]) c.sources.push_back(s.get<GenConfig>());
  if (j.contains("selectors"))
    for (const auto& s : j["selectors"])
      c.selectors.push_back(selector_from_json(s));
  if (j.contains("tasks"))
    for (const auto& t : j["tasks"]) c.tasks.push_back(t.get<TaskConfig>());
  if (j.contains("n_seeds")) c.n_seeds = j["n_seeds"].get<int>();
  if (j.contains("include_baseline"))
    c.include_baseline = j["include_baseline"].get<bool>();
  if (j.contains("model")) c.model = j["model"].get<ModelConfig>();
  if (j.contains("pretrain"))
    c.pretrain = train_config_from_json(j["pretrain"]);
  if (j.contains("finetune"))
    c.finetune = train_config_from_json(j["finetune"]);
  if (j.contains("t1")) c.t1 = j["t1"].get<int64_t>();
  if (j.contains("t2")) c.t2 = j["t2"].get<int64_t>();
  if (j.contains("eval_samples"))
    c.eval_samples = j["eval_samples"].get<int>();
  if (j.contains("master_seed"))
    c.master_seed = j["master_seed"].get<uint64_t>();
  return c;
}

nlohmann::ordered_json to_json(const CellResult& r) {
  nlohmann::ordered_json j;
  j["source"] = r.source_tag;
  j["selector"] = r.selector_tag;
  j["task"] = r.task_tag;
  j["seed_index"] = r.seed_index;
  j["cell_seed"] = r.cell_seed;
  j["ok"] = r.ok;
  if (!r.ok) j["error"] = r.error;
  j["token_accuracy"] = r.token_accuracy;
  j["sequence_accuracy"] = r.sequence_accuracy;
  j["loss"] = r.loss;
  j["t1_used"] = r.t1_used;
  j["t2_used"] = r.t2_used;
  return j;
}

CellResult cell_from_json(const nlohmann::json& j) {
  CellResult r;
  r.source_tag = j.at("source").get<std::string>();
  r.selector_tag = j.at("selector").get<std::string>();
  r.task_tag = j.at("task").get<std::string>();
  r.seed_index = j.at("seed_index").get<int>();
  r.cell_seed = j.at("cell_seed").get<uint64_t>();
  r.ok = j.at("ok").get<bool>();
  if (j.contains("error")) r.error = j["error"].get<std::string>();
  r.token_accuracy = j.at("token_accuracy").get<double>();
  r.sequence_accuracy = j.at("sequence_accuracy").get<double>();
  r.loss = j.at("loss").get<double>();
  r.t1_used = j.at("t1_used").get<int64_t>();
  r.t2_used = j.at("t2_used").get<int64_t>();
  return r;
}

std::vector<AggregateRow> aggregate_cells(
    const std::vector<CellResult>& cells) {
  std::vector<AggregateRow> rows;
  std::vector<std::vector<double>> acc;
  for (const auto& c : cells) {
    if (!c.ok) continue;
    size_t idx = rows.size();
    for (size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].source_tag == c.source_tag &&
          rows[i].selector_tag == c.selector_tag &&
          rows[i].task_tag == c.task_tag) {
        idx = i;
        break;
      }
    }
    if (idx == rows.size()) {
      rows.push_back({c.source_tag, c.selector_tag, c.task_tag, 0, 0.0, 0.0});
      acc.emplace_back();
    }
    acc[idx].push_back(c.token_accuracy);
  }
  for (size_t i = 0; i < rows.size(); ++i) {
    rows[i].n = static_cast<int>(acc[i].size());
    std::tie(rows[i].mean_accuracy, rows[i].sd_accuracy) = mean_sd(acc[i]);
  }
  return rows;
}

std::string aggregate_csv(const std::vector<AggregateRow>& rows) {
  std::ostringstream out;
  out << "source,selector,task,n,mean_accuracy,sd_accuracy\n";
  out.precision(10);
  for (const auto& r : rows)
    out << r.source_tag << "," << r.selector_tag << "," << r.task_tag << ","
        << r.n << "," << r.mean_accuracy << "," << r.sd_accuracy << "\n";
  return out.str();
}

uint64_t cell_seed(uint64_t master_seed, const std::string& source_tag,
                   const std::string& selector_tag,
                   const std::string& task_tag, int seed_index) {
  std::string tag = source_tag + "|" + selector_tag + "|" + task_tag + "|" +
                    std::to_string(seed_index);
  return derive_seed(master_seed, tag);
}

namespace {

std::string cell_name(const CellResult& c) {
  return c.source_tag + "-" + c.selector_tag + "-" + c.task_tag + "-s" +
         std::to_string(c.seed_index);
}

}  // namespace

MatrixRunResult run_matrix(const MatrixConfig& cfg,
                           const std::string& out_dir, bool force) {
  if (cfg.selectors.empty()) throw ConfigError("matrix needs selectors");
  if (cfg.tasks.empty()) throw ConfigError("matrix needs tasks");
  if (cfg.n_seeds <= 0) throw ConfigError("matrix needs n_seeds > 0");
  if (cfg.sources.empty() && !cfg.include_baseline)
    throw ConfigError("matrix needs sources or include_baseline");

  fs::path root(out_dir);
  if (fs::exists(root)) {
    if (!force)
      throw ConfigError("output directory exists (use --force): " + out_dir);
  } else {
    fs::create_directories(root);
  }

  std::ofstream cells_out(root / "cells.jsonl");
  if (!cells_out) throw IoError("cannot write cells.jsonl");

  struct SourceEntry {
    std::string tag;
    std::optional<GenConfig> gen;
  };
  std::vector<SourceEntry> sources;
  if (cfg.include_baseline) sources.push_back({"none", std::nullopt});
  for (const auto& g : cfg.sources) sources.push_back({to_string(g.kind), g});

  MatrixRunResult result;
  auto t_start = std::chrono::steady_clock::now();

  for (const auto& src : sources) {
    for (const auto& sel : cfg.selectors) {
      for (const auto& task : cfg.tasks) {
        for (int si = 0; si < cfg.n_seeds; ++si) {
          CellResult cell;
          cell.source_tag = src.tag;
          cell.selector_tag = to_string(sel.mode);
          cell.task_tag = to_string(task.kind);
          cell.seed_index = si;
          cell.cell_seed = cell_seed(cfg.master_seed, cell.source_tag,
                                     cell.selector_tag, cell.task_tag, si);

          fs::path cell_dir = root / cell_name(cell);
          fs::create_directories(cell_dir);
          RunManifest manifest;
          manifest.host = host_fingerprint();
          manifest.seeds = {cell.cell_seed};
          auto c_start = std::chrono::steady_clock::now();

          try {
            PipelineSpec spec;
            spec.source = src.gen;
            spec.task = task;
            spec.selector = sel;
            spec.model = cfg.model;
            spec.pretrain = cfg.pretrain;
            spec.finetune = cfg.finetune;
            spec.t1 = src.gen ? cfg.t1 : 0;
            spec.t2 = cfg.t2;
            spec.eval_samples = cfg.eval_samples;

            manifest.config = to_json(cfg);
            manifest.config["cell"] = to_json(cell);

            MetricsWriter writer((cell_dir / "metrics.jsonl").string());
            RunOutcome o = run_pipeline(spec, cell.cell_seed, &writer);

            cell.ok = true;
            cell.token_accuracy = o.eval.token_accuracy;
            cell.sequence_accuracy = o.eval.sequence_accuracy;
            cell.loss = o.eval.loss;
            cell.t1_used = o.t1_used;
            cell.t2_used = o.t2_used;

            std::ofstream ev(cell_dir / "eval.json");
            ev << to_json(o.eval).dump(2) << "\n";
          } catch (const std::exception& e) {
            cell.ok = false;
            cell.error = e.what();
            manifest.status = std::string("failed: ") + e.what();
            ++result.failed_cells;
          }

          auto c_end = std::chrono::steady_clock::now();
          manifest.wall_clock_seconds =
              std::chrono::duration<double>(c_end - c_start).count();
          if (fs::exists(cell_dir / "metrics.jsonl"))
            add_artifact(manifest, (cell_dir / "metrics.jsonl").string());
          if (fs::exists(cell_dir / "eval.json"))
            add_artifact(manifest, (cell_dir / "eval.json").string());
          write_manifest((cell_dir / "manifest.json").string(), manifest);

          cells_out << to_json(cell).dump() << "\n";
          cells_out.flush();
          result.cells.push_back(std::move(cell));
        }
      }
    }
  }

  result.aggregate = aggregate_cells(result.cells);
  {
    std::ofstream agg(root / "aggregate.csv");
    agg << aggregate_csv(result.aggregate);
  }
  {
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const auto& r : result.aggregate) {
      nlohmann::ordered_json row;
      row["source"] = r.source_tag;
      row["selector"] = r.selector_tag;
      row["task"] = r.task_tag;
      row["n"] = r.n;
      row["mean_accuracy"] = r.mean_accuracy;
      row["sd_accuracy"] = r.sd_accuracy;
      rows.push_back(row);
    }
    std::ofstream agg(root / "aggregate.json");
    agg << rows.dump(2) << "\n";
  }

  RunManifest top;
  top.host = host_fingerprint();
  top.config = to_json(cfg);
  top.seeds = {cfg.master_seed};
  auto t_end = std::chrono::steady_clock::now();
  top.wall_clock_seconds =
      std::chrono::duration<double>(t_end - t_start).count();
  if (result.failed_cells > 0)
    top.status = "failed: " + std::to_string(result.failed_cells) + " cells";
  add_artifact(top, (root / "cells.jsonl").string());
  add_artifact(top, (root / "aggregate.csv").string());
  add_artifact(top, (root / "aggregate.json").string());
  write_manifest((root / "manifest.json").string(), top);

  return result;
}

}  // namespace procseed
