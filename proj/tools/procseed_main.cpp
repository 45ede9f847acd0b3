#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "procseed/checkpoint.hpp"
#include "procseed/datagen.hpp"
#include "procseed/dataset_io.hpp"
#include "procseed/errors.hpp"
#include "procseed/evaluate.hpp"
#include "procseed/genconfig.hpp"
#include "procseed/hash.hpp"
#include "procseed/ingest.hpp"
#include "procseed/manifest.hpp"
#include "procseed/matrix.hpp"
#include "procseed/metrics.hpp"
#include "procseed/model.hpp"
#include "procseed/plan.hpp"
#include "procseed/rng.hpp"
#include "procseed/stream.hpp"
#include "procseed/tasks.hpp"
#include "procseed/trainer.hpp"
#include "procseed/transfer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace procseed;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitDiverged = 3;
constexpr int kExitPartial = 4;

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file: " + path);
  json j;
  in >> j;
  return j;
}

void ensure_run_dir(const std::string& dir, bool force) {
  fs::path p(dir);
  if (fs::exists(p)) {
    if (!force)
      throw ConfigError("output directory exists (use --force): " + dir);
  } else {
    fs::create_directories(p);
  }
}

std::vector<std::pair<int, int>> parse_heads(const std::string& spec) {
  std::vector<std::pair<int, int>> heads;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    auto colon = item.find(':');
    if (colon == std::string::npos)
      throw ConfigError("head spec must be layer:head pairs: " + spec);
    heads.emplace_back(std::stoi(item.substr(0, colon)),
                       std::stoi(item.substr(colon + 1)));
  }
  return heads;
}

// Flags shared by gen and the generator path of eval.
struct GenFlags {
  std::string kind = "identity";
  int length = 0;
  int elements = 0;
  int k = 0;
  double p_open = 0.0;
  int width = 0;
  int steps = 0;

  GenConfig build() const {
    GenConfig cfg = default_config(gen_kind_from_string(kind));
    if (length > 0) cfg.input_length = length;
    if (elements > 0) cfg.n_elements = elements;
    if (k > 0) cfg.dyck_k = k;
    if (p_open > 0.0) cfg.p_open = p_open;
    if (width > 0) cfg.eca_width = width;
    if (steps > 0) cfg.eca_steps = steps;
    cfg.vocab = vocab_for(cfg);
    validate(cfg);
    return cfg;
  }

  void attach(CLI::App* cmd) {
    cmd->add_option("--kind", kind, "generator kind")->required();
    cmd->add_option("--length", length, "input length override");
    cmd->add_option("--elements", elements, "element alphabet size");
    cmd->add_option("--k", k, "bracket pair count");
    cmd->add_option("--p-open", p_open, "bracket open probability");
    cmd->add_option("--width", width, "automaton row width");
    cmd->add_option("--steps", steps, "automaton steps per sample");
  }
};

struct TaskFlags {
  std::string task = "haystack";
  int pairs = 0;
  int digits = 0;
  int items = 0;
  int elements = 0;

  TaskConfig build() const {
    TaskConfig cfg = default_task_config(task_kind_from_string(task));
    if (pairs > 0) cfg.k_pairs = pairs;
    if (digits > 0) cfg.n_digits = digits;
    if (items > 0) cfg.n_items = items;
    if (elements > 0) cfg.element_range = elements;
    validate(cfg);
    return cfg;
  }

  void attach(CLI::App* cmd, bool required) {
    auto* opt = cmd->add_option("--task", task, "task kind");
    if (required) opt->required();
    cmd->add_option("--pairs", pairs, "haystack pair count");
    cmd->add_option("--digits", digits, "arithmetic operand digits");
    cmd->add_option("--items", items, "sorting list length");
    cmd->add_option("--elements", elements, "element alphabet size");
  }
};

ModelConfig model_from_config(const json& j) {
  ModelConfig cfg = tiny_preset();
  if (j.contains("model")) cfg = j["model"].get<ModelConfig>();
  return cfg;
}

ModelConfig adapt_model_to_gen(ModelConfig cfg, const GenConfig& g) {
  if (g.kind == GenKind::kEca110) {
    cfg.io_variant = IoVariant::kBinary;
    cfg.binary_width = g.eca_width;
    cfg.vocab_size = 2;
  } else {
    cfg.io_variant = IoVariant::kToken;
    cfg.binary_width = 0;
    cfg.vocab_size = g.vocab.size;
  }
  return cfg;
}

void finish_run(const std::string& dir, const json& config_snapshot,
                const TrainResult& result, const std::string& summary_phase) {
  save_checkpoint(dir + "/model.ckpt", result.params);

  RunManifest m;
  m.host = host_fingerprint();
  m.config = config_snapshot;
  m.seeds = {config_snapshot.contains("train") &&
                     config_snapshot["train"].contains("seed")
                 ? config_snapshot["train"]["seed"].get<uint64_t>()
                 : 0};
  if (result.stop == StopReason::kDiverged) m.status = "failed: diverged";
  add_artifact(m, dir + "/model.ckpt");
  if (fs::exists(dir + "/metrics.jsonl"))
    add_artifact(m, dir + "/metrics.jsonl");
  write_manifest(dir + "/manifest.json", m);

  nlohmann::ordered_json summary;
  summary["phase"] = summary_phase;
  summary["steps"] = result.steps;
  summary["tokens_seen"] = result.tokens_seen;
  summary["stop"] = to_string(result.stop);
  summary["best_val_loss"] = result.best_val_loss;
  if (!result.metrics.empty()) {
    summary["final_val_accuracy"] = result.metrics.back().token_accuracy;
    summary["final_val_loss"] = result.metrics.back().loss;
  }
  std::cout << summary.dump(2) << std::endl;
}

int cmd_gen(const GenFlags& flags, int64_t n, uint64_t seed, bool shuffle,
            const std::string& out) {
  GenConfig cfg = flags.build();
  cfg.seed = seed;
  DatasetHeader header;
  json gj = cfg;
  header.meta = {{"gen", gj}, {"tag", to_string(cfg.kind)}};
  if (shuffle) header.meta["shuffled"] = true;
  header.vocab = cfg.vocab;
  DatasetWriter writer(out, header);
  GenStream stream(cfg, seed, shuffle);
  ProcSample s;
  for (int64_t i = 0; i < n; ++i) {
    stream.next(s);
    writer.add(s);
  }
  writer.close();
  std::cout << "wrote " << n << " samples to " << out << std::endl;
  return kExitOk;
}

int cmd_gen_task(const TaskFlags& flags, int64_t n, uint64_t seed,
                 const std::string& out) {
  TaskConfig cfg = flags.build();
  cfg.seed = seed;
  DatasetHeader header;
  json tj = cfg;
  header.meta = {{"task", tj}, {"tag", to_string(cfg.kind)}};
  header.vocab = task_vocab(cfg);
  DatasetWriter writer(out, header);
  TaskStream stream(cfg, seed);
  ProcSample s;
  for (int64_t i = 0; i < n; ++i) {
    stream.next(s);
    writer.add(s);
  }
  writer.close();
  std::cout << "wrote " << n << " samples to " << out << std::endl;
  return kExitOk;
}

int cmd_pretrain(const std::string& config_path, const std::string& out,
                 bool force, std::optional<uint64_t> seed_override) {
  json cfg_j = read_json_file(config_path);
  if (!cfg_j.contains("gen"))
    throw ConfigError("pretrain config needs a \"gen\" section");
  GenConfig gen = cfg_j["gen"].get<GenConfig>();
  validate(gen);

  TrainConfig tc = cfg_j.contains("train")
                       ? train_config_from_json(cfg_j["train"])
                       : pretrain_preset(gen.kind, 2000);
  if (seed_override) tc.seed = *seed_override;
  int64_t t1 = cfg_j.value("t1", int64_t{0});
  if (t1 > 0) tc.token_budget = t1;

  ModelConfig mc = adapt_model_to_gen(model_from_config(cfg_j), gen);
  validate(mc);

  ensure_run_dir(out, force);
  json snapshot;
  snapshot["gen"] = gen;
  {
    json tmp = mc;
    snapshot["model"] = tmp;
  }
  snapshot["train"] = to_json(tc);
  if (t1 > 0) snapshot["t1"] = t1;
  {
    std::ofstream cfg_out(out + "/config.json");
    cfg_out << snapshot.dump(2) << "\n";
  }

  MetricsWriter writer(out + "/metrics.jsonl");
  ParamSet init = init_params<float>(mc, derive_seed(tc.seed, "init"));
  TrainResult result =
      train(init, stream_factory(gen), tc, "pretrain", &writer);
  finish_run(out, snapshot, result, "pretrain");
  return result.stop == StopReason::kDiverged ? kExitDiverged : kExitOk;
}

int cmd_train(const std::string& config_path, const std::string& out,
              bool force, std::optional<uint64_t> seed_override) {
  json cfg_j = read_json_file(config_path);

  StreamFactory factory;
  VocabSpec vocab;
  std::string data_desc;
  if (cfg_j.contains("task")) {
    TaskConfig task = cfg_j["task"].get<TaskConfig>();
    validate(task);
    factory = stream_factory(task);
    vocab = task_vocab(task);
    data_desc = to_string(task.kind);
  } else if (cfg_j.contains("data")) {
    std::string path = cfg_j["data"].get<std::string>();
    DatasetReader probe(path);
    vocab = probe.header().vocab;
    factory = [path](uint64_t, int) -> std::unique_ptr<SampleStream> {
      return std::make_unique<FileStream>(path, true);
    };
    data_desc = path;
  } else if (cfg_j.contains("corpus")) {
    const json& cj = cfg_j["corpus"];
    std::string path = cj.at("path").get<std::string>();
    int block_len = cj.value("block_len", 64);
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read corpus: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    CharMap map = cj.contains("char_map")
                      ? char_map_from_json(cj["char_map"])
                      : build_char_map(ss.str());
    auto stream = ingest_tokens(path, map, block_len, OnUnmappable::kSkip);
    vocab = stream->vocab();
    auto samples = std::make_shared<std::vector<ProcSample>>();
    ProcSample s;
    while (stream->next(s)) samples->push_back(s);
    VocabSpec v = vocab;
    factory = [samples, v](uint64_t, int) -> std::unique_ptr<SampleStream> {
      return std::make_unique<VectorStream>(*samples, v);
    };
    data_desc = path;
  } else {
    throw ConfigError("train config needs \"task\", \"data\", or \"corpus\"");
  }

  TrainConfig tc = cfg_j.contains("train")
                       ? train_config_from_json(cfg_j["train"])
                       : TrainConfig{};
  if (seed_override) tc.seed = *seed_override;
  int64_t t2 = cfg_j.value("t2", int64_t{0});
  if (t2 > 0) tc.token_budget = t2;

  ParamSet init;
  if (cfg_j.contains("init")) {
    init = load_checkpoint(cfg_j["init"].get<std::string>());
    if (init.config.io_variant == IoVariant::kToken &&
        init.config.vocab_size != vocab.size)
      throw ConfigError("checkpoint vocab does not match the data");
  } else {
    ModelConfig mc = model_from_config(cfg_j);
    mc.io_variant = IoVariant::kToken;
    mc.binary_width = 0;
    mc.vocab_size = vocab.size;
    validate(mc);
    init = init_params<float>(mc, derive_seed(tc.seed, "init"));
  }

  ensure_run_dir(out, force);
  json snapshot = cfg_j;
  snapshot["train"] = to_json(tc);
  snapshot["resolved_data"] = data_desc;
  {
    std::ofstream cfg_out(out + "/config.json");
    cfg_out << snapshot.dump(2) << "\n";
  }

  MetricsWriter writer(out + "/metrics.jsonl");
  TrainResult result = train(init, factory, tc, "finetune", &writer);
  finish_run(out, snapshot, result, "finetune");
  return result.stop == StopReason::kDiverged ? kExitDiverged : kExitOk;
}

int cmd_transfer(const std::string& src, const std::string& mode,
                 const std::string& embed, const std::string& heads,
                 int vocab_override, uint64_t seed, const std::string& out) {
  ParamSet source = load_checkpoint(src);
  TransferSelector sel;
  sel.mode = transfer_mode_from_string(mode);
  sel.embedding_init = embedding_init_from_string(embed);
  if (!heads.empty()) sel.heads = parse_heads(heads);
  ModelConfig target = source.config;
  if (vocab_override > 0) {
    target.io_variant = IoVariant::kToken;
    target.binary_width = 0;
    target.vocab_size = vocab_override;
  }
  ParamSet result = apply_selector(source, target, sel, seed);
  save_checkpoint(out, result);
  std::cout << "wrote " << out << std::endl;
  return kExitOk;
}

int cmd_assemble(const std::vector<std::pair<std::string, Component>>& claims,
                 uint64_t seed, const std::string& out) {
  if (claims.empty())
    throw ConfigError("assemble needs at least one component source");
  // Load each distinct checkpoint once.
  std::vector<std::string> paths;
  std::vector<ParamSet> sources;
  std::vector<AssemblePart> parts;
  for (const auto& [path, comp] : claims) {
    size_t idx = paths.size();
    for (size_t i = 0; i < paths.size(); ++i)
      if (paths[i] == path) {
        idx = i;
        break;
      }
    if (idx == paths.size()) {
      paths.push_back(path);
      sources.push_back(load_checkpoint(path));
      parts.push_back({nullptr, {}});
    }
    parts[idx].tags.insert(comp);
  }
  for (size_t i = 0; i < parts.size(); ++i) parts[i].source = &sources[i];
  ParamSet result = assemble(parts, sources[0].config, seed);
  save_checkpoint(out, result);
  std::cout << "wrote " << out << std::endl;
  return kExitOk;
}

int cmd_perturb(const std::string& src, bool shuffle, double noise,
                uint64_t seed, const std::string& out) {
  if (shuffle == (noise >= 0.0))
    throw ConfigError("pick exactly one of --shuffle or --noise");
  ParamSet p = load_checkpoint(src);
  ParamSet result =
      shuffle ? shuffle_weights(p, seed) : add_noise(p, {noise, seed});
  save_checkpoint(out, result);
  std::cout << "wrote " << out << std::endl;
  return kExitOk;
}

int cmd_eval(const std::string& ckpt, TaskFlags& task_flags,
             const std::string& data, int64_t n, int batch, uint64_t seed,
             const std::string& json_out, const std::string& entropy_csv) {
  ParamSet p = load_checkpoint(ckpt);

  std::unique_ptr<SampleStream> stream;
  if (!data.empty()) {
    stream = std::make_unique<FileStream>(data, false);
  } else {
    TaskConfig task = task_flags.build();
    stream = std::make_unique<TaskStream>(task, seed);
  }

  bool want_entropy = !entropy_csv.empty();
  EvalReport rep = evaluate(p, *stream, n, batch, want_entropy);
  nlohmann::ordered_json rj = to_json(rep);
  std::cout << rj.dump(2) << std::endl;
  if (!json_out.empty()) {
    std::ofstream out(json_out);
    if (!out) throw IoError("cannot write report: " + json_out);
    out << rj.dump(2) << "\n";
  }
  if (want_entropy) {
    std::ofstream out(entropy_csv);
    if (!out) throw IoError("cannot write entropy csv: " + entropy_csv);
    out << "layer,head,entropy\n";
    out.precision(10);
    for (Eigen::Index l = 0; l < rep.per_head_entropy.rows(); ++l)
      for (Eigen::Index h = 0; h < rep.per_head_entropy.cols(); ++h)
        out << l << "," << h << "," << rep.per_head_entropy(l, h) << "\n";
  }
  return kExitOk;
}

int cmd_matrix(const std::string& config_path, const std::string& out,
               bool force) {
  MatrixConfig cfg = matrix_config_from_json(read_json_file(config_path));
  MatrixRunResult result = run_matrix(cfg, out, force);
  std::cout << aggregate_csv(result.aggregate);
  if (result.failed_cells > 0) {
    std::cerr << result.failed_cells << " cells failed" << std::endl;
    return kExitPartial;
  }
  return kExitOk;
}

int cmd_report(const std::string& cells_path, const std::string& csv_out) {
  std::ifstream in(cells_path);
  if (!in) throw IoError("cannot read cells file: " + cells_path);
  std::vector<CellResult> cells;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    cells.push_back(cell_from_json(json::parse(line)));
  }
  std::string csv = aggregate_csv(aggregate_cells(cells));
  std::cout << csv;
  if (!csv_out.empty()) {
    std::ofstream out(csv_out);
    if (!out) throw IoError("cannot write csv: " + csv_out);
    out << csv;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"procseed: procedural pretraining laboratory"};
  app.require_subcommand(1);
  int exit_code = kExitOk;

  // gen
  auto* gen = app.add_subcommand("gen", "write a procedural dataset");
  GenFlags gen_flags;
  gen_flags.attach(gen);
  int64_t gen_n = 10000;
  uint64_t gen_seed = 0;
  bool gen_shuffle = false;
  std::string gen_out;
  gen->add_option("--n", gen_n, "sample count");
  gen->add_option("--seed", gen_seed, "stream seed");
  gen->add_flag("--shuffle", gen_shuffle,
                "shuffle tokens within each sample (control condition)");
  gen->add_option("--out", gen_out, "output .pds path")->required();
  gen->callback([&] {
    exit_code = cmd_gen(gen_flags, gen_n, gen_seed, gen_shuffle, gen_out);
  });

  // gen-task
  auto* gt = app.add_subcommand("gen-task", "write an algorithmic task dataset");
  TaskFlags gt_flags;
  gt_flags.attach(gt, true);
  int64_t gt_n = 10000;
  uint64_t gt_seed = 0;
  std::string gt_out;
  gt->add_option("--n", gt_n, "sample count");
  gt->add_option("--seed", gt_seed, "stream seed");
  gt->add_option("--out", gt_out, "output .pds path")->required();
  gt->callback([&] { exit_code = cmd_gen_task(gt_flags, gt_n, gt_seed, gt_out); });

  // pretrain
  auto* pre = app.add_subcommand("pretrain", "train on a procedural source");
  std::string pre_config, pre_out;
  bool pre_force = false;
  std::optional<uint64_t> pre_seed;
  pre->add_option("--config", pre_config, "JSON config")->required();
  pre->add_option("--out", pre_out, "run directory")->required();
  pre->add_flag("--force", pre_force, "allow existing run directory");
  uint64_t pre_seed_val = 0;
  auto* pre_seed_opt = pre->add_option("--seed", pre_seed_val, "seed override");
  pre->callback([&] {
    if (pre_seed_opt->count()) pre_seed = pre_seed_val;
    exit_code = cmd_pretrain(pre_config, pre_out, pre_force, pre_seed);
  });

  // train
  auto* tr = app.add_subcommand("train", "fine-tune on task, file, or corpus data");
  std::string tr_config, tr_out;
  bool tr_force = false;
  std::optional<uint64_t> tr_seed;
  tr->add_option("--config", tr_config, "JSON config")->required();
  tr->add_option("--out", tr_out, "run directory")->required();
  tr->add_flag("--force", tr_force, "allow existing run directory");
  uint64_t tr_seed_val = 0;
  auto* tr_seed_opt = tr->add_option("--seed", tr_seed_val, "seed override");
  tr->callback([&] {
    if (tr_seed_opt->count()) tr_seed = tr_seed_val;
    exit_code = cmd_train(tr_config, tr_out, tr_force, tr_seed);
  });

  // transfer
  auto* tf = app.add_subcommand("transfer", "selective checkpoint transfer");
  std::string tf_src, tf_mode = "full", tf_embed = "random", tf_heads, tf_out;
  int tf_vocab = 0;
  uint64_t tf_seed = 0;
  tf->add_option("--src", tf_src, "source checkpoint")->required();
  tf->add_option("--mode", tf_mode, "full|attention_only|mlp_only|heads");
  tf->add_option("--embed", tf_embed, "random|mean|keep");
  tf->add_option("--heads", tf_heads, "layer:head list for heads mode");
  tf->add_option("--vocab", tf_vocab, "target vocab size override");
  tf->add_option("--seed", tf_seed, "fresh-init seed");
  tf->add_option("--out", tf_out, "output checkpoint")->required();
  tf->callback([&] {
    exit_code = cmd_transfer(tf_src, tf_mode, tf_embed, tf_heads, tf_vocab,
                             tf_seed, tf_out);
  });

  // assemble
  auto* as = app.add_subcommand("assemble", "combine checkpoint components");
  std::string as_attn, as_mlp, as_embed, as_pos, as_norm, as_head, as_out;
  uint64_t as_seed = 0;
  as->add_option("--attn", as_attn, "checkpoint supplying attention tensors");
  as->add_option("--mlp", as_mlp, "checkpoint supplying mlp tensors");
  as->add_option("--embed", as_embed, "checkpoint supplying embeddings");
  as->add_option("--pos", as_pos, "checkpoint supplying positional table");
  as->add_option("--norm", as_norm, "checkpoint supplying norm tensors");
  as->add_option("--head", as_head, "checkpoint supplying the output head");
  as->add_option("--seed", as_seed, "fresh-init seed");
  as->add_option("--out", as_out, "output checkpoint")->required();
  as->callback([&] {
    std::vector<std::pair<std::string, Component>> claims;
    if (!as_attn.empty()) claims.emplace_back(as_attn, Component::kAttention);
    if (!as_mlp.empty()) claims.emplace_back(as_mlp, Component::kMlp);
    if (!as_embed.empty()) claims.emplace_back(as_embed, Component::kEmbedding);
    if (!as_pos.empty()) claims.emplace_back(as_pos, Component::kPositional);
    if (!as_norm.empty()) claims.emplace_back(as_norm, Component::kNorm);
    if (!as_head.empty()) claims.emplace_back(as_head, Component::kHead);
    exit_code = cmd_assemble(claims, as_seed, as_out);
  });

  // perturb
  auto* pb = app.add_subcommand("perturb", "shuffle weights or add noise");
  std::string pb_src, pb_out;
  bool pb_shuffle = false;
  double pb_noise = -1.0;
  uint64_t pb_seed = 0;
  pb->add_option("--src", pb_src, "source checkpoint")->required();
  pb->add_flag("--shuffle", pb_shuffle, "permute entries within each tensor");
  pb->add_option("--noise", pb_noise, "additive gaussian sigma");
  pb->add_option("--seed", pb_seed, "perturbation seed");
  pb->add_option("--out", pb_out, "output checkpoint")->required();
  pb->callback([&] {
    exit_code = cmd_perturb(pb_src, pb_shuffle, pb_noise, pb_seed, pb_out);
  });

  // eval
  auto* ev = app.add_subcommand("eval", "evaluate a checkpoint");
  std::string ev_ckpt, ev_data, ev_json, ev_entropy;
  TaskFlags ev_task;
  int64_t ev_n = 10000;
  int ev_batch = 256;
  uint64_t ev_seed = 0;
  ev->add_option("--ckpt", ev_ckpt, "checkpoint path")->required();
  ev_task.attach(ev, false);
  ev->add_option("--data", ev_data, "evaluate on a .pds file instead");
  ev->add_option("--n", ev_n, "sample count");
  ev->add_option("--batch", ev_batch, "batch size");
  ev->add_option("--seed", ev_seed, "task stream seed");
  ev->add_option("--json", ev_json, "also write the report here");
  ev->add_option("--entropy-csv", ev_entropy,
                 "write per-head entropy (layer,head,entropy)");
  ev->callback([&] {
    exit_code = cmd_eval(ev_ckpt, ev_task, ev_data, ev_n, ev_batch, ev_seed,
                         ev_json, ev_entropy);
  });

  // matrix
  auto* mx = app.add_subcommand("matrix", "run an experiment grid");
  std::string mx_config, mx_out;
  bool mx_force = false;
  mx->add_option("--config", mx_config, "matrix JSON config")->required();
  mx->add_option("--out", mx_out, "run directory")->required();
  mx->add_flag("--force", mx_force, "allow existing run directory");
  mx->callback([&] { exit_code = cmd_matrix(mx_config, mx_out, mx_force); });

  // report
  auto* rp = app.add_subcommand("report", "aggregate matrix cells");
  std::string rp_cells, rp_csv;
  rp->add_option("--cells", rp_cells, "cells.jsonl path")->required();
  rp->add_option("--csv", rp_csv, "also write the table here");
  rp->callback([&] { exit_code = cmd_report(rp_cells, rp_csv); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  } catch (const DivergenceError& e) {
    std::cerr << "divergence: " << e.what() << std::endl;
    return kExitDiverged;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << std::endl;
    return kExitConfig;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << std::endl;
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return kExitConfig;
  }
  return exit_code;
}
