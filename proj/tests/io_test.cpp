#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "procseed/checkpoint.hpp"
#include "procseed/dataset_io.hpp"
#include "procseed/datagen.hpp"
#include "procseed/errors.hpp"
#include "procseed/hash.hpp"
#include "procseed/manifest.hpp"
#include "procseed/metrics.hpp"
#include "procseed/model.hpp"

namespace procseed {
namespace {

namespace fs = std::filesystem;

class IoTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("procseed_io_" + std::to_string(::getpid()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) { return (dir_ / name).string(); }

  fs::path dir_;
};

std::string file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

TEST_F(IoTest, DatasetRoundTrip) {
  GenConfig cfg = default_config(GenKind::kDelete);
  cfg.input_length = 9;
  cfg.vocab = vocab_for(cfg);
  Rng rng(12);

  std::vector<ProcSample> originals;
  {
    DatasetHeader h;
    h.meta = {{"gen", nlohmann::json(cfg)}, {"tag", "delete"}};
    h.vocab = cfg.vocab;
    DatasetWriter w(path("a.pds"), h);
    for (int i = 0; i < 200; ++i) {
      originals.push_back(generate(cfg, rng));
      w.add(originals.back());
    }
    w.close();
    EXPECT_EQ(w.written(), 200u);
  }

  DatasetReader r(path("a.pds"));
  EXPECT_EQ(r.size(), 200u);
  EXPECT_EQ(r.header().vocab, cfg.vocab);
  EXPECT_EQ(r.header().meta.at("gen").get<GenConfig>(), cfg);
  ProcSample s;
  size_t idx = 0;
  while (r.next(s)) {
    ASSERT_LT(idx, originals.size());
    EXPECT_EQ(s.tokens, originals[idx].tokens);
    EXPECT_EQ(s.loss_mask, originals[idx].loss_mask);
    EXPECT_EQ(s.source_tag, "delete");
    ++idx;
  }
  EXPECT_EQ(idx, 200u);

  // reset() replays from the first record.
  r.reset();
  ASSERT_TRUE(r.next(s));
  EXPECT_EQ(s.tokens, originals[0].tokens);
}

TEST_F(IoTest, DatasetMaskBitsSurviveOddLengths) {
  // Lengths straddling byte boundaries of the packed mask.
  DatasetHeader h;
  h.vocab.size = 4;
  {
    DatasetWriter w(path("bits.pds"), h);
    for (int len : {1, 7, 8, 9, 15, 16, 17}) {
      ProcSample s;
      for (int i = 0; i < len; ++i) {
        s.tokens.push_back(i % 4);
        s.loss_mask.push_back(i % 3 == 0);
      }
      w.add(s);
    }
  }
  DatasetReader r(path("bits.pds"));
  ProcSample s;
  for (int len : {1, 7, 8, 9, 15, 16, 17}) {
    ASSERT_TRUE(r.next(s));
    ASSERT_EQ(static_cast<int>(s.size()), len);
    for (int i = 0; i < len; ++i)
      EXPECT_EQ(s.loss_mask[static_cast<size_t>(i)], i % 3 == 0 ? 1 : 0);
  }
}

TEST_F(IoTest, DatasetRejectsGarbage) {
  {
    std::ofstream out(path("junk.pds"), std::ios::binary);
    out << "NOPEnot a dataset";
  }
  EXPECT_THROW(DatasetReader r(path("junk.pds")), IoError);
  EXPECT_THROW(DatasetReader r(path("missing.pds")), IoError);

  // Truncated record tail.
  GenConfig cfg = default_config(GenKind::kIdentity);
  Rng rng(1);
  {
    DatasetHeader h;
    h.vocab = cfg.vocab;
    DatasetWriter w(path("trunc.pds"), h);
    for (int i = 0; i < 5; ++i) w.add(generate(cfg, rng));
  }
  std::string bytes = file_bytes(path("trunc.pds"));
  {
    std::ofstream out(path("trunc.pds"), std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() - 4));
  }
  DatasetReader r(path("trunc.pds"));
  ProcSample s;
  EXPECT_THROW(while (r.next(s)) {}, IoError);
}

TEST_F(IoTest, DatasetRejectsOversizeTokenIds) {
  DatasetHeader h;
  h.vocab.size = 100000;
  DatasetWriter w(path("wide.pds"), h);
  ProcSample s;
  s.tokens = {70000};
  s.loss_mask = {1};
  EXPECT_THROW(w.add(s), ConfigError);
}

TEST_F(IoTest, CheckpointRoundTripIsByteIdentical) {
  ModelConfig cfg = tiny_preset();
  auto p = init_params<float>(cfg, 99);
  p.provenance["note"] = "round trip";

  save_checkpoint(path("a.ckpt"), p);
  ParamSet q = load_checkpoint(path("a.ckpt"));
  EXPECT_EQ(q.config, p.config);
  EXPECT_EQ(q.provenance, p.provenance);
  EXPECT_EQ(hash_params(q), hash_params(p));
  ASSERT_EQ(q.tensors.size(), p.tensors.size());
  for (size_t i = 0; i < p.tensors.size(); ++i) {
    EXPECT_EQ(q.tensors[i].name, p.tensors[i].name);
    EXPECT_EQ(q.tensors[i].component, p.tensors[i].component);
    EXPECT_EQ(q.tensors[i].layer, p.tensors[i].layer);
    EXPECT_EQ(q.tensors[i].head, p.tensors[i].head);
  }

  save_checkpoint(path("b.ckpt"), q);
  EXPECT_EQ(file_bytes(path("a.ckpt")), file_bytes(path("b.ckpt")));
  EXPECT_EQ(hash_file(path("a.ckpt")), hash_file(path("b.ckpt")));
}

TEST_F(IoTest, CheckpointBinaryVariant) {
  ModelConfig cfg;
  cfg.n_layers = 1;
  cfg.n_heads = 2;
  cfg.d_model = 8;
  cfg.io_variant = IoVariant::kBinary;
  cfg.binary_width = 10;
  cfg.vocab_size = 2;
  auto p = init_params<float>(cfg, 4);
  save_checkpoint(path("bin.ckpt"), p);
  ParamSet q = load_checkpoint(path("bin.ckpt"));
  EXPECT_EQ(q.config, cfg);
  EXPECT_EQ(hash_params(q), hash_params(p));
}

TEST_F(IoTest, CheckpointRejectsGarbage) {
  {
    std::ofstream out(path("junk.ckpt"), std::ios::binary);
    out << "not a checkpoint at all";
  }
  EXPECT_THROW(load_checkpoint(path("junk.ckpt")), IoError);
  EXPECT_THROW(load_checkpoint(path("missing.ckpt")), IoError);
}

TEST_F(IoTest, MetricsJsonlRoundTrip) {
  MetricsRecord a;
  a.step = 100;
  a.tokens_seen = 123456;
  a.phase = "pretrain";
  a.loss = 0.25;
  a.token_accuracy = 0.75;
  a.perplexity = 1.28;
  a.lr = 5e-4;
  a.train_loss = 0.3;
  a.input_length = 8;
  a.per_head_entropy = MatD(2, 2);
  *a.per_head_entropy << 0.1, 0.2, 0.3, 0.4;

  MetricsRecord b;
  b.step = 200;
  b.phase = "finetune";
  b.loss = 0.125;

  {
    MetricsWriter w(path("m.jsonl"));
    w.write(a);
    w.write(b);
  }
  auto rows = read_metrics(path("m.jsonl"));
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].step, 100);
  EXPECT_EQ(rows[0].tokens_seen, 123456);
  EXPECT_EQ(rows[0].phase, "pretrain");
  EXPECT_DOUBLE_EQ(rows[0].loss, 0.25);
  ASSERT_TRUE(rows[0].input_length.has_value());
  EXPECT_EQ(*rows[0].input_length, 8);
  ASSERT_TRUE(rows[0].per_head_entropy.has_value());
  EXPECT_EQ(*rows[0].per_head_entropy, *a.per_head_entropy);
  EXPECT_FALSE(rows[1].input_length.has_value());
  EXPECT_FALSE(rows[1].per_head_entropy.has_value());
  EXPECT_EQ(rows[1].phase, "finetune");
}

TEST_F(IoTest, ManifestRoundTrip) {
  RunManifest m;
  m.config = {{"kind", "identity"}, {"seed", 3}};
  m.seeds = {1, 2, 3};
  m.wall_clock_seconds = 12.5;
  m.host = host_fingerprint();
  {
    std::ofstream out(path("artifact.txt"));
    out << "payload";
  }
  add_artifact(m, path("artifact.txt"));

  write_manifest(path("manifest.json"), m);
  RunManifest r = read_manifest(path("manifest.json"));
  EXPECT_EQ(r.config, m.config);
  EXPECT_EQ(r.seeds, m.seeds);
  EXPECT_EQ(r.artifact_hashes, m.artifact_hashes);
  EXPECT_EQ(r.tool_version, kToolVersion);
  EXPECT_EQ(r.status, "ok");
  EXPECT_DOUBLE_EQ(r.wall_clock_seconds, 12.5);

  // The recorded hash matches an independent recomputation.
  auto it = m.artifact_hashes.find(path("artifact.txt"));
  ASSERT_NE(it, m.artifact_hashes.end());
  EXPECT_EQ(it->second, hex64(fnv1a64("payload")));
}

TEST_F(IoTest, HashHelpers) {
  // FNV-1a 64 reference values.
  EXPECT_EQ(fnv1a64("", 0), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64(std::string("a")), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(hex64(0xdeadbeefULL), "00000000deadbeef");
  EXPECT_THROW(hash_file(path("nope.bin")), IoError);
}

}  // namespace
}  // namespace procseed
