#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "procseed/dataset_io.hpp"
#include "procseed/datagen.hpp"
#include "procseed/genconfig.hpp"
#include "procseed/rng.hpp"
#include "procseed/sample.hpp"
#include "procseed/tasks.hpp"

namespace procseed {

// A seeded source of samples. next returns false once the stream is
// exhausted; generator-backed streams never exhaust.
class SampleStream {
 public:
  virtual ~SampleStream() = default;
  virtual bool next(ProcSample& out) = 0;
  virtual const VocabSpec& vocab() const = 0;
  // Curriculum hook; streams without a length knob ignore it.
  virtual void set_input_length(int) {}
};

class GenStream : public SampleStream {
 public:
  GenStream(GenConfig cfg, uint64_t seed, bool shuffle_tokens = false);
  bool next(ProcSample& out) override;
  const VocabSpec& vocab() const override { return cfg_.vocab; }
  void set_input_length(int n) override;

 private:
  GenConfig cfg_;
  Rng rng_;
  bool shuffle_tokens_;
};

class TaskStream : public SampleStream {
 public:
  TaskStream(TaskConfig cfg, uint64_t seed);
  bool next(ProcSample& out) override;
  const VocabSpec& vocab() const override { return vocab_; }

 private:
  TaskConfig cfg_;
  VocabSpec vocab_;
  Rng rng_;
};

// Streams records from a .pds file, optionally looping at end of file.
class FileStream : public SampleStream {
 public:
  explicit FileStream(const std::string& path, bool loop = false);
  bool next(ProcSample& out) override;
  const VocabSpec& vocab() const override { return reader_.header().vocab; }

 private:
  DatasetReader reader_;
  bool loop_;
};

// Fixed in-memory sample list; exhausts once.
class VectorStream : public SampleStream {
 public:
  VectorStream(std::vector<ProcSample> samples, VocabSpec vocab);
  bool next(ProcSample& out) override;
  const VocabSpec& vocab() const override { return vocab_; }
  void reset() { pos_ = 0; }

 private:
  std::vector<ProcSample> samples_;
  VocabSpec vocab_;
  size_t pos_ = 0;
};

// Interleaves two generator sources under per-source token budgets. Every
// sample is prefixed with a source marker token (mask false) and counted
// against its source's budget including the marker; a source retires when
// the next draw would overshoot its budget, so realized counts land within
// one sample-length below the request. The merged vocab appends the two
// marker ids after the larger source vocab; both sources must agree on
// pad and separator ids.
class MixtureStream : public SampleStream {
 public:
  MixtureStream(GenConfig a, GenConfig b, int64_t tokens_a, int64_t tokens_b,
                uint64_t seed);
  bool next(ProcSample& out) override;
  const VocabSpec& vocab() const override { return vocab_; }

  int64_t realized_tokens_a() const { return realized_a_; }
  int64_t realized_tokens_b() const { return realized_b_; }
  TokenId prefix_a() const { return prefix_a_; }
  TokenId prefix_b() const { return prefix_b_; }

 private:
  bool draw_from(int which, ProcSample& out);

  GenConfig a_, b_;
  VocabSpec vocab_;
  TokenId prefix_a_, prefix_b_;
  Rng pick_rng_, rng_a_, rng_b_;
  int64_t budget_a_, budget_b_;
  int64_t realized_a_ = 0, realized_b_ = 0;
  bool done_a_ = false, done_b_ = false;
};

// Convenience: pull up to n samples (fewer if the stream runs dry).
std::vector<ProcSample> take(SampleStream& s, int n);

}  // namespace procseed
