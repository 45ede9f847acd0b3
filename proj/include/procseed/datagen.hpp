#pragma once

#include <cstdint>
#include <vector>

#include "procseed/genconfig.hpp"
#include "procseed/rng.hpp"
#include "procseed/sample.hpp"

namespace procseed {

// Realized operation statistics for the stack generator. Resamples count
// rejected illegal draws (pop on empty, push of an element already held).
struct StackStats {
  int64_t pushes = 0;
  int64_t pops = 0;
  int64_t resamples = 0;
};

ProcSample gen_identity(const GenConfig& cfg, Rng& rng);
ProcSample gen_set(const GenConfig& cfg, Rng& rng);
ProcSample gen_union(const GenConfig& cfg, Rng& rng);
ProcSample gen_delete(const GenConfig& cfg, Rng& rng);
ProcSample gen_sort(const GenConfig& cfg, Rng& rng);
ProcSample gen_reverse(const GenConfig& cfg, Rng& rng);
ProcSample gen_stack(const GenConfig& cfg, Rng& rng, StackStats* stats = nullptr);
ProcSample gen_dyck(const GenConfig& cfg, Rng& rng);
ProcSample gen_dyck_shuffle(const GenConfig& cfg, Rng& rng);

// One synchronous update of an elementary cellular automaton with periodic
// boundaries: cell i becomes bit (4*left + 2*center + right) of `rule`.
std::vector<uint8_t> eca_step(const std::vector<uint8_t>& state, int rule);

// eca_steps successive states of width eca_width, flattened row-major into
// one sample. The loss mask is true on every cell from the second row on.
ProcSample gen_eca(const GenConfig& cfg, Rng& rng);

// Dispatch on cfg.kind.
ProcSample generate(const GenConfig& cfg, Rng& rng);

// Uniformly permutes the token sequence in place of its structure. The
// mask geometry stays put: the same positions remain loss-bearing.
ProcSample shuffle_sample(const ProcSample& s, Rng& rng);

}  // namespace procseed
