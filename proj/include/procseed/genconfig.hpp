#pragma once

#include <cstdint>
#include <string>

#include <nlohmann/json_fwd.hpp>

#include "procseed/vocab.hpp"

namespace procseed {

enum class GenKind {
  kIdentity,
  kSet,
  kUnion,
  kDelete,
  kSort,
  kReverse,
  kStack,
  kDyck,
  kDyckShuffle,
  kEca110,
};

std::string to_string(GenKind k);
GenKind gen_kind_from_string(const std::string& s);

// Configuration for one procedural source. Fields that do not apply to a
// kind are ignored by it (e.g. dyck_k for Sort). `vocab` is derived from the
// other fields via vocab_for and stored so dataset files are self-describing.
struct GenConfig {
  GenKind kind = GenKind::kIdentity;

  // Transform/stack family: input tokens drawn per sample. Bracket family:
  // total sequence length (forced even for dyck).
  int input_length = 8;
  // Element alphabet size for the transform/stack family.
  int n_elements = 100;

  // Bracket family.
  int dyck_k = 4;
  double p_open = 0.49;

  // Cellular automaton.
  int eca_width = 100;
  int eca_steps = 60;

  uint64_t seed = 0;

  VocabSpec vocab;

  bool operator==(const GenConfig&) const = default;
};

void to_json(nlohmann::json& j, const GenConfig& c);
void from_json(const nlohmann::json& j, GenConfig& c);

// Library defaults for each kind: curriculum-family lengths, element range
// 100, bracket length 128 with p_open 0.49 (nested) / 0.50 (shuffled),
// automaton 100 cells by 60 steps. vocab is filled in.
GenConfig default_config(GenKind kind);

// Token layout implied by a config.
//   transforms       elements [0,E), separator E, pad E+1            (E+2)
//   union, delete    as above plus a delimiter id E+2                (E+3)
//   stack            elements [0,E), pop E, separator E+1, pad E+2   (E+3)
//   brackets         open_t = 2t, close_t = 2t+1, no separator/pad   (2k)
//   automaton        cell states {0,1}, no separator/pad             (2)
VocabSpec vocab_for(const GenConfig& c);

// Throws ConfigError for degenerate settings (zero lengths, odd dyck
// length, p_open outside (0,1), vocab inconsistent with the kind).
void validate(const GenConfig& c);

}  // namespace procseed
