#pragma once

#include <string>

#include "procseed/tensor.hpp"

namespace procseed {

// Checkpoint container: magic "PCKP", format version, a JSON block with the
// model config and provenance, then each tensor as (name, component tag,
// layer index, rows, cols, row-major float32 values). Little-endian
// throughout; write/read round trips are byte-identical.
void save_checkpoint(const std::string& path, const ParamSet& p);
ParamSet load_checkpoint(const std::string& path);

}  // namespace procseed
