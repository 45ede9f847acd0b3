#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "procseed/vocab.hpp"

namespace procseed {

// One training sequence. loss_mask[p] is true when token p is a prediction
// target given the tokens before it; the leading input region and structural
// separators are false. tokens and loss_mask always have equal length.
struct ProcSample {
  std::vector<TokenId> tokens;
  std::vector<uint8_t> loss_mask;
  std::string source_tag;

  size_t size() const { return tokens.size(); }
  size_t target_count() const;
};

// Throws ConfigError if lengths disagree, a token id is outside the vocab,
// or a pad id appears at a masked-true position.
void validate(const ProcSample& s, const VocabSpec& v);

}  // namespace procseed
