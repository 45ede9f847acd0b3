#include "procseed/sample.hpp"

#include <algorithm>

#include "procseed/errors.hpp"

namespace procseed {

size_t ProcSample::target_count() const {
  return static_cast<size_t>(std::count(loss_mask.begin(), loss_mask.end(), uint8_t{1}));
}

void validate(const ProcSample& s, const VocabSpec& v) {
  if (s.tokens.size() != s.loss_mask.size())
    throw ConfigError("sample token/mask length mismatch");
  for (size_t i = 0; i < s.tokens.size(); ++i) {
    TokenId t = s.tokens[i];
    if (t < 0 || t >= v.size) throw ConfigError("sample token id out of vocab range");
    if (s.loss_mask[i] && v.pad_id >= 0 && t == v.pad_id)
      throw ConfigError("pad token inside loss-masked region");
  }
}

}  // namespace procseed
