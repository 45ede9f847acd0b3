#pragma once

#include <cstdint>
#include <map>
#include <string>

#include <nlohmann/json_fwd.hpp>

namespace procseed {

using TokenId = int32_t;

// Describes a token id layout: total size, the ids reserved for padding and
// separators, plus a role map naming any other special ids (delimiters,
// operators, mixture prefixes). Element ids are everything not named here.
struct VocabSpec {
  int size = 0;
  TokenId pad_id = -1;
  TokenId separator_id = -1;
  std::map<std::string, TokenId> special;

  bool has(const std::string& role) const { return special.count(role) != 0; }
  TokenId at(const std::string& role) const;

  bool operator==(const VocabSpec&) const = default;
};

void to_json(nlohmann::json& j, const VocabSpec& v);
void from_json(const nlohmann::json& j, VocabSpec& v);

// Throws ConfigError unless 0 <= id < size for pad/separator/specials.
void validate(const VocabSpec& v);

}  // namespace procseed
