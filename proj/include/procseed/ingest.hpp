#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "procseed/sample.hpp"
#include "procseed/stream.hpp"
#include "procseed/vocab.hpp"

namespace procseed {

// Character-level token map: each mapped byte gets one id in [0, size).
struct CharMap {
  std::map<char, TokenId> to_id;

  int size() const { return static_cast<int>(to_id.size()); }
  VocabSpec vocab() const;
};

nlohmann::ordered_json to_json(const CharMap& m);
CharMap char_map_from_json(const nlohmann::json& j);

// Distinct bytes of the text, sorted ascending, ids assigned in order.
CharMap build_char_map(const std::string& text);

enum class OnUnmappable { kSkip, kError };

// Maps text to token ids; unmappable bytes are skipped or raise ConfigError.
std::vector<TokenId> map_chars(const std::string& text, const CharMap& map,
                               OnUnmappable policy);

std::string detokenize(const std::vector<TokenId>& tokens, const CharMap& map);

// Chops tokens into fixed-length blocks with an all-true loss mask; a
// trailing partial block is dropped.
std::vector<ProcSample> blocks_from_tokens(const std::vector<TokenId>& tokens,
                                           int block_len);

// Reads the file and returns a finite stream of blocks. An empty file (or
// one shorter than a block) yields an empty stream.
std::unique_ptr<VectorStream> ingest_tokens(const std::string& path,
                                            const CharMap& map, int block_len,
                                            OnUnmappable policy);

}  // namespace procseed
