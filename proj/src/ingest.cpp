#include "procseed/ingest.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "procseed/errors.hpp"

namespace procseed {

VocabSpec CharMap::vocab() const {
  VocabSpec v;
  v.size = size();
  return v;
}

nlohmann::ordered_json to_json(const CharMap& m) {
  nlohmann::ordered_json j;
  nlohmann::ordered_json entries = nlohmann::ordered_json::object();
  for (auto [c, id] : m.to_id)
    entries[std::to_string(static_cast<int>(static_cast<unsigned char>(c)))] =
        id;
  j["bytes"] = entries;
  return j;
}

CharMap char_map_from_json(const nlohmann::json& j) {
  CharMap m;
  for (auto it = j.at("bytes").begin(); it != j.at("bytes").end(); ++it) {
    int byte = std::stoi(it.key());
    if (byte < 0 || byte > 255) throw ConfigError("byte value out of range");
    m.to_id[static_cast<char>(static_cast<unsigned char>(byte))] =
        it.value().get<TokenId>();
  }
  return m;
}

CharMap build_char_map(const std::string& text) {
  std::set<char> seen(text.begin(), text.end());
  CharMap m;
  TokenId id = 0;
  for (char c : seen) m.to_id[c] = id++;
  return m;
}

std::vector<TokenId> map_chars(const std::string& text, const CharMap& map,
                               OnUnmappable policy) {
  std::vector<TokenId> out;
  out.reserve(text.size());
  for (char c : text) {
    auto it = map.to_id.find(c);
    if (it == map.to_id.end()) {
      if (policy == OnUnmappable::kError)
        throw ConfigError("unmappable byte value " +
                          std::to_string(static_cast<int>(
                              static_cast<unsigned char>(c))));
      continue;
    }
    out.push_back(it->second);
  }
  return out;
}

std::string detokenize(const std::vector<TokenId>& tokens,
                       const CharMap& map) {
  std::map<TokenId, char> back;
  for (auto [c, id] : map.to_id) back[id] = c;
  std::string out;
  out.reserve(tokens.size());
  for (TokenId t : tokens) {
    auto it = back.find(t);
    if (it == back.end())
      throw ConfigError("token id " + std::to_string(t) + " not in map");
    out.push_back(it->second);
  }
  return out;
}

std::vector<ProcSample> blocks_from_tokens(const std::vector<TokenId>& tokens,
                                           int block_len) {
  if (block_len < 2) throw ConfigError("block length must be at least 2");
  std::vector<ProcSample> out;
  size_t n_blocks = tokens.size() / static_cast<size_t>(block_len);
  out.reserve(n_blocks);
  for (size_t b = 0; b < n_blocks; ++b) {
    ProcSample s;
    auto begin = tokens.begin() + static_cast<ptrdiff_t>(b) * block_len;
    s.tokens.assign(begin, begin + block_len);
    s.loss_mask.assign(static_cast<size_t>(block_len), 1);
    s.source_tag = "ingest";
    out.push_back(std::move(s));
  }
  return out;
}

std::unique_ptr<VectorStream> ingest_tokens(const std::string& path,
                                            const CharMap& map, int block_len,
                                            OnUnmappable policy) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read corpus: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  std::vector<TokenId> tokens = map_chars(ss.str(), map, policy);
  return std::make_unique<VectorStream>(blocks_from_tokens(tokens, block_len),
                                        map.vocab());
}

}  // namespace procseed
