#include "procseed/vocab.hpp"

#include <nlohmann/json.hpp>

#include "procseed/errors.hpp"

namespace procseed {

TokenId VocabSpec::at(const std::string& role) const {
  auto it = special.find(role);
  if (it == special.end()) throw ConfigError("vocab has no special token '" + role + "'");
  return it->second;
}

void to_json(nlohmann::json& j, const VocabSpec& v) {
  j = nlohmann::json{{"size", v.size},
                     {"pad_id", v.pad_id},
                     {"separator_id", v.separator_id},
                     {"special", v.special}};
}

void from_json(const nlohmann::json& j, VocabSpec& v) {
  j.at("size").get_to(v.size);
  j.at("pad_id").get_to(v.pad_id);
  j.at("separator_id").get_to(v.separator_id);
  v.special = j.value("special", std::map<std::string, TokenId>{});
}

void validate(const VocabSpec& v) {
  if (v.size <= 0) throw ConfigError("vocab size must be positive");
  auto check = [&](TokenId id, const std::string& what) {
    if (id >= v.size || id < -1) throw ConfigError(what + " id out of range");
  };
  check(v.pad_id, "pad");
  check(v.separator_id, "separator");
  for (const auto& [role, id] : v.special) {
    if (id < 0 || id >= v.size) throw ConfigError("special '" + role + "' id out of range");
  }
}

}  // namespace procseed
