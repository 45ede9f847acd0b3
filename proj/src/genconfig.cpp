#include "procseed/genconfig.hpp"

#include <nlohmann/json.hpp>

#include "procseed/errors.hpp"

namespace procseed {

std::string to_string(GenKind k) {
  switch (k) {
    case GenKind::kIdentity: return "identity";
    case GenKind::kSet: return "set";
    case GenKind::kUnion: return "union";
    case GenKind::kDelete: return "delete";
    case GenKind::kSort: return "sort";
    case GenKind::kReverse: return "reverse";
    case GenKind::kStack: return "stack";
    case GenKind::kDyck: return "dyck";
    case GenKind::kDyckShuffle: return "dyck_shuffle";
    case GenKind::kEca110: return "eca110";
  }
  throw ConfigError("unknown generator kind");
}

GenKind gen_kind_from_string(const std::string& s) {
  if (s == "identity") return GenKind::kIdentity;
  if (s == "set") return GenKind::kSet;
  if (s == "union") return GenKind::kUnion;
  if (s == "delete") return GenKind::kDelete;
  if (s == "sort") return GenKind::kSort;
  if (s == "reverse") return GenKind::kReverse;
  if (s == "stack") return GenKind::kStack;
  if (s == "dyck") return GenKind::kDyck;
  if (s == "dyck_shuffle") return GenKind::kDyckShuffle;
  if (s == "eca110") return GenKind::kEca110;
  throw ConfigError("unknown generator kind: " + s);
}

VocabSpec vocab_for(const GenConfig& c) {
  VocabSpec v;
  const TokenId e = c.n_elements;
  switch (c.kind) {
    case GenKind::kIdentity:
    case GenKind::kSet:
    case GenKind::kSort:
    case GenKind::kReverse:
      v.size = c.n_elements + 2;
      v.separator_id = e;
      v.pad_id = e + 1;
      break;
    case GenKind::kUnion:
      v.size = c.n_elements + 3;
      v.separator_id = e;
      v.pad_id = e + 1;
      v.special["union_delim"] = e + 2;
      break;
    case GenKind::kDelete:
      v.size = c.n_elements + 3;
      v.separator_id = e;
      v.pad_id = e + 1;
      v.special["delete_delim"] = e + 2;
      break;
    case GenKind::kStack:
      v.size = c.n_elements + 3;
      v.special["pop"] = e;
      v.separator_id = e + 1;
      v.pad_id = e + 2;
      break;
    case GenKind::kDyck:
    case GenKind::kDyckShuffle:
      v.size = 2 * c.dyck_k;
      break;
    case GenKind::kEca110:
      v.size = 2;
      break;
  }
  return v;
}

GenConfig default_config(GenKind kind) {
  GenConfig c;
  c.kind = kind;
  switch (kind) {
    case GenKind::kIdentity:
    case GenKind::kStack:
      c.input_length = 4;
      break;
    case GenKind::kSet:
      c.input_length = 2;
      break;
    case GenKind::kUnion:
    case GenKind::kDelete:
    case GenKind::kSort:
    case GenKind::kReverse:
      c.input_length = 4;
      break;
    case GenKind::kDyck:
      c.input_length = 128;
      c.p_open = 0.49;
      break;
    case GenKind::kDyckShuffle:
      c.input_length = 128;
      c.p_open = 0.50;
      break;
    case GenKind::kEca110:
      break;
  }
  c.vocab = vocab_for(c);
  return c;
}

void validate(const GenConfig& c) {
  switch (c.kind) {
    case GenKind::kIdentity:
    case GenKind::kSet:
    case GenKind::kUnion:
    case GenKind::kDelete:
    case GenKind::kSort:
    case GenKind::kReverse:
    case GenKind::kStack:
      if (c.input_length < 1) throw ConfigError("input_length must be >= 1");
      if (c.n_elements < 1) throw ConfigError("n_elements must be >= 1");
      break;
    case GenKind::kDyck:
    case GenKind::kDyckShuffle:
      if (c.input_length < 2 || c.input_length % 2 != 0)
        throw ConfigError("bracket length must be even and >= 2");
      if (c.dyck_k < 1) throw ConfigError("dyck_k must be >= 1");
      if (!(c.p_open > 0.0 && c.p_open < 1.0)) throw ConfigError("p_open must lie in (0,1)");
      break;
    case GenKind::kEca110:
      if (c.eca_width < 1) throw ConfigError("eca_width must be >= 1");
      if (c.eca_steps < 1) throw ConfigError("eca_steps must be >= 1");
      break;
  }
  if (c.vocab != vocab_for(c)) throw ConfigError("vocab inconsistent with generator settings");
  validate(c.vocab);
}

void to_json(nlohmann::json& j, const GenConfig& c) {
  j = nlohmann::json{{"kind", to_string(c.kind)},
                     {"input_length", c.input_length},
                     {"n_elements", c.n_elements},
                     {"dyck_k", c.dyck_k},
                     {"p_open", c.p_open},
                     {"eca_width", c.eca_width},
                     {"eca_steps", c.eca_steps},
                     {"seed", c.seed},
                     {"vocab", c.vocab}};
}

void from_json(const nlohmann::json& j, GenConfig& c) {
  c = default_config(gen_kind_from_string(j.at("kind").get<std::string>()));
  c.input_length = j.value("input_length", c.input_length);
  c.n_elements = j.value("n_elements", c.n_elements);
  c.dyck_k = j.value("dyck_k", c.dyck_k);
  c.p_open = j.value("p_open", c.p_open);
  c.eca_width = j.value("eca_width", c.eca_width);
  c.eca_steps = j.value("eca_steps", c.eca_steps);
  c.seed = j.value("seed", c.seed);
  if (j.contains("vocab")) {
    j.at("vocab").get_to(c.vocab);
  } else {
    c.vocab = vocab_for(c);
  }
}

}  // namespace procseed
