#include "procseed/model_config.hpp"

#include <nlohmann/json.hpp>

#include "procseed/errors.hpp"

namespace procseed {

std::string to_string(IoVariant v) {
  return v == IoVariant::kToken ? "token" : "binary";
}

IoVariant io_variant_from_string(const std::string& s) {
  if (s == "token") return IoVariant::kToken;
  if (s == "binary") return IoVariant::kBinary;
  throw ConfigError("unknown io variant: " + s);
}

void validate(const ModelConfig& c) {
  if (c.n_layers < 1) throw ConfigError("n_layers must be >= 1");
  if (c.n_heads < 1) throw ConfigError("n_heads must be >= 1");
  if (c.d_model < 1 || c.d_model % c.n_heads != 0)
    throw ConfigError("d_model must be a positive multiple of n_heads");
  if (c.max_seq_len < 1) throw ConfigError("max_seq_len must be >= 1");
  if (c.io_variant == IoVariant::kToken) {
    if (c.vocab_size < 2) throw ConfigError("token models need vocab_size >= 2");
  } else {
    if (c.binary_width < 1) throw ConfigError("binary models need binary_width >= 1");
  }
}

ModelConfig tiny_preset() {
  ModelConfig c;
  c.n_layers = 2;
  c.n_heads = 4;
  c.d_model = 16;
  return c;
}

ModelConfig wide_preset() {
  ModelConfig c;
  c.n_layers = 4;
  c.n_heads = 8;
  c.d_model = 512;
  return c;
}

void to_json(nlohmann::json& j, const ModelConfig& c) {
  j = nlohmann::json{{"n_layers", c.n_layers},   {"n_heads", c.n_heads},
                     {"d_model", c.d_model},     {"vocab_size", c.vocab_size},
                     {"max_seq_len", c.max_seq_len},
                     {"io_variant", to_string(c.io_variant)},
                     {"binary_width", c.binary_width}};
}

void from_json(const nlohmann::json& j, ModelConfig& c) {
  c = ModelConfig{};
  c.n_layers = j.value("n_layers", c.n_layers);
  c.n_heads = j.value("n_heads", c.n_heads);
  c.d_model = j.value("d_model", c.d_model);
  c.vocab_size = j.value("vocab_size", c.vocab_size);
  c.max_seq_len = j.value("max_seq_len", c.max_seq_len);
  if (j.contains("io_variant"))
    c.io_variant = io_variant_from_string(j.at("io_variant").get<std::string>());
  c.binary_width = j.value("binary_width", c.binary_width);
}

}  // namespace procseed
