#pragma once

#include <string>

#include <nlohmann/json_fwd.hpp>

namespace procseed {

enum class IoVariant {
  kToken,   // learned embedding table in, linear vocab head out
  kBinary,  // linear projection from/to fixed-width binary vectors
};

std::string to_string(IoVariant v);
IoVariant io_variant_from_string(const std::string& s);

struct ModelConfig {
  int n_layers = 2;
  int n_heads = 4;
  int d_model = 16;
  int vocab_size = 102;
  int max_seq_len = 128;
  IoVariant io_variant = IoVariant::kToken;
  int binary_width = 0;  // input/output width for the binary variant

  int head_dim() const { return d_model / n_heads; }
  bool operator==(const ModelConfig&) const = default;
};

void to_json(nlohmann::json& j, const ModelConfig& c);
void from_json(const nlohmann::json& j, ModelConfig& c);

// Throws ConfigError on inconsistent settings (d_model not divisible by
// n_heads, missing vocab/width for the chosen variant, ...).
void validate(const ModelConfig& c);

// Library presets: "tiny" (2 layers, 4 heads, width 16) and "wide"
// (4 layers, 8 heads, width 512).
ModelConfig tiny_preset();
ModelConfig wide_preset();

}  // namespace procseed
