#include "procseed/tensor.hpp"

namespace procseed {

std::string to_string(Component c) {
  switch (c) {
    case Component::kEmbedding: return "embedding";
    case Component::kPositional: return "positional";
    case Component::kAttention: return "attention";
    case Component::kNorm: return "norm";
    case Component::kMlp: return "mlp";
    case Component::kHead: return "head";
  }
  throw ConfigError("unknown component tag");
}

Component component_from_string(const std::string& s) {
  if (s == "embedding") return Component::kEmbedding;
  if (s == "positional") return Component::kPositional;
  if (s == "attention") return Component::kAttention;
  if (s == "norm") return Component::kNorm;
  if (s == "mlp") return Component::kMlp;
  if (s == "head") return Component::kHead;
  throw ConfigError("unknown component tag: " + s);
}

}  // namespace procseed
