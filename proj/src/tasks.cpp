#include "procseed/tasks.hpp"

#include <algorithm>

#include <nlohmann/json.hpp>

#include "procseed/errors.hpp"

namespace procseed {

std::string to_string(TaskKind k) {
  switch (k) {
    case TaskKind::kHaystack: return "haystack";
    case TaskKind::kAddition: return "addition";
    case TaskKind::kReversedAddition: return "reversed_addition";
    case TaskKind::kMultiplication: return "multiplication";
    case TaskKind::kSorting: return "sorting";
  }
  throw ConfigError("unknown task kind");
}

TaskKind task_kind_from_string(const std::string& s) {
  if (s == "haystack") return TaskKind::kHaystack;
  if (s == "addition") return TaskKind::kAddition;
  if (s == "reversed_addition") return TaskKind::kReversedAddition;
  if (s == "multiplication") return TaskKind::kMultiplication;
  if (s == "sorting") return TaskKind::kSorting;
  throw ConfigError("unknown task kind: " + s);
}

TaskConfig default_task_config(TaskKind kind) {
  TaskConfig c;
  c.kind = kind;
  switch (kind) {
    case TaskKind::kHaystack: c.k_pairs = 30; break;
    case TaskKind::kAddition: c.n_digits = 5; break;
    case TaskKind::kReversedAddition: c.n_digits = 10; break;
    case TaskKind::kMultiplication: c.n_digits = 5; break;
    case TaskKind::kSorting:
      c.n_items = 10;
      c.element_range = 100;
      break;
  }
  return c;
}

void validate(const TaskConfig& c) {
  switch (c.kind) {
    case TaskKind::kHaystack:
      if (c.k_pairs < 1) throw ConfigError("k_pairs must be >= 1");
      if (c.k_pairs > c.element_range / 2)
        throw ConfigError("vocabulary too small to draw distinct markers");
      break;
    case TaskKind::kAddition:
    case TaskKind::kReversedAddition:
      if (c.n_digits < 1) throw ConfigError("n_digits must be >= 1");
      if (c.n_digits > 18) throw ConfigError("n_digits too large for 64-bit operands");
      break;
    case TaskKind::kMultiplication:
      if (c.n_digits < 1) throw ConfigError("n_digits must be >= 1");
      if (c.n_digits > 9) throw ConfigError("n_digits too large for a 64-bit product");
      break;
    case TaskKind::kSorting:
      if (c.n_items < 1) throw ConfigError("n_items must be >= 1");
      if (c.element_range < 1) throw ConfigError("element_range must be >= 1");
      break;
  }
}

VocabSpec task_vocab(const TaskConfig& c) {
  VocabSpec v;
  switch (c.kind) {
    case TaskKind::kHaystack:
    case TaskKind::kSorting:
      v.size = c.element_range + 2;
      v.separator_id = c.element_range;
      v.pad_id = c.element_range + 1;
      break;
    case TaskKind::kAddition:
      v.size = 13;
      v.special["plus"] = 10;
      v.special["eq"] = 11;
      v.pad_id = 12;
      break;
    case TaskKind::kReversedAddition:
      v.size = 11;
      v.pad_id = 10;
      break;
    case TaskKind::kMultiplication:
      v.size = 13;
      v.special["times"] = 10;
      v.special["eq"] = 11;
      v.pad_id = 12;
      break;
  }
  return v;
}

namespace {

// Most-significant digit first, fixed width.
std::vector<TokenId> digits_msd(uint64_t value, int width) {
  std::vector<TokenId> out(static_cast<size_t>(width));
  for (int i = width - 1; i >= 0; --i) {
    out[static_cast<size_t>(i)] = static_cast<TokenId>(value % 10);
    value /= 10;
  }
  return out;
}

uint64_t pow10u(int n) {
  uint64_t p = 1;
  for (int i = 0; i < n; ++i) p *= 10;
  return p;
}

TaskSample make(std::vector<TokenId> tokens, size_t answer_len, const char* tag) {
  TaskSample t;
  t.sample.tokens = std::move(tokens);
  t.sample.loss_mask.assign(t.sample.tokens.size(), 0);
  std::fill(t.sample.loss_mask.end() - static_cast<ptrdiff_t>(answer_len),
            t.sample.loss_mask.end(), uint8_t{1});
  t.sample.source_tag = tag;
  t.answer.assign(t.sample.tokens.end() - static_cast<ptrdiff_t>(answer_len),
                  t.sample.tokens.end());
  return t;
}

}  // namespace

TaskSample gen_haystack(const TaskConfig& cfg, Rng& rng) {
  const int half = cfg.element_range / 2;
  if (cfg.k_pairs > half) throw ConfigError("vocabulary too small to draw distinct markers");
  // Distinct markers from the low half via a partial Fisher-Yates draw.
  std::vector<TokenId> pool(static_cast<size_t>(half));
  for (int i = 0; i < half; ++i) pool[static_cast<size_t>(i)] = static_cast<TokenId>(i);
  std::vector<TokenId> tokens;
  tokens.reserve(static_cast<size_t>(2 * cfg.k_pairs) + 2);
  std::vector<TokenId> values(static_cast<size_t>(cfg.k_pairs));
  for (int i = 0; i < cfg.k_pairs; ++i) {
    size_t j = i + rng.below(static_cast<uint64_t>(half - i));
    std::swap(pool[static_cast<size_t>(i)], pool[j]);
    values[static_cast<size_t>(i)] =
        static_cast<TokenId>(half + static_cast<int>(rng.below(static_cast<uint64_t>(
                                        cfg.element_range - half))));
    tokens.push_back(pool[static_cast<size_t>(i)]);
    tokens.push_back(values[static_cast<size_t>(i)]);
  }
  size_t q = rng.below(static_cast<uint64_t>(cfg.k_pairs));
  tokens.push_back(pool[q]);
  tokens.push_back(values[q]);
  return make(std::move(tokens), 1, "haystack");
}

TaskSample gen_addition(const TaskConfig& cfg, Rng& rng) {
  const uint64_t mod = pow10u(cfg.n_digits);
  uint64_t a = rng.below(mod);
  uint64_t b = rng.below(mod);
  auto v = task_vocab(cfg);
  std::vector<TokenId> tokens = digits_msd(a, cfg.n_digits);
  tokens.push_back(v.at("plus"));
  auto bd = digits_msd(b, cfg.n_digits);
  tokens.insert(tokens.end(), bd.begin(), bd.end());
  tokens.push_back(v.at("eq"));
  auto sum = digits_msd(a + b, cfg.n_digits + 1);
  tokens.insert(tokens.end(), sum.begin(), sum.end());
  return make(std::move(tokens), sum.size(), "addition");
}

TaskSample gen_reversed_addition(const TaskConfig& cfg, Rng& rng) {
  const uint64_t mod = pow10u(cfg.n_digits);
  uint64_t a = rng.below(mod);
  uint64_t b = rng.below(mod);
  auto ad = digits_msd(a, cfg.n_digits);
  auto bd = digits_msd(b, cfg.n_digits);
  auto sd = digits_msd(a + b, cfg.n_digits + 1);
  std::reverse(ad.begin(), ad.end());
  std::reverse(bd.begin(), bd.end());
  std::reverse(sd.begin(), sd.end());
  std::vector<TokenId> tokens = ad;
  tokens.insert(tokens.end(), bd.begin(), bd.end());
  tokens.insert(tokens.end(), sd.begin(), sd.end());
  return make(std::move(tokens), sd.size(), "reversed_addition");
}

TaskSample gen_multiplication(const TaskConfig& cfg, Rng& rng) {
  const uint64_t mod = pow10u(cfg.n_digits);
  uint64_t a = rng.below(mod);
  uint64_t b = rng.below(mod);
  auto v = task_vocab(cfg);
  std::vector<TokenId> tokens = digits_msd(a, cfg.n_digits);
  tokens.push_back(v.at("times"));
  auto bd = digits_msd(b, cfg.n_digits);
  tokens.insert(tokens.end(), bd.begin(), bd.end());
  tokens.push_back(v.at("eq"));
  auto prod = digits_msd(a * b, 2 * cfg.n_digits);
  tokens.insert(tokens.end(), prod.begin(), prod.end());
  return make(std::move(tokens), prod.size(), "multiplication");
}

TaskSample gen_sorting_task(const TaskConfig& cfg, Rng& rng) {
  auto v = task_vocab(cfg);
  std::vector<TokenId> items(static_cast<size_t>(cfg.n_items));
  for (auto& t : items)
    t = static_cast<TokenId>(rng.below(static_cast<uint64_t>(cfg.element_range)));
  std::vector<TokenId> tokens = items;
  tokens.push_back(v.separator_id);
  auto sorted = items;
  std::sort(sorted.begin(), sorted.end());
  tokens.insert(tokens.end(), sorted.begin(), sorted.end());
  return make(std::move(tokens), sorted.size(), "sorting");
}

TaskSample generate(const TaskConfig& cfg, Rng& rng) {
  switch (cfg.kind) {
    case TaskKind::kHaystack: return gen_haystack(cfg, rng);
    case TaskKind::kAddition: return gen_addition(cfg, rng);
    case TaskKind::kReversedAddition: return gen_reversed_addition(cfg, rng);
    case TaskKind::kMultiplication: return gen_multiplication(cfg, rng);
    case TaskKind::kSorting: return gen_sorting_task(cfg, rng);
  }
  throw ConfigError("unknown task kind");
}

void to_json(nlohmann::json& j, const TaskConfig& c) {
  j = nlohmann::json{{"kind", to_string(c.kind)}, {"k_pairs", c.k_pairs},
                     {"n_digits", c.n_digits},   {"n_items", c.n_items},
                     {"element_range", c.element_range}, {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, TaskConfig& c) {
  c = default_task_config(task_kind_from_string(j.at("kind").get<std::string>()));
  c.k_pairs = j.value("k_pairs", c.k_pairs);
  c.n_digits = j.value("n_digits", c.n_digits);
  c.n_items = j.value("n_items", c.n_items);
  c.element_range = j.value("element_range", c.element_range);
  c.seed = j.value("seed", c.seed);
}

}  // namespace procseed
