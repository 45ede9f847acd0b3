#pragma once

#include <cstdint>
#include <string>

#include <nlohmann/json_fwd.hpp>

#include "procseed/rng.hpp"
#include "procseed/sample.hpp"
#include "procseed/vocab.hpp"

namespace procseed {

enum class TaskKind {
  kHaystack,
  kAddition,
  kReversedAddition,
  kMultiplication,
  kSorting,
};

std::string to_string(TaskKind k);
TaskKind task_kind_from_string(const std::string& s);

struct TaskConfig {
  TaskKind kind = TaskKind::kHaystack;
  int k_pairs = 30;       // haystack key-value pairs
  int n_digits = 5;       // operand width for the arithmetic family
  int n_items = 10;       // sorting list length
  int element_range = 100;  // sorting/haystack element alphabet
  uint64_t seed = 0;

  bool operator==(const TaskConfig&) const = default;
};

void to_json(nlohmann::json& j, const TaskConfig& c);
void from_json(const nlohmann::json& j, TaskConfig& c);

TaskConfig default_task_config(TaskKind kind);
void validate(const TaskConfig& c);

// Token layouts.
//   haystack        elements [0,E), separator E, pad E+1; markers drawn
//                   from the low half of the element range, values from
//                   the high half; prompt = k pairs + query marker,
//                   answer = the queried value (one token, no separator)
//   addition        digits 0-9, '+' 10, '=' 11, pad 12; answer width
//                   n_digits+1, most-significant digit first, zero padded
//   reversed_addition  digits 0-9, pad 10; no operator tokens; operands
//                   and answer all least-significant digit first
//   multiplication  digits 0-9, 'x' 10, '=' 11, pad 12; answer width
//                   2*n_digits
//   sorting         elements [0,E), separator E, pad E+1
VocabSpec task_vocab(const TaskConfig& c);

// One evaluation sample: the framed sequence plus the bare answer tokens
// for oracle checks.
struct TaskSample {
  ProcSample sample;
  std::vector<TokenId> answer;
};

TaskSample gen_haystack(const TaskConfig& cfg, Rng& rng);
TaskSample gen_addition(const TaskConfig& cfg, Rng& rng);
TaskSample gen_reversed_addition(const TaskConfig& cfg, Rng& rng);
TaskSample gen_multiplication(const TaskConfig& cfg, Rng& rng);
TaskSample gen_sorting_task(const TaskConfig& cfg, Rng& rng);

TaskSample generate(const TaskConfig& cfg, Rng& rng);

}  // namespace procseed
