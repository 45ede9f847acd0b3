#include "procseed/evaluate.hpp"

#include <algorithm>
#include <cmath>

#include "procseed/errors.hpp"

namespace procseed {

namespace {

// Compensated (Kahan) accumulator.
struct KahanSum {
  double sum = 0.0;
  double c = 0.0;
  void add(double x) {
    double y = x - c;
    double t = sum + y;
    c = (t - sum) - y;
    sum = t;
  }
};

int examples_with_valid_rows(const AttnMaps& maps) {
  int n = 0;
  for (const auto& rv : maps.row_valid) {
    bool any = false;
    for (uint8_t v : rv)
      if (v) {
        any = true;
        break;
      }
    if (any) ++n;
  }
  return n;
}

}  // namespace

nlohmann::ordered_json to_json(const EvalReport& r) {
  nlohmann::ordered_json j;
  j["n_samples"] = r.n_samples;
  j["n_positions"] = r.n_positions;
  j["loss"] = r.loss;
  j["perplexity"] = r.perplexity;
  j["token_accuracy"] = r.token_accuracy;
  j["sequence_accuracy"] = r.sequence_accuracy;
  if (r.per_head_entropy.size() > 0) {
    std::vector<std::vector<double>> rows;
    for (Eigen::Index l = 0; l < r.per_head_entropy.rows(); ++l) {
      std::vector<double> row;
      for (Eigen::Index h = 0; h < r.per_head_entropy.cols(); ++h)
        row.push_back(r.per_head_entropy(l, h));
      rows.push_back(std::move(row));
    }
    j["per_head_entropy"] = rows;
    j["entropy_examples"] = r.entropy_examples;
  }
  return j;
}

EvalReport evaluate(const ParamSet& p, SampleStream& stream,
                    int64_t n_samples, int batch_size, bool want_entropy,
                    int64_t entropy_examples) {
  if (n_samples <= 0) throw ConfigError("n_samples must be positive");
  if (batch_size <= 0) throw ConfigError("batch_size must be positive");
  const bool binary = p.config.io_variant == IoVariant::kBinary;

  EvalReport rep;
  KahanSum loss_sum;
  int64_t correct = 0, pred_total = 0, seq_correct = 0;
  MatD ent_acc;
  double ent_examples = 0.0;

  ForwardCache cache;
  int64_t remaining = n_samples;
  while (remaining > 0) {
    int want = static_cast<int>(
        std::min<int64_t>(remaining, static_cast<int64_t>(batch_size)));
    std::vector<ProcSample> samples = take(stream, want);
    if (samples.empty()) break;

    LossGrad<float> lg;
    std::vector<int> n_pos;
    if (binary) {
      BinaryBatch b =
          make_binary_batch<float>(samples, p.config.binary_width);
      forward(p, b, cache);
      lg = binary_loss(cache.out, b);
      n_pos = b.n_pos;
    } else {
      TokenBatch b = make_token_batch(samples, stream.vocab().pad_id);
      forward(p, b, cache);
      lg = token_loss(cache.out, b);
      n_pos = b.n_pos;
    }

    loss_sum.add(lg.loss_sum);
    rep.n_positions += lg.count;
    correct += lg.correct;
    pred_total += lg.pred_total;
    for (uint8_t ok : lg.sample_all_correct) seq_correct += ok ? 1 : 0;
    rep.n_samples += static_cast<int64_t>(samples.size());
    remaining -= static_cast<int64_t>(samples.size());

    if (want_entropy && ent_examples < static_cast<double>(entropy_examples)) {
      AttnMaps maps = extract_attn_maps(cache, n_pos, p.config);
      int batch_examples = examples_with_valid_rows(maps);
      if (batch_examples > 0) {
        MatD e = attention_entropy(maps);
        if (ent_acc.size() == 0) ent_acc = MatD::Zero(e.rows(), e.cols());
        ent_acc += e * static_cast<double>(batch_examples);
        ent_examples += static_cast<double>(batch_examples);
      }
    }
  }

  if (rep.n_samples == 0) throw ConfigError("evaluation stream is empty");
  if (rep.n_positions > 0) {
    double denom = static_cast<double>(rep.n_positions);
    if (binary) denom *= static_cast<double>(p.config.binary_width);
    rep.loss = loss_sum.sum / denom;
    rep.perplexity = binary ? 0.0 : std::exp(rep.loss);
  }
  if (pred_total > 0)
    rep.token_accuracy =
        static_cast<double>(correct) / static_cast<double>(pred_total);
  rep.sequence_accuracy =
      static_cast<double>(seq_correct) / static_cast<double>(rep.n_samples);
  if (want_entropy && ent_examples > 0) {
    rep.per_head_entropy = ent_acc / ent_examples;
    rep.entropy_examples = static_cast<int64_t>(ent_examples);
  }
  return rep;
}

std::vector<HeadEntropy> rank_heads_by_entropy(const ParamSet& p,
                                               SampleStream& stream,
                                               int64_t n_examples,
                                               int batch_size) {
  EvalReport rep =
      evaluate(p, stream, n_examples, batch_size, true, n_examples);
  if (rep.per_head_entropy.size() == 0)
    throw ConfigError("no valid attention rows for entropy ranking");
  std::vector<HeadEntropy> out;
  for (Eigen::Index l = 0; l < rep.per_head_entropy.rows(); ++l)
    for (Eigen::Index h = 0; h < rep.per_head_entropy.cols(); ++h)
      out.push_back({static_cast<int>(l), static_cast<int>(h),
                     rep.per_head_entropy(l, h)});
  std::sort(out.begin(), out.end(), [](const HeadEntropy& a,
                                       const HeadEntropy& b) {
    if (a.entropy != b.entropy) return a.entropy < b.entropy;
    if (a.layer != b.layer) return a.layer < b.layer;
    return a.head < b.head;
  });
  return out;
}

}  // namespace procseed
