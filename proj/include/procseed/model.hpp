#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "procseed/errors.hpp"
#include "procseed/model_config.hpp"
#include "procseed/rng.hpp"
#include "procseed/sample.hpp"
#include "procseed/tensor.hpp"

namespace procseed {

using MatI = Eigen::Matrix<int32_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatU8 = Eigen::Matrix<uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// ---------------------------------------------------------------------------
// Batches
// ---------------------------------------------------------------------------

// Teacher-forced batch for the token variant. Row b holds a sample shifted
// by one: input(b,t) predicts target(b,t); mask marks loss-bearing targets.
// n_pos[b] counts the real (non-pad) positions of row b; padding always
// trails. token_count is the dataset-level token total of the samples
// (context plus targets), used for budget accounting.
struct TokenBatch {
  MatI input;
  MatI target;
  MatU8 mask;
  std::vector<int> n_pos;
  int64_t token_count = 0;

  int batch() const { return static_cast<int>(input.rows()); }
  int seq_len() const { return static_cast<int>(input.cols()); }
};

// Same framing for the binary variant: one "position" is a whole binary
// state vector of `width` cells; input row r predicts target row r.
template <typename S>
struct BinaryBatchT {
  int batch_size = 0;
  int seq_len_ = 0;
  MatX<S> input;   // [B*T, width]
  MatX<S> target;  // [B*T, width]
  MatU8 mask;      // [B, T]
  std::vector<int> n_pos;
  int64_t token_count = 0;

  int batch() const { return batch_size; }
  int seq_len() const { return seq_len_; }
};
using BinaryBatch = BinaryBatchT<float>;

// Builds a batch from samples, padding to the longest sample. pad_id must
// be valid if lengths differ. Samples of length < 2 are rejected (nothing
// to predict).
TokenBatch make_token_batch(const std::vector<ProcSample>& samples, TokenId pad_id);

template <typename S>
BinaryBatchT<S> make_binary_batch(const std::vector<ProcSample>& samples, int width);

// ---------------------------------------------------------------------------
// Forward cache
// ---------------------------------------------------------------------------

template <typename S>
struct LayerCacheT {
  MatX<S> ln1, q, k, v, att, x_mid, ln2, fc, tanh_c, act;
  MatX<S> probs;  // [B*H*T, T] attention rows, causally softmaxed
  Eigen::Matrix<S, Eigen::Dynamic, 1> ln1_mean, ln1_rstd, ln2_mean, ln2_rstd;
  MatX<S> wq_cat, wk_cat, wv_cat, wo_cat;  // per-head tensors packed [d,d]
  MatX<S> bq_cat, bk_cat, bv_cat;          // packed [1,d]
};

template <typename S>
struct ForwardCacheT {
  int B = 0, T = 0;
  std::vector<MatX<S>> xs;  // xs[0] = embedding output, xs[l+1] = block l output
  std::vector<LayerCacheT<S>> layers;
  MatX<S> lnf;
  Eigen::Matrix<S, Eigen::Dynamic, 1> lnf_mean, lnf_rstd;
  MatX<S> out;      // logits [B*T, vocab] or binary scores [B*T, width]
  MatX<S> scratch;  // [T, T] attention workspace
};
using ForwardCache = ForwardCacheT<float>;

// ---------------------------------------------------------------------------
// Parameters
// ---------------------------------------------------------------------------

// Weights ~ Normal(0, 0.02^2), biases zero, norm gains one. Attention
// projections are stored per head so head-granular transfer moves whole
// tensor units; the output-projection bias is shared by the heads of a
// layer and lives in layer{i}.attn.bo.
template <typename S>
ParamSetT<S> init_params(const ModelConfig& cfg, uint64_t seed);

// Mean input representation: the arithmetic mean over embedding rows
// (token variant) or over the per-cell input projection vectors (binary).
template <typename S>
Eigen::Matrix<S, 1, Eigen::Dynamic> mean_embedding(const ParamSetT<S>& p);

// ---------------------------------------------------------------------------
// Forward / loss / backward
// ---------------------------------------------------------------------------

// Populates cache and cache.out. Throws on over-length sequences or
// out-of-range token ids.
template <typename S>
void forward(const ParamSetT<S>& p, const TokenBatch& b, ForwardCacheT<S>& cache);

template <typename S>
void forward(const ParamSetT<S>& p, const BinaryBatchT<S>& b, ForwardCacheT<S>& cache);

template <typename S>
struct LossGrad {
  double loss = 0.0;      // mean over contributing predictions
  double loss_sum = 0.0;  // unnormalized, for exact cross-batch pooling
  int64_t count = 0;      // contributing target positions
  int64_t correct = 0;      // greedy hits (token) / thresholded cells (binary)
  int64_t pred_total = 0;   // denominator for accuracy
  std::vector<uint8_t> sample_all_correct;
  MatX<S> dout;             // d(loss)/d(out), zero at masked-out rows
};

// Mean masked cross-entropy plus its gradient. Throws on an all-false mask.
template <typename S>
LossGrad<S> token_loss(const MatX<S>& logits, const TokenBatch& b);

// Per-cell sigmoid cross-entropy over masked positions.
template <typename S>
LossGrad<S> binary_loss(const MatX<S>& scores, const BinaryBatchT<S>& b);

// Analytic gradients for every tensor; grads must be a zeroed ParamSet of
// the same config. entropy_coeff, if given, is an [n_layers, n_heads]
// matrix of d(penalty)/d(mean head entropy) terms to inject through the
// attention softmax (see batch_entropy for the row convention).
template <typename S>
void backward(const ParamSetT<S>& p, const TokenBatch& b, const ForwardCacheT<S>& cache,
              const MatX<S>& dout, ParamSetT<S>& grads,
              const MatD* entropy_coeff = nullptr);

template <typename S>
void backward(const ParamSetT<S>& p, const BinaryBatchT<S>& b, const ForwardCacheT<S>& cache,
              const MatX<S>& dout, ParamSetT<S>& grads,
              const MatD* entropy_coeff = nullptr);

// ---------------------------------------------------------------------------
// Attention maps and entropy
// ---------------------------------------------------------------------------

// Row-stochastic attention matrices for a batch, one [T,T] matrix per
// (layer, head, example), with a validity flag per query row. Rows at
// position 0 are never valid (their distribution is forced one-hot by
// causality); padding rows are invalid too.
struct AttnMaps {
  int n_layers = 0, n_heads = 0, batch = 0, seq_len = 0;
  std::vector<MatD> maps;                      // indexed [(l*H + h)*B + b]
  std::vector<std::vector<uint8_t>> row_valid;  // [B][T]

  MatD& at(int l, int h, int b) {
    return maps[static_cast<size_t>((l * n_heads + h) * batch + b)];
  }
  const MatD& at(int l, int h, int b) const {
    return maps[static_cast<size_t>((l * n_heads + h) * batch + b)];
  }
};

template <typename S>
AttnMaps extract_attn_maps(const ForwardCacheT<S>& cache, const std::vector<int>& n_pos,
                           const ModelConfig& cfg);

// Natural-log entropy per valid row, averaged within each example and then
// across examples; one value per (layer, head). Throws if a valid row is
// not stochastic within tolerance.
MatD attention_entropy(const AttnMaps& maps);

// Same quantity computed directly from a forward cache, averaged over all
// valid rows of the batch. Used by the entropy regularizer, whose gradient
// treats each head's mean entropy H as d(penalty)/dH * dH/dP with
// dH/dP_ij = (-ln P_ij - 1) / n_valid_rows.
template <typename S>
MatD batch_entropy(const ForwardCacheT<S>& cache, const std::vector<int>& n_pos,
                   const ModelConfig& cfg);

}  // namespace procseed

#include "procseed/model_impl.hpp"
