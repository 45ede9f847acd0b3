#pragma once

// Template bodies for model.hpp. Everything here is deterministic and
// single-threaded; float for training, double for gradient checking.

#include <algorithm>
#include <cstdio>

namespace procseed {

namespace detail {

inline std::string layer_name(int l, const char* suffix) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "layer%d.%s", l, suffix);
  return std::string(buf);
}

inline std::string head_name(int l, int h, const char* suffix) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "layer%d.attn.head%d.%s", l, h, suffix);
  return std::string(buf);
}

template <typename S>
constexpr S kLnEps = static_cast<S>(1e-5);

constexpr double kGeluC0 = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluC1 = 0.044715;

// y = (x - mean)/std * g + b, rowwise moments.
template <typename S>
void ln_forward(const MatX<S>& x, const MatX<S>& g, const MatX<S>& b, MatX<S>& y,
                Eigen::Matrix<S, Eigen::Dynamic, 1>& mean,
                Eigen::Matrix<S, Eigen::Dynamic, 1>& rstd) {
  const auto n = x.rows();
  const auto d = x.cols();
  y.resize(n, d);
  mean.resize(n);
  rstd.resize(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    S m = x.row(r).mean();
    auto xc = (x.row(r).array() - m).eval();
    S var = xc.square().sum() / static_cast<S>(d);
    S rs = S(1) / std::sqrt(var + kLnEps<S>);
    mean(r) = m;
    rstd(r) = rs;
    y.row(r).array() = xc * rs * g.row(0).array() + b.row(0).array();
  }
}

// Adds d(loss)/dx into dx; accumulates gain/bias gradients.
template <typename S>
void ln_backward(const MatX<S>& x, const Eigen::Matrix<S, Eigen::Dynamic, 1>& mean,
                 const Eigen::Matrix<S, Eigen::Dynamic, 1>& rstd, const MatX<S>& g,
                 const MatX<S>& dy, MatX<S>& dx, MatX<S>& dg, MatX<S>& db) {
  const auto n = x.rows();
  const auto d = x.cols();
  for (Eigen::Index r = 0; r < n; ++r) {
    auto xhat = ((x.row(r).array() - mean(r)) * rstd(r)).eval();
    dg.row(0).array() += dy.row(r).array() * xhat;
    db.row(0).array() += dy.row(r).array();
    auto dxh = (dy.row(r).array() * g.row(0).array()).eval();
    S m1 = dxh.sum() / static_cast<S>(d);
    S m2 = (dxh * xhat).sum() / static_cast<S>(d);
    dx.row(r).array() += rstd(r) * (dxh - m1 - xhat * m2);
  }
}

template <typename S>
void gelu_forward(const MatX<S>& f, MatX<S>& tanh_c, MatX<S>& act) {
  const S c0 = static_cast<S>(kGeluC0);
  const S c1 = static_cast<S>(kGeluC1);
  tanh_c = (c0 * (f.array() + c1 * f.array().cube())).tanh().matrix();
  act.array() = S(0.5) * f.array() * (S(1) + tanh_c.array());
}

template <typename S>
void gelu_backward(const MatX<S>& f, const MatX<S>& tanh_c, const MatX<S>& dact,
                   MatX<S>& df) {
  const S c0 = static_cast<S>(kGeluC0);
  const S c1 = static_cast<S>(kGeluC1);
  auto t = tanh_c.array();
  df.array() = dact.array() *
               (S(0.5) * (S(1) + t) +
                S(0.5) * f.array() * (S(1) - t.square()) * c0 *
                    (S(1) + S(3) * c1 * f.array().square()));
}

template <typename S>
void pack_attention(const ParamSetT<S>& p, int l, LayerCacheT<S>& lc) {
  const int d = p.config.d_model;
  const int hd = p.config.head_dim();
  lc.wq_cat.resize(d, d);
  lc.wk_cat.resize(d, d);
  lc.wv_cat.resize(d, d);
  lc.wo_cat.resize(d, d);
  lc.bq_cat.resize(1, d);
  lc.bk_cat.resize(1, d);
  lc.bv_cat.resize(1, d);
  for (int h = 0; h < p.config.n_heads; ++h) {
    lc.wq_cat.block(0, h * hd, d, hd) = p.at(head_name(l, h, "wq")).value;
    lc.wk_cat.block(0, h * hd, d, hd) = p.at(head_name(l, h, "wk")).value;
    lc.wv_cat.block(0, h * hd, d, hd) = p.at(head_name(l, h, "wv")).value;
    lc.wo_cat.block(h * hd, 0, hd, d) = p.at(head_name(l, h, "wo")).value;
    lc.bq_cat.block(0, h * hd, 1, hd) = p.at(head_name(l, h, "bq")).value;
    lc.bk_cat.block(0, h * hd, 1, hd) = p.at(head_name(l, h, "bk")).value;
    lc.bv_cat.block(0, h * hd, 1, hd) = p.at(head_name(l, h, "bv")).value;
  }
}

// Shared trunk: cache.xs[0] must hold the embedded input.
template <typename S>
void run_trunk(const ParamSetT<S>& p, ForwardCacheT<S>& cache) {
  const ModelConfig& cfg = p.config;
  const int B = cache.B, T = cache.T;
  const Eigen::Index N = static_cast<Eigen::Index>(B) * T;
  const int d = cfg.d_model, H = cfg.n_heads, hd = cfg.head_dim();
  const S alpha = S(1) / std::sqrt(static_cast<S>(hd));

  cache.layers.resize(static_cast<size_t>(cfg.n_layers));
  cache.xs.resize(static_cast<size_t>(cfg.n_layers) + 1);
  cache.scratch.resize(T, T);

  for (int l = 0; l < cfg.n_layers; ++l) {
    auto& lc = cache.layers[static_cast<size_t>(l)];
    const MatX<S>& x = cache.xs[static_cast<size_t>(l)];
    pack_attention(p, l, lc);

    ln_forward(x, p.at(layer_name(l, "ln1.g")).value, p.at(layer_name(l, "ln1.b")).value,
               lc.ln1, lc.ln1_mean, lc.ln1_rstd);

    lc.q.resize(N, d);
    lc.k.resize(N, d);
    lc.v.resize(N, d);
    lc.q.noalias() = lc.ln1 * lc.wq_cat;
    lc.q.rowwise() += lc.bq_cat.row(0);
    lc.k.noalias() = lc.ln1 * lc.wk_cat;
    lc.k.rowwise() += lc.bk_cat.row(0);
    lc.v.noalias() = lc.ln1 * lc.wv_cat;
    lc.v.rowwise() += lc.bv_cat.row(0);

    lc.probs.resize(static_cast<Eigen::Index>(B) * H * T, T);
    lc.att.resize(N, d);
    MatX<S>& st = cache.scratch;
    for (int b = 0; b < B; ++b) {
      for (int h = 0; h < H; ++h) {
        auto Q = lc.q.block(static_cast<Eigen::Index>(b) * T, h * hd, T, hd);
        auto K = lc.k.block(static_cast<Eigen::Index>(b) * T, h * hd, T, hd);
        auto V = lc.v.block(static_cast<Eigen::Index>(b) * T, h * hd, T, hd);
        st.noalias() = Q * K.transpose();
        st *= alpha;
        auto P = lc.probs.block(static_cast<Eigen::Index>(b * H + h) * T, 0, T, T);
        for (int i = 0; i < T; ++i) {
          auto seg = st.row(i).head(i + 1).array();
          S mx = seg.maxCoeff();
          auto e = (seg - mx).exp().eval();
          S sum = e.sum();
          P.row(i).head(i + 1).array() = e / sum;
          if (i + 1 < T) P.row(i).tail(T - i - 1).setZero();
        }
        lc.att.block(static_cast<Eigen::Index>(b) * T, h * hd, T, hd).noalias() = P * V;
      }
    }

    lc.x_mid.resize(N, d);
    lc.x_mid.noalias() = lc.att * lc.wo_cat;
    lc.x_mid.rowwise() += p.at(layer_name(l, "attn.bo")).value.row(0);
    lc.x_mid += x;

    ln_forward(lc.x_mid, p.at(layer_name(l, "ln2.g")).value,
               p.at(layer_name(l, "ln2.b")).value, lc.ln2, lc.ln2_mean, lc.ln2_rstd);

    lc.fc.resize(N, 4 * d);
    lc.fc.noalias() = lc.ln2 * p.at(layer_name(l, "mlp.wfc")).value;
    lc.fc.rowwise() += p.at(layer_name(l, "mlp.bfc")).value.row(0);
    gelu_forward(lc.fc, lc.tanh_c, lc.act);

    MatX<S>& xn = cache.xs[static_cast<size_t>(l) + 1];
    xn.resize(N, d);
    xn.noalias() = lc.act * p.at(layer_name(l, "mlp.wproj")).value;
    xn.rowwise() += p.at(layer_name(l, "mlp.bproj")).value.row(0);
    xn += lc.x_mid;
  }

  ln_forward(cache.xs[static_cast<size_t>(cfg.n_layers)], p.at("final_ln.g").value,
             p.at("final_ln.b").value, cache.lnf, cache.lnf_mean, cache.lnf_rstd);

  if (cfg.io_variant == IoVariant::kToken) {
    cache.out.resize(N, cfg.vocab_size);
    cache.out.noalias() = cache.lnf * p.at("head.out").value;
  } else {
    cache.out.resize(N, cfg.binary_width);
    cache.out.noalias() = cache.lnf * p.at("head.out_proj").value;
    cache.out.rowwise() += p.at("head.out_bias").value.row(0);
  }
}

// Mirror of run_trunk. On return dx holds d(loss)/d(xs[0]).
template <typename S>
void trunk_backward(const ParamSetT<S>& p, const ForwardCacheT<S>& cache,
                    const MatX<S>& dout, ParamSetT<S>& grads, const MatD* entropy_coeff,
                    const std::vector<int>& n_pos, MatX<S>& dx) {
  const ModelConfig& cfg = p.config;
  const int B = cache.B, T = cache.T;
  const Eigen::Index N = static_cast<Eigen::Index>(B) * T;
  const int d = cfg.d_model, H = cfg.n_heads, hd = cfg.head_dim();
  const S alpha = S(1) / std::sqrt(static_cast<S>(hd));

  int64_t n_valid = 0;
  for (int b = 0; b < B; ++b) n_valid += std::max(0, n_pos[static_cast<size_t>(b)] - 1);

  dx.resize(N, d);
  dx.setZero();

  MatX<S> dlnf(N, d);
  if (cfg.io_variant == IoVariant::kToken) {
    grads.at("head.out").value.noalias() += cache.lnf.transpose() * dout;
    dlnf.noalias() = dout * p.at("head.out").value.transpose();
  } else {
    grads.at("head.out_proj").value.noalias() += cache.lnf.transpose() * dout;
    grads.at("head.out_bias").value.row(0) += dout.colwise().sum();
    dlnf.noalias() = dout * p.at("head.out_proj").value.transpose();
  }
  ln_backward(cache.xs[static_cast<size_t>(cfg.n_layers)], cache.lnf_mean, cache.lnf_rstd,
              p.at("final_ln.g").value, dlnf, dx, grads.at("final_ln.g").value,
              grads.at("final_ln.b").value);

  MatX<S> dact(N, 4 * d), dfc(N, 4 * d), dln2(N, d), datt(N, d), dq(N, d), dk(N, d),
      dv(N, d), da(N, d);
  MatX<S> dp(T, T);

  for (int l = cfg.n_layers - 1; l >= 0; --l) {
    const auto& lc = cache.layers[static_cast<size_t>(l)];
    const MatX<S>& x = cache.xs[static_cast<size_t>(l)];

    // dx holds the gradient at xs[l+1] = x_mid + mlp(ln2(x_mid)).
    dact.noalias() = dx * p.at(layer_name(l, "mlp.wproj")).value.transpose();
    grads.at(layer_name(l, "mlp.wproj")).value.noalias() += lc.act.transpose() * dx;
    grads.at(layer_name(l, "mlp.bproj")).value.row(0) += dx.colwise().sum();
    gelu_backward(lc.fc, lc.tanh_c, dact, dfc);
    grads.at(layer_name(l, "mlp.wfc")).value.noalias() += lc.ln2.transpose() * dfc;
    grads.at(layer_name(l, "mlp.bfc")).value.row(0) += dfc.colwise().sum();
    dln2.noalias() = dfc * p.at(layer_name(l, "mlp.wfc")).value.transpose();
    ln_backward(lc.x_mid, lc.ln2_mean, lc.ln2_rstd, p.at(layer_name(l, "ln2.g")).value,
                dln2, dx, grads.at(layer_name(l, "ln2.g")).value,
                grads.at(layer_name(l, "ln2.b")).value);

    // dx now holds the gradient at x_mid = x + attn(ln1(x)).
    datt.noalias() = dx * lc.wo_cat.transpose();
    grads.at(layer_name(l, "attn.bo")).value.row(0) += dx.colwise().sum();
    for (int h = 0; h < H; ++h) {
      grads.at(head_name(l, h, "wo")).value.noalias() +=
          lc.att.middleCols(h * hd, hd).transpose() * dx;
    }

    dq.setZero();
    dk.setZero();
    dv.setZero();
    for (int b = 0; b < B; ++b) {
      for (int h = 0; h < H; ++h) {
        auto Q = lc.q.block(static_cast<Eigen::Index>(b) * T, h * hd, T, hd);
        auto K = lc.k.block(static_cast<Eigen::Index>(b) * T, h * hd, T, hd);
        auto V = lc.v.block(static_cast<Eigen::Index>(b) * T, h * hd, T, hd);
        auto P = lc.probs.block(static_cast<Eigen::Index>(b * H + h) * T, 0, T, T);
        auto dO = datt.block(static_cast<Eigen::Index>(b) * T, h * hd, T, hd);

        dv.block(static_cast<Eigen::Index>(b) * T, h * hd, T, hd).noalias() +=
            P.transpose() * dO;
        dp.noalias() = dO * V.transpose();

        if (entropy_coeff != nullptr && n_valid > 0) {
          double c = (*entropy_coeff)(l, h);
          if (c != 0.0) {
            S scale = static_cast<S>(c / static_cast<double>(n_valid));
            int limit = std::min(T, n_pos[static_cast<size_t>(b)]);
            for (int i = 1; i < limit; ++i) {
              for (int j = 0; j <= i; ++j) {
                S pv = std::max(P(i, j), static_cast<S>(1e-30));
                dp(i, j) += scale * (-std::log(pv) - S(1));
              }
            }
          }
        }

        for (int i = 0; i < T; ++i) {
          auto prow = P.row(i).head(i + 1).array();
          auto dprow = dp.row(i).head(i + 1).array();
          S srow = (prow * dprow).sum();
          dp.row(i).head(i + 1).array() = alpha * prow * (dprow - srow);
          if (i + 1 < T) dp.row(i).tail(T - i - 1).setZero();
        }
        dq.block(static_cast<Eigen::Index>(b) * T, h * hd, T, hd).noalias() += dp * K;
        dk.block(static_cast<Eigen::Index>(b) * T, h * hd, T, hd).noalias() +=
            dp.transpose() * Q;
      }
    }

    da.noalias() = dq * lc.wq_cat.transpose();
    da.noalias() += dk * lc.wk_cat.transpose();
    da.noalias() += dv * lc.wv_cat.transpose();
    for (int h = 0; h < H; ++h) {
      grads.at(head_name(l, h, "wq")).value.noalias() +=
          lc.ln1.transpose() * dq.middleCols(h * hd, hd);
      grads.at(head_name(l, h, "wk")).value.noalias() +=
          lc.ln1.transpose() * dk.middleCols(h * hd, hd);
      grads.at(head_name(l, h, "wv")).value.noalias() +=
          lc.ln1.transpose() * dv.middleCols(h * hd, hd);
      grads.at(head_name(l, h, "bq")).value.row(0) +=
          dq.middleCols(h * hd, hd).colwise().sum();
      grads.at(head_name(l, h, "bk")).value.row(0) +=
          dk.middleCols(h * hd, hd).colwise().sum();
      grads.at(head_name(l, h, "bv")).value.row(0) +=
          dv.middleCols(h * hd, hd).colwise().sum();
    }
    ln_backward(x, lc.ln1_mean, lc.ln1_rstd, p.at(layer_name(l, "ln1.g")).value, da, dx,
                grads.at(layer_name(l, "ln1.g")).value,
                grads.at(layer_name(l, "ln1.b")).value);
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------

template <typename S>
ParamSetT<S> init_params(const ModelConfig& cfg, uint64_t seed) {
  validate(cfg);
  ParamSetT<S> p;
  p.config = cfg;
  p.provenance = nlohmann::json{{"origin", "fresh_init"}, {"seed", seed}};
  Rng rng(derive_seed(seed, "init"));

  auto gauss = [&](Eigen::Index r, Eigen::Index c) {
    MatX<S> m(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
      for (Eigen::Index j = 0; j < c; ++j)
        m(i, j) = static_cast<S>(rng.gaussian(0.0, 0.02));
    return m;
  };
  auto zeros = [](Eigen::Index r, Eigen::Index c) { return MatX<S>::Zero(r, c).eval(); };
  auto ones = [](Eigen::Index r, Eigen::Index c) { return MatX<S>::Ones(r, c).eval(); };
  auto push = [&](const std::string& name, Component comp, int layer, int head,
                  MatX<S> value) {
    p.tensors.push_back(TensorT<S>{name, comp, layer, head, std::move(value)});
  };

  const int d = cfg.d_model, hd = cfg.head_dim();
  if (cfg.io_variant == IoVariant::kToken) {
    push("embed.tok", Component::kEmbedding, -1, -1, gauss(cfg.vocab_size, d));
  } else {
    push("embed.in_proj", Component::kEmbedding, -1, -1, gauss(cfg.binary_width, d));
    push("embed.in_bias", Component::kEmbedding, -1, -1, zeros(1, d));
  }
  push("embed.pos", Component::kPositional, -1, -1, gauss(cfg.max_seq_len, d));
  for (int l = 0; l < cfg.n_layers; ++l) {
    push(detail::layer_name(l, "ln1.g"), Component::kNorm, l, -1, ones(1, d));
    push(detail::layer_name(l, "ln1.b"), Component::kNorm, l, -1, zeros(1, d));
    for (int h = 0; h < cfg.n_heads; ++h) {
      push(detail::head_name(l, h, "wq"), Component::kAttention, l, h, gauss(d, hd));
      push(detail::head_name(l, h, "bq"), Component::kAttention, l, h, zeros(1, hd));
      push(detail::head_name(l, h, "wk"), Component::kAttention, l, h, gauss(d, hd));
      push(detail::head_name(l, h, "bk"), Component::kAttention, l, h, zeros(1, hd));
      push(detail::head_name(l, h, "wv"), Component::kAttention, l, h, gauss(d, hd));
      push(detail::head_name(l, h, "bv"), Component::kAttention, l, h, zeros(1, hd));
      push(detail::head_name(l, h, "wo"), Component::kAttention, l, h, gauss(hd, d));
    }
    push(detail::layer_name(l, "attn.bo"), Component::kAttention, l, -1, zeros(1, d));
    push(detail::layer_name(l, "ln2.g"), Component::kNorm, l, -1, ones(1, d));
    push(detail::layer_name(l, "ln2.b"), Component::kNorm, l, -1, zeros(1, d));
    push(detail::layer_name(l, "mlp.wfc"), Component::kMlp, l, -1, gauss(d, 4 * d));
    push(detail::layer_name(l, "mlp.bfc"), Component::kMlp, l, -1, zeros(1, 4 * d));
    push(detail::layer_name(l, "mlp.wproj"), Component::kMlp, l, -1, gauss(4 * d, d));
    push(detail::layer_name(l, "mlp.bproj"), Component::kMlp, l, -1, zeros(1, d));
  }
  push("final_ln.g", Component::kNorm, -1, -1, ones(1, d));
  push("final_ln.b", Component::kNorm, -1, -1, zeros(1, d));
  if (cfg.io_variant == IoVariant::kToken) {
    push("head.out", Component::kHead, -1, -1, gauss(d, cfg.vocab_size));
  } else {
    push("head.out_proj", Component::kHead, -1, -1, gauss(d, cfg.binary_width));
    push("head.out_bias", Component::kHead, -1, -1, zeros(1, cfg.binary_width));
  }
  return p;
}

template <typename S>
BinaryBatchT<S> make_binary_batch(const std::vector<ProcSample>& samples, int width) {
  if (samples.empty()) throw ConfigError("empty batch");
  if (width < 1) throw ConfigError("state width must be positive");
  int max_rows = 0;
  for (const auto& s : samples) {
    if (s.size() % static_cast<size_t>(width) != 0)
      throw ConfigError("sample length is not a multiple of the state width");
    int rows = static_cast<int>(s.size()) / width;
    if (rows < 2) throw ConfigError("sample too short to predict anything");
    max_rows = std::max(max_rows, rows);
  }
  BinaryBatchT<S> b;
  b.batch_size = static_cast<int>(samples.size());
  b.seq_len_ = max_rows - 1;
  const Eigen::Index N = static_cast<Eigen::Index>(b.batch_size) * b.seq_len_;
  b.input = MatX<S>::Zero(N, width);
  b.target = MatX<S>::Zero(N, width);
  b.mask.resize(b.batch_size, b.seq_len_);
  b.mask.setZero();
  b.n_pos.resize(static_cast<size_t>(b.batch_size));
  for (int i = 0; i < b.batch_size; ++i) {
    const auto& s = samples[static_cast<size_t>(i)];
    const int rows = static_cast<int>(s.size()) / width;
    const int n = rows - 1;
    b.n_pos[static_cast<size_t>(i)] = n;
    b.token_count += static_cast<int64_t>(s.size());
    for (int t = 0; t < n; ++t) {
      const Eigen::Index r = static_cast<Eigen::Index>(i) * b.seq_len_ + t;
      for (int j = 0; j < width; ++j) {
        b.input(r, j) = static_cast<S>(s.tokens[static_cast<size_t>(t * width + j)]);
        b.target(r, j) = static_cast<S>(s.tokens[static_cast<size_t>((t + 1) * width + j)]);
      }
      b.mask(i, t) = s.loss_mask[static_cast<size_t>((t + 1) * width)];
    }
  }
  return b;
}

template <typename S>
Eigen::Matrix<S, 1, Eigen::Dynamic> mean_embedding(const ParamSetT<S>& p) {
  const MatX<S>& e = p.config.io_variant == IoVariant::kToken
                         ? p.at("embed.tok").value
                         : p.at("embed.in_proj").value;
  return e.colwise().mean();
}

template <typename S>
void forward(const ParamSetT<S>& p, const TokenBatch& b, ForwardCacheT<S>& cache) {
  const ModelConfig& cfg = p.config;
  if (cfg.io_variant != IoVariant::kToken) throw ConfigError("token batch on binary model");
  if (b.seq_len() > cfg.max_seq_len) throw ConfigError("sequence exceeds max_seq_len");
  cache.B = b.batch();
  cache.T = b.seq_len();
  const Eigen::Index N = static_cast<Eigen::Index>(cache.B) * cache.T;
  const auto& we = p.at("embed.tok").value;
  const auto& wp = p.at("embed.pos").value;
  cache.xs.resize(static_cast<size_t>(cfg.n_layers) + 1);
  MatX<S>& emb = cache.xs[0];
  emb.resize(N, cfg.d_model);
  for (int bb = 0; bb < cache.B; ++bb) {
    for (int t = 0; t < cache.T; ++t) {
      int32_t id = b.input(bb, t);
      if (id < 0 || id >= cfg.vocab_size) throw ConfigError("token id out of range");
      emb.row(static_cast<Eigen::Index>(bb) * cache.T + t) = we.row(id) + wp.row(t);
    }
  }
  detail::run_trunk(p, cache);
}

template <typename S>
void forward(const ParamSetT<S>& p, const BinaryBatchT<S>& b, ForwardCacheT<S>& cache) {
  const ModelConfig& cfg = p.config;
  if (cfg.io_variant != IoVariant::kBinary) throw ConfigError("binary batch on token model");
  if (b.seq_len() > cfg.max_seq_len) throw ConfigError("sequence exceeds max_seq_len");
  if (b.input.cols() != cfg.binary_width) throw ConfigError("state width mismatch");
  for (Eigen::Index i = 0; i < b.input.size(); ++i) {
    S v = b.input.data()[i];
    if (v != S(0) && v != S(1)) throw ConfigError("binary input must be 0/1");
  }
  cache.B = b.batch();
  cache.T = b.seq_len();
  const Eigen::Index N = static_cast<Eigen::Index>(cache.B) * cache.T;
  cache.xs.resize(static_cast<size_t>(cfg.n_layers) + 1);
  MatX<S>& emb = cache.xs[0];
  emb.resize(N, cfg.d_model);
  emb.noalias() = b.input * p.at("embed.in_proj").value;
  emb.rowwise() += p.at("embed.in_bias").value.row(0);
  const auto& wp = p.at("embed.pos").value;
  for (int bb = 0; bb < cache.B; ++bb)
    for (int t = 0; t < cache.T; ++t)
      emb.row(static_cast<Eigen::Index>(bb) * cache.T + t) += wp.row(t);
  detail::run_trunk(p, cache);
}

template <typename S>
LossGrad<S> token_loss(const MatX<S>& logits, const TokenBatch& b) {
  LossGrad<S> r;
  const int B = b.batch(), T = b.seq_len();
  const auto V = logits.cols();
  r.dout.resize(logits.rows(), V);
  r.dout.setZero();
  r.sample_all_correct.assign(static_cast<size_t>(B), 1);
  double loss_sum = 0.0;
  for (int bb = 0; bb < B; ++bb) {
    for (int t = 0; t < T; ++t) {
      if (!b.mask(bb, t)) continue;
      ++r.count;
    }
  }
  if (r.count == 0) throw ConfigError("loss mask selects no positions");
  const S inv = S(1) / static_cast<S>(r.count);
  for (int bb = 0; bb < B; ++bb) {
    bool all_ok = true;
    for (int t = 0; t < T; ++t) {
      if (!b.mask(bb, t)) continue;
      const Eigen::Index row = static_cast<Eigen::Index>(bb) * T + t;
      int32_t tgt = b.target(bb, t);
      auto lrow = logits.row(row).array();
      S mx = lrow.maxCoeff();
      double lse = std::log(static_cast<double>((lrow - mx).exp().sum())) +
                   static_cast<double>(mx);
      loss_sum += lse - static_cast<double>(logits(row, tgt));
      r.dout.row(row).array() = (lrow - static_cast<S>(lse)).exp() * inv;
      r.dout(row, tgt) -= inv;
      Eigen::Index arg;
      lrow.maxCoeff(&arg);
      bool hit = static_cast<int32_t>(arg) == tgt;
      r.correct += hit;
      all_ok = all_ok && hit;
      ++r.pred_total;
    }
    r.sample_all_correct[static_cast<size_t>(bb)] = all_ok ? 1 : 0;
  }
  r.loss_sum = loss_sum;
  r.loss = loss_sum / static_cast<double>(r.count);
  return r;
}

template <typename S>
LossGrad<S> binary_loss(const MatX<S>& scores, const BinaryBatchT<S>& b) {
  LossGrad<S> r;
  const int B = b.batch(), T = b.seq_len();
  const auto W = scores.cols();
  r.dout.resize(scores.rows(), W);
  r.dout.setZero();
  r.sample_all_correct.assign(static_cast<size_t>(B), 1);
  for (int bb = 0; bb < B; ++bb)
    for (int t = 0; t < T; ++t)
      if (b.mask(bb, t)) ++r.count;
  if (r.count == 0) throw ConfigError("loss mask selects no positions");
  const double denom = static_cast<double>(r.count) * static_cast<double>(W);
  const S inv = static_cast<S>(1.0 / denom);
  double loss_sum = 0.0;
  for (int bb = 0; bb < B; ++bb) {
    bool all_ok = true;
    for (int t = 0; t < T; ++t) {
      if (!b.mask(bb, t)) continue;
      const Eigen::Index row = static_cast<Eigen::Index>(bb) * T + t;
      for (Eigen::Index j = 0; j < W; ++j) {
        S s = scores(row, j);
        S tv = b.target(row, j);
        double sd = static_cast<double>(s);
        loss_sum += std::max(sd, 0.0) - sd * static_cast<double>(tv) +
                    std::log1p(std::exp(-std::abs(sd)));
        S sig = S(1) / (S(1) + std::exp(-s));
        r.dout(row, j) = (sig - tv) * inv;
        bool hit = (s > S(0)) == (tv > S(0.5));
        r.correct += hit;
        all_ok = all_ok && hit;
        ++r.pred_total;
      }
    }
    r.sample_all_correct[static_cast<size_t>(bb)] = all_ok ? 1 : 0;
  }
  r.loss_sum = loss_sum;
  r.loss = loss_sum / denom;
  return r;
}

template <typename S>
void backward(const ParamSetT<S>& p, const TokenBatch& b, const ForwardCacheT<S>& cache,
              const MatX<S>& dout, ParamSetT<S>& grads, const MatD* entropy_coeff) {
  MatX<S> dx;
  detail::trunk_backward(p, cache, dout, grads, entropy_coeff, b.n_pos, dx);
  auto& dwe = grads.at("embed.tok").value;
  auto& dwp = grads.at("embed.pos").value;
  for (int bb = 0; bb < cache.B; ++bb) {
    for (int t = 0; t < cache.T; ++t) {
      const Eigen::Index row = static_cast<Eigen::Index>(bb) * cache.T + t;
      dwe.row(b.input(bb, t)) += dx.row(row);
      dwp.row(t) += dx.row(row);
    }
  }
}

template <typename S>
void backward(const ParamSetT<S>& p, const BinaryBatchT<S>& b, const ForwardCacheT<S>& cache,
              const MatX<S>& dout, ParamSetT<S>& grads, const MatD* entropy_coeff) {
  MatX<S> dx;
  detail::trunk_backward(p, cache, dout, grads, entropy_coeff, b.n_pos, dx);
  grads.at("embed.in_proj").value.noalias() += b.input.transpose() * dx;
  grads.at("embed.in_bias").value.row(0) += dx.colwise().sum();
  auto& dwp = grads.at("embed.pos").value;
  for (int bb = 0; bb < cache.B; ++bb)
    for (int t = 0; t < cache.T; ++t)
      dwp.row(t) += dx.row(static_cast<Eigen::Index>(bb) * cache.T + t);
}

template <typename S>
AttnMaps extract_attn_maps(const ForwardCacheT<S>& cache, const std::vector<int>& n_pos,
                           const ModelConfig& cfg) {
  AttnMaps m;
  m.n_layers = cfg.n_layers;
  m.n_heads = cfg.n_heads;
  m.batch = cache.B;
  m.seq_len = cache.T;
  m.maps.resize(static_cast<size_t>(cfg.n_layers) * cfg.n_heads * cache.B);
  m.row_valid.assign(static_cast<size_t>(cache.B),
                     std::vector<uint8_t>(static_cast<size_t>(cache.T), 0));
  for (int b = 0; b < cache.B; ++b)
    for (int t = 1; t < std::min(cache.T, n_pos[static_cast<size_t>(b)]); ++t)
      m.row_valid[static_cast<size_t>(b)][static_cast<size_t>(t)] = 1;
  for (int l = 0; l < cfg.n_layers; ++l)
    for (int h = 0; h < cfg.n_heads; ++h)
      for (int b = 0; b < cache.B; ++b)
        m.at(l, h, b) = cache.layers[static_cast<size_t>(l)]
                            .probs
                            .block(static_cast<Eigen::Index>(b * cfg.n_heads + h) * cache.T,
                                   0, cache.T, cache.T)
                            .template cast<double>();
  return m;
}

template <typename S>
MatD batch_entropy(const ForwardCacheT<S>& cache, const std::vector<int>& n_pos,
                   const ModelConfig& cfg) {
  MatD out = MatD::Zero(cfg.n_layers, cfg.n_heads);
  int64_t n_valid = 0;
  for (int b = 0; b < cache.B; ++b)
    n_valid += std::max(0, std::min(cache.T, n_pos[static_cast<size_t>(b)]) - 1);
  if (n_valid == 0) return out;
  for (int l = 0; l < cfg.n_layers; ++l) {
    const auto& probs = cache.layers[static_cast<size_t>(l)].probs;
    for (int h = 0; h < cfg.n_heads; ++h) {
      double acc = 0.0;
      for (int b = 0; b < cache.B; ++b) {
        int limit = std::min(cache.T, n_pos[static_cast<size_t>(b)]);
        const Eigen::Index base = static_cast<Eigen::Index>(b * cfg.n_heads + h) * cache.T;
        for (int i = 1; i < limit; ++i) {
          double hrow = 0.0;
          for (int j = 0; j <= i; ++j) {
            double pv = static_cast<double>(probs(base + i, j));
            if (pv > 0.0) hrow -= pv * std::log(pv);
          }
          acc += hrow;
        }
      }
      out(l, h) = acc / static_cast<double>(n_valid);
    }
  }
  return out;
}

}  // namespace procseed
