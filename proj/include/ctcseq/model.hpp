// ctcseq/model.hpp — bidirectional tanh-recurrent acoustic model with manual
// backpropagation through time, plus binary (de)serialization.
//
// Layout: linear input projection F->H, then L bidirectional layers whose
// direction states are summed between layers; the top layer's two direction
// states are concatenated (2H) into the output projection, and each output
// row is log-softmax normalized.
#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "ctcseq/common.hpp"
#include "ctcseq/ctc.hpp"
#include "ctcseq/logsumexp.hpp"
#include "ctcseq/matrix.hpp"
#include "ctcseq/tokenize.hpp"

namespace ctcseq {

struct RnnDirection {
  Matrix w_in;   // H x H
  Matrix w_rec;  // H x H
  std::vector<double> bias;  // H
};

struct RnnLayer {
  RnnDirection fwd, bwd;
};

struct ModelParams {
  Matrix in_proj;               // F x H
  std::vector<double> in_bias;  // H
  std::vector<RnnLayer> layers;
  Matrix out_proj;               // 2H x (V+1)
  std::vector<double> out_bias;  // V+1

  std::size_t feat_dim() const { return in_proj.rows; }
  std::size_t hidden() const { return in_proj.cols; }
  std::size_t depth() const { return layers.size(); }
  std::size_t num_classes() const { return out_bias.size(); }  // V+1
};

// Fixed tensor traversal order; serialization and the optimizer rely on it.
template <typename Params, typename Fn>
void for_each_tensor(Params& p, Fn&& fn) {
  fn(p.in_proj.data);
  fn(p.in_bias);
  for (auto& layer : p.layers) {
    fn(layer.fwd.w_in.data);
    fn(layer.fwd.w_rec.data);
    fn(layer.fwd.bias);
    fn(layer.bwd.w_in.data);
    fn(layer.bwd.w_rec.data);
    fn(layer.bwd.bias);
  }
  fn(p.out_proj.data);
  fn(p.out_bias);
}

inline ModelParams make_model_shape(std::size_t feat_dim, std::size_t hidden,
                                    std::size_t depth, std::size_t vocab_size) {
  if (depth < 1 || depth > 6)
    throw invalid_argument_error("model depth must be in [1, 6], got " +
                                 std::to_string(depth));
  if (hidden == 0 || feat_dim == 0 || vocab_size == 0)
    throw invalid_argument_error("model dimensions must be positive");
  ModelParams p;
  p.in_proj = Matrix(feat_dim, hidden);
  p.in_bias.assign(hidden, 0.0);
  p.layers.resize(depth);
  for (auto& layer : p.layers) {
    for (RnnDirection* d : {&layer.fwd, &layer.bwd}) {
      d->w_in = Matrix(hidden, hidden);
      d->w_rec = Matrix(hidden, hidden);
      d->bias.assign(hidden, 0.0);
    }
  }
  p.out_proj = Matrix(2 * hidden, vocab_size + 1);
  p.out_bias.assign(vocab_size + 1, 0.0);
  return p;
}

inline ModelParams init_model(std::size_t feat_dim, std::size_t hidden,
                              std::size_t depth, std::size_t vocab_size, Rng& rng,
                              double init_scale = 0.08) {
  ModelParams p = make_model_shape(feat_dim, hidden, depth, vocab_size);
  for_each_tensor(p, [&](std::vector<double>& v) {
    for (double& x : v) x = rng.uniform(-init_scale, init_scale);
  });
  return p;
}

inline ModelParams zeros_like_params(const ModelParams& p) {
  return make_model_shape(p.feat_dim(), p.hidden(), p.depth(), p.num_classes() - 1);
}

struct ForwardCache {
  Matrix input;                       // T x F
  std::vector<Matrix> layer_inputs;   // L entries, each T x H
  std::vector<Matrix> states_fwd;     // L entries, each T x H
  std::vector<Matrix> states_bwd;     // L entries, each T x H
};

inline LogProbLattice forward(const ModelParams& params, const Matrix& feat,
                              ForwardCache* cache = nullptr) {
  if (feat.cols != params.feat_dim())
    throw shape_error("feature dimension " + std::to_string(feat.cols) +
                      " does not match model input " +
                      std::to_string(params.feat_dim()));
  const std::size_t T = feat.rows;
  const std::size_t H = params.hidden();
  const std::size_t C = params.num_classes();

  if (cache) {
    cache->input = feat;
    cache->layer_inputs.clear();
    cache->states_fwd.clear();
    cache->states_bwd.clear();
  }

  Matrix x(T, H);
  for (std::size_t t = 0; t < T; ++t) {
    double* row = x.row(t);
    for (std::size_t j = 0; j < H; ++j) row[j] = params.in_bias[j];
    add_vecmat(feat.row(t), params.in_proj, row);
  }

  Matrix top_fwd, top_bwd;
  for (std::size_t l = 0; l < params.depth(); ++l) {
    const RnnLayer& layer = params.layers[l];
    if (cache) cache->layer_inputs.push_back(x);
    Matrix hf(T, H), hb(T, H);
    std::vector<double> z(H);
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t j = 0; j < H; ++j) z[j] = layer.fwd.bias[j];
      add_vecmat(x.row(t), layer.fwd.w_in, z.data());
      if (t > 0) add_vecmat(hf.row(t - 1), layer.fwd.w_rec, z.data());
      double* h = hf.row(t);
      for (std::size_t j = 0; j < H; ++j) h[j] = std::tanh(z[j]);
    }
    for (std::size_t t = T; t-- > 0;) {
      for (std::size_t j = 0; j < H; ++j) z[j] = layer.bwd.bias[j];
      add_vecmat(x.row(t), layer.bwd.w_in, z.data());
      if (t + 1 < T) add_vecmat(hb.row(t + 1), layer.bwd.w_rec, z.data());
      double* h = hb.row(t);
      for (std::size_t j = 0; j < H; ++j) h[j] = std::tanh(z[j]);
    }
    if (l + 1 < params.depth()) {
      Matrix next(T, H);
      for (std::size_t i = 0; i < next.data.size(); ++i)
        next.data[i] = hf.data[i] + hb.data[i];
      x = std::move(next);
    }
    if (cache) {
      cache->states_fwd.push_back(hf);
      cache->states_bwd.push_back(hb);
    }
    if (l + 1 == params.depth()) {
      top_fwd = std::move(hf);
      top_bwd = std::move(hb);
    }
  }

  LogProbLattice lattice;
  lattice.log_probs = Matrix(T, C);
  std::vector<double> concat(2 * H);
  for (std::size_t t = 0; t < T; ++t) {
    std::memcpy(concat.data(), top_fwd.row(t), H * sizeof(double));
    std::memcpy(concat.data() + H, top_bwd.row(t), H * sizeof(double));
    double* row = lattice.log_probs.row(t);
    for (std::size_t k = 0; k < C; ++k) row[k] = params.out_bias[k];
    add_vecmat(concat.data(), params.out_proj, row);
    double lse = log_sum_exp(std::span<const double>(row, C));
    for (std::size_t k = 0; k < C; ++k) row[k] -= lse;
  }
  return lattice;
}

// Backpropagation through the recurrences given d loss / d score. The cache
// must come from a forward() call on the same parameters and features.
inline ModelParams backprop(const ModelParams& params, const ForwardCache& cache,
                            const Matrix& dscores) {
  const std::size_t T = cache.input.rows;
  const std::size_t H = params.hidden();
  const std::size_t L = params.depth();
  ModelParams grads = zeros_like_params(params);

  // output projection
  Matrix dh_fwd(T, H), dh_bwd(T, H);
  std::vector<double> concat(2 * H), dconcat(2 * H);
  for (std::size_t t = 0; t < T; ++t) {
    std::memcpy(concat.data(), cache.states_fwd[L - 1].row(t), H * sizeof(double));
    std::memcpy(concat.data() + H, cache.states_bwd[L - 1].row(t), H * sizeof(double));
    const double* g = dscores.row(t);
    for (std::size_t k = 0; k < params.num_classes(); ++k) grads.out_bias[k] += g[k];
    add_outer(concat.data(), g, grads.out_proj);
    std::fill(dconcat.begin(), dconcat.end(), 0.0);
    add_matvec_t(params.out_proj, g, dconcat.data());
    std::memcpy(dh_fwd.row(t), dconcat.data(), H * sizeof(double));
    std::memcpy(dh_bwd.row(t), dconcat.data() + H, H * sizeof(double));
  }

  for (std::size_t l = L; l-- > 0;) {
    const RnnLayer& layer = params.layers[l];
    RnnLayer& glayer = grads.layers[l];
    const Matrix& x = cache.layer_inputs[l];
    Matrix dx(T, H);

    // forward direction: h_t = tanh(x_t W_in + h_{t-1} W_rec + b)
    {
      const Matrix& h = cache.states_fwd[l];
      std::vector<double> delta(H), carry(H, 0.0), e(H);
      for (std::size_t t = T; t-- > 0;) {
        const double* ht = h.row(t);
        for (std::size_t j = 0; j < H; ++j) {
          e[j] = dh_fwd(t, j) + carry[j];
          delta[j] = e[j] * (1.0 - ht[j] * ht[j]);
        }
        for (std::size_t j = 0; j < H; ++j) glayer.fwd.bias[j] += delta[j];
        add_outer(x.row(t), delta.data(), glayer.fwd.w_in);
        if (t > 0) add_outer(h.row(t - 1), delta.data(), glayer.fwd.w_rec);
        add_matvec_t(layer.fwd.w_in, delta.data(), dx.row(t));
        std::fill(carry.begin(), carry.end(), 0.0);
        add_matvec_t(layer.fwd.w_rec, delta.data(), carry.data());
      }
    }
    // backward direction: h_t = tanh(x_t W_in + h_{t+1} W_rec + b)
    {
      const Matrix& h = cache.states_bwd[l];
      std::vector<double> delta(H), carry(H, 0.0), e(H);
      for (std::size_t t = 0; t < T; ++t) {
        const double* ht = h.row(t);
        for (std::size_t j = 0; j < H; ++j) {
          e[j] = dh_bwd(t, j) + carry[j];
          delta[j] = e[j] * (1.0 - ht[j] * ht[j]);
        }
        for (std::size_t j = 0; j < H; ++j) glayer.bwd.bias[j] += delta[j];
        add_outer(x.row(t), delta.data(), glayer.bwd.w_in);
        if (t + 1 < T) add_outer(h.row(t + 1), delta.data(), glayer.bwd.w_rec);
        add_matvec_t(layer.bwd.w_in, delta.data(), dx.row(t));
        std::fill(carry.begin(), carry.end(), 0.0);
        add_matvec_t(layer.bwd.w_rec, delta.data(), carry.data());
      }
    }

    if (l > 0) {
      // the summed direction states of the layer below received dx equally
      dh_fwd = dx;
      dh_bwd = dx;
    } else {
      for (std::size_t t = 0; t < T; ++t) {
        const double* g = dx.row(t);
        for (std::size_t j = 0; j < H; ++j) grads.in_bias[j] += g[j];
        add_outer(cache.input.row(t), g, grads.in_proj);
      }
    }
  }
  return grads;
}

struct BackwardResult {
  ModelParams grads;
  double loss = 0.0;
  bool feasible = true;  // false signals "skip this pair", not an error
};

// Full training-step gradient: forward, CTC loss, backprop. An infeasible
// (features, labels) pair returns feasible=false instead of throwing.
inline BackwardResult backward(const ModelParams& params, const Matrix& feat,
                               const LabelSequence& labels) {
  BackwardResult out;
  ForwardCache cache;
  LogProbLattice lattice = forward(params, feat, &cache);
  if (!ctc_validity(lattice.num_frames(), labels)) {
    out.feasible = false;
    return out;
  }
  CtcResult ctc = ctc_loss(lattice, labels, /*want_grad=*/true);
  out.loss = ctc.loss;
  out.grads = backprop(params, cache, *ctc.grad);
  return out;
}

// ---------------------------------------------------------------------------
// Model file: magic "CTCM", version byte, header (H, L, F, V, tokenizer tag,
// vocab hash), then every tensor in for_each_tensor order as little-endian
// 64-bit floats.

enum class TokenizerKind : std::uint8_t { chars = 0, syllable = 1, bpe = 2 };

inline std::string tokenizer_kind_name(TokenizerKind k) {
  switch (k) {
    case TokenizerKind::chars: return "char";
    case TokenizerKind::syllable: return "syllable";
    case TokenizerKind::bpe: return "bpe";
  }
  throw invalid_argument_error("unknown tokenizer kind");
}

inline TokenizerKind tokenizer_kind_from_name(const std::string& name) {
  if (name == "char") return TokenizerKind::chars;
  if (name == "syllable") return TokenizerKind::syllable;
  if (name == "bpe") return TokenizerKind::bpe;
  throw invalid_argument_error("unknown tokenizer kind: " + name +
                               " (expected char, syllable or bpe)");
}

struct ModelMeta {
  TokenizerKind tokenizer = TokenizerKind::chars;
  std::uint64_t vocab_hash = 0;
};

namespace detail {

inline void put_u32(std::ostream& out, std::uint32_t v) {
  char b[4] = {static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF),
               static_cast<char>((v >> 16) & 0xFF), static_cast<char>((v >> 24) & 0xFF)};
  out.write(b, 4);
}

inline void put_u64(std::ostream& out, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.write(b, 8);
}

inline std::uint32_t get_u32(std::istream& in, const std::string& path) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4))
    throw corrupt_file_error("truncated model file: " + path);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

inline std::uint64_t get_u64(std::istream& in, const std::string& path) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8))
    throw corrupt_file_error("truncated model file: " + path);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

}  // namespace detail

inline void save_model(const std::string& path, const ModelParams& params,
                       const ModelMeta& meta) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw validation_error("cannot write model file: " + path);
  out.write("CTCM", 4);
  out.put(1);  // version
  detail::put_u32(out, static_cast<std::uint32_t>(params.hidden()));
  detail::put_u32(out, static_cast<std::uint32_t>(params.depth()));
  detail::put_u32(out, static_cast<std::uint32_t>(params.feat_dim()));
  detail::put_u32(out, static_cast<std::uint32_t>(params.num_classes() - 1));
  out.put(static_cast<char>(meta.tokenizer));
  detail::put_u64(out, meta.vocab_hash);
  for_each_tensor(const_cast<ModelParams&>(params), [&](std::vector<double>& v) {
    for (double x : v) {
      std::uint64_t bits;
      std::memcpy(&bits, &x, 8);
      detail::put_u64(out, bits);
    }
  });
}

inline std::pair<ModelParams, ModelMeta> load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw corrupt_file_error("cannot open model file: " + path);
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "CTCM", 4) != 0)
    throw corrupt_file_error("bad magic in model file: " + path);
  int version = in.get();
  if (version != 1)
    throw corrupt_file_error("unsupported model file version " +
                             std::to_string(version) + " in " + path);
  std::uint32_t H = detail::get_u32(in, path);
  std::uint32_t L = detail::get_u32(in, path);
  std::uint32_t F = detail::get_u32(in, path);
  std::uint32_t V = detail::get_u32(in, path);
  int tag = in.get();
  if (tag < 0 || tag > 2)
    throw corrupt_file_error("bad tokenizer tag in model file: " + path);
  ModelMeta meta;
  meta.tokenizer = static_cast<TokenizerKind>(tag);
  meta.vocab_hash = detail::get_u64(in, path);

  ModelParams params = make_model_shape(F, H, L, V);
  for_each_tensor(params, [&](std::vector<double>& v) {
    for (double& x : v) {
      std::uint64_t bits = detail::get_u64(in, path);
      std::memcpy(&x, &bits, 8);
    }
  });
  if (in.peek() != std::char_traits<char>::eof())
    throw corrupt_file_error("trailing bytes in model file: " + path);
  return {std::move(params), meta};
}

// Refuses to pair a model with a vocabulary other than the one it was
// trained against.
inline void verify_vocab(const ModelMeta& meta, const Vocabulary& vocab) {
  if (vocab_hash(vocab) != meta.vocab_hash)
    throw validation_error("vocabulary hash does not match the model header");
}

}  // namespace ctcseq
