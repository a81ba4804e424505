#pragma once

#include <vector>

#include "seb/autodiff.hpp"
#include "seb/params.hpp"
#include "seb/rng.hpp"

namespace seb {

// Affine map x * W + b on row vectors.
struct Dense {
  Param W;  // in x out
  Param b;  // 1 x out, zero-initialized

  Dense() = default;
  Dense(std::size_t in, std::size_t out, Rng& rng);

  std::size_t in() const { return W.value.rows(); }
  std::size_t out() const { return W.value.cols(); }
  ad::Var forward(ad::Var x);
  void visit(const std::string& prefix, const ParamVisitor& fn);
};

// Single-head projections. Q = X W_Q^T, K = X W_K^T, V = X W_V^T.
struct AttentionHead {
  Param W_Q;  // d_qk x d_model
  Param W_K;  // d_qk x d_model
  Param W_V;  // d_v x d_model

  AttentionHead() = default;
  AttentionHead(std::size_t d_model, std::size_t d_qk, std::size_t d_v, Rng& rng);

  std::size_t d_model() const { return W_Q.value.cols(); }
  std::size_t d_qk() const { return W_Q.value.rows(); }
  std::size_t d_v() const { return W_V.value.rows(); }
  void visit(const std::string& prefix, const ParamVisitor& fn);
};

struct Qkv {
  ad::Var Q;
  ad::Var K;
  ad::Var V;
};

Qkv project_qkv(AttentionHead& head, ad::Var X);

// softmax(Q K^T / sqrt(d_qk)) V
ad::Var attend(ad::Var Q, ad::Var K, ad::Var V);

// Row-stochastic attention weights alone; exposed for invariant checks.
Tensor attention_weights(const Tensor& Q, const Tensor& K);

struct BlockOptions {
  bool residual = true;
  bool layer_norm = true;
};

// Attention followed by a two-layer ReLU feed-forward network, each sublayer
// optionally wrapped as LayerNorm(x + sublayer(x)).
struct TransformerBlock {
  AttentionHead head;
  Dense ffn_in;
  Dense ffn_out;
  Param norm1_gain, norm1_bias;
  Param norm2_gain, norm2_bias;
  BlockOptions options;

  TransformerBlock() = default;
  TransformerBlock(std::size_t d_model, std::size_t d_qk, std::size_t d_v, std::size_t ffn_hidden,
                   BlockOptions options, Rng& rng);

  std::size_t d_model() const { return head.d_model(); }
  std::size_t d_out() const { return ffn_out.out(); }
  void visit(const std::string& prefix, const ParamVisitor& fn);
};

// X0: S x d_model -> S x d_v
ad::Var encode_sequence(TransformerBlock& block, ad::Var X0);

// affine -> ReLU -> ... -> affine, one scalar per input row.
struct MlpHead {
  std::vector<Dense> layers;

  MlpHead() = default;
  // dims = {input, hidden..., 1}
  MlpHead(const std::vector<std::size_t>& dims, Rng& rng);

  std::size_t in() const { return layers.front().in(); }
  void visit(const std::string& prefix, const ParamVisitor& fn);
};

ad::Var mlp_forward(MlpHead& head, ad::Var x);

}  // namespace seb
