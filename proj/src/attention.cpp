#include "seb/attention.hpp"

#include <cmath>

#include "seb/error.hpp"
#include "seb/optimizer.hpp"

namespace seb {

Dense::Dense(std::size_t in, std::size_t out, Rng& rng) : W(glorot_uniform(in, out, rng)), b(Tensor({1, out})) {}

ad::Var Dense::forward(ad::Var x) {
  if (x.value().rank() != 2 || x.value().cols() != in()) {
    throw ShapeError("dense layer expects width " + std::to_string(in()) + ", got " +
                     shape_to_string(x.value().shape()));
  }
  ad::Graph& g = x.graph();
  return ad::add_row(ad::matmul(x, g.param(W)), g.param(b));
}

void Dense::visit(const std::string& prefix, const ParamVisitor& fn) {
  fn(join_name(prefix, "W"), W);
  fn(join_name(prefix, "b"), b);
}

AttentionHead::AttentionHead(std::size_t d_model, std::size_t d_qk, std::size_t d_v, Rng& rng)
    : W_Q(glorot_uniform(d_qk, d_model, rng)),
      W_K(glorot_uniform(d_qk, d_model, rng)),
      W_V(glorot_uniform(d_v, d_model, rng)) {}

void AttentionHead::visit(const std::string& prefix, const ParamVisitor& fn) {
  fn(join_name(prefix, "W_Q"), W_Q);
  fn(join_name(prefix, "W_K"), W_K);
  fn(join_name(prefix, "W_V"), W_V);
}

Qkv project_qkv(AttentionHead& head, ad::Var X) {
  const Tensor& x = X.value();
  if (x.rank() != 2 || x.cols() != head.d_model()) {
    throw ShapeError("project_qkv: input " + shape_to_string(x.shape()) + " but head expects width " +
                     std::to_string(head.d_model()));
  }
  ad::Graph& g = X.graph();
  return {ad::matmul_nt(X, g.param(head.W_Q)), ad::matmul_nt(X, g.param(head.W_K)),
          ad::matmul_nt(X, g.param(head.W_V))};
}

namespace {

void check_attend_shapes(const Tensor& q, const Tensor& k, const Tensor* v) {
  if (q.rank() != 2 || k.rank() != 2 || q.cols() != k.cols()) {
    throw ShapeError("attend: query " + shape_to_string(q.shape()) + " and key " + shape_to_string(k.shape()) +
                     " widths differ");
  }
  if (v != nullptr && (v->rank() != 2 || v->rows() != k.rows())) {
    throw ShapeError("attend: key " + shape_to_string(k.shape()) + " and value " + shape_to_string(v->shape()) +
                     " row counts differ");
  }
}

}  // namespace

ad::Var attend(ad::Var Q, ad::Var K, ad::Var V) {
  check_attend_shapes(Q.value(), K.value(), &V.value());
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(Q.value().cols()));
  ad::Var weights = ad::softmax_rows(ad::scale(ad::matmul_nt(Q, K), inv_sqrt));
  return ad::matmul(weights, V);
}

Tensor attention_weights(const Tensor& Q, const Tensor& K) {
  check_attend_shapes(Q, K, nullptr);
  Tensor logits = seb::matmul_nt(Q, K);
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(Q.cols()));
  for (double& v : logits.values()) v *= inv_sqrt;
  return seb::softmax_rows(logits);
}

TransformerBlock::TransformerBlock(std::size_t d_model, std::size_t d_qk, std::size_t d_v, std::size_t ffn_hidden,
                                   BlockOptions opts, Rng& rng)
    : head(d_model, d_qk, d_v, rng),
      ffn_in(d_v, ffn_hidden, rng),
      ffn_out(ffn_hidden, d_v, rng),
      norm1_gain(Tensor({1, d_v}, 1.0)),
      norm1_bias(Tensor({1, d_v})),
      norm2_gain(Tensor({1, d_v}, 1.0)),
      norm2_bias(Tensor({1, d_v})),
      options(opts) {
  if (options.residual && d_v != d_model) {
    throw ConfigError("residual connections need d_v == d_model (got " + std::to_string(d_v) + " and " +
                      std::to_string(d_model) + ")");
  }
}

void TransformerBlock::visit(const std::string& prefix, const ParamVisitor& fn) {
  head.visit(join_name(prefix, "attn"), fn);
  ffn_in.visit(join_name(prefix, "ffn_in"), fn);
  ffn_out.visit(join_name(prefix, "ffn_out"), fn);
  fn(join_name(prefix, "norm1.gain"), norm1_gain);
  fn(join_name(prefix, "norm1.bias"), norm1_bias);
  fn(join_name(prefix, "norm2.gain"), norm2_gain);
  fn(join_name(prefix, "norm2.bias"), norm2_bias);
}

namespace {

ad::Var sublayer_join(ad::Var x, ad::Var y, bool residual, bool norm, Param& gain, Param& bias) {
  ad::Var h = residual ? ad::add(x, y) : y;
  if (!norm) return h;
  ad::Graph& g = h.graph();
  return ad::add_row(ad::mul_row(ad::layer_norm_rows(h), g.param(gain)), g.param(bias));
}

}  // namespace

ad::Var encode_sequence(TransformerBlock& block, ad::Var X0) {
  const BlockOptions& o = block.options;
  auto [Q, K, V] = project_qkv(block.head, X0);
  ad::Var h = sublayer_join(X0, attend(Q, K, V), o.residual, o.layer_norm, block.norm1_gain, block.norm1_bias);
  ad::Var f = block.ffn_out.forward(ad::relu(block.ffn_in.forward(h)));
  return sublayer_join(h, f, o.residual, o.layer_norm, block.norm2_gain, block.norm2_bias);
}

MlpHead::MlpHead(const std::vector<std::size_t>& dims, Rng& rng) {
  if (dims.size() < 2 || dims.back() != 1) throw ConfigError("mlp head needs at least {input, 1} widths ending in 1");
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) layers.emplace_back(dims[i], dims[i + 1], rng);
}

void MlpHead::visit(const std::string& prefix, const ParamVisitor& fn) {
  for (std::size_t i = 0; i < layers.size(); ++i) layers[i].visit(join_name(prefix, std::to_string(i)), fn);
}

ad::Var mlp_forward(MlpHead& head, ad::Var x) {
  if (head.layers.empty()) throw ConfigError("mlp head has no layers");
  ad::Var h = x;
  for (std::size_t i = 0; i < head.layers.size(); ++i) {
    h = head.layers[i].forward(h);
    if (i + 1 < head.layers.size()) h = ad::relu(h);
  }
  return h;
}

}  // namespace seb
