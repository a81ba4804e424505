#include "seb/autodiff.hpp"

#include <algorithm>
#include <cmath>

#include "seb/error.hpp"
#include "seb/kernels.hpp"

namespace seb {

namespace {

void require_matrix(const Tensor& t, const char* op) {
  if (t.rank() != 2) throw ShapeError(std::string(op) + ": expected a matrix, got " + shape_to_string(t.shape()));
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_to_string(a.shape()) + " vs " +
                     shape_to_string(b.shape()));
  }
}

void softmax_row_inplace(std::span<double> row) {
  double mx = row[0];
  for (double v : row) mx = std::max(mx, v);
  double total = 0.0;
  for (double& v : row) {
    v = std::exp(v - mx);
    total += v;
  }
  const double inv = 1.0 / total;
  for (double& v : row) v *= inv;
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_matrix(a, "matmul");
  require_matrix(b, "matmul");
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: inner dimensions disagree for " + shape_to_string(a.shape()) + " and " +
                     shape_to_string(b.shape()));
  }
  Tensor c({a.rows(), b.cols()});
  kernels::active().gemm_nn(a.data(), b.data(), c.data(), a.rows(), a.cols(), b.cols(), false);
  return c;
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  require_matrix(a, "matmul_nt");
  require_matrix(b, "matmul_nt");
  if (a.cols() != b.cols()) {
    throw ShapeError("matmul_nt: inner dimensions disagree for " + shape_to_string(a.shape()) + " and " +
                     shape_to_string(b.shape()) + "^T");
  }
  Tensor c({a.rows(), b.rows()});
  kernels::active().gemm_nt(a.data(), b.data(), c.data(), a.rows(), a.cols(), b.rows(), false);
  return c;
}

Tensor softmax_rows(const Tensor& x) {
  require_matrix(x, "softmax_rows");
  Tensor y = x;
  for (std::size_t r = 0; r < y.rows(); ++r) softmax_row_inplace(y.row_span(r));
  return y;
}

}  // namespace seb

namespace seb::ad {

const Tensor& Var::value() const { return g_->value(id_); }

bool Var::requires_grad() const { return g_->requires_grad(id_); }

Var Graph::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Graph::constant(Tensor value) {
  Node n;
  n.value = std::move(value);
  return push(std::move(n));
}

Var Graph::variable(Tensor value) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = grad_enabled_;
  return push(std::move(n));
}

Var Graph::param(Param& p) {
  if (const auto it = param_ids_.find(&p); it != param_ids_.end()) return Var(this, it->second);
  Node n;
  n.value = p.value;
  n.requires_grad = grad_enabled_;
  n.param = grad_enabled_ ? &p : nullptr;
  Var v = push(std::move(n));
  param_ids_.emplace(&p, v.id_);
  return v;
}

Var Graph::record(Tensor value, std::span<const Var> inputs, BackwardFn backward) {
  Node n;
  n.value = std::move(value);
  if (grad_enabled_) {
    for (const Var& in : inputs) {
      if (in.g_ != this) throw ContractError("operands belong to different graphs");
      n.requires_grad = n.requires_grad || nodes_[in.id_].requires_grad;
    }
  }
  if (n.requires_grad) n.backward = std::move(backward);
  return push(std::move(n));
}

Tensor& Graph::grad_buffer(std::size_t id) {
  Node& n = nodes_[id];
  if (n.grad.empty()) n.grad = Tensor(n.value.shape());
  return n.grad;
}

const Tensor* Graph::grad_if_any(std::size_t id) const {
  const Node& n = nodes_[id];
  return n.grad.empty() ? nullptr : &n.grad;
}

const Tensor& Graph::grad(Var v) { return grad_buffer(v.id_); }

void Graph::backward(Var loss) {
  if (loss.g_ != this) throw ContractError("loss belongs to a different graph");
  if (nodes_[loss.id_].value.size() != 1) {
    throw ContractError("backward needs a scalar loss, got shape " + shape_to_string(nodes_[loss.id_].value.shape()));
  }
  if (!nodes_[loss.id_].requires_grad) return;
  for (auto& n : nodes_) n.grad = Tensor();
  grad_buffer(loss.id_).fill(1.0);
  for (std::size_t i = loss.id_ + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.grad.empty() || !n.requires_grad) continue;
    if (n.backward) n.backward(*this, i);
    if (n.param != nullptr) {
      kernels::active().axpy(1.0, n.grad.data(), n.param->grad.data(), n.grad.size());
    }
  }
}

namespace {

// Adds `delta` into the adjoint of input `id` when that input needs one.
void accumulate(Graph& g, std::size_t id, const Tensor& delta) {
  if (!g.requires_grad(id)) return;
  Tensor& buf = g.grad_buffer(id);
  kernels::active().axpy(1.0, delta.data(), buf.data(), delta.size());
}

const Tensor& upstream(Graph& g, std::size_t self) { return g.grad_buffer(self); }

}  // namespace

Var matmul(Var a, Var b) {
  Graph& g = a.graph();
  Tensor out = seb::matmul(a.value(), b.value());
  const std::size_t ia = a.id(), ib = b.id();
  return g.record(std::move(out), {a, b}, [ia, ib](Graph& g, std::size_t self) {
    const Tensor& gy = upstream(g, self);
    const Tensor& av = g.value(ia);
    const Tensor& bv = g.value(ib);
    const auto& k = kernels::active();
    const std::size_t m = av.rows(), inner = av.cols(), n = bv.cols();
    if (g.requires_grad(ia)) k.gemm_nt(gy.data(), bv.data(), g.grad_buffer(ia).data(), m, n, inner, true);
    if (g.requires_grad(ib)) k.gemm_tn(av.data(), gy.data(), g.grad_buffer(ib).data(), inner, m, n, true);
  });
}

Var matmul_nt(Var a, Var b) {
  Graph& g = a.graph();
  Tensor out = seb::matmul_nt(a.value(), b.value());
  const std::size_t ia = a.id(), ib = b.id();
  return g.record(std::move(out), {a, b}, [ia, ib](Graph& g, std::size_t self) {
    const Tensor& gy = upstream(g, self);
    const Tensor& av = g.value(ia);
    const Tensor& bv = g.value(ib);
    const auto& k = kernels::active();
    const std::size_t m = av.rows(), inner = av.cols(), n = bv.rows();
    // dA = G * B, dB = G^T * A
    if (g.requires_grad(ia)) k.gemm_nn(gy.data(), bv.data(), g.grad_buffer(ia).data(), m, n, inner, true);
    if (g.requires_grad(ib)) k.gemm_tn(gy.data(), av.data(), g.grad_buffer(ib).data(), n, m, inner, true);
  });
}

Var add(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "add");
  Tensor out = a.value();
  kernels::active().axpy(1.0, b.value().data(), out.data(), out.size());
  const std::size_t ia = a.id(), ib = b.id();
  return a.graph().record(std::move(out), {a, b}, [ia, ib](Graph& g, std::size_t self) {
    const Tensor& gy = upstream(g, self);
    accumulate(g, ia, gy);
    accumulate(g, ib, gy);
  });
}

Var sub(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "sub");
  Tensor out = a.value();
  kernels::active().axpy(-1.0, b.value().data(), out.data(), out.size());
  const std::size_t ia = a.id(), ib = b.id();
  return a.graph().record(std::move(out), {a, b}, [ia, ib](Graph& g, std::size_t self) {
    const Tensor& gy = upstream(g, self);
    accumulate(g, ia, gy);
    if (g.requires_grad(ib)) kernels::active().axpy(-1.0, gy.data(), g.grad_buffer(ib).data(), gy.size());
  });
}

Var mul(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "mul");
  Tensor out = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  const std::size_t ia = a.id(), ib = b.id();
  return a.graph().record(std::move(out), {a, b}, [ia, ib](Graph& g, std::size_t self) {
    const Tensor& gy = upstream(g, self);
    if (g.requires_grad(ia)) {
      Tensor& ga = g.grad_buffer(ia);
      const Tensor& bv = g.value(ib);
      for (std::size_t i = 0; i < gy.size(); ++i) ga[i] += gy[i] * bv[i];
    }
    if (g.requires_grad(ib)) {
      Tensor& gb = g.grad_buffer(ib);
      const Tensor& av = g.value(ia);
      for (std::size_t i = 0; i < gy.size(); ++i) gb[i] += gy[i] * av[i];
    }
  });
}

Var scale(Var a, double c) {
  Tensor out = a.value();
  for (double& v : out.values()) v *= c;
  const std::size_t ia = a.id();
  return a.graph().record(std::move(out), {a}, [ia, c](Graph& g, std::size_t self) {
    const Tensor& gy = upstream(g, self);
    if (g.requires_grad(ia)) kernels::active().axpy(c, gy.data(), g.grad_buffer(ia).data(), gy.size());
  });
}

Var add_row(Var a, Var row) {
  const Tensor& av = a.value();
  const Tensor& rv = row.value();
  require_matrix(av, "add_row");
  if (rv.rank() != 2 || rv.rows() != 1 || rv.cols() != av.cols()) {
    throw ShapeError("add_row: row " + shape_to_string(rv.shape()) + " does not broadcast over " +
                     shape_to_string(av.shape()));
  }
  Tensor out = av;
  for (std::size_t r = 0; r < out.rows(); ++r) kernels::active().axpy(1.0, rv.data(), &out(r, 0), out.cols());
  const std::size_t ia = a.id(), ir = row.id();
  return a.graph().record(std::move(out), {a, row}, [ia, ir](Graph& g, std::size_t self) {
    const Tensor& gy = upstream(g, self);
    accumulate(g, ia, gy);
    if (g.requires_grad(ir)) {
      Tensor& gr = g.grad_buffer(ir);
      for (std::size_t r = 0; r < gy.rows(); ++r) kernels::active().axpy(1.0, &gy(r, 0), gr.data(), gy.cols());
    }
  });
}

Var mul_row(Var a, Var row) {
  const Tensor& av = a.value();
  const Tensor& rv = row.value();
  require_matrix(av, "mul_row");
  if (rv.rank() != 2 || rv.rows() != 1 || rv.cols() != av.cols()) {
    throw ShapeError("mul_row: row " + shape_to_string(rv.shape()) + " does not broadcast over " +
                     shape_to_string(av.shape()));
  }
  Tensor out = av;
  for (std::size_t r = 0; r < out.rows(); ++r)
    for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) *= rv[c];
  const std::size_t ia = a.id(), ir = row.id();
  return a.graph().record(std::move(out), {a, row}, [ia, ir](Graph& g, std::size_t self) {
    const Tensor& gy = upstream(g, self);
    const Tensor& av = g.value(ia);
    const Tensor& rv = g.value(ir);
    if (g.requires_grad(ia)) {
      Tensor& ga = g.grad_buffer(ia);
      for (std::size_t r = 0; r < gy.rows(); ++r)
        for (std::size_t c = 0; c < gy.cols(); ++c) ga(r, c) += gy(r, c) * rv[c];
    }
    if (g.requires_grad(ir)) {
      Tensor& gr = g.grad_buffer(ir);
      for (std::size_t r = 0; r < gy.rows(); ++r)
        for (std::size_t c = 0; c < gy.cols(); ++c) gr[c] += gy(r, c) * av(r, c);
    }
  });
}

Var relu(Var a) {
  Tensor out = a.value();
  for (double& v : out.values()) v = v > 0.0 ? v : 0.0;
  const std::size_t ia = a.id();
  return a.graph().record(std::move(out), {a}, [ia](Graph& g, std::size_t self) {
    if (!g.requires_grad(ia)) return;
    const Tensor& gy = upstream(g, self);
    const Tensor& x = g.value(ia);
    Tensor& ga = g.grad_buffer(ia);
    for (std::size_t i = 0; i < gy.size(); ++i) {
      if (x[i] > 0.0) ga[i] += gy[i];
    }
  });
}

Var square(Var a) {
  Tensor out = a.value();
  for (double& v : out.values()) v *= v;
  const std::size_t ia = a.id();
  return a.graph().record(std::move(out), {a}, [ia](Graph& g, std::size_t self) {
    if (!g.requires_grad(ia)) return;
    const Tensor& gy = upstream(g, self);
    const Tensor& x = g.value(ia);
    Tensor& ga = g.grad_buffer(ia);
    for (std::size_t i = 0; i < gy.size(); ++i) ga[i] += 2.0 * x[i] * gy[i];
  });
}

Var softmax_rows(Var a) {
  Tensor out = seb::softmax_rows(a.value());
  const std::size_t ia = a.id();
  return a.graph().record(std::move(out), {a}, [ia](Graph& g, std::size_t self) {
    if (!g.requires_grad(ia)) return;
    const Tensor& gy = upstream(g, self);
    const Tensor& y = g.value(self);
    Tensor& ga = g.grad_buffer(ia);
    const auto& k = kernels::active();
    for (std::size_t r = 0; r < y.rows(); ++r) {
      const double* yr = &y(r, 0);
      const double* gr = &gy(r, 0);
      const double inner = k.dot(yr, gr, y.cols());
      for (std::size_t c = 0; c < y.cols(); ++c) ga(r, c) += yr[c] * (gr[c] - inner);
    }
  });
}

Var layer_norm_rows(Var a, double eps) {
  const Tensor& x = a.value();
  require_matrix(x, "layer_norm_rows");
  const std::size_t n = x.cols();
  Tensor out({x.rows(), n});
  std::vector<double> inv_std(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    double mu = 0.0;
    for (std::size_t c = 0; c < n; ++c) mu += x(r, c);
    mu /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t c = 0; c < n; ++c) var += (x(r, c) - mu) * (x(r, c) - mu);
    var /= static_cast<double>(n);
    inv_std[r] = 1.0 / std::sqrt(var + eps);
    for (std::size_t c = 0; c < n; ++c) out(r, c) = (x(r, c) - mu) * inv_std[r];
  }
  const std::size_t ia = a.id();
  return a.graph().record(std::move(out), {a}, [ia, inv_std = std::move(inv_std)](Graph& g, std::size_t self) {
    if (!g.requires_grad(ia)) return;
    const Tensor& gy = upstream(g, self);
    const Tensor& y = g.value(self);
    Tensor& ga = g.grad_buffer(ia);
    const std::size_t n = y.cols();
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t r = 0; r < y.rows(); ++r) {
      double mean_g = 0.0, mean_gy = 0.0;
      for (std::size_t c = 0; c < n; ++c) {
        mean_g += gy(r, c);
        mean_gy += gy(r, c) * y(r, c);
      }
      mean_g *= inv_n;
      mean_gy *= inv_n;
      for (std::size_t c = 0; c < n; ++c) ga(r, c) += inv_std[r] * (gy(r, c) - mean_g - y(r, c) * mean_gy);
    }
  });
}

Var mean_rows(Var a) {
  const Tensor& x = a.value();
  require_matrix(x, "mean_rows");
  Tensor out({1, x.cols()});
  const double inv = 1.0 / static_cast<double>(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) kernels::active().axpy(1.0, &x(r, 0), out.data(), x.cols());
  for (double& v : out.values()) v *= inv;
  const std::size_t ia = a.id();
  return a.graph().record(std::move(out), {a}, [ia, inv](Graph& g, std::size_t self) {
    if (!g.requires_grad(ia)) return;
    const Tensor& gy = upstream(g, self);
    Tensor& ga = g.grad_buffer(ia);
    for (std::size_t r = 0; r < ga.rows(); ++r) kernels::active().axpy(inv, gy.data(), &ga(r, 0), ga.cols());
  });
}

Var sum(Var a) {
  double s = 0.0;
  for (double v : a.value().values()) s += v;
  const std::size_t ia = a.id();
  return a.graph().record(Tensor::scalar(s), {a}, [ia](Graph& g, std::size_t self) {
    if (!g.requires_grad(ia)) return;
    const double gy = upstream(g, self)[0];
    for (double& v : g.grad_buffer(ia).values()) v += gy;
  });
}

Var mean(Var a) { return scale(sum(a), 1.0 / static_cast<double>(a.value().size())); }

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_cols: nothing to concatenate");
  const std::size_t rows = parts[0].value().rows();
  std::size_t cols = 0;
  for (const Var& p : parts) {
    if (p.value().rows() != rows) {
      throw ShapeError("concat_cols: row counts differ, " + shape_to_string(parts[0].value().shape()) + " vs " +
                       shape_to_string(p.value().shape()));
    }
    cols += p.value().cols();
  }
  Tensor out({rows, cols});
  std::vector<std::size_t> ids, offsets;
  std::size_t off = 0;
  for (const Var& p : parts) {
    const Tensor& v = p.value();
    for (std::size_t r = 0; r < rows; ++r)
      std::copy_n(&v(r, 0), v.cols(), &out(r, off));
    ids.push_back(p.id());
    offsets.push_back(off);
    off += v.cols();
  }
  return parts[0].graph().record(std::move(out), parts, [ids, offsets](Graph& g, std::size_t self) {
    const Tensor& gy = upstream(g, self);
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (!g.requires_grad(ids[i])) continue;
      Tensor& gp = g.grad_buffer(ids[i]);
      for (std::size_t r = 0; r < gp.rows(); ++r)
        for (std::size_t c = 0; c < gp.cols(); ++c) gp(r, c) += gy(r, offsets[i] + c);
    }
  });
}

Var concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_rows: nothing to concatenate");
  const std::size_t cols = parts[0].value().cols();
  std::size_t rows = 0;
  for (const Var& p : parts) {
    if (p.value().cols() != cols) {
      throw ShapeError("concat_rows: column counts differ, " + shape_to_string(parts[0].value().shape()) + " vs " +
                       shape_to_string(p.value().shape()));
    }
    rows += p.value().rows();
  }
  std::vector<double> data;
  data.reserve(rows * cols);
  std::vector<std::size_t> ids, offsets;
  for (const Var& p : parts) {
    offsets.push_back(data.size());
    ids.push_back(p.id());
    data.insert(data.end(), p.value().values().begin(), p.value().values().end());
  }
  return parts[0].graph().record(Tensor({rows, cols}, std::move(data)), parts,
                                 [ids, offsets](Graph& g, std::size_t self) {
                                   const Tensor& gy = upstream(g, self);
                                   for (std::size_t i = 0; i < ids.size(); ++i) {
                                     if (!g.requires_grad(ids[i])) continue;
                                     Tensor& gp = g.grad_buffer(ids[i]);
                                     kernels::active().axpy(1.0, gy.data() + offsets[i], gp.data(), gp.size());
                                   }
                                 });
}

Var gather_rows(Var a, std::vector<std::size_t> rows) {
  const Tensor& x = a.value();
  require_matrix(x, "gather_rows");
  if (rows.empty()) throw ShapeError("gather_rows: empty row selection");
  Tensor out({rows.size(), x.cols()});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= x.rows()) {
      throw IndexError("gather_rows: row " + std::to_string(rows[i]) + " out of range for " +
                       shape_to_string(x.shape()));
    }
    std::copy_n(&x(rows[i], 0), x.cols(), &out(i, 0));
  }
  const std::size_t ia = a.id();
  return a.graph().record(std::move(out), {a}, [ia, rows = std::move(rows)](Graph& g, std::size_t self) {
    if (!g.requires_grad(ia)) return;
    const Tensor& gy = upstream(g, self);
    Tensor& ga = g.grad_buffer(ia);
    for (std::size_t i = 0; i < rows.size(); ++i)
      kernels::active().axpy(1.0, &gy(i, 0), &ga(rows[i], 0), ga.cols());
  });
}

Var repeat_rows(Var row, std::size_t n) {
  const Tensor& rv = row.value();
  if (rv.rank() != 2 || rv.rows() != 1) throw ShapeError("repeat_rows: expected a 1 x d row, got " + shape_to_string(rv.shape()));
  if (n == 0) throw ShapeError("repeat_rows: count must be positive");
  Tensor out({n, rv.cols()});
  for (std::size_t r = 0; r < n; ++r) std::copy_n(rv.data(), rv.cols(), &out(r, 0));
  const std::size_t ir = row.id();
  return row.graph().record(std::move(out), {row}, [ir](Graph& g, std::size_t self) {
    if (!g.requires_grad(ir)) return;
    const Tensor& gy = upstream(g, self);
    Tensor& gr = g.grad_buffer(ir);
    for (std::size_t r = 0; r < gy.rows(); ++r) kernels::active().axpy(1.0, &gy(r, 0), gr.data(), gy.cols());
  });
}

Var reshape(Var a, Shape shape) {
  const std::vector<double> data(a.value().values().begin(), a.value().values().end());
  Tensor out(std::move(shape), data);
  const std::size_t ia = a.id();
  return a.graph().record(std::move(out), {a}, [ia](Graph& g, std::size_t self) {
    accumulate(g, ia, upstream(g, self));
  });
}

Var neighbor_mean(Var a, std::shared_ptr<const NeighborLists> lists) {
  const Tensor& x = a.value();
  require_matrix(x, "neighbor_mean");
  if (lists->size() != x.rows()) {
    throw ShapeError("neighbor_mean: " + std::to_string(lists->size()) + " adjacency rows for feature matrix " +
                     shape_to_string(x.shape()));
  }
  Tensor out({x.rows(), x.cols()});
  const auto& k = kernels::active();
  for (std::size_t v = 0; v < lists->size(); ++v) {
    const auto& nbrs = (*lists)[v];
    if (nbrs.empty()) continue;
    const double w = 1.0 / static_cast<double>(nbrs.size());
    for (std::uint32_t u : nbrs) {
      if (u >= x.rows()) throw IndexError("neighbor_mean: neighbor row " + std::to_string(u) + " out of range");
      k.axpy(w, &x(u, 0), &out(v, 0), x.cols());
    }
  }
  const std::size_t ia = a.id();
  return a.graph().record(std::move(out), {a}, [ia, lists = std::move(lists)](Graph& g, std::size_t self) {
    if (!g.requires_grad(ia)) return;
    const Tensor& gy = upstream(g, self);
    Tensor& ga = g.grad_buffer(ia);
    const auto& k = kernels::active();
    for (std::size_t v = 0; v < lists->size(); ++v) {
      const auto& nbrs = (*lists)[v];
      if (nbrs.empty()) continue;
      const double w = 1.0 / static_cast<double>(nbrs.size());
      for (std::uint32_t u : nbrs) k.axpy(w, &gy(v, 0), &ga(u, 0), ga.cols());
    }
  });
}

Var mse(Var pred, const Tensor& target) {
  const Tensor& p = pred.value();
  require_same_shape(p, target, "mse");
  const double n = static_cast<double>(p.size());
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += (p[i] - target[i]) * (p[i] - target[i]);
  const std::size_t ip = pred.id();
  return pred.graph().record(Tensor::scalar(s / n), {pred}, [ip, target, n](Graph& g, std::size_t self) {
    if (!g.requires_grad(ip)) return;
    const double gy = upstream(g, self)[0];
    const Tensor& p = g.value(ip);
    Tensor& gp = g.grad_buffer(ip);
    for (std::size_t i = 0; i < p.size(); ++i) gp[i] += gy * 2.0 * (p[i] - target[i]) / n;
  });
}

}  // namespace seb::ad
