#pragma once

// Tape-based reverse-mode differentiation over rank-2 tensors.
//
// A Graph records every operation applied to its Vars. backward() walks the
// tape in reverse, accumulating adjoints; leaves created with param() push
// their adjoint into the bound Param's grad. A Graph built with
// grad_enabled=false records values only, which is what inference uses.

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <unordered_map>
#include <vector>

#include "seb/tensor.hpp"

namespace seb::ad {

class Graph;

class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  Graph& graph() const { return *g_; }
  std::size_t id() const noexcept { return id_; }
  bool valid() const noexcept { return g_ != nullptr; }
  bool requires_grad() const;

 private:
  friend class Graph;
  Var(Graph* g, std::size_t id) : g_(g), id_(id) {}

  Graph* g_ = nullptr;
  std::size_t id_ = 0;
};

class Graph {
 public:
  // Receives the graph and the id of the node being differentiated; reads
  // grad(self) and accumulates into the inputs' gradient buffers.
  using BackwardFn = std::function<void(Graph&, std::size_t self)>;

  explicit Graph(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  bool grad_enabled() const noexcept { return grad_enabled_; }

  Var constant(Tensor value);
  // Differentiable leaf; its gradient is readable through grad() after backward().
  Var variable(Tensor value);
  // Leaf bound to p. backward() adds the adjoint into p.grad. The Param must
  // outlive the graph and must not change value while the graph is in use;
  // repeated calls return the same leaf.
  Var param(Param& p);

  // Records an op result. The node requires a gradient when any input does;
  // otherwise the backward function is discarded.
  Var record(Tensor value, std::span<const Var> inputs, BackwardFn backward);
  Var record(Tensor value, std::initializer_list<Var> inputs, BackwardFn backward) {
    return record(std::move(value), std::span<const Var>(inputs.begin(), inputs.size()), std::move(backward));
  }

  // Seeds d(loss)/d(loss) = 1 and propagates. The loss must be 1x1.
  void backward(Var loss);

  const Tensor& value(std::size_t id) const { return nodes_[id].value; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  // Adjoint of a node after backward(); zeros if nothing reached it.
  const Tensor& grad(Var v);
  // Mutable adjoint buffer, allocated on first touch. For op implementations.
  Tensor& grad_buffer(std::size_t id);
  // Adjoint accumulated so far, or nullptr when no op has written one.
  const Tensor* grad_if_any(std::size_t id) const;

  std::size_t size() const noexcept { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    BackwardFn backward;
    Param* param = nullptr;
    bool requires_grad = false;
  };

  Var push(Node node);

  std::vector<Node> nodes_;
  std::unordered_map<const Param*, std::size_t> param_ids_;
  bool grad_enabled_;
};

// Adjacency in row form: lists[v] holds the neighbor rows of node v.
using NeighborLists = std::vector<std::vector<std::uint32_t>>;

Var matmul(Var a, Var b);
// a * b^T
Var matmul_nt(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double c);
// Adds the 1 x n row to every row of a.
Var add_row(Var a, Var row);
// Multiplies every row of a elementwise by the 1 x n row.
Var mul_row(Var a, Var row);
Var relu(Var a);
Var square(Var a);
Var softmax_rows(Var a);
// Per-row standardization (x - mean) / sqrt(var + eps), no affine part.
Var layer_norm_rows(Var a, double eps = 1e-5);
// Mean over rows: m x n -> 1 x n.
Var mean_rows(Var a);
Var sum(Var a);
Var mean(Var a);
Var concat_cols(std::span<const Var> parts);
Var concat_rows(std::span<const Var> parts);
Var gather_rows(Var a, std::vector<std::size_t> rows);
Var repeat_rows(Var row, std::size_t n);
Var reshape(Var a, Shape shape);
// out[v] = mean of a[u] over u in lists[v]; zero row when lists[v] is empty.
Var neighbor_mean(Var a, std::shared_ptr<const NeighborLists> lists);
// Mean of squared differences against a constant target of the same shape.
Var mse(Var pred, const Tensor& target);

}  // namespace seb::ad

namespace seb {

// Plain tensor forms of the core operations.
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor matmul_nt(const Tensor& a, const Tensor& b);
Tensor softmax_rows(const Tensor& x);

}  // namespace seb
