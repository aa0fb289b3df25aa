#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "polyner/tensor.hpp"

namespace polyner {

class Graph;

// Handle into a Graph's tape. Cheap to copy; valid for the graph's lifetime.
struct Var {
  std::size_t id = static_cast<std::size_t>(-1);

  bool valid() const { return id != static_cast<std::size_t>(-1); }
};

// Dynamic reverse-mode tape. One graph is built per forward pass; backward
// sweeps the tape in reverse creation order. Leaves may carry an external
// gradient sink (a tensor owned by the caller) that accumulates across sweeps,
// which is what lets one forward tape serve many seeded backward passes.
class Graph {
 public:
  Var constant(Tensor value);
  // Copies `value`; on backward adds this node's gradient into *sink.
  Var leaf(const Tensor& value, Tensor* sink);
  // Embedding-style row read: value is row `row` of `table` (rank 2); the
  // gradient lands in the matching row of *sink.
  Var row_leaf(const Tensor& table, std::size_t row, Tensor* sink);

  Var add(Var a, Var b);
  Var add_n(const std::vector<Var>& terms);
  Var mul(Var a, Var b);
  Var scale(Var a, double factor);
  Var matvec(Var m, Var x);
  Var sigmoid(Var a);
  Var tanh_op(Var a);
  Var concat(Var a, Var b);
  Var slice(Var a, std::size_t offset, std::size_t len);
  // Multiplies elementwise by a constant tensor (dropout masks and the like).
  Var mul_const(Var a, const Tensor& factor);
  // Rank-1 vars of equal length stacked into a rank-2 value, one per row.
  Var stack_rows(const std::vector<Var>& rows);
  Var sum(Var a);
  // Scalar -log softmax(a)[target]; the stable path for per-position labels.
  Var neg_log_softmax(Var a, std::size_t target);

  const Tensor& value(Var v) const { return nodes_[v.id].value; }
  Tensor& grad(Var v) { return nodes_[v.id].grad; }

  // Install a backward hook on a node created via constant(); for composite
  // nodes whose gradient is computed analytically outside the tape.
  void set_backward(Var v, std::function<void(Graph&)> hook) {
    nodes_[v.id].backward = std::move(hook);
  }

  // Zero grads, seed d root = 1, sweep. Root must be scalar-shaped ({1}).
  void backward(Var root);
  // Sweep with whatever gradients the caller seeded via grad().
  void backward_sweep();
  void zero_grads();

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    std::function<void(Graph&)> backward;
  };

  Var emplace(Tensor value, std::function<void(Graph&)> backward);
  std::vector<Node> nodes_;
};

}  // namespace polyner
