#include "polyner/autodiff.hpp"

#include <algorithm>
#include <cmath>

#include "polyner/errors.hpp"

namespace polyner {

Var Graph::emplace(Tensor value, std::function<void(Graph&)> backward) {
  Node node;
  node.grad = Tensor::zeros(value.shape());
  node.value = std::move(value);
  node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var{nodes_.size() - 1};
}

Var Graph::constant(Tensor value) {
  return emplace(std::move(value), nullptr);
}

Var Graph::leaf(const Tensor& value, Tensor* sink) {
  if (sink != nullptr && !sink->same_shape(value)) {
    raise(ErrorKind::ShapeMismatch, "gradient sink shape differs from leaf value");
  }
  Var v = emplace(value, nullptr);
  if (sink != nullptr) {
    nodes_[v.id].backward = [out = v.id, sink](Graph& g) {
      auto src = g.nodes_[out].grad.flat();
      auto dst = sink->flat();
      for (std::size_t i = 0; i < src.size(); ++i) dst[i] += src[i];
    };
  }
  return v;
}

Var Graph::row_leaf(const Tensor& table, std::size_t row, Tensor* sink) {
  if (table.rank() != 2) raise(ErrorKind::ShapeMismatch, "row_leaf needs a rank-2 table");
  if (row >= table.dim(0)) raise(ErrorKind::InvalidArgument, "row out of range");
  std::size_t cols = table.dim(1);
  Tensor value = Tensor::zeros({cols});
  for (std::size_t j = 0; j < cols; ++j) value[j] = table(row, j);
  Var v = emplace(std::move(value), nullptr);
  if (sink != nullptr) {
    if (!sink->same_shape(table)) {
      raise(ErrorKind::ShapeMismatch, "gradient sink shape differs from table");
    }
    nodes_[v.id].backward = [out = v.id, sink, row, cols](Graph& g) {
      auto src = g.nodes_[out].grad.flat();
      for (std::size_t j = 0; j < cols; ++j) (*sink)(row, j) += src[j];
    };
  }
  return v;
}

Var Graph::add(Var a, Var b) {
  if (!value(a).same_shape(value(b))) raise(ErrorKind::ShapeMismatch, "add shape mismatch");
  Tensor out = value(a);
  auto of = out.flat();
  auto bf = value(b).flat();
  for (std::size_t i = 0; i < of.size(); ++i) of[i] += bf[i];
  Var v = emplace(std::move(out), nullptr);
  nodes_[v.id].backward = [out_id = v.id, a, b](Graph& g) {
    auto gr = g.nodes_[out_id].grad.flat();
    auto ga = g.nodes_[a.id].grad.flat();
    auto gb = g.nodes_[b.id].grad.flat();
    for (std::size_t i = 0; i < gr.size(); ++i) {
      ga[i] += gr[i];
      gb[i] += gr[i];
    }
  };
  return v;
}

Var Graph::add_n(const std::vector<Var>& terms) {
  if (terms.empty()) raise(ErrorKind::InvalidArgument, "add_n needs at least one term");
  Tensor out = value(terms[0]);
  for (std::size_t k = 1; k < terms.size(); ++k) {
    if (!value(terms[k]).same_shape(out)) raise(ErrorKind::ShapeMismatch, "add_n shape mismatch");
    auto of = out.flat();
    auto tf = value(terms[k]).flat();
    for (std::size_t i = 0; i < of.size(); ++i) of[i] += tf[i];
  }
  Var v = emplace(std::move(out), nullptr);
  nodes_[v.id].backward = [out_id = v.id, terms](Graph& g) {
    auto gr = g.nodes_[out_id].grad.flat();
    for (Var t : terms) {
      auto gt = g.nodes_[t.id].grad.flat();
      for (std::size_t i = 0; i < gr.size(); ++i) gt[i] += gr[i];
    }
  };
  return v;
}

Var Graph::mul(Var a, Var b) {
  if (!value(a).same_shape(value(b))) raise(ErrorKind::ShapeMismatch, "mul shape mismatch");
  Tensor out = value(a);
  auto of = out.flat();
  auto bf = value(b).flat();
  for (std::size_t i = 0; i < of.size(); ++i) of[i] *= bf[i];
  Var v = emplace(std::move(out), nullptr);
  nodes_[v.id].backward = [out_id = v.id, a, b](Graph& g) {
    auto gr = g.nodes_[out_id].grad.flat();
    auto va = g.nodes_[a.id].value.flat();
    auto vb = g.nodes_[b.id].value.flat();
    auto ga = g.nodes_[a.id].grad.flat();
    auto gb = g.nodes_[b.id].grad.flat();
    for (std::size_t i = 0; i < gr.size(); ++i) {
      ga[i] += gr[i] * vb[i];
      gb[i] += gr[i] * va[i];
    }
  };
  return v;
}

Var Graph::scale(Var a, double factor) {
  Tensor out = value(a);
  for (double& x : out.flat()) x *= factor;
  Var v = emplace(std::move(out), nullptr);
  nodes_[v.id].backward = [out_id = v.id, a, factor](Graph& g) {
    auto gr = g.nodes_[out_id].grad.flat();
    auto ga = g.nodes_[a.id].grad.flat();
    for (std::size_t i = 0; i < gr.size(); ++i) ga[i] += gr[i] * factor;
  };
  return v;
}

Var Graph::matvec(Var m, Var x) {
  const Tensor& tm = value(m);
  const Tensor& tx = value(x);
  if (tm.rank() != 2 || tx.rank() != 1 || tm.dim(1) != tx.dim(0)) {
    raise(ErrorKind::ShapeMismatch, "matvec needs [R x C] times [C]");
  }
  std::size_t rows = tm.dim(0), cols = tm.dim(1);
  Tensor out = Tensor::zeros({rows});
  for (std::size_t i = 0; i < rows; ++i) {
    double acc = 0.0;
    const double* row = tm.data() + i * cols;
    for (std::size_t j = 0; j < cols; ++j) acc += row[j] * tx[j];
    out[i] = acc;
  }
  Var v = emplace(std::move(out), nullptr);
  nodes_[v.id].backward = [out_id = v.id, m, x, rows, cols](Graph& g) {
    auto gr = g.nodes_[out_id].grad.flat();
    const Tensor& vm = g.nodes_[m.id].value;
    const Tensor& vx = g.nodes_[x.id].value;
    Tensor& gm = g.nodes_[m.id].grad;
    Tensor& gx = g.nodes_[x.id].grad;
    for (std::size_t i = 0; i < rows; ++i) {
      double gi = gr[i];
      if (gi == 0.0) continue;
      double* gm_row = gm.data() + i * cols;
      const double* vm_row = vm.data() + i * cols;
      for (std::size_t j = 0; j < cols; ++j) {
        gm_row[j] += gi * vx[j];
        gx[j] += gi * vm_row[j];
      }
    }
  };
  return v;
}

Var Graph::sigmoid(Var a) {
  Tensor out = value(a);
  for (double& x : out.flat()) x = 1.0 / (1.0 + std::exp(-x));
  Var v = emplace(std::move(out), nullptr);
  nodes_[v.id].backward = [out_id = v.id, a](Graph& g) {
    auto gr = g.nodes_[out_id].grad.flat();
    auto y = g.nodes_[out_id].value.flat();
    auto ga = g.nodes_[a.id].grad.flat();
    for (std::size_t i = 0; i < gr.size(); ++i) ga[i] += gr[i] * y[i] * (1.0 - y[i]);
  };
  return v;
}

Var Graph::tanh_op(Var a) {
  Tensor out = value(a);
  for (double& x : out.flat()) x = std::tanh(x);
  Var v = emplace(std::move(out), nullptr);
  nodes_[v.id].backward = [out_id = v.id, a](Graph& g) {
    auto gr = g.nodes_[out_id].grad.flat();
    auto y = g.nodes_[out_id].value.flat();
    auto ga = g.nodes_[a.id].grad.flat();
    for (std::size_t i = 0; i < gr.size(); ++i) ga[i] += gr[i] * (1.0 - y[i] * y[i]);
  };
  return v;
}

Var Graph::concat(Var a, Var b) {
  const Tensor& ta = value(a);
  const Tensor& tb = value(b);
  if (ta.rank() != 1 || tb.rank() != 1) raise(ErrorKind::ShapeMismatch, "concat needs vectors");
  std::size_t na = ta.dim(0), nb = tb.dim(0);
  Tensor out = Tensor::zeros({na + nb});
  for (std::size_t i = 0; i < na; ++i) out[i] = ta[i];
  for (std::size_t i = 0; i < nb; ++i) out[na + i] = tb[i];
  Var v = emplace(std::move(out), nullptr);
  nodes_[v.id].backward = [out_id = v.id, a, b, na, nb](Graph& g) {
    auto gr = g.nodes_[out_id].grad.flat();
    auto ga = g.nodes_[a.id].grad.flat();
    auto gb = g.nodes_[b.id].grad.flat();
    for (std::size_t i = 0; i < na; ++i) ga[i] += gr[i];
    for (std::size_t i = 0; i < nb; ++i) gb[i] += gr[na + i];
  };
  return v;
}

Var Graph::slice(Var a, std::size_t offset, std::size_t len) {
  const Tensor& ta = value(a);
  if (ta.rank() != 1) raise(ErrorKind::ShapeMismatch, "slice needs a vector");
  if (offset + len > ta.dim(0)) raise(ErrorKind::InvalidArgument, "slice out of range");
  Tensor out = Tensor::zeros({len});
  for (std::size_t i = 0; i < len; ++i) out[i] = ta[offset + i];
  Var v = emplace(std::move(out), nullptr);
  nodes_[v.id].backward = [out_id = v.id, a, offset, len](Graph& g) {
    auto gr = g.nodes_[out_id].grad.flat();
    auto ga = g.nodes_[a.id].grad.flat();
    for (std::size_t i = 0; i < len; ++i) ga[offset + i] += gr[i];
  };
  return v;
}

Var Graph::mul_const(Var a, const Tensor& factor) {
  if (!value(a).same_shape(factor)) raise(ErrorKind::ShapeMismatch, "mul_const shape mismatch");
  Tensor out = value(a);
  auto of = out.flat();
  auto ff = factor.flat();
  for (std::size_t i = 0; i < of.size(); ++i) of[i] *= ff[i];
  Var v = emplace(std::move(out), nullptr);
  nodes_[v.id].backward = [out_id = v.id, a, factor](Graph& g) {
    auto gr = g.nodes_[out_id].grad.flat();
    auto ga = g.nodes_[a.id].grad.flat();
    auto ff = factor.flat();
    for (std::size_t i = 0; i < gr.size(); ++i) ga[i] += gr[i] * ff[i];
  };
  return v;
}

Var Graph::stack_rows(const std::vector<Var>& rows) {
  if (rows.empty()) raise(ErrorKind::InvalidArgument, "stack_rows needs at least one row");
  std::size_t cols = value(rows[0]).dim(0);
  for (Var r : rows) {
    if (value(r).rank() != 1 || value(r).dim(0) != cols) {
      raise(ErrorKind::ShapeMismatch, "stack_rows needs equal-length vectors");
    }
  }
  Tensor out = Tensor::zeros({rows.size(), cols});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < cols; ++j) out(i, j) = value(rows[i])[j];
  }
  Var v = emplace(std::move(out), nullptr);
  nodes_[v.id].backward = [out_id = v.id, rows, cols](Graph& g) {
    const Tensor& gr = g.nodes_[out_id].grad;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      auto gi = g.nodes_[rows[i].id].grad.flat();
      for (std::size_t j = 0; j < cols; ++j) gi[j] += gr(i, j);
    }
  };
  return v;
}

Var Graph::sum(Var a) {
  double total = 0.0;
  for (double x : value(a).flat()) total += x;
  Var v = emplace(Tensor::vector({total}), nullptr);
  nodes_[v.id].backward = [out_id = v.id, a](Graph& g) {
    double gr = g.nodes_[out_id].grad[0];
    auto ga = g.nodes_[a.id].grad.flat();
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += gr;
  };
  return v;
}

Var Graph::neg_log_softmax(Var a, std::size_t target) {
  const Tensor& ta = value(a);
  if (ta.rank() != 1) raise(ErrorKind::ShapeMismatch, "neg_log_softmax needs a vector");
  if (target >= ta.dim(0)) raise(ErrorKind::InvalidArgument, "target out of range");
  double mx = ta[0];
  for (double x : ta.flat()) mx = std::max(mx, x);
  double lse = 0.0;
  for (double x : ta.flat()) lse += std::exp(x - mx);
  lse = mx + std::log(lse);
  Var v = emplace(Tensor::vector({lse - ta[target]}), nullptr);
  nodes_[v.id].backward = [out_id = v.id, a, target, lse](Graph& g) {
    double gr = g.nodes_[out_id].grad[0];
    auto va = g.nodes_[a.id].value.flat();
    auto ga = g.nodes_[a.id].grad.flat();
    for (std::size_t i = 0; i < va.size(); ++i) {
      double soft = std::exp(va[i] - lse);
      ga[i] += gr * (soft - (i == target ? 1.0 : 0.0));
    }
  };
  return v;
}

void Graph::backward(Var root) {
  if (value(root).size() != 1) raise(ErrorKind::ShapeMismatch, "backward root must be scalar");
  zero_grads();
  nodes_[root.id].grad[0] = 1.0;
  backward_sweep();
}

void Graph::backward_sweep() {
  for (std::size_t i = nodes_.size(); i > 0; --i) {
    if (nodes_[i - 1].backward) nodes_[i - 1].backward(*this);
  }
}

void Graph::zero_grads() {
  for (Node& n : nodes_) n.grad.fill(0.0);
}

}  // namespace polyner
