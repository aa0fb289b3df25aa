#include "polyner/lstm.hpp"

#include "polyner/errors.hpp"

namespace polyner {

TapeParams::TapeParams(Graph& g, const ParamStore& params, ParamStore* grads) {
  if (grads != nullptr && !params.same_layout(*grads)) {
    raise(ErrorKind::LayoutMismatch, "gradient store does not match parameters");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor* sink = grads != nullptr ? &grads->at(i) : nullptr;
    vars_.emplace(params.names()[i], g.leaf(params.at(i), sink));
  }
}

Var TapeParams::at(const std::string& name) const {
  auto it = vars_.find(name);
  if (it == vars_.end()) raise(ErrorKind::InvalidArgument, "no tape leaf for '" + name + "'");
  return it->second;
}

void init_bilstm_params(ParamStore& params, const std::string& prefix, const BiLstmSpec& spec,
                        RngStream& rng) {
  if (spec.layers < 1 || spec.hidden < 1 || spec.input_dim < 1) {
    raise(ErrorKind::InvalidConfig, "bilstm spec dimensions must be >= 1");
  }
  std::size_t H = spec.hidden;
  for (std::size_t l = 0; l < spec.layers; ++l) {
    std::size_t in_dim = l == 0 ? spec.input_dim : 2 * H;
    for (const char* dir : {"fwd", "bwd"}) {
      std::string base = prefix + "/layer_" + std::to_string(l) + "/" + dir;
      params.add(base + "/w_x", glorot_init(4 * H, in_dim, rng));
      params.add(base + "/w_h", glorot_init(4 * H, H, rng));
      Tensor b = Tensor::zeros({4 * H});
      for (std::size_t j = H; j < 2 * H; ++j) b[j] = 1.0;
      params.add(base + "/b", std::move(b));
    }
  }
}

namespace {

struct LstmCell {
  Var w_x, w_h, b;
  std::size_t hidden;

  void step(Graph& g, Var x, Var& h, Var& c) const {
    Var z = g.add(g.add(g.matvec(w_x, x), g.matvec(w_h, h)), b);
    Var gate_i = g.sigmoid(g.slice(z, 0, hidden));
    Var gate_f = g.sigmoid(g.slice(z, hidden, hidden));
    Var gate_g = g.tanh_op(g.slice(z, 2 * hidden, hidden));
    Var gate_o = g.sigmoid(g.slice(z, 3 * hidden, hidden));
    c = g.add(g.mul(gate_f, c), g.mul(gate_i, gate_g));
    h = g.mul(gate_o, g.tanh_op(c));
  }
};

}  // namespace

BiLstmOut apply_bilstm(Graph& g, const TapeParams& vars, const std::string& prefix,
                       const BiLstmSpec& spec, const std::vector<Var>& inputs,
                       const std::vector<double>* layer_dropout, RngStream* dropout_rng) {
  if (inputs.empty()) raise(ErrorKind::InvalidArgument, "bilstm needs at least one step");
  if (g.value(inputs[0]).dim(0) != spec.input_dim) {
    raise(ErrorKind::ShapeMismatch, "bilstm input dimension mismatch");
  }
  if (layer_dropout != nullptr) {
    if (layer_dropout->size() != spec.layers) {
      raise(ErrorKind::InvalidConfig, "one dropout rate per layer required");
    }
    if (dropout_rng == nullptr) {
      raise(ErrorKind::InvalidArgument, "layer dropout needs an rng stream");
    }
  }

  std::size_t T = inputs.size();
  std::size_t H = spec.hidden;
  std::vector<Var> cur = inputs;
  BiLstmOut out;

  for (std::size_t l = 0; l < spec.layers; ++l) {
    std::string base = prefix + "/layer_" + std::to_string(l);
    LstmCell fwd{vars.at(base + "/fwd/w_x"), vars.at(base + "/fwd/w_h"),
                 vars.at(base + "/fwd/b"), H};
    LstmCell bwd{vars.at(base + "/bwd/w_x"), vars.at(base + "/bwd/w_h"),
                 vars.at(base + "/bwd/b"), H};

    std::vector<Var> h_f(T), h_b(T);
    Var h = g.constant(Tensor::zeros({H}));
    Var c = g.constant(Tensor::zeros({H}));
    for (std::size_t t = 0; t < T; ++t) {
      fwd.step(g, cur[t], h, c);
      h_f[t] = h;
    }
    Var fwd_final = h;

    h = g.constant(Tensor::zeros({H}));
    c = g.constant(Tensor::zeros({H}));
    for (std::size_t t = T; t > 0; --t) {
      bwd.step(g, cur[t - 1], h, c);
      h_b[t - 1] = h;
    }
    Var bwd_final = h;

    std::vector<Var> next(T);
    double rate = layer_dropout != nullptr ? (*layer_dropout)[l] : 0.0;
    for (std::size_t t = 0; t < T; ++t) {
      next[t] = g.concat(h_f[t], h_b[t]);
      if (rate > 0.0) {
        next[t] = g.mul_const(next[t], dropout_mask(2 * H, rate, *dropout_rng));
      }
    }
    cur = std::move(next);
    if (l + 1 == spec.layers) {
      out.final_fwd = fwd_final;
      out.final_bwd = bwd_final;
    }
  }
  out.steps = std::move(cur);
  return out;
}

void init_linear_params(ParamStore& params, const std::string& prefix, std::size_t out_dim,
                        std::size_t in_dim, RngStream& rng) {
  params.add(prefix + "/w", glorot_init(out_dim, in_dim, rng));
  params.add(prefix + "/b", Tensor::zeros({out_dim}));
}

Var apply_linear(Graph& g, const TapeParams& vars, const std::string& prefix, Var x) {
  return g.add(g.matvec(vars.at(prefix + "/w"), x), vars.at(prefix + "/b"));
}

}  // namespace polyner
