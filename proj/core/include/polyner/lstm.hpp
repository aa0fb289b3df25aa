#pragma once

#include <map>
#include <string>
#include <vector>

#include "polyner/autodiff.hpp"
#include "polyner/optim.hpp"
#include "polyner/rng.hpp"

namespace polyner {

// One tape leaf per parameter tensor, so repeated applications of the same
// module (the sub-token encoder runs once per word) share a single Var and a
// single gradient accumulation point.
class TapeParams {
 public:
  TapeParams(Graph& g, const ParamStore& params, ParamStore* grads);

  Var at(const std::string& name) const;
  bool has(const std::string& name) const { return vars_.count(name) > 0; }

 private:
  std::map<std::string, Var> vars_;
};

struct BiLstmSpec {
  std::size_t layers = 1;
  std::size_t hidden = 1;
  std::size_t input_dim = 1;
};

// Parameters live under <prefix>/layer_<i>/<dir>/{w_x, w_h, b} with dir in
// {fwd, bwd}. The stacked 4H gate rows are ordered input, forget, cell,
// output; forget biases start at +1.
void init_bilstm_params(ParamStore& params, const std::string& prefix, const BiLstmSpec& spec,
                        RngStream& rng);

struct BiLstmOut {
  std::vector<Var> steps;  // per step: concat(forward h, backward h), 2H each
  Var final_fwd;           // top layer forward state after the last step
  Var final_bwd;           // top layer backward state after its last step (t=0)
};

// Runs the stacked bidirectional pass. When layer_dropout is non-null it
// holds one rate per layer, applied to that layer's per-step outputs with a
// fresh inverted-dropout mask per step drawn from dropout_rng; final states
// are never masked.
BiLstmOut apply_bilstm(Graph& g, const TapeParams& vars, const std::string& prefix,
                       const BiLstmSpec& spec, const std::vector<Var>& inputs,
                       const std::vector<double>* layer_dropout = nullptr,
                       RngStream* dropout_rng = nullptr);

// Dense layer y = W x + b under <prefix>/{w, b}.
void init_linear_params(ParamStore& params, const std::string& prefix, std::size_t out_dim,
                        std::size_t in_dim, RngStream& rng);
Var apply_linear(Graph& g, const TapeParams& vars, const std::string& prefix, Var x);

}  // namespace polyner
