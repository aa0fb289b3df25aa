#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "polyner/rng.hpp"
#include "polyner/tensor.hpp"

namespace polyner {

// Named parameter tensors in insertion order. Iteration order is part of the
// contract: checkpoints, Adam state, and flat coordinate ids all follow it.
class ParamStore {
 public:
  void add(std::string name, Tensor value);
  bool has(const std::string& name) const { return index_.count(name) > 0; }
  Tensor& at(const std::string& name);
  const Tensor& at(const std::string& name) const;
  Tensor& at(std::size_t i) { return values_[i]; }
  const Tensor& at(std::size_t i) const { return values_[i]; }

  const std::vector<std::string>& names() const { return names_; }
  std::size_t size() const { return names_.size(); }
  std::size_t total_params() const;

  // Locate a flat coordinate id in [0, total_params) as (tensor, offset).
  std::pair<std::size_t, std::size_t> locate(std::size_t flat) const;

  bool same_layout(const ParamStore& other) const;

  bool operator==(const ParamStore& other) const {
    return names_ == other.names_ && values_ == other.values_;
  }

 private:
  std::vector<std::string> names_;
  std::vector<Tensor> values_;
  std::map<std::string, std::size_t> index_;
};

ParamStore zeros_like(const ParamStore& store);
void zero_all(ParamStore& store);

struct AdamHyper {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  bool operator==(const AdamHyper& other) const {
    return lr == other.lr && beta1 == other.beta1 && beta2 == other.beta2 &&
           eps == other.eps;
  }
};

struct AdamState {
  AdamHyper hyper;
  ParamStore m;
  ParamStore v;
  std::uint64_t t = 0;

  bool operator==(const AdamState& other) const {
    return hyper == other.hyper && m == other.m && v == other.v && t == other.t;
  }
};

AdamState init_adam(const ParamStore& params, AdamHyper hyper = {});

// Bias-corrected Adam update in place; one call advances t by one.
void adam_step(ParamStore& params, const ParamStore& grads, AdamState& state);

// Uniform(-sqrt(6/(fan_in+fan_out)), +...) over a rank-2 shape {rows, cols}
// used as y = W x, so fan_in = cols and fan_out = rows.
Tensor glorot_init(std::size_t rows, std::size_t cols, RngStream& rng);
Tensor uniform_init(std::vector<std::size_t> shape, double lo, double hi, RngStream& rng);

// Inverted-dropout mask: each unit 0 with probability rate, else 1/(1-rate),
// so evaluation needs no rescaling.
Tensor dropout_mask(std::size_t n, double rate, RngStream& rng);

struct GradCheckResult {
  double max_rel_err = 0.0;
  std::string worst_name;
  std::size_t worst_offset = 0;
  double fd = 0.0;
  double analytic = 0.0;
};

// loss_fn(params, grads) returns the scalar loss; when grads is non-null it
// must also accumulate d loss / d params into it (grads arrives zeroed).
using LossFn = std::function<double(ParamStore&, ParamStore*)>;

// Central finite differences on `samples` randomly chosen coordinates.
// Relative error uses a 1e-3 floor in the denominator so near-zero gradient
// pairs do not divide noise by noise.
GradCheckResult grad_check(const LossFn& loss_fn, ParamStore& params, double h,
                           std::size_t samples, RngStream& rng);

}  // namespace polyner
