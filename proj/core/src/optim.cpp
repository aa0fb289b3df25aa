#include "polyner/optim.hpp"

#include <cmath>

#include "polyner/errors.hpp"

namespace polyner {

void ParamStore::add(std::string name, Tensor value) {
  if (name.empty()) raise(ErrorKind::InvalidArgument, "empty parameter name");
  auto [it, inserted] = index_.emplace(name, names_.size());
  if (!inserted) raise(ErrorKind::InvalidArgument, "duplicate parameter '" + name + "'");
  names_.push_back(std::move(name));
  values_.push_back(std::move(value));
}

Tensor& ParamStore::at(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) raise(ErrorKind::InvalidArgument, "no parameter '" + name + "'");
  return values_[it->second];
}

const Tensor& ParamStore::at(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) raise(ErrorKind::InvalidArgument, "no parameter '" + name + "'");
  return values_[it->second];
}

std::size_t ParamStore::total_params() const {
  std::size_t total = 0;
  for (const Tensor& t : values_) total += t.size();
  return total;
}

std::pair<std::size_t, std::size_t> ParamStore::locate(std::size_t flat) const {
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (flat < values_[i].size()) return {i, flat};
    flat -= values_[i].size();
  }
  raise(ErrorKind::InvalidArgument, "flat coordinate out of range");
}

bool ParamStore::same_layout(const ParamStore& other) const {
  if (names_ != other.names_) return false;
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!values_[i].same_shape(other.values_[i])) return false;
  }
  return true;
}

ParamStore zeros_like(const ParamStore& store) {
  ParamStore out;
  for (std::size_t i = 0; i < store.size(); ++i) {
    out.add(store.names()[i], Tensor::zeros(store.at(i).shape()));
  }
  return out;
}

void zero_all(ParamStore& store) {
  for (std::size_t i = 0; i < store.size(); ++i) store.at(i).fill(0.0);
}

AdamState init_adam(const ParamStore& params, AdamHyper hyper) {
  AdamState state;
  state.hyper = hyper;
  state.m = zeros_like(params);
  state.v = zeros_like(params);
  state.t = 0;
  return state;
}

void adam_step(ParamStore& params, const ParamStore& grads, AdamState& state) {
  if (!params.same_layout(grads) || !params.same_layout(state.m)) {
    raise(ErrorKind::LayoutMismatch, "optimizer state does not match parameters");
  }
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (!grads.at(i).all_finite()) {
      raise(ErrorKind::NonFiniteGradient, "non-finite gradient in '" + grads.names()[i] + "'");
    }
  }
  state.t += 1;
  const AdamHyper& h = state.hyper;
  double bc1 = 1.0 - std::pow(h.beta1, static_cast<double>(state.t));
  double bc2 = 1.0 - std::pow(h.beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params.at(i).flat();
    auto g = grads.at(i).flat();
    auto m = state.m.at(i).flat();
    auto v = state.v.at(i).flat();
    for (std::size_t j = 0; j < p.size(); ++j) {
      m[j] = h.beta1 * m[j] + (1.0 - h.beta1) * g[j];
      v[j] = h.beta2 * v[j] + (1.0 - h.beta2) * g[j] * g[j];
      double mhat = m[j] / bc1;
      double vhat = v[j] / bc2;
      p[j] -= h.lr * mhat / (std::sqrt(vhat) + h.eps);
    }
  }
}

Tensor glorot_init(std::size_t rows, std::size_t cols, RngStream& rng) {
  double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  return uniform_init({rows, cols}, -bound, bound, rng);
}

Tensor uniform_init(std::vector<std::size_t> shape, double lo, double hi, RngStream& rng) {
  Tensor t = Tensor::zeros(std::move(shape));
  for (double& v : t.flat()) v = rng.next_double(lo, hi);
  return t;
}

Tensor dropout_mask(std::size_t n, double rate, RngStream& rng) {
  if (rate < 0.0 || rate >= 1.0) raise(ErrorKind::InvalidRate, "dropout rate must be in [0, 1)");
  Tensor mask = Tensor::full({n}, 1.0 / (1.0 - rate));
  for (double& v : mask.flat()) {
    if (rng.next_bernoulli(rate)) v = 0.0;
  }
  return mask;
}

GradCheckResult grad_check(const LossFn& loss_fn, ParamStore& params, double h,
                           std::size_t samples, RngStream& rng) {
  if (h <= 0.0) raise(ErrorKind::InvalidArgument, "grad_check step must be positive");
  if (samples == 0) raise(ErrorKind::InvalidArgument, "grad_check needs at least one sample");

  ParamStore grads = zeros_like(params);
  (void)loss_fn(params, &grads);

  GradCheckResult result;
  std::size_t total = params.total_params();
  for (std::size_t s = 0; s < samples; ++s) {
    std::size_t flat = rng.next_index(total);
    auto [ti, off] = params.locate(flat);
    double saved = params.at(ti)[off];

    params.at(ti)[off] = saved + h;
    double up = loss_fn(params, nullptr);
    params.at(ti)[off] = saved - h;
    double down = loss_fn(params, nullptr);
    params.at(ti)[off] = saved;

    double fd = (up - down) / (2.0 * h);
    double an = grads.at(ti)[off];
    double denom = std::max({std::abs(fd), std::abs(an), 1e-3});
    double rel = std::abs(fd - an) / denom;
    if (rel >= result.max_rel_err) {
      result.max_rel_err = rel;
      result.worst_name = params.names()[ti];
      result.worst_offset = off;
      result.fd = fd;
      result.analytic = an;
    }
  }
  return result;
}

}  // namespace polyner
