#include "polyner/crf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include "polyner/errors.hpp"

namespace polyner {

namespace {

double log_sum_exp(const double* xs, std::size_t n) {
  double mx = xs[0];
  for (std::size_t i = 1; i < n; ++i) mx = std::max(mx, xs[i]);
  if (!std::isfinite(mx)) return mx;
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += std::exp(xs[i] - mx);
  return mx + std::log(acc);
}

// alpha[t][j] = log sum of exp(score of prefixes ending in j at t), including
// emissions up to t and the start score, excluding stop.
Tensor forward_alphas(const CrfPotentials& pot) {
  std::size_t T = pot.steps(), L = pot.labels();
  Tensor alpha = Tensor::zeros({T, L});
  for (std::size_t j = 0; j < L; ++j) alpha(0, j) = pot.start[j] + pot.emissions(0, j);
  std::vector<double> work(L);
  for (std::size_t t = 1; t < T; ++t) {
    for (std::size_t j = 0; j < L; ++j) {
      for (std::size_t i = 0; i < L; ++i) {
        work[i] = alpha(t - 1, i) + pot.transitions(i, j);
      }
      alpha(t, j) = pot.emissions(t, j) + log_sum_exp(work.data(), L);
    }
  }
  return alpha;
}

// beta[t][i] = log sum over suffix continuations from label i at t, including
// the stop score, excluding emission at t.
Tensor backward_betas(const CrfPotentials& pot) {
  std::size_t T = pot.steps(), L = pot.labels();
  Tensor beta = Tensor::zeros({T, L});
  for (std::size_t i = 0; i < L; ++i) beta(T - 1, i) = pot.stop[i];
  std::vector<double> work(L);
  for (std::size_t t = T - 1; t > 0; --t) {
    for (std::size_t i = 0; i < L; ++i) {
      for (std::size_t j = 0; j < L; ++j) {
        work[j] = pot.transitions(i, j) + pot.emissions(t, j) + beta(t, j);
      }
      beta(t - 1, i) = log_sum_exp(work.data(), L);
    }
  }
  return beta;
}

void check_gold(const CrfPotentials& pot, const std::vector<int>& gold) {
  if (gold.size() != pot.steps()) {
    raise(ErrorKind::LengthMismatch, "gold sequence length does not match emissions");
  }
  for (int y : gold) {
    if (y < 0 || static_cast<std::size_t>(y) >= pot.labels()) {
      raise(ErrorKind::InvalidArgument, "gold label out of range");
    }
  }
}

}  // namespace

void validate_potentials(const CrfPotentials& pot) {
  if (pot.emissions.rank() != 2 || pot.emissions.dim(0) < 1 || pot.emissions.dim(1) < 1) {
    raise(ErrorKind::ShapeMismatch, "emissions must be [T x L] with T, L >= 1");
  }
  std::size_t L = pot.labels();
  if (pot.transitions.rank() != 2 || pot.transitions.dim(0) != L || pot.transitions.dim(1) != L) {
    raise(ErrorKind::ShapeMismatch, "transitions must be [L x L]");
  }
  if (pot.start.rank() != 1 || pot.start.dim(0) != L || pot.stop.rank() != 1 ||
      pot.stop.dim(0) != L) {
    raise(ErrorKind::ShapeMismatch, "start and stop must be [L]");
  }
  if (!pot.emissions.all_finite() || !pot.transitions.all_finite() || !pot.start.all_finite() ||
      !pot.stop.all_finite()) {
    raise(ErrorKind::InvalidArgument, "potentials must be finite");
  }
}

double sequence_score(const CrfPotentials& pot, const std::vector<int>& labels) {
  check_gold(pot, labels);
  std::size_t T = pot.steps();
  double score = pot.start[static_cast<std::size_t>(labels[0])] +
                 pot.stop[static_cast<std::size_t>(labels[T - 1])];
  for (std::size_t t = 0; t < T; ++t) {
    score += pot.emissions(t, static_cast<std::size_t>(labels[t]));
  }
  for (std::size_t t = 0; t + 1 < T; ++t) {
    score += pot.transitions(static_cast<std::size_t>(labels[t]),
                             static_cast<std::size_t>(labels[t + 1]));
  }
  return score;
}

double log_partition(const CrfPotentials& pot) {
  validate_potentials(pot);
  std::size_t T = pot.steps(), L = pot.labels();
  Tensor alpha = forward_alphas(pot);
  std::vector<double> final_scores(L);
  for (std::size_t j = 0; j < L; ++j) final_scores[j] = alpha(T - 1, j) + pot.stop[j];
  return log_sum_exp(final_scores.data(), L);
}

double log_likelihood(const CrfPotentials& pot, const std::vector<int>& gold, CrfGrad* grad) {
  validate_potentials(pot);
  check_gold(pot, gold);
  std::size_t T = pot.steps(), L = pot.labels();

  if (grad == nullptr) {
    return sequence_score(pot, gold) - log_partition(pot);
  }

  CrfMarginals marg = marginals(pot);
  grad->emissions = Tensor::zeros({T, L});
  grad->transitions = Tensor::zeros({L, L});
  grad->start = Tensor::zeros({L});
  grad->stop = Tensor::zeros({L});

  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t j = 0; j < L; ++j) {
      grad->emissions(t, j) = -marg.unary(t, j);
    }
    grad->emissions(t, static_cast<std::size_t>(gold[t])) += 1.0;
  }
  for (std::size_t t = 0; t + 1 < T; ++t) {
    for (std::size_t i = 0; i < L; ++i) {
      for (std::size_t j = 0; j < L; ++j) {
        grad->transitions(i, j) -= marg.pairwise(t, i, j);
      }
    }
    grad->transitions(static_cast<std::size_t>(gold[t]),
                      static_cast<std::size_t>(gold[t + 1])) += 1.0;
  }
  for (std::size_t j = 0; j < L; ++j) {
    grad->start[j] = -marg.unary(0, j);
    grad->stop[j] = -marg.unary(T - 1, j);
  }
  grad->start[static_cast<std::size_t>(gold[0])] += 1.0;
  grad->stop[static_cast<std::size_t>(gold[T - 1])] += 1.0;

  return sequence_score(pot, gold) - log_partition(pot);
}

ViterbiResult viterbi(const CrfPotentials& pot) {
  validate_potentials(pot);
  std::size_t T = pot.steps(), L = pot.labels();
  Tensor delta = Tensor::zeros({T, L});
  std::vector<std::vector<std::size_t>> back(T, std::vector<std::size_t>(L, 0));

  for (std::size_t j = 0; j < L; ++j) delta(0, j) = pot.start[j] + pot.emissions(0, j);
  for (std::size_t t = 1; t < T; ++t) {
    for (std::size_t j = 0; j < L; ++j) {
      std::size_t best_i = 0;
      double best = delta(t - 1, 0) + pot.transitions(0, j);
      for (std::size_t i = 1; i < L; ++i) {
        double cand = delta(t - 1, i) + pot.transitions(i, j);
        if (cand > best) {
          best = cand;
          best_i = i;
        }
      }
      delta(t, j) = pot.emissions(t, j) + best;
      back[t][j] = best_i;
    }
  }

  std::size_t best_j = 0;
  double best = delta(T - 1, 0) + pot.stop[0];
  for (std::size_t j = 1; j < L; ++j) {
    double cand = delta(T - 1, j) + pot.stop[j];
    if (cand > best) {
      best = cand;
      best_j = j;
    }
  }

  ViterbiResult result;
  result.score = best;
  result.labels.assign(T, 0);
  result.labels[T - 1] = static_cast<int>(best_j);
  for (std::size_t t = T - 1; t > 0; --t) {
    best_j = back[t][best_j];
    result.labels[t - 1] = static_cast<int>(best_j);
  }
  return result;
}

CrfMarginals marginals(const CrfPotentials& pot) {
  validate_potentials(pot);
  std::size_t T = pot.steps(), L = pot.labels();
  Tensor alpha = forward_alphas(pot);
  Tensor beta = backward_betas(pot);

  std::vector<double> final_scores(L);
  for (std::size_t j = 0; j < L; ++j) final_scores[j] = alpha(T - 1, j) + pot.stop[j];
  double log_z = log_sum_exp(final_scores.data(), L);

  CrfMarginals marg;
  marg.unary = Tensor::zeros({T, L});
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t j = 0; j < L; ++j) {
      marg.unary(t, j) = std::exp(alpha(t, j) + beta(t, j) - log_z);
    }
  }
  if (T > 1) {
    marg.pairwise = Tensor::zeros({T - 1, L, L});
    for (std::size_t t = 0; t + 1 < T; ++t) {
      for (std::size_t i = 0; i < L; ++i) {
        for (std::size_t j = 0; j < L; ++j) {
          marg.pairwise(t, i, j) = std::exp(alpha(t, i) + pot.transitions(i, j) +
                                            pot.emissions(t + 1, j) + beta(t + 1, j) - log_z);
        }
      }
    }
  } else {
    marg.pairwise = Tensor::zeros({0, L, L});
  }
  return marg;
}

std::vector<std::vector<int>> sample_posterior(const CrfPotentials& pot, RngStream& rng,
                                               std::size_t n) {
  validate_potentials(pot);
  if (n < 1) raise(ErrorKind::InvalidArgument, "sample count must be >= 1");
  std::size_t T = pot.steps(), L = pot.labels();
  Tensor alpha = forward_alphas(pot);

  std::vector<double> weights(L);
  auto draw = [&](auto score_of) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < L; ++i) mx = std::max(mx, score_of(i));
    for (std::size_t i = 0; i < L; ++i) weights[i] = std::exp(score_of(i) - mx);
    return rng.next_categorical(weights);
  };

  std::vector<std::vector<int>> samples;
  samples.reserve(n);
  for (std::size_t s = 0; s < n; ++s) {
    std::vector<int> y(T, 0);
    std::size_t last =
        draw([&](std::size_t j) { return alpha(T - 1, j) + pot.stop[j]; });
    y[T - 1] = static_cast<int>(last);
    for (std::size_t t = T - 1; t > 0; --t) {
      std::size_t next = static_cast<std::size_t>(y[t]);
      std::size_t cur =
          draw([&](std::size_t i) { return alpha(t - 1, i) + pot.transitions(i, next); });
      y[t - 1] = static_cast<int>(cur);
    }
    samples.push_back(std::move(y));
  }
  return samples;
}

Var crf_log_likelihood(Graph& g, Var emissions, Var transitions, Var start, Var stop,
                       const std::vector<int>& gold) {
  CrfPotentials pot;
  pot.emissions = g.value(emissions);
  pot.transitions = g.value(transitions);
  pot.start = g.value(start);
  pot.stop = g.value(stop);

  auto grad = std::make_shared<CrfGrad>();
  double ll = log_likelihood(pot, gold, grad.get());

  Var v = g.constant(Tensor::vector({ll}));
  struct Hook {
    Var out, emissions, transitions, start, stop;
    std::shared_ptr<CrfGrad> grad;
    void operator()(Graph& g) const {
      double gr = g.grad(out)[0];
      if (gr == 0.0) return;
      auto apply = [&](Var target, const Tensor& d) {
        auto dst = g.grad(target).flat();
        auto src = d.flat();
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += gr * src[i];
      };
      apply(emissions, grad->emissions);
      apply(transitions, grad->transitions);
      apply(start, grad->start);
      apply(stop, grad->stop);
    }
  };
  g.set_backward(v, Hook{v, emissions, transitions, start, stop, grad});
  return v;
}

TransitionBank::TransitionBank(TransitionTriple shared) : shared_(std::move(shared)) {
  std::size_t L = shared_.transitions.rank() == 2 ? shared_.transitions.dim(0) : 0;
  if (L == 0 || shared_.transitions.dim(1) != L || shared_.start.rank() != 1 ||
      shared_.start.dim(0) != L || shared_.stop.rank() != 1 || shared_.stop.dim(0) != L) {
    raise(ErrorKind::ShapeMismatch, "transition triple shapes are inconsistent");
  }
}

void TransitionBank::set_language(const LanguageId& lang, TransitionTriple triple) {
  if (!triple.transitions.same_shape(shared_.transitions) ||
      !triple.start.same_shape(shared_.start) || !triple.stop.same_shape(shared_.stop)) {
    raise(ErrorKind::ShapeMismatch, "language transitions differ in shape from shared");
  }
  per_language_[lang.code()] = std::move(triple);
}

const TransitionTriple& TransitionBank::resolve(const LanguageId& lang) const {
  auto it = per_language_.find(lang.code());
  return it == per_language_.end() ? shared_ : it->second;
}

bool TransitionBank::has_language(const LanguageId& lang) const {
  return per_language_.count(lang.code()) > 0;
}

}  // namespace polyner
