#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "polyner/autodiff.hpp"
#include "polyner/corpus.hpp"
#include "polyner/rng.hpp"
#include "polyner/tensor.hpp"

namespace polyner {

// Linear-chain potentials. Scoring convention:
//   score(y) = start[y_1] + sum_t emissions[t, y_t]
//            + sum_t transitions[y_t, y_{t+1}] + stop[y_T]
// with transitions indexed row = from, column = to.
struct CrfPotentials {
  Tensor emissions;    // T x L
  Tensor transitions;  // L x L
  Tensor start;        // L
  Tensor stop;         // L

  std::size_t steps() const { return emissions.dim(0); }
  std::size_t labels() const { return emissions.dim(1); }
};

void validate_potentials(const CrfPotentials& pot);

double sequence_score(const CrfPotentials& pot, const std::vector<int>& labels);

// log sum over all L^T sequences of exp(score), by the forward recursion in
// log space.
double log_partition(const CrfPotentials& pot);

struct CrfGrad {
  Tensor emissions;
  Tensor transitions;
  Tensor start;
  Tensor stop;
};

// score(gold) - logZ, always <= 0. When grad is non-null it receives the
// gradient of this value: indicator counts minus the matching marginals.
double log_likelihood(const CrfPotentials& pot, const std::vector<int>& gold,
                      CrfGrad* grad = nullptr);

struct ViterbiResult {
  std::vector<int> labels;
  double score = 0.0;
};

// Highest-scoring sequence; ties resolve toward the lower label index.
ViterbiResult viterbi(const CrfPotentials& pot);

struct CrfMarginals {
  Tensor unary;     // T x L
  Tensor pairwise;  // (T-1) x L x L
};

CrfMarginals marginals(const CrfPotentials& pot);

// n i.i.d. sequences drawn exactly from p(y|x) by forward filtering and
// backward sampling.
std::vector<std::vector<int>> sample_posterior(const CrfPotentials& pot, RngStream& rng,
                                               std::size_t n);

// Tape node wrapping log_likelihood; parents are the four potential tensors.
Var crf_log_likelihood(Graph& g, Var emissions, Var transitions, Var start, Var stop,
                       const std::vector<int>& gold);

struct TransitionTriple {
  Tensor transitions;
  Tensor start;
  Tensor stop;
};

// Per-language transition scores with a shared fallback, so every language
// resolves whether or not it got its own set.
class TransitionBank {
 public:
  TransitionBank() = default;
  explicit TransitionBank(TransitionTriple shared);

  void set_language(const LanguageId& lang, TransitionTriple triple);
  const TransitionTriple& resolve(const LanguageId& lang) const;
  const TransitionTriple& shared() const { return shared_; }
  bool has_language(const LanguageId& lang) const;

 private:
  TransitionTriple shared_;
  std::map<std::string, TransitionTriple> per_language_;
};

}  // namespace polyner
