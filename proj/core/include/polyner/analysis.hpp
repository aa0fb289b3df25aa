#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "polyner/checkpoint.hpp"
#include "polyner/corpus.hpp"
#include "polyner/optim.hpp"

namespace polyner {

// Magnitude pruning targets weight matrices and embedding tables: tensors of
// rank >= 2 outside the crf/ group. Biases keep their values, and zeroing
// transition weights would change the label semantics rather than capacity.
bool is_prunable(const std::string& name, const Tensor& value);
std::size_t prunable_count(const ParamStore& params);

struct PruneMask {
  // One flag per coordinate, aligned to the ParamStore entry order.
  // Non-prunable coordinates are always kept.
  std::vector<std::vector<std::uint8_t>> keep;
  std::size_t prunable = 0;  // prunable coordinates in the store
  std::size_t kept = 0;      // prunable coordinates left nonzero
  double kept_fraction = 1.0;
};

struct PruneResult {
  Checkpoint checkpoint;
  PruneMask mask;
};

// Zero the lowest-magnitude `fraction` of prunable coordinates under one
// global threshold; kept count = round((1 - fraction) * prunable). Magnitude
// ties resolve by store order, then flat index. Optimizer state is untouched.
PruneResult prune(const Checkpoint& ckpt, double fraction);

// F1 values are in points (0..100), matching how the curves are read.
struct PruneCurve {
  std::vector<double> fractions;                  // ascending, starting at 0.0
  std::vector<std::map<std::string, double>> f1;  // per fraction: language -> F1

  std::vector<std::string> languages() const;
};

// Evaluate the checkpoint pruned at each fraction on every corpus's split.
PruneCurve prune_sweep(const Checkpoint& ckpt, const std::vector<LabeledCorpus>& corpora,
                       const std::string& split, const std::vector<double>& fractions);

// Largest swept fraction whose F1 stays within `delta` points of the
// fraction-0 baseline; the scan stops at the first violation, so recoveries
// past a dip do not count.
double overprune_threshold(const PruneCurve& curve, const std::string& language,
                           double delta = 1.0);

struct ParameterBudget {
  std::map<std::string, std::size_t> per_model;  // model name -> prunable count
  std::size_t combined = 0;                      // sum over models
  std::map<std::string, std::size_t> retained;   // after pruning, when known
};

ParameterBudget parameter_budget(
    const std::vector<std::pair<std::string, const Checkpoint*>>& models);

struct FisherDiagonal {
  ParamStore values;  // same layout as the model's parameters, all >= 0
  std::string language;
  std::size_t n_examples = 0;
  std::size_t samples_per_example = 0;
  std::string pooling;  // "" for a single estimate, "mean" when pooled
};

// Empirical Fisher diagonal over the corpus's train split: per example,
// label sequences are sampled from the model's posterior, the log-posterior
// gradient of each sample is pushed through the full network, and squared
// gradients are averaged over samples then examples. Deterministic for a
// given seed regardless of worker count (per-example streams, fixed
// reduction order). `standard_error` optionally receives the Monte-Carlo
// standard error per coordinate.
FisherDiagonal fisher_diagonal(const Checkpoint& ckpt, const LabeledCorpus& corpus,
                               std::size_t samples_per_example, std::uint64_t seed,
                               ParamStore* standard_error = nullptr);

// Unweighted mean of aligned diagonals: the pooled "rest of the languages"
// view used for one-vs-rest overlap.
FisherDiagonal mean_fisher(const std::vector<const FisherDiagonal*>& parts);

struct OverlapReport {
  std::vector<int> ks;  // percentages
  std::map<std::string, std::map<int, double>> per_layer;
  std::map<int, double> average;  // unweighted over layers
};

// Per layer (store entry) and per k: the top ceil(k% * layer size)
// coordinates of each diagonal by value (ties toward the lower flat index),
// reported as 100 * |A intersect B| / |A|.
OverlapReport topk_overlap(const FisherDiagonal& fa, const FisherDiagonal& fb,
                           const std::vector<int>& ks = {5, 25, 50});

struct ErrorReport {
  // Token class = entity type with the BIO prefix stripped, or "O".
  // An error is a token whose predicted class differs from its gold class,
  // counted under the gold class.
  std::map<std::string, std::size_t> errors;
  std::map<std::string, std::size_t> totals;  // gold tokens per class
  std::optional<std::map<std::string, long long>> deltas;  // errors - reference
};

ErrorReport error_counts(const std::vector<Sentence>& gold,
                         const std::vector<std::vector<int>>& predicted,
                         const std::vector<std::vector<int>>* reference_predicted,
                         const TagSet& tagset);

// A typed entity surface form: the span's tokens joined by single spaces.
struct SurfaceEntity {
  std::string text;
  std::string etype;

  bool operator==(const SurfaceEntity& other) const {
    return text == other.text && etype == other.etype;
  }
};

struct SpanErrors {
  std::vector<SurfaceEntity> precision_errors;  // predicted, matching no gold span
  std::vector<SurfaceEntity> recall_errors;     // gold, matched by no prediction
};

SpanErrors span_errors(const std::vector<Sentence>& gold,
                       const std::vector<std::vector<EntitySpan>>& predicted,
                       const TagSet& tagset);

// Every entity span in the sentences, as surface forms.
std::vector<SurfaceEntity> collect_entities(const std::vector<Sentence>& sentences,
                                            const TagSet& tagset);

struct CommonEntityReport {
  std::vector<std::string> granularities;  // exact, 4-gram .. 8-gram
  std::map<std::string, double> precision_rate;  // per granularity
  std::map<std::string, double> recall_rate;
  double avg_precision_rate = 0.0;
  double avg_recall_rate = 0.0;
  double harmonic_mean = 0.0;  // of the two averaged rates, 0/0 := 0
};

// Fraction of error spans that are "common": sharing the entity type and the
// granularity's surface criterion (exact string, or at least one character
// n-gram) with any entity of the reference training sets. Empty error lists
// yield rate 0.
CommonEntityReport common_entity_rate(const SpanErrors& errors,
                                      const std::vector<SurfaceEntity>& other_train);

std::string prune_curve_csv(const PruneCurve& curve);
std::string prune_curve_json(const PruneCurve& curve);
// Per-language blocks of "fraction f1" pairs, blank-line separated, each
// addressable as a gnuplot index.
std::string prune_curve_gnuplot(const PruneCurve& curve);
std::string overlap_csv(const OverlapReport& report);
std::string overlap_json(const OverlapReport& report);
std::string error_report_csv(const ErrorReport& report);
std::string error_report_json(const ErrorReport& report);
std::string common_entity_csv(const CommonEntityReport& report);
std::string common_entity_json(const CommonEntityReport& report);
std::string budget_csv(const ParameterBudget& budget);
std::string budget_json(const ParameterBudget& budget);

}  // namespace polyner
