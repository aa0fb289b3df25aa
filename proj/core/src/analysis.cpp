#include "polyner/analysis.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <set>
#include <thread>
#include <tuple>

#include <json.hpp>

#include "polyner/crf.hpp"
#include "polyner/errors.hpp"
#include "polyner/eval.hpp"
#include "polyner/taggers.hpp"

namespace polyner {

namespace {

std::string fixed6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

unsigned worker_count() {
  if (const char* env = std::getenv("NER_THREADS")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

// Runs fn(0..n-1) on the worker pool. Each job writes only its own slots, so
// results do not depend on scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  std::size_t workers = std::min<std::size_t>(worker_count(), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          return;
        }
      }
    });
  }
  for (std::thread& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace

bool is_prunable(const std::string& name, const Tensor& value) {
  return value.rank() >= 2 && name.rfind("crf/", 0) != 0;
}

std::size_t prunable_count(const ParamStore& params) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (is_prunable(params.names()[i], params.at(i))) n += params.at(i).size();
  }
  return n;
}

PruneResult prune(const Checkpoint& ckpt, double fraction) {
  if (!(fraction >= 0.0 && fraction < 1.0)) {
    raise(ErrorKind::InvalidFraction, "prune fraction must be in [0, 1)");
  }

  PruneResult result;
  result.checkpoint = ckpt;
  ParamStore& params = result.checkpoint.params;

  PruneMask& mask = result.mask;
  mask.keep.resize(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    mask.keep[i].assign(params.at(i).size(), 1);
  }

  // (magnitude, store entry, flat offset): the sort key makes ties at the
  // threshold deterministic.
  std::vector<std::tuple<double, std::size_t, std::size_t>> coords;
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!is_prunable(params.names()[i], params.at(i))) continue;
    std::span<const double> flat = params.at(i).flat();
    for (std::size_t off = 0; off < flat.size(); ++off) {
      coords.emplace_back(std::fabs(flat[off]), i, off);
    }
  }
  mask.prunable = coords.size();

  std::size_t kept = static_cast<std::size_t>(
      std::llround((1.0 - fraction) * static_cast<double>(coords.size())));
  kept = std::min(kept, coords.size());
  std::size_t zeroed = coords.size() - kept;
  std::sort(coords.begin(), coords.end());
  for (std::size_t c = 0; c < zeroed; ++c) {
    auto [mag, entry, off] = coords[c];
    params.at(entry).flat()[off] = 0.0;
    mask.keep[entry][off] = 0;
  }
  mask.kept = kept;
  mask.kept_fraction =
      mask.prunable == 0 ? 1.0
                         : static_cast<double>(kept) / static_cast<double>(mask.prunable);
  return result;
}

std::vector<std::string> PruneCurve::languages() const {
  std::vector<std::string> langs;
  if (f1.empty()) return langs;
  for (const auto& [lang, score] : f1.front()) langs.push_back(lang);
  return langs;
}

PruneCurve prune_sweep(const Checkpoint& ckpt, const std::vector<LabeledCorpus>& corpora,
                       const std::string& split, const std::vector<double>& fractions) {
  if (fractions.empty() || fractions.front() != 0.0) {
    raise(ErrorKind::InvalidArgument, "fractions must start at 0.0");
  }
  if (!std::is_sorted(fractions.begin(), fractions.end()) ||
      std::adjacent_find(fractions.begin(), fractions.end()) != fractions.end()) {
    raise(ErrorKind::InvalidArgument, "fractions must be strictly ascending");
  }

  PruneCurve curve;
  curve.fractions = fractions;
  curve.f1.resize(fractions.size());
  parallel_for(fractions.size(), [&](std::size_t i) {
    PruneResult pruned = prune(ckpt, fractions[i]);
    for (const LabeledCorpus& corpus : corpora) {
      EvalReport report = evaluate(pruned.checkpoint, corpus, split);
      curve.f1[i][corpus.language().code()] = report.f1 * 100.0;
    }
  });
  return curve;
}

double overprune_threshold(const PruneCurve& curve, const std::string& language,
                           double delta) {
  if (curve.fractions.size() != curve.f1.size()) {
    raise(ErrorKind::InvalidArgument, "curve rows must match its fractions");
  }
  if (curve.fractions.empty() || curve.fractions.front() != 0.0) {
    raise(ErrorKind::MissingBaseline, "curve has no fraction-0.0 baseline");
  }
  for (const auto& row : curve.f1) {
    if (row.count(language) == 0) {
      raise(ErrorKind::MissingBaseline, "curve has no values for language '" + language + "'");
    }
  }

  double limit = curve.f1.front().at(language) - delta;
  double threshold = curve.fractions.front();
  for (std::size_t i = 1; i < curve.fractions.size(); ++i) {
    if (curve.f1[i].at(language) < limit) break;
    threshold = curve.fractions[i];
  }
  return threshold;
}

ParameterBudget parameter_budget(
    const std::vector<std::pair<std::string, const Checkpoint*>>& models) {
  ParameterBudget budget;
  for (const auto& [name, ckpt] : models) {
    std::size_t count = prunable_count(ckpt->params);
    budget.per_model[name] = count;
    budget.combined += count;
  }
  return budget;
}

namespace {

constexpr std::size_t kFisherBlock = 8;

struct FisherPartial {
  ParamStore sum;       // sum over examples of mean-over-samples g^2
  ParamStore variance;  // sum over examples of per-example MC variance / S
};

void fisher_example(HierCrfTagger& tagger, const Sentence& sentence, std::size_t example_index,
                    std::size_t samples, std::uint64_t seed, FisherPartial& out) {
  ParamStore grads = zeros_like(tagger.params());
  HierCrfTape tape = tagger.build_tape(sentence, &grads);
  CrfMarginals marg = marginals(tape.potentials);
  std::size_t T = tape.potentials.steps();
  std::size_t L = tape.potentials.labels();

  Tensor pair_sum = Tensor::zeros({L, L});
  for (std::size_t t = 0; t + 1 < T; ++t) {
    for (std::size_t a = 0; a < L; ++a) {
      for (std::size_t b = 0; b < L; ++b) pair_sum(a, b) += marg.pairwise(t, a, b);
    }
  }

  RngStream rng(seed, "fisher", example_index);
  std::vector<std::vector<int>> draws = sample_posterior(tape.potentials, rng, samples);

  ParamStore sq_sum = zeros_like(grads);
  ParamStore sq_sq = zeros_like(grads);
  for (const std::vector<int>& y : draws) {
    tape.graph.zero_grads();
    zero_all(grads);

    Tensor& de = tape.graph.grad(tape.emissions);
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t l = 0; l < L; ++l) de(t, l) = -marg.unary(t, l);
      de(t, static_cast<std::size_t>(y[t])) += 1.0;
    }
    Tensor& dt = tape.graph.grad(tape.transitions);
    for (std::size_t a = 0; a < L; ++a) {
      for (std::size_t b = 0; b < L; ++b) dt(a, b) = -pair_sum(a, b);
    }
    for (std::size_t t = 0; t + 1 < T; ++t) {
      dt(static_cast<std::size_t>(y[t]), static_cast<std::size_t>(y[t + 1])) += 1.0;
    }
    Tensor& ds = tape.graph.grad(tape.start);
    Tensor& dz = tape.graph.grad(tape.stop);
    for (std::size_t l = 0; l < L; ++l) {
      ds[l] = -marg.unary(0, l);
      dz[l] = -marg.unary(T - 1, l);
    }
    ds[static_cast<std::size_t>(y.front())] += 1.0;
    dz[static_cast<std::size_t>(y.back())] += 1.0;

    tape.graph.backward_sweep();

    for (std::size_t i = 0; i < grads.size(); ++i) {
      std::span<const double> g = grads.at(i).flat();
      std::span<double> acc = sq_sum.at(i).flat();
      std::span<double> acc2 = sq_sq.at(i).flat();
      for (std::size_t c = 0; c < g.size(); ++c) {
        double s = g[c] * g[c];
        acc[c] += s;
        acc2[c] += s * s;
      }
    }
  }

  double S = static_cast<double>(samples);
  for (std::size_t i = 0; i < sq_sum.size(); ++i) {
    std::span<const double> s1 = sq_sum.at(i).flat();
    std::span<const double> s2 = sq_sq.at(i).flat();
    std::span<double> mean = out.sum.at(i).flat();
    std::span<double> var = out.variance.at(i).flat();
    for (std::size_t c = 0; c < s1.size(); ++c) {
      mean[c] += s1[c] / S;
      if (samples > 1) {
        double v = (s2[c] - s1[c] * s1[c] / S) / (S - 1.0);
        var[c] += std::max(0.0, v) / S;
      }
    }
  }
}

}  // namespace

FisherDiagonal fisher_diagonal(const Checkpoint& ckpt, const LabeledCorpus& corpus,
                               std::size_t samples_per_example, std::uint64_t seed,
                               ParamStore* standard_error) {
  if (ckpt.config.arch != Architecture::hiercrf) {
    raise(ErrorKind::UnsupportedArchitecture,
          "Fisher estimation needs a model with posterior sampling");
  }
  if (samples_per_example < 1) {
    raise(ErrorKind::InvalidArgument, "samples_per_example must be >= 1");
  }
  const std::vector<Sentence>& sentences = corpus.split("train");
  if (sentences.empty()) {
    raise(ErrorKind::EmptySplit,
          "corpus '" + corpus.language().code() + "' has no train sentences");
  }

  std::size_t n = sentences.size();
  std::size_t nblocks = (n + kFisherBlock - 1) / kFisherBlock;
  std::vector<FisherPartial> partials(nblocks);

  parallel_for(nblocks, [&](std::size_t b) {
    std::unique_ptr<Tagger> tagger = tagger_from(ckpt);
    auto* hier = dynamic_cast<HierCrfTagger*>(tagger.get());
    FisherPartial& out = partials[b];
    out.sum = zeros_like(ckpt.params);
    out.variance = zeros_like(ckpt.params);
    std::size_t lo = b * kFisherBlock;
    std::size_t hi = std::min(n, lo + kFisherBlock);
    for (std::size_t i = lo; i < hi; ++i) {
      fisher_example(*hier, sentences[i], i, samples_per_example, seed, out);
    }
  });

  FisherDiagonal fisher;
  fisher.values = zeros_like(ckpt.params);
  fisher.language = corpus.language().code();
  fisher.n_examples = n;
  fisher.samples_per_example = samples_per_example;

  ParamStore var_total = zeros_like(ckpt.params);
  for (const FisherPartial& part : partials) {
    for (std::size_t i = 0; i < fisher.values.size(); ++i) {
      std::span<double> acc = fisher.values.at(i).flat();
      std::span<double> var = var_total.at(i).flat();
      std::span<const double> s = part.sum.at(i).flat();
      std::span<const double> v = part.variance.at(i).flat();
      for (std::size_t c = 0; c < acc.size(); ++c) {
        acc[c] += s[c];
        var[c] += v[c];
      }
    }
  }
  double N = static_cast<double>(n);
  for (std::size_t i = 0; i < fisher.values.size(); ++i) {
    for (double& v : fisher.values.at(i).flat()) v /= N;
  }
  if (standard_error != nullptr) {
    for (std::size_t i = 0; i < var_total.size(); ++i) {
      for (double& v : var_total.at(i).flat()) v = std::sqrt(v) / N;
    }
    *standard_error = std::move(var_total);
  }
  return fisher;
}

FisherDiagonal mean_fisher(const std::vector<const FisherDiagonal*>& parts) {
  if (parts.empty()) raise(ErrorKind::InvalidArgument, "nothing to pool");
  FisherDiagonal pooled;
  pooled.values = zeros_like(parts.front()->values);
  pooled.pooling = "mean";
  pooled.samples_per_example = parts.front()->samples_per_example;
  std::vector<std::string> langs;
  for (const FisherDiagonal* part : parts) {
    if (!part->values.same_layout(pooled.values)) {
      raise(ErrorKind::LayoutMismatch, "pooled diagonals must share a layout");
    }
    pooled.n_examples += part->n_examples;
    langs.push_back(part->language);
    for (std::size_t i = 0; i < pooled.values.size(); ++i) {
      std::span<double> acc = pooled.values.at(i).flat();
      std::span<const double> v = part->values.at(i).flat();
      for (std::size_t c = 0; c < acc.size(); ++c) acc[c] += v[c];
    }
  }
  double k = static_cast<double>(parts.size());
  for (std::size_t i = 0; i < pooled.values.size(); ++i) {
    for (double& v : pooled.values.at(i).flat()) v /= k;
  }
  std::sort(langs.begin(), langs.end());
  for (std::size_t i = 0; i < langs.size(); ++i) {
    pooled.language += (i == 0 ? "" : "+") + langs[i];
  }
  return pooled;
}

namespace {

// Indices of the m largest values; equal values rank by lower index.
std::vector<std::size_t> top_indices(std::span<const double> values, std::size_t m) {
  std::vector<std::size_t> order(values.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (values[a] != values[b]) return values[a] > values[b];
    return a < b;
  });
  order.resize(m);
  std::sort(order.begin(), order.end());
  return order;
}

}  // namespace

OverlapReport topk_overlap(const FisherDiagonal& fa, const FisherDiagonal& fb,
                           const std::vector<int>& ks) {
  if (!fa.values.same_layout(fb.values)) {
    raise(ErrorKind::LayoutMismatch, "diagonals must be aligned to the same parameters");
  }
  OverlapReport report;
  report.ks = ks;
  for (std::size_t i = 0; i < fa.values.size(); ++i) {
    const std::string& layer = fa.values.names()[i];
    std::size_t n = fa.values.at(i).size();
    for (int k : ks) {
      std::size_t m = (static_cast<std::size_t>(k) * n + 99) / 100;
      m = std::max<std::size_t>(1, std::min(m, n));
      std::vector<std::size_t> a = top_indices(fa.values.at(i).flat(), m);
      std::vector<std::size_t> b = top_indices(fb.values.at(i).flat(), m);
      std::vector<std::size_t> both;
      std::set_intersection(a.begin(), a.end(), b.begin(), b.end(),
                            std::back_inserter(both));
      report.per_layer[layer][k] =
          100.0 * static_cast<double>(both.size()) / static_cast<double>(m);
    }
  }
  for (int k : ks) {
    double sum = 0.0;
    for (const auto& [layer, by_k] : report.per_layer) sum += by_k.at(k);
    report.average[k] = sum / static_cast<double>(report.per_layer.size());
  }
  return report;
}

namespace {

std::string class_of(int label, const TagSet& tagset) {
  if (label < 0 || static_cast<std::size_t>(label) >= tagset.num_labels()) {
    raise(ErrorKind::InvalidArgument, "label out of range");
  }
  if (label == TagSet::kOutside) return "O";
  return tagset.entity_types()[static_cast<std::size_t>(tagset.type_of_label(label))];
}

}  // namespace

ErrorReport error_counts(const std::vector<Sentence>& gold,
                         const std::vector<std::vector<int>>& predicted,
                         const std::vector<std::vector<int>>* reference_predicted,
                         const TagSet& tagset) {
  if (gold.size() != predicted.size()) {
    raise(ErrorKind::LengthMismatch, "one prediction list per gold sentence");
  }

  ErrorReport report;
  report.errors["O"] = 0;
  report.totals["O"] = 0;
  for (const std::string& etype : tagset.entity_types()) {
    report.errors[etype] = 0;
    report.totals[etype] = 0;
  }

  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (gold[i].size() != predicted[i].size()) {
      raise(ErrorKind::LengthMismatch, "predictions must cover every token");
    }
    for (std::size_t t = 0; t < predicted[i].size(); ++t) {
      std::string gold_class = class_of(gold[i].tokens[t].label, tagset);
      ++report.totals[gold_class];
      if (class_of(predicted[i][t], tagset) != gold_class) ++report.errors[gold_class];
    }
  }

  if (reference_predicted != nullptr) {
    ErrorReport reference = error_counts(gold, *reference_predicted, nullptr, tagset);
    std::map<std::string, long long> deltas;
    for (const auto& [cls, count] : report.errors) {
      deltas[cls] = static_cast<long long>(count) -
                    static_cast<long long>(reference.errors.at(cls));
    }
    report.deltas = std::move(deltas);
  }
  return report;
}

namespace {

SurfaceEntity surface_of(const Sentence& sentence, const EntitySpan& span) {
  if (span.start >= span.end || span.end > sentence.size()) {
    raise(ErrorKind::InvalidArgument, "span out of range for its sentence");
  }
  SurfaceEntity entity;
  entity.etype = span.etype;
  for (std::size_t t = span.start; t < span.end; ++t) {
    if (t > span.start) entity.text += ' ';
    entity.text += sentence.tokens[t].text;
  }
  return entity;
}

}  // namespace

SpanErrors span_errors(const std::vector<Sentence>& gold,
                       const std::vector<std::vector<EntitySpan>>& predicted,
                       const TagSet& tagset) {
  if (gold.size() != predicted.size()) {
    raise(ErrorKind::LengthMismatch, "one prediction list per gold sentence");
  }
  SpanErrors errors;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    std::vector<int> labels;
    for (const Token& tok : gold[i].tokens) labels.push_back(tok.label);
    std::map<EntitySpan, std::size_t> unmatched;
    for (const EntitySpan& span : extract_spans(labels, tagset)) ++unmatched[span];
    for (const EntitySpan& span : predicted[i]) {
      auto it = unmatched.find(span);
      if (it != unmatched.end() && it->second > 0) {
        --it->second;
      } else {
        errors.precision_errors.push_back(surface_of(gold[i], span));
      }
    }
    for (const auto& [span, count] : unmatched) {
      for (std::size_t c = 0; c < count; ++c) {
        errors.recall_errors.push_back(surface_of(gold[i], span));
      }
    }
  }
  return errors;
}

std::vector<SurfaceEntity> collect_entities(const std::vector<Sentence>& sentences,
                                            const TagSet& tagset) {
  std::vector<SurfaceEntity> entities;
  for (const Sentence& s : sentences) {
    std::vector<int> labels;
    for (const Token& tok : s.tokens) labels.push_back(tok.label);
    for (const EntitySpan& span : extract_spans(labels, tagset)) {
      entities.push_back(surface_of(s, span));
    }
  }
  return entities;
}

namespace {

constexpr int kMinGram = 4;
constexpr int kMaxGram = 8;

std::vector<std::string> granularity_names() {
  std::vector<std::string> names = {"exact"};
  for (int n = kMinGram; n <= kMaxGram; ++n) names.push_back(std::to_string(n) + "-gram");
  return names;
}

void add_ngrams(const std::string& text, int n, std::set<std::string>& into) {
  if (text.size() < static_cast<std::size_t>(n)) return;
  for (std::size_t i = 0; i + n <= text.size(); ++i) into.insert(text.substr(i, n));
}

struct TrainSurfaces {
  std::set<std::string> exact;
  std::map<int, std::set<std::string>> grams;
};

double safe_rate(std::size_t common, std::size_t total) {
  return total == 0 ? 0.0 : static_cast<double>(common) / static_cast<double>(total);
}

}  // namespace

CommonEntityReport common_entity_rate(const SpanErrors& errors,
                                      const std::vector<SurfaceEntity>& other_train) {
  std::map<std::string, TrainSurfaces> by_type;
  for (const SurfaceEntity& entity : other_train) {
    TrainSurfaces& surfaces = by_type[entity.etype];
    surfaces.exact.insert(entity.text);
    for (int n = kMinGram; n <= kMaxGram; ++n) {
      add_ngrams(entity.text, n, surfaces.grams[n]);
    }
  }

  auto is_common = [&](const SurfaceEntity& entity, int gram) {
    auto it = by_type.find(entity.etype);
    if (it == by_type.end()) return false;
    if (gram == 0) return it->second.exact.count(entity.text) > 0;
    std::set<std::string> own;
    add_ngrams(entity.text, gram, own);
    const std::set<std::string>& train = it->second.grams.at(gram);
    for (const std::string& g : own) {
      if (train.count(g) > 0) return true;
    }
    return false;
  };

  CommonEntityReport report;
  report.granularities = granularity_names();
  std::vector<int> grams = {0};
  for (int n = kMinGram; n <= kMaxGram; ++n) grams.push_back(n);

  for (std::size_t g = 0; g < grams.size(); ++g) {
    const std::string& name = report.granularities[g];
    std::size_t common_p = 0;
    for (const SurfaceEntity& e : errors.precision_errors) common_p += is_common(e, grams[g]);
    std::size_t common_r = 0;
    for (const SurfaceEntity& e : errors.recall_errors) common_r += is_common(e, grams[g]);
    report.precision_rate[name] = safe_rate(common_p, errors.precision_errors.size());
    report.recall_rate[name] = safe_rate(common_r, errors.recall_errors.size());
    report.avg_precision_rate += report.precision_rate[name];
    report.avg_recall_rate += report.recall_rate[name];
  }
  double g_count = static_cast<double>(grams.size());
  report.avg_precision_rate /= g_count;
  report.avg_recall_rate /= g_count;
  double p = report.avg_precision_rate;
  double r = report.avg_recall_rate;
  report.harmonic_mean = p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
  return report;
}

std::string prune_curve_csv(const PruneCurve& curve) {
  std::string out = "fraction,language,f1\n";
  for (std::size_t i = 0; i < curve.fractions.size(); ++i) {
    for (const auto& [lang, f1] : curve.f1[i]) {
      out += fixed6(curve.fractions[i]) + "," + lang + "," + fixed6(f1) + "\n";
    }
  }
  return out;
}

std::string prune_curve_json(const PruneCurve& curve) {
  nlohmann::ordered_json j;
  j["fractions"] = curve.fractions;
  j["languages"] = curve.languages();
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& row : curve.f1) {
    nlohmann::ordered_json entry;
    for (const auto& [lang, f1] : row) entry[lang] = f1;
    rows.push_back(std::move(entry));
  }
  j["f1"] = std::move(rows);
  return j.dump(2) + "\n";
}

std::string prune_curve_gnuplot(const PruneCurve& curve) {
  std::string out;
  std::vector<std::string> langs = curve.languages();
  for (std::size_t l = 0; l < langs.size(); ++l) {
    if (l > 0) out += "\n\n";  // two blank lines: a new gnuplot index
    out += "# language " + langs[l] + "\n";
    for (std::size_t i = 0; i < curve.fractions.size(); ++i) {
      out += fixed6(curve.fractions[i]) + " " + fixed6(curve.f1[i].at(langs[l])) + "\n";
    }
  }
  return out;
}

std::string overlap_csv(const OverlapReport& report) {
  std::string out = "layer,k,overlap\n";
  for (const auto& [layer, by_k] : report.per_layer) {
    for (int k : report.ks) {
      out += layer + "," + std::to_string(k) + "," + fixed6(by_k.at(k)) + "\n";
    }
  }
  for (int k : report.ks) {
    out += "average," + std::to_string(k) + "," + fixed6(report.average.at(k)) + "\n";
  }
  return out;
}

std::string overlap_json(const OverlapReport& report) {
  nlohmann::ordered_json j;
  j["ks"] = report.ks;
  nlohmann::ordered_json layers;
  for (const auto& [layer, by_k] : report.per_layer) {
    nlohmann::ordered_json entry;
    for (int k : report.ks) entry[std::to_string(k)] = by_k.at(k);
    layers[layer] = std::move(entry);
  }
  j["per_layer"] = std::move(layers);
  nlohmann::ordered_json avg;
  for (int k : report.ks) avg[std::to_string(k)] = report.average.at(k);
  j["average"] = std::move(avg);
  return j.dump(2) + "\n";
}

std::string error_report_csv(const ErrorReport& report) {
  std::string out = "class,errors,total,delta\n";
  for (const auto& [cls, errors] : report.errors) {
    out += cls + "," + std::to_string(errors) + "," + std::to_string(report.totals.at(cls)) + ",";
    if (report.deltas.has_value()) out += std::to_string(report.deltas->at(cls));
    out += "\n";
  }
  return out;
}

std::string error_report_json(const ErrorReport& report) {
  nlohmann::ordered_json classes;
  for (const auto& [cls, errors] : report.errors) {
    nlohmann::ordered_json entry;
    entry["errors"] = errors;
    entry["total"] = report.totals.at(cls);
    if (report.deltas.has_value()) {
      entry["delta"] = report.deltas->at(cls);
    } else {
      entry["delta"] = nullptr;
    }
    classes[cls] = std::move(entry);
  }
  nlohmann::ordered_json j;
  j["classes"] = std::move(classes);
  return j.dump(2) + "\n";
}

std::string common_entity_csv(const CommonEntityReport& report) {
  std::string out = "granularity,precision_rate,recall_rate,harmonic_mean\n";
  for (const std::string& g : report.granularities) {
    out += g + "," + fixed6(report.precision_rate.at(g)) + "," +
           fixed6(report.recall_rate.at(g)) + ",\n";
  }
  out += "average," + fixed6(report.avg_precision_rate) + "," +
         fixed6(report.avg_recall_rate) + "," + fixed6(report.harmonic_mean) + "\n";
  return out;
}

std::string common_entity_json(const CommonEntityReport& report) {
  nlohmann::ordered_json j;
  j["granularities"] = report.granularities;
  nlohmann::ordered_json p;
  nlohmann::ordered_json r;
  for (const std::string& g : report.granularities) {
    p[g] = report.precision_rate.at(g);
    r[g] = report.recall_rate.at(g);
  }
  j["precision_rate"] = std::move(p);
  j["recall_rate"] = std::move(r);
  j["avg_precision_rate"] = report.avg_precision_rate;
  j["avg_recall_rate"] = report.avg_recall_rate;
  j["harmonic_mean"] = report.harmonic_mean;
  return j.dump(2) + "\n";
}

std::string budget_csv(const ParameterBudget& budget) {
  std::string out = "model,prunable,retained\n";
  for (const auto& [name, count] : budget.per_model) {
    out += name + "," + std::to_string(count) + ",";
    auto it = budget.retained.find(name);
    if (it != budget.retained.end()) out += std::to_string(it->second);
    out += "\n";
  }
  out += "combined," + std::to_string(budget.combined) + ",\n";
  return out;
}

std::string budget_json(const ParameterBudget& budget) {
  nlohmann::ordered_json j;
  j["per_model"] = budget.per_model;
  j["combined"] = budget.combined;
  j["retained"] = budget.retained;
  return j.dump(2) + "\n";
}

}  // namespace polyner
