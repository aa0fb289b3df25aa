#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "polyner/checkpoint.hpp"
#include "polyner/corpus.hpp"

namespace polyner {

struct TypeCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
};

double precision_of(const TypeCounts& c);
double recall_of(const TypeCounts& c);
double f1_of(const TypeCounts& c);

struct EvalReport {
  std::map<std::string, TypeCounts> per_type;
  TypeCounts micro;  // sums over types
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t sentences = 0;
  std::size_t tokens = 0;
  std::string language;
  std::string split;
  bool zero_shot = false;
  // Char-vocab models only: fraction of subtoken ids that fell back to UNK.
  std::optional<double> unk_rate;
};

// Exact-match span scoring: a prediction counts iff the same (start, end,
// type) span is in gold, and each gold span absorbs at most one prediction.
// Gold spans come from the sentences' BIO labels under the given tagset.
EvalReport span_f1(const std::vector<Sentence>& gold,
                   const std::vector<std::vector<EntitySpan>>& predicted,
                   const TagSet& tagset);

// Tag every sentence of the split with the checkpoint's model and score it.
// A language outside the checkpoint's training set flags the report zero-shot.
EvalReport evaluate(const Checkpoint& ckpt, const LabeledCorpus& corpus,
                    const std::string& split);

std::string report_json(const EvalReport& report);
// One line: lang, split, micro precision/recall/F1, tab-separated.
std::string report_tsv(const EvalReport& report);

}  // namespace polyner
