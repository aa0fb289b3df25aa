#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "polyner/rng.hpp"

namespace polyner {

// Lowercase ISO-style language code, validated against [a-z]{2,8}.
class LanguageId {
 public:
  LanguageId() = default;
  explicit LanguageId(std::string code);

  const std::string& code() const { return code_; }
  bool operator==(const LanguageId& other) const { return code_ == other.code_; }
  bool operator!=(const LanguageId& other) const { return code_ != other.code_; }
  bool operator<(const LanguageId& other) const { return code_ < other.code_; }

 private:
  std::string code_;
};

// Entity type inventory and the BIO label list derived from it.
// Label 0 is O; each type t contributes B-t then I-t, in inventory order.
class TagSet {
 public:
  TagSet() = default;
  explicit TagSet(std::vector<std::string> entity_types);

  const std::vector<std::string>& entity_types() const { return entity_types_; }
  const std::vector<std::string>& labels() const { return labels_; }
  std::size_t num_labels() const { return labels_.size(); }
  std::size_t num_types() const { return entity_types_.size(); }

  static constexpr int kOutside = 0;
  int label_index(const std::string& label) const;  // -1 if unknown
  const std::string& label_name(int index) const { return labels_[static_cast<std::size_t>(index)]; }

  // B-PER -> type index of PER; O and I-* likewise resolve to their type; O -> -1.
  int type_of_label(int label) const;
  bool is_begin(int label) const { return label > 0 && (label - 1) % 2 == 0; }
  bool is_inside(int label) const { return label > 0 && (label - 1) % 2 == 1; }
  int begin_label(int type_index) const { return 1 + 2 * type_index; }
  int inside_label(int type_index) const { return 2 + 2 * type_index; }

  bool operator==(const TagSet& other) const { return entity_types_ == other.entity_types_; }
  bool operator!=(const TagSet& other) const { return !(*this == other); }

 private:
  std::vector<std::string> entity_types_;
  std::vector<std::string> labels_;
  std::map<std::string, int> index_;
};

struct Token {
  std::string text;
  int label = TagSet::kOutside;
};

struct Sentence {
  std::vector<Token> tokens;
  LanguageId language;

  std::size_t size() const { return tokens.size(); }
};

// Token-level entity span, end exclusive.
struct EntitySpan {
  std::size_t start = 0;
  std::size_t end = 0;
  std::string etype;

  bool operator==(const EntitySpan& other) const {
    return start == other.start && end == other.end && etype == other.etype;
  }
  bool operator<(const EntitySpan& other) const {
    if (start != other.start) return start < other.start;
    if (end != other.end) return end < other.end;
    return etype < other.etype;
  }
};

inline const std::vector<std::string>& split_names() {
  static const std::vector<std::string> names = {"train", "dev", "test"};
  return names;
}

class LabeledCorpus {
 public:
  LabeledCorpus() = default;
  LabeledCorpus(LanguageId language, TagSet tagset);

  const LanguageId& language() const { return language_; }
  const TagSet& tagset() const { return tagset_; }

  void set_split(const std::string& split, std::vector<Sentence> sentences);
  const std::vector<Sentence>& split(const std::string& split) const;
  bool has_split(const std::string& split) const;

 private:
  LanguageId language_;
  TagSet tagset_;
  std::map<std::string, std::vector<Sentence>> splits_;
};

// CoNLL column text: first column token, last column BIO tag, blank line
// between sentences, -DOCSTART- lines skipped.
std::vector<Sentence> parse_conll(const std::string& text, const TagSet& tagset,
                                  const LanguageId& lang);
std::string write_conll(const std::vector<Sentence>& sentences, const TagSet& tagset);

// BIO decoding with the conlleval repair rule: an orphan I-t opens a span.
std::vector<EntitySpan> extract_spans(const std::vector<int>& labels, const TagSet& tagset);

// Multiple single-language corpora combined for polyglot training.
// Dev/test remain per-language; the train iterator merges across languages.
class PolyglotCorpus {
 public:
  PolyglotCorpus() = default;

  const TagSet& tagset() const { return tagset_; }
  const std::vector<LabeledCorpus>& corpora() const { return corpora_; }
  const LabeledCorpus& corpus(const LanguageId& lang) const;
  std::vector<LanguageId> languages() const;
  bool uniform_sampling() const { return uniform_sampling_; }

  // One epoch's worth of train sentences. With uniform sampling off this is
  // every train sentence exactly once; with it on, each language contributes
  // max-train-size sentences (smaller languages resampled with replacement).
  // The caller shuffles; order here is language-major and deterministic.
  std::vector<const Sentence*> epoch_train(RngStream& rng) const;

 private:
  friend PolyglotCorpus concat_polyglot(const std::vector<LabeledCorpus>&, bool);
  TagSet tagset_;
  std::vector<LabeledCorpus> corpora_;
  bool uniform_sampling_ = false;
};

PolyglotCorpus concat_polyglot(const std::vector<LabeledCorpus>& corpora,
                               bool uniform_sampling);

}  // namespace polyner
