#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "polyner/autodiff.hpp"
#include "polyner/corpus.hpp"
#include "polyner/crf.hpp"
#include "polyner/encoding.hpp"
#include "polyner/lstm.hpp"
#include "polyner/optim.hpp"
#include "polyner/rng.hpp"

namespace polyner {

enum class Architecture { hiercrf, charner };

const char* architecture_name(Architecture arch);
Architecture architecture_from_name(const std::string& name);

// Sub-token encoder feeding a word-level BiLSTM-CRF.
struct HierCrfConfig {
  std::size_t subtoken_layers = 2;
  std::size_t subtoken_hidden = 256;
  std::size_t sentence_layers = 1;
  std::size_t sentence_hidden = 256;
  std::size_t embedding_dim = 256;
  VocabMode vocab_mode = VocabMode::byte;
  bool language_specific_transitions = false;
};

// Flat per-byte tagger over entity classes (no BIO), decoded under a
// word-consistency constraint.
struct CharNerConfig {
  std::size_t layers = 5;
  std::size_t hidden = 128;
  std::size_t embedding_dim = 128;
  double byte_dropout = 0.2;
  double interior_dropout = 0.5;
  double final_dropout = 0.8;
};

struct TaggerConfig {
  Architecture arch = Architecture::hiercrf;
  HierCrfConfig hiercrf;
  CharNerConfig charner;
};

class Tagger {
 public:
  virtual ~Tagger() = default;

  virtual Architecture architecture() const = 0;
  virtual const TaggerConfig& config() const = 0;
  virtual const TagSet& tagset() const = 0;
  virtual const SubtokenVocab& vocab() const = 0;
  virtual ParamStore& params() = 0;
  virtual const ParamStore& params() const = 0;

  // -log p(gold labels | sentence). When grads is non-null the gradient is
  // accumulated into it. Dropout-style noise only fires in train_mode, which
  // then requires an rng stream. A numerically diverged model yields a
  // non-finite loss (with no gradient) rather than an error.
  virtual double sentence_loss(const Sentence& s, ParamStore* grads, bool train_mode = false,
                               RngStream* dropout_rng = nullptr) = 0;

  // BIO labels per token.
  virtual std::vector<int> predict_labels(const Sentence& s) = 0;

  std::vector<EntitySpan> predict(const Sentence& s);
};

// One forward pass of the hierarchical model with the CRF inputs exposed, so
// callers can seed potential-level gradients and sweep (Fisher estimation).
struct HierCrfTape {
  Graph graph;
  Var emissions;
  Var transitions;
  Var start;
  Var stop;
  CrfPotentials potentials;
};

class HierCrfTagger : public Tagger {
 public:
  HierCrfTagger(TaggerConfig config, TagSet tagset, SubtokenVocab vocab,
                std::vector<LanguageId> languages, std::uint64_t seed);
  // Wrap existing parameters (checkpoint restore); layout must match what the
  // seeded constructor would create.
  HierCrfTagger(TaggerConfig config, TagSet tagset, SubtokenVocab vocab,
                std::vector<LanguageId> languages, ParamStore params);

  Architecture architecture() const override { return Architecture::hiercrf; }
  const TaggerConfig& config() const override { return config_; }
  const TagSet& tagset() const override { return tagset_; }
  const SubtokenVocab& vocab() const override { return vocab_; }
  ParamStore& params() override { return params_; }
  const ParamStore& params() const override { return params_; }
  const std::vector<LanguageId>& languages() const { return languages_; }

  double sentence_loss(const Sentence& s, ParamStore* grads, bool train_mode = false,
                       RngStream* dropout_rng = nullptr) override;
  std::vector<int> predict_labels(const Sentence& s) override;

  HierCrfTape build_tape(const Sentence& s, ParamStore* grads);
  CrfPotentials potentials_for(const Sentence& s);

 private:
  void init_params(std::uint64_t seed);
  std::string transition_prefix(const LanguageId& lang) const;

  TaggerConfig config_;
  TagSet tagset_;
  SubtokenVocab vocab_;
  std::vector<LanguageId> languages_;
  ParamStore params_;
};

// Byte positions mapped to word indices; separators carry no word.
struct WordBoundaryMap {
  std::vector<int> word_of_byte;  // -1 at separator positions
  std::size_t num_words = 0;

  bool is_separator(std::size_t i) const { return word_of_byte[i] < 0; }
  std::size_t size() const { return word_of_byte.size(); }
};

struct CharNerStream {
  std::vector<int> byte_ids;
  WordBoundaryMap boundaries;
};

// Words joined by single space bytes; one id per byte of the joined text.
CharNerStream charner_stream(const Sentence& s, const SubtokenVocab& vocab);

// Per-byte class space: entity type k keeps its index, O comes last.
std::size_t charner_num_classes(const TagSet& tagset);
int charner_class_of_label(const TagSet& tagset, int bio_label);

// Viterbi over byte positions; tag changes inside a word pay -1e9, so any
// surviving path is word-consistent. Separator bytes are excluded from word
// tags; per-word classes then convert to BIO by maximal same-type runs.
std::vector<int> charner_decode(const Tensor& logits, const WordBoundaryMap& boundaries,
                                const Tensor& transitions, const TagSet& tagset);

class CharNerTagger : public Tagger {
 public:
  CharNerTagger(TaggerConfig config, TagSet tagset, SubtokenVocab vocab, std::uint64_t seed);
  CharNerTagger(TaggerConfig config, TagSet tagset, SubtokenVocab vocab, ParamStore params);

  Architecture architecture() const override { return Architecture::charner; }
  const TaggerConfig& config() const override { return config_; }
  const TagSet& tagset() const override { return tagset_; }
  const SubtokenVocab& vocab() const override { return vocab_; }
  ParamStore& params() override { return params_; }
  const ParamStore& params() const override { return params_; }

  double sentence_loss(const Sentence& s, ParamStore* grads, bool train_mode = false,
                       RngStream* dropout_rng = nullptr) override;
  std::vector<int> predict_labels(const Sentence& s) override;

  // Per-byte logits [B x (K+1)], dropout active only in train mode.
  std::pair<Tensor, WordBoundaryMap> logits_for(const Sentence& s, bool train_mode = false,
                                                RngStream* dropout_rng = nullptr);

 private:
  void init_params(std::uint64_t seed);

  TaggerConfig config_;
  TagSet tagset_;
  SubtokenVocab vocab_;
  ParamStore params_;
};

std::unique_ptr<Tagger> make_tagger(const TaggerConfig& config, const TagSet& tagset,
                                    const SubtokenVocab& vocab,
                                    const std::vector<LanguageId>& languages, std::uint64_t seed);
std::unique_ptr<Tagger> make_tagger(const TaggerConfig& config, const TagSet& tagset,
                                    const SubtokenVocab& vocab,
                                    const std::vector<LanguageId>& languages, ParamStore params);

}  // namespace polyner
