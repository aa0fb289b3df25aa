#include "polyner/taggers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "polyner/errors.hpp"

namespace polyner {

namespace {

constexpr double kForbidden = -1e9;

std::string lang_transition_prefix(const LanguageId& lang) {
  return "crf/lang_" + lang.code();
}

}  // namespace

const char* architecture_name(Architecture arch) {
  return arch == Architecture::hiercrf ? "hiercrf" : "charner";
}

Architecture architecture_from_name(const std::string& name) {
  if (name == "hiercrf") return Architecture::hiercrf;
  if (name == "charner") return Architecture::charner;
  raise(ErrorKind::InvalidConfig, "unknown architecture '" + name + "'");
}

std::vector<EntitySpan> Tagger::predict(const Sentence& s) {
  return extract_spans(predict_labels(s), tagset());
}

HierCrfTagger::HierCrfTagger(TaggerConfig config, TagSet tagset, SubtokenVocab vocab,
                             std::vector<LanguageId> languages, std::uint64_t seed)
    : config_(std::move(config)),
      tagset_(std::move(tagset)),
      vocab_(std::move(vocab)),
      languages_(std::move(languages)) {
  init_params(seed);
}

HierCrfTagger::HierCrfTagger(TaggerConfig config, TagSet tagset, SubtokenVocab vocab,
                             std::vector<LanguageId> languages, ParamStore params)
    : config_(std::move(config)),
      tagset_(std::move(tagset)),
      vocab_(std::move(vocab)),
      languages_(std::move(languages)),
      params_(std::move(params)) {}

void HierCrfTagger::init_params(std::uint64_t seed) {
  const HierCrfConfig& cfg = config_.hiercrf;
  if (cfg.embedding_dim < 1 || cfg.subtoken_hidden < 1 || cfg.sentence_hidden < 1 ||
      cfg.subtoken_layers < 1 || cfg.sentence_layers < 1) {
    raise(ErrorKind::InvalidConfig, "model dimensions must be >= 1");
  }
  if (vocab_.mode() != cfg.vocab_mode) {
    raise(ErrorKind::VocabIncompatible, "vocab mode does not match model config");
  }
  std::size_t L = tagset_.num_labels();
  RngStream rng(seed, "init/hiercrf");

  params_.add("embed/table",
              uniform_init({vocab_.size(), cfg.embedding_dim}, -0.1, 0.1, rng));
  init_bilstm_params(params_, "subtoken",
                     BiLstmSpec{cfg.subtoken_layers, cfg.subtoken_hidden, cfg.embedding_dim},
                     rng);
  init_bilstm_params(
      params_, "sentence",
      BiLstmSpec{cfg.sentence_layers, cfg.sentence_hidden, 2 * cfg.subtoken_hidden}, rng);
  init_linear_params(params_, "emit", L, 2 * cfg.sentence_hidden, rng);

  params_.add("crf/shared/transitions", Tensor::zeros({L, L}));
  params_.add("crf/shared/start", Tensor::zeros({L}));
  params_.add("crf/shared/stop", Tensor::zeros({L}));
  if (cfg.language_specific_transitions) {
    for (const LanguageId& lang : languages_) {
      std::string prefix = lang_transition_prefix(lang);
      params_.add(prefix + "/transitions", Tensor::zeros({L, L}));
      params_.add(prefix + "/start", Tensor::zeros({L}));
      params_.add(prefix + "/stop", Tensor::zeros({L}));
    }
  }
}

std::string HierCrfTagger::transition_prefix(const LanguageId& lang) const {
  if (config_.hiercrf.language_specific_transitions) {
    std::string prefix = lang_transition_prefix(lang);
    if (params_.has(prefix + "/transitions")) return prefix;
  }
  return "crf/shared";
}

HierCrfTape HierCrfTagger::build_tape(const Sentence& s, ParamStore* grads) {
  if (s.tokens.empty()) raise(ErrorKind::EmptySentence, "cannot tag an empty sentence");
  const HierCrfConfig& cfg = config_.hiercrf;

  HierCrfTape tape;
  Graph& g = tape.graph;
  TapeParams vars(g, params_, grads);

  BiLstmSpec sub_spec{cfg.subtoken_layers, cfg.subtoken_hidden, cfg.embedding_dim};
  BiLstmSpec sent_spec{cfg.sentence_layers, cfg.sentence_hidden, 2 * cfg.subtoken_hidden};

  Tensor* embed_sink = grads != nullptr ? &grads->at("embed/table") : nullptr;
  std::vector<Var> word_reprs;
  word_reprs.reserve(s.tokens.size());
  for (const Token& tok : s.tokens) {
    SubtokenSeq seq = encode_word(tok.text, vocab_);
    std::vector<Var> sub_inputs;
    sub_inputs.reserve(seq.ids.size());
    for (int id : seq.ids) {
      sub_inputs.push_back(
          g.row_leaf(params_.at("embed/table"), static_cast<std::size_t>(id), embed_sink));
    }
    BiLstmOut sub = apply_bilstm(g, vars, "subtoken", sub_spec, sub_inputs);
    word_reprs.push_back(g.concat(sub.final_fwd, sub.final_bwd));
  }

  BiLstmOut sent = apply_bilstm(g, vars, "sentence", sent_spec, word_reprs);
  std::vector<Var> logit_rows;
  logit_rows.reserve(sent.steps.size());
  for (Var step : sent.steps) logit_rows.push_back(apply_linear(g, vars, "emit", step));

  std::string crf_prefix = transition_prefix(s.language);
  tape.emissions = g.stack_rows(logit_rows);
  tape.transitions = vars.at(crf_prefix + "/transitions");
  tape.start = vars.at(crf_prefix + "/start");
  tape.stop = vars.at(crf_prefix + "/stop");

  tape.potentials.emissions = g.value(tape.emissions);
  tape.potentials.transitions = g.value(tape.transitions);
  tape.potentials.start = g.value(tape.start);
  tape.potentials.stop = g.value(tape.stop);
  return tape;
}

CrfPotentials HierCrfTagger::potentials_for(const Sentence& s) {
  return build_tape(s, nullptr).potentials;
}

double HierCrfTagger::sentence_loss(const Sentence& s, ParamStore* grads, bool, RngStream*) {
  std::vector<int> gold;
  gold.reserve(s.tokens.size());
  for (const Token& tok : s.tokens) gold.push_back(tok.label);

  HierCrfTape tape = build_tape(s, grads);
  // A diverged model emits non-finite potentials; its loss is non-finite
  // rather than an error, so training loops can detect and report it.
  for (const Tensor* t : {&tape.potentials.emissions, &tape.potentials.transitions,
                          &tape.potentials.start, &tape.potentials.stop}) {
    for (double v : t->flat()) {
      if (!std::isfinite(v)) return std::numeric_limits<double>::quiet_NaN();
    }
  }
  if (grads == nullptr) {
    return -log_likelihood(tape.potentials, gold);
  }
  Var ll = crf_log_likelihood(tape.graph, tape.emissions, tape.transitions, tape.start,
                              tape.stop, gold);
  Var loss = tape.graph.scale(ll, -1.0);
  tape.graph.backward(loss);
  return tape.graph.value(loss)[0];
}

std::vector<int> HierCrfTagger::predict_labels(const Sentence& s) {
  return viterbi(potentials_for(s)).labels;
}

CharNerStream charner_stream(const Sentence& s, const SubtokenVocab& vocab) {
  if (s.tokens.empty()) raise(ErrorKind::EmptySentence, "cannot tag an empty sentence");
  if (vocab.mode() != VocabMode::byte) {
    raise(ErrorKind::VocabIncompatible, "per-byte tagging requires a byte vocab");
  }
  CharNerStream out;
  for (std::size_t w = 0; w < s.tokens.size(); ++w) {
    if (w > 0) {
      out.byte_ids.push_back(' ');
      out.boundaries.word_of_byte.push_back(-1);
    }
    const std::string& text = s.tokens[w].text;
    if (text.empty()) raise(ErrorKind::InvalidArgument, "empty token text");
    for (unsigned char b : text) {
      out.byte_ids.push_back(static_cast<int>(b));
      out.boundaries.word_of_byte.push_back(static_cast<int>(w));
    }
  }
  out.boundaries.num_words = s.tokens.size();
  return out;
}

std::size_t charner_num_classes(const TagSet& tagset) { return tagset.num_types() + 1; }

int charner_class_of_label(const TagSet& tagset, int bio_label) {
  int type = tagset.type_of_label(bio_label);
  return type < 0 ? static_cast<int>(tagset.num_types()) : type;
}

std::vector<int> charner_decode(const Tensor& logits, const WordBoundaryMap& boundaries,
                                const Tensor& transitions, const TagSet& tagset) {
  std::size_t B = logits.dim(0);
  std::size_t K = logits.dim(1);
  if (boundaries.size() != B) {
    raise(ErrorKind::BoundaryMismatch, "boundary map length does not match logits");
  }
  if (K != charner_num_classes(tagset)) {
    raise(ErrorKind::ShapeMismatch, "logit width does not match the class count");
  }
  if (transitions.rank() != 2 || transitions.dim(0) != K || transitions.dim(1) != K) {
    raise(ErrorKind::ShapeMismatch, "transitions must be [K x K]");
  }

  // Viterbi with a position-dependent penalty: changing class between two
  // bytes of the same word is effectively forbidden.
  Tensor delta = Tensor::zeros({B, K});
  std::vector<std::vector<std::size_t>> back(B, std::vector<std::size_t>(K, 0));
  for (std::size_t k = 0; k < K; ++k) delta(0, k) = logits(0, k);
  for (std::size_t t = 1; t < B; ++t) {
    bool same_word = !boundaries.is_separator(t - 1) && !boundaries.is_separator(t) &&
                     boundaries.word_of_byte[t - 1] == boundaries.word_of_byte[t];
    for (std::size_t k = 0; k < K; ++k) {
      std::size_t best_j = 0;
      double best = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < K; ++j) {
        double cand = delta(t - 1, j) + transitions(j, k);
        if (same_word && j != k) cand += kForbidden;
        if (cand > best) {
          best = cand;
          best_j = j;
        }
      }
      delta(t, k) = logits(t, k) + best;
      back[t][k] = best_j;
    }
  }

  std::size_t best_k = 0;
  double best = delta(B - 1, 0);
  for (std::size_t k = 1; k < K; ++k) {
    if (delta(B - 1, k) > best) {
      best = delta(B - 1, k);
      best_k = k;
    }
  }
  std::vector<int> byte_classes(B, 0);
  byte_classes[B - 1] = static_cast<int>(best_k);
  for (std::size_t t = B - 1; t > 0; --t) {
    best_k = back[t][best_k];
    byte_classes[t - 1] = static_cast<int>(best_k);
  }

  // Word class = the class its bytes agree on (separators excluded).
  int o_class = static_cast<int>(tagset.num_types());
  std::vector<int> word_class(boundaries.num_words, o_class);
  for (std::size_t t = 0; t < B; ++t) {
    if (!boundaries.is_separator(t)) {
      word_class[static_cast<std::size_t>(boundaries.word_of_byte[t])] = byte_classes[t];
    }
  }

  std::vector<int> labels(boundaries.num_words, TagSet::kOutside);
  for (std::size_t w = 0; w < word_class.size(); ++w) {
    if (word_class[w] == o_class) continue;
    bool continues = w > 0 && word_class[w - 1] == word_class[w];
    labels[w] = continues ? tagset.inside_label(word_class[w])
                          : tagset.begin_label(word_class[w]);
  }
  return labels;
}

CharNerTagger::CharNerTagger(TaggerConfig config, TagSet tagset, SubtokenVocab vocab,
                             std::uint64_t seed)
    : config_(std::move(config)), tagset_(std::move(tagset)), vocab_(std::move(vocab)) {
  init_params(seed);
}

CharNerTagger::CharNerTagger(TaggerConfig config, TagSet tagset, SubtokenVocab vocab,
                             ParamStore params)
    : config_(std::move(config)),
      tagset_(std::move(tagset)),
      vocab_(std::move(vocab)),
      params_(std::move(params)) {}

void CharNerTagger::init_params(std::uint64_t seed) {
  const CharNerConfig& cfg = config_.charner;
  if (vocab_.mode() != VocabMode::byte) {
    raise(ErrorKind::VocabIncompatible, "per-byte tagging requires a byte vocab");
  }
  if (cfg.byte_dropout < 0.0 || cfg.byte_dropout >= 1.0 || cfg.interior_dropout < 0.0 ||
      cfg.interior_dropout >= 1.0 || cfg.final_dropout < 0.0 || cfg.final_dropout >= 1.0) {
    raise(ErrorKind::InvalidRate, "dropout rates must be in [0, 1)");
  }
  RngStream rng(seed, "init/charner");
  params_.add("embed/table", uniform_init({vocab_.size(), cfg.embedding_dim}, -0.1, 0.1, rng));
  init_bilstm_params(params_, "charner",
                     BiLstmSpec{cfg.layers, cfg.hidden, cfg.embedding_dim}, rng);
  init_linear_params(params_, "emit", charner_num_classes(tagset_), 2 * cfg.hidden, rng);
}

namespace {

struct CharNerForward {
  Graph graph;
  std::vector<Var> logit_rows;
  CharNerStream stream;
};

CharNerForward charner_forward(const Sentence& s, const TaggerConfig& config,
                               const TagSet& tagset, const SubtokenVocab& vocab,
                               const ParamStore& params, ParamStore* grads, bool train_mode,
                               RngStream* dropout_rng) {
  const CharNerConfig& cfg = config.charner;
  if (train_mode && dropout_rng == nullptr) {
    raise(ErrorKind::InvalidArgument, "training mode needs an rng stream");
  }
  (void)tagset;

  CharNerForward out;
  out.stream = charner_stream(s, vocab);

  std::vector<int> ids = out.stream.byte_ids;
  if (train_mode && cfg.byte_dropout > 0.0) {
    SubtokenSeq framed;
    framed.ids.reserve(ids.size() + 2);
    framed.ids.push_back(vocab.bow_id());
    framed.ids.insert(framed.ids.end(), ids.begin(), ids.end());
    framed.ids.push_back(vocab.eow_id());
    framed = byte_dropout(framed, cfg.byte_dropout, *dropout_rng, vocab);
    ids.assign(framed.ids.begin() + 1, framed.ids.end() - 1);
  }

  Graph& g = out.graph;
  TapeParams vars(g, params, grads);
  Tensor* embed_sink = grads != nullptr ? &grads->at("embed/table") : nullptr;
  std::vector<Var> inputs;
  inputs.reserve(ids.size());
  for (int id : ids) {
    inputs.push_back(
        g.row_leaf(params.at("embed/table"), static_cast<std::size_t>(id), embed_sink));
  }

  BiLstmSpec spec{cfg.layers, cfg.hidden, cfg.embedding_dim};
  std::vector<double> rates(cfg.layers, cfg.interior_dropout);
  if (!rates.empty()) rates.back() = cfg.final_dropout;
  const std::vector<double>* rate_ptr = train_mode ? &rates : nullptr;
  BiLstmOut lstm = apply_bilstm(g, vars, "charner", spec, inputs, rate_ptr, dropout_rng);

  out.logit_rows.reserve(lstm.steps.size());
  for (Var step : lstm.steps) out.logit_rows.push_back(apply_linear(g, vars, "emit", step));
  return out;
}

}  // namespace

double CharNerTagger::sentence_loss(const Sentence& s, ParamStore* grads, bool train_mode,
                                    RngStream* dropout_rng) {
  CharNerForward fwd = charner_forward(s, config_, tagset_, vocab_, params_, grads,
                                       train_mode, dropout_rng);
  int o_class = static_cast<int>(tagset_.num_types());
  std::vector<Var> losses;
  losses.reserve(fwd.logit_rows.size());
  for (std::size_t t = 0; t < fwd.logit_rows.size(); ++t) {
    int target = fwd.stream.boundaries.is_separator(t)
                     ? o_class
                     : charner_class_of_label(
                           tagset_,
                           s.tokens[static_cast<std::size_t>(
                                        fwd.stream.boundaries.word_of_byte[t])]
                               .label);
    losses.push_back(
        fwd.graph.neg_log_softmax(fwd.logit_rows[t], static_cast<std::size_t>(target)));
  }
  Var total = fwd.graph.add_n(losses);
  if (grads != nullptr) fwd.graph.backward(total);
  return fwd.graph.value(total)[0];
}

std::pair<Tensor, WordBoundaryMap> CharNerTagger::logits_for(const Sentence& s, bool train_mode,
                                                             RngStream* dropout_rng) {
  CharNerForward fwd = charner_forward(s, config_, tagset_, vocab_, params_, nullptr,
                                       train_mode, dropout_rng);
  std::size_t B = fwd.logit_rows.size();
  std::size_t K = charner_num_classes(tagset_);
  Tensor logits = Tensor::zeros({B, K});
  for (std::size_t t = 0; t < B; ++t) {
    const Tensor& row = fwd.graph.value(fwd.logit_rows[t]);
    for (std::size_t k = 0; k < K; ++k) logits(t, k) = row[k];
  }
  return {std::move(logits), fwd.stream.boundaries};
}

std::vector<int> CharNerTagger::predict_labels(const Sentence& s) {
  auto [logits, boundaries] = logits_for(s);
  std::size_t K = charner_num_classes(tagset_);
  Tensor zero_transitions = Tensor::zeros({K, K});
  return charner_decode(logits, boundaries, zero_transitions, tagset_);
}

std::unique_ptr<Tagger> make_tagger(const TaggerConfig& config, const TagSet& tagset,
                                    const SubtokenVocab& vocab,
                                    const std::vector<LanguageId>& languages,
                                    std::uint64_t seed) {
  if (config.arch == Architecture::hiercrf) {
    return std::make_unique<HierCrfTagger>(config, tagset, vocab, languages, seed);
  }
  return std::make_unique<CharNerTagger>(config, tagset, vocab, seed);
}

std::unique_ptr<Tagger> make_tagger(const TaggerConfig& config, const TagSet& tagset,
                                    const SubtokenVocab& vocab,
                                    const std::vector<LanguageId>& languages, ParamStore params) {
  if (config.arch == Architecture::hiercrf) {
    return std::make_unique<HierCrfTagger>(config, tagset, vocab, languages, std::move(params));
  }
  return std::make_unique<CharNerTagger>(config, tagset, vocab, std::move(params));
}

}  // namespace polyner
