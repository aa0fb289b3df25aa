#include "polyner/train.hpp"

#include <cmath>
#include <functional>
#include <limits>

#include "polyner/errors.hpp"
#include "polyner/eval.hpp"

namespace polyner {

std::string variant_name(const TaggerConfig& config) {
  if (config.arch == Architecture::charner) return "charner";
  return config.hiercrf.vocab_mode == VocabMode::byte ? "hiercrf-byte" : "hiercrf-char";
}

TaggerConfig variant_config(const std::string& name) {
  TaggerConfig config;
  if (name == "charner") {
    config.arch = Architecture::charner;
  } else if (name == "hiercrf-byte") {
    config.arch = Architecture::hiercrf;
    config.hiercrf.vocab_mode = VocabMode::byte;
  } else if (name == "hiercrf-char") {
    config.arch = Architecture::hiercrf;
    config.hiercrf.vocab_mode = VocabMode::chars;
  } else {
    raise(ErrorKind::InvalidConfig, "unknown model variant '" + name + "'");
  }
  return config;
}

void validate_train_config(const TrainConfig& config) {
  if (config.patience < 1) raise(ErrorKind::InvalidConfig, "patience must be >= 1");
  if (config.seeds.empty()) raise(ErrorKind::InvalidConfig, "at least one seed is required");
  if (config.max_epochs < 1) raise(ErrorKind::InvalidConfig, "max_epochs must be >= 1");
  if (config.adam.lr < 0.0) raise(ErrorKind::InvalidConfig, "learning rate must be >= 0");
}

namespace {

struct DevSet {
  std::string lang;
  const std::vector<Sentence>* sentences = nullptr;
};

struct RunSpec {
  TagSet tagset;
  SubtokenVocab vocab;
  std::vector<LanguageId> languages;
  std::vector<DevSet> dev;
  // Sentences for one epoch, before the caller's shuffle.
  std::function<std::vector<const Sentence*>(RngStream&)> epoch_sentences;
};

EpochRecord score_epoch(std::size_t epoch, Tagger& tagger, const RunSpec& spec) {
  EpochRecord rec;
  rec.epoch = epoch;
  double sum = 0.0;
  for (const DevSet& dev : spec.dev) {
    std::vector<std::vector<EntitySpan>> preds;
    preds.reserve(dev.sentences->size());
    for (const Sentence& s : *dev.sentences) preds.push_back(tagger.predict(s));
    double f1 = span_f1(*dev.sentences, preds, spec.tagset).f1;
    rec.dev_f1[dev.lang] = f1;
    sum += f1;
  }
  rec.selection = sum / static_cast<double>(spec.dev.size());
  return rec;
}

const std::vector<Sentence>& nonempty_split(const LabeledCorpus& corpus,
                                            const std::string& name) {
  const std::vector<Sentence>& sentences = corpus.split(name);
  if (sentences.empty()) {
    raise(ErrorKind::EmptySplit,
          "corpus '" + corpus.language().code() + "' split '" + name + "' has no sentences");
  }
  return sentences;
}

TrainResult run_training(const TrainConfig& config, RunSpec spec,
                         std::unique_ptr<Tagger> tagger, AdamState adam, std::uint64_t seed,
                         bool score_initial) {
  validate_train_config(config);

  TrainResult result;
  ParamStore best_params;
  AdamState best_adam;
  std::size_t best_epoch = 0;
  double best = -std::numeric_limits<double>::infinity();
  bool have_best = false;
  std::size_t since_improve = 0;

  auto record = [&](std::size_t epoch) {
    EpochRecord rec = score_epoch(epoch, *tagger, spec);
    result.history.epochs.push_back(rec);
    if (!have_best || rec.selection > best) {
      have_best = true;
      best = rec.selection;
      best_params = tagger->params();
      best_adam = adam;
      best_epoch = epoch;
      since_improve = 0;
    } else {
      ++since_improve;
    }
  };

  if (score_initial) record(0);

  ParamStore grads = zeros_like(tagger->params());
  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    RngStream sample_rng(seed, "sample", epoch);
    std::vector<const Sentence*> order = spec.epoch_sentences(sample_rng);
    RngStream shuffle_rng(seed, "shuffle", epoch);
    shuffle_rng.shuffle(order);
    RngStream dropout_rng(seed, "dropout", epoch);

    for (const Sentence* s : order) {
      zero_all(grads);
      double loss = tagger->sentence_loss(*s, &grads, true, &dropout_rng);
      if (!std::isfinite(loss)) {
        raise(ErrorKind::DivergedLoss,
              "non-finite loss in epoch " + std::to_string(epoch));
      }
      adam_step(tagger->params(), grads, adam);
    }
    record(epoch);
    if (since_improve >= config.patience) break;
  }

  Checkpoint& ckpt = result.checkpoint;
  ckpt.config = tagger->config();
  ckpt.tagset = spec.tagset;
  ckpt.vocab = spec.vocab;
  ckpt.params = std::move(best_params);
  ckpt.adam = std::move(best_adam);
  for (const LanguageId& lang : spec.languages) ckpt.languages.push_back(lang.code());
  ckpt.seed = seed;
  ckpt.epoch = best_epoch;
  ckpt.history = result.history;
  return result;
}

SubtokenVocab vocab_for(const TaggerConfig& config,
                        const std::vector<const Sentence*>& train) {
  bool chars = config.arch == Architecture::hiercrf &&
               config.hiercrf.vocab_mode == VocabMode::chars;
  return chars ? SubtokenVocab::chars_from(train) : SubtokenVocab::bytes();
}

}  // namespace

TrainResult train(const TrainConfig& config, const LabeledCorpus& corpus, std::uint64_t seed) {
  const std::vector<Sentence>& train_split = nonempty_split(corpus, "train");
  const std::vector<Sentence>& dev_split = nonempty_split(corpus, "dev");

  std::vector<const Sentence*> train_ptrs;
  for (const Sentence& s : train_split) train_ptrs.push_back(&s);

  RunSpec spec;
  spec.tagset = corpus.tagset();
  spec.vocab = vocab_for(config.model, train_ptrs);
  spec.languages = {corpus.language()};
  spec.dev = {{corpus.language().code(), &dev_split}};
  spec.epoch_sentences = [train_ptrs](RngStream&) { return train_ptrs; };

  auto tagger = make_tagger(config.model, spec.tagset, spec.vocab, spec.languages, seed);
  AdamState adam = init_adam(tagger->params(), config.adam);
  return run_training(config, std::move(spec), std::move(tagger), std::move(adam), seed,
                      false);
}

TrainResult train(const TrainConfig& config, const PolyglotCorpus& corpus,
                  std::uint64_t seed) {
  if (corpus.corpora().empty()) raise(ErrorKind::EmptySplit, "no languages to train on");

  std::vector<const Sentence*> all_train;
  RunSpec spec;
  spec.tagset = corpus.tagset();
  for (const LabeledCorpus& mono : corpus.corpora()) {
    const std::vector<Sentence>& train_split = nonempty_split(mono, "train");
    for (const Sentence& s : train_split) all_train.push_back(&s);
    spec.dev.push_back({mono.language().code(), &nonempty_split(mono, "dev")});
    spec.languages.push_back(mono.language());
  }
  spec.vocab = vocab_for(config.model, all_train);
  spec.epoch_sentences = [&corpus](RngStream& rng) { return corpus.epoch_train(rng); };

  auto tagger = make_tagger(config.model, spec.tagset, spec.vocab, spec.languages, seed);
  AdamState adam = init_adam(tagger->params(), config.adam);
  return run_training(config, std::move(spec), std::move(tagger), std::move(adam), seed,
                      false);
}

TrainResult finetune(const Checkpoint& init, const LabeledCorpus& target,
                     const TrainConfig& config, std::uint64_t seed) {
  if (target.tagset() != init.tagset) {
    raise(ErrorKind::TagSetMismatch, "target corpus entity types differ from the checkpoint's");
  }
  const std::vector<Sentence>& train_split = nonempty_split(target, "train");
  const std::vector<Sentence>& dev_split = nonempty_split(target, "dev");

  std::vector<const Sentence*> train_ptrs;
  for (const Sentence& s : train_split) train_ptrs.push_back(&s);

  RunSpec spec;
  spec.tagset = init.tagset;
  spec.vocab = init.vocab;
  spec.languages = {target.language()};
  spec.dev = {{target.language().code(), &dev_split}};
  spec.epoch_sentences = [train_ptrs](RngStream&) { return train_ptrs; };

  std::unique_ptr<Tagger> tagger = tagger_from(init);
  AdamState adam;
  if (config.reset_optimizer) {
    adam = init_adam(tagger->params(), config.adam);
  } else {
    adam = init.adam;
    if (config.finetune_lr.has_value()) adam.hyper.lr = *config.finetune_lr;
  }
  return run_training(config, std::move(spec), std::move(tagger), std::move(adam), seed,
                      true);
}

const TrainResult& select_best(const std::vector<TrainResult>& runs) {
  if (runs.empty()) raise(ErrorKind::EmptyRuns, "no runs to select from");
  std::size_t best = 0;
  for (std::size_t i = 1; i < runs.size(); ++i) {
    double a = runs[i].history.best_score();
    double b = runs[best].history.best_score();
    if (a > b || (a == b && runs[i].checkpoint.seed < runs[best].checkpoint.seed)) best = i;
  }
  return runs[best];
}

}  // namespace polyner
