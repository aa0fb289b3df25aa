#include <doctest.h>

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "polyner/corpus.hpp"
#include "polyner/crf.hpp"
#include "polyner/encoding.hpp"
#include "polyner/errors.hpp"
#include "polyner/optim.hpp"
#include "polyner/rng.hpp"
#include "polyner/taggers.hpp"

using namespace polyner;

namespace {

Sentence make_sentence(const std::vector<std::pair<std::string, int>>& toks,
                       const std::string& lang = "en") {
  Sentence s;
  s.language = LanguageId(lang);
  for (const auto& [text, label] : toks) s.tokens.push_back(Token{text, label});
  return s;
}

TaggerConfig tiny_hiercrf(VocabMode mode = VocabMode::chars) {
  TaggerConfig cfg;
  cfg.arch = Architecture::hiercrf;
  cfg.hiercrf.subtoken_layers = 2;
  cfg.hiercrf.subtoken_hidden = 2;
  cfg.hiercrf.sentence_layers = 1;
  cfg.hiercrf.sentence_hidden = 2;
  cfg.hiercrf.embedding_dim = 3;
  cfg.hiercrf.vocab_mode = mode;
  return cfg;
}

TaggerConfig tiny_charner() {
  TaggerConfig cfg;
  cfg.arch = Architecture::charner;
  cfg.charner.layers = 2;
  cfg.charner.hidden = 2;
  cfg.charner.embedding_dim = 3;
  cfg.charner.byte_dropout = 0.3;
  cfg.charner.interior_dropout = 0.4;
  cfg.charner.final_dropout = 0.5;
  return cfg;
}

// Exhaustive argmax over byte-class sequences, scored like the constrained
// decoder: per-byte logits plus transitions, with the same huge penalty for
// changing class between two bytes of one word.
std::vector<int> brute_decode(const Tensor& logits, const WordBoundaryMap& bm,
                              const Tensor& transitions, const TagSet& tagset) {
  std::size_t B = logits.dim(0);
  std::size_t K = logits.dim(1);
  std::vector<std::size_t> seq(B, 0), best_seq;
  double best = -std::numeric_limits<double>::infinity();
  while (true) {
    double score = logits(0, seq[0]);
    for (std::size_t t = 1; t < B; ++t) {
      score += logits(t, seq[t]) + transitions(seq[t - 1], seq[t]);
      bool same_word = !bm.is_separator(t - 1) && !bm.is_separator(t) &&
                       bm.word_of_byte[t - 1] == bm.word_of_byte[t];
      if (same_word && seq[t - 1] != seq[t]) score += -1e9;
    }
    if (score > best) {
      best = score;
      best_seq = seq;
    }
    std::size_t pos = 0;
    while (pos < B && ++seq[pos] == K) {
      seq[pos] = 0;
      ++pos;
    }
    if (pos == B) break;
  }

  int o_class = static_cast<int>(tagset.num_types());
  std::vector<int> word_class(bm.num_words, o_class);
  for (std::size_t t = 0; t < B; ++t) {
    if (!bm.is_separator(t)) {
      word_class[static_cast<std::size_t>(bm.word_of_byte[t])] =
          static_cast<int>(best_seq[t]);
    }
  }
  std::vector<int> labels(bm.num_words, TagSet::kOutside);
  for (std::size_t w = 0; w < word_class.size(); ++w) {
    if (word_class[w] == o_class) continue;
    bool cont = w > 0 && word_class[w - 1] == word_class[w];
    labels[w] =
        cont ? tagset.inside_label(word_class[w]) : tagset.begin_label(word_class[w]);
  }
  return labels;
}

}  // namespace

TEST_SUITE("taggers") {

TEST_CASE("architecture names round-trip") {
  CHECK(std::string(architecture_name(Architecture::hiercrf)) == "hiercrf");
  CHECK(std::string(architecture_name(Architecture::charner)) == "charner");
  CHECK(architecture_from_name("hiercrf") == Architecture::hiercrf);
  CHECK(architecture_from_name("charner") == Architecture::charner);
  CHECK_THROWS_AS((void)architecture_from_name("transformer"), Error);
}

TEST_CASE("hiercrf parameter layout") {
  TagSet tagset({"PER", "LOC"});
  Sentence s = make_sentence({{"abc", 1}, {"de", 0}});
  SubtokenVocab vocab = SubtokenVocab::chars_from({&s});
  HierCrfTagger tagger(tiny_hiercrf(), tagset, vocab, {LanguageId("en")}, 3);

  const ParamStore& p = tagger.params();
  CHECK(p.at("embed/table").shape() == std::vector<std::size_t>({vocab.size(), 3}));
  CHECK(p.has("subtoken/layer_0/fwd/w_x"));
  CHECK(p.has("subtoken/layer_1/bwd/b"));
  CHECK(p.has("sentence/layer_0/fwd/w_x"));
  CHECK_FALSE(p.has("sentence/layer_1/fwd/w_x"));
  CHECK(p.at("sentence/layer_0/fwd/w_x").shape() ==
        std::vector<std::size_t>({8, 4}));  // input is the 2H subtoken output
  CHECK(p.at("emit/w").shape() == std::vector<std::size_t>({5, 4}));
  CHECK(p.at("crf/shared/transitions").shape() == std::vector<std::size_t>({5, 5}));
  CHECK(p.at("crf/shared/start").shape() == std::vector<std::size_t>({5}));

  for (double v : p.at("crf/shared/transitions").flat()) CHECK(v == 0.0);
  CHECK_FALSE(p.has("crf/lang_en/transitions"));
}

TEST_CASE("hiercrf language-specific transition parameters") {
  TagSet tagset({"PER"});
  Sentence s = make_sentence({{"ab", 0}});
  SubtokenVocab vocab = SubtokenVocab::chars_from({&s});
  TaggerConfig cfg = tiny_hiercrf();
  cfg.hiercrf.language_specific_transitions = true;
  HierCrfTagger tagger(cfg, tagset, vocab, {LanguageId("en"), LanguageId("de")}, 3);

  ParamStore& p = tagger.params();
  CHECK(p.has("crf/lang_en/transitions"));
  CHECK(p.has("crf/lang_de/stop"));
  CHECK(p.has("crf/shared/transitions"));

  p.at("crf/lang_en/transitions")(0, 1) = 5.0;
  p.at("crf/shared/transitions")(0, 1) = -7.0;

  Sentence en = make_sentence({{"ab", 0}}, "en");
  Sentence unknown = make_sentence({{"ab", 0}}, "fr");
  CrfPotentials pot_en = tagger.potentials_for(en);
  CrfPotentials pot_fr = tagger.potentials_for(unknown);
  CHECK(pot_en.transitions(0, 1) == 5.0);
  CHECK(pot_fr.transitions(0, 1) == -7.0);
  // Emissions never route through the transition choice.
  CHECK(pot_en.emissions == pot_fr.emissions);
}

TEST_CASE("hiercrf emissions shape and loss agreement") {
  TagSet tagset({"PER", "LOC"});
  Sentence s = make_sentence({{"abc", 1}, {"d", 2}, {"ee", 0}});
  SubtokenVocab vocab = SubtokenVocab::chars_from({&s});
  HierCrfTagger tagger(tiny_hiercrf(), tagset, vocab, {LanguageId("en")}, 7);

  HierCrfTape tape = tagger.build_tape(s, nullptr);
  CHECK(tape.potentials.emissions.shape() == std::vector<std::size_t>({3, 5}));
  CHECK_NOTHROW(validate_potentials(tape.potentials));

  std::vector<int> gold = {1, 2, 0};
  double direct = -log_likelihood(tape.potentials, gold);
  double loss_eval = tagger.sentence_loss(s, nullptr);
  ParamStore grads = zeros_like(tagger.params());
  double loss_train = tagger.sentence_loss(s, &grads);
  CHECK(loss_eval == doctest::Approx(direct).epsilon(1e-12));
  CHECK(loss_train == doctest::Approx(direct).epsilon(1e-12));

  double sum = 0.0;
  for (double v : grads.at("emit/w").flat()) sum += std::abs(v);
  CHECK(sum > 0.0);
}

TEST_CASE("hiercrf end-to-end gradient check") {
  TagSet tagset({"PER", "LOC"});
  Sentence s = make_sentence({{"abc", 1}, {"d", 2}, {"ee", 0}});
  SubtokenVocab vocab = SubtokenVocab::chars_from({&s});
  HierCrfTagger tagger(tiny_hiercrf(), tagset, vocab, {LanguageId("en")}, 13);

  LossFn fn = [&](ParamStore&, ParamStore* grads) {
    return tagger.sentence_loss(s, grads);
  };
  RngStream rng(99, "gc/hiercrf");
  GradCheckResult res = grad_check(fn, tagger.params(), 1e-5, 300, rng);
  CHECK(res.max_rel_err < 1e-5);
}

TEST_CASE("hiercrf language-specific gradient check") {
  TagSet tagset({"PER"});
  Sentence s = make_sentence({{"ab", 1}, {"c", 2}}, "de");
  SubtokenVocab vocab = SubtokenVocab::chars_from({&s});
  TaggerConfig cfg = tiny_hiercrf();
  cfg.hiercrf.language_specific_transitions = true;
  HierCrfTagger tagger(cfg, tagset, vocab, {LanguageId("de")}, 17);

  LossFn fn = [&](ParamStore&, ParamStore* grads) {
    return tagger.sentence_loss(s, grads);
  };
  RngStream rng(99, "gc/lang");
  GradCheckResult res = grad_check(fn, tagger.params(), 1e-5, 200, rng);
  CHECK(res.max_rel_err < 1e-5);

  // The shared transitions sit outside this sentence's path.
  ParamStore grads = zeros_like(tagger.params());
  (void)tagger.sentence_loss(s, &grads);
  for (double v : grads.at("crf/shared/transitions").flat()) CHECK(v == 0.0);
  double lang_sum = 0.0;
  for (double v : grads.at("crf/lang_de/transitions").flat()) lang_sum += std::abs(v);
  CHECK(lang_sum > 0.0);
}

TEST_CASE("hiercrf gradient accumulates across calls") {
  TagSet tagset({"PER"});
  Sentence s = make_sentence({{"ab", 1}});
  SubtokenVocab vocab = SubtokenVocab::chars_from({&s});
  HierCrfTagger tagger(tiny_hiercrf(), tagset, vocab, {LanguageId("en")}, 5);

  ParamStore once = zeros_like(tagger.params());
  ParamStore twice = zeros_like(tagger.params());
  (void)tagger.sentence_loss(s, &once);
  (void)tagger.sentence_loss(s, &twice);
  (void)tagger.sentence_loss(s, &twice);
  for (std::size_t i = 0; i < once.size(); ++i) {
    const Tensor& a = once.at(i);
    const Tensor& b = twice.at(i);
    for (std::size_t j = 0; j < a.size(); ++j) {
      CHECK(b[j] == doctest::Approx(2.0 * a[j]).epsilon(1e-12));
    }
  }
}

TEST_CASE("hiercrf seed determinism") {
  TagSet tagset({"PER"});
  Sentence s = make_sentence({{"abc", 1}, {"d", 0}});
  SubtokenVocab vocab = SubtokenVocab::chars_from({&s});
  HierCrfTagger a(tiny_hiercrf(), tagset, vocab, {LanguageId("en")}, 21);
  HierCrfTagger b(tiny_hiercrf(), tagset, vocab, {LanguageId("en")}, 21);
  HierCrfTagger c(tiny_hiercrf(), tagset, vocab, {LanguageId("en")}, 22);

  REQUIRE(a.params().size() == b.params().size());
  for (std::size_t i = 0; i < a.params().size(); ++i) {
    CHECK(a.params().at(i) == b.params().at(i));
  }
  CHECK(a.sentence_loss(s, nullptr) == b.sentence_loss(s, nullptr));
  CHECK(a.params().at("embed/table") != c.params().at("embed/table"));
}

TEST_CASE("hiercrf empty sentence is rejected") {
  TagSet tagset({"PER"});
  Sentence seed_s = make_sentence({{"ab", 0}});
  SubtokenVocab vocab = SubtokenVocab::chars_from({&seed_s});
  HierCrfTagger tagger(tiny_hiercrf(), tagset, vocab, {LanguageId("en")}, 3);
  Sentence empty;
  empty.language = LanguageId("en");
  try {
    (void)tagger.sentence_loss(empty, nullptr);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::EmptySentence);
  }
}

TEST_CASE("hiercrf vocab mode must match config") {
  TagSet tagset({"PER"});
  Sentence s = make_sentence({{"ab", 0}});
  SubtokenVocab chars = SubtokenVocab::chars_from({&s});
  try {
    HierCrfTagger tagger(tiny_hiercrf(VocabMode::byte), tagset, chars, {LanguageId("en")}, 3);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::VocabIncompatible);
  }
}

TEST_CASE("charner stream joins words with single spaces") {
  SubtokenVocab vocab = SubtokenVocab::bytes();
  Sentence s = make_sentence({{"ab", 0}, {"cde", 0}});
  CharNerStream st = charner_stream(s, vocab);
  CHECK(st.byte_ids == std::vector<int>({'a', 'b', ' ', 'c', 'd', 'e'}));
  CHECK(st.boundaries.word_of_byte == std::vector<int>({0, 0, -1, 1, 1, 1}));
  CHECK(st.boundaries.num_words == 2);
  CHECK(st.boundaries.is_separator(2));
  CHECK_FALSE(st.boundaries.is_separator(3));

  Sentence pair = make_sentence({{"abc", 0}, {"def", 0}});
  CHECK(charner_stream(pair, vocab).byte_ids.size() == 7);

  Sentence one = make_sentence({{"xyz", 0}});
  CharNerStream st1 = charner_stream(one, vocab);
  CHECK(st1.byte_ids.size() == 3);
  for (int w : st1.boundaries.word_of_byte) CHECK(w == 0);

  SubtokenVocab chars = SubtokenVocab::chars_from({&s});
  CHECK_THROWS_AS((void)charner_stream(s, chars), Error);
  Sentence empty;
  CHECK_THROWS_AS((void)charner_stream(empty, vocab), Error);
}

TEST_CASE("charner class space drops the BIO distinction") {
  TagSet tagset({"PER", "LOC", "ORG"});
  CHECK(charner_num_classes(tagset) == 4);
  CHECK(charner_class_of_label(tagset, TagSet::kOutside) == 3);
  CHECK(charner_class_of_label(tagset, tagset.begin_label(0)) == 0);
  CHECK(charner_class_of_label(tagset, tagset.inside_label(0)) == 0);
  CHECK(charner_class_of_label(tagset, tagset.begin_label(2)) == 2);
}

TEST_CASE("charner loss matches per-byte softmax by hand") {
  TagSet tagset({"PER", "LOC"});
  SubtokenVocab vocab = SubtokenVocab::bytes();
  CharNerTagger tagger(tiny_charner(), tagset, vocab, 31);
  Sentence s = make_sentence({{"ab", tagset.begin_label(0)}, {"c", TagSet::kOutside}});

  auto [logits, bm] = tagger.logits_for(s);
  REQUIRE(logits.shape() == std::vector<std::size_t>({4, 3}));
  std::vector<int> targets = {0, 0, 2, 2};  // separator byte counts as outside
  double expected = 0.0;
  for (std::size_t t = 0; t < 4; ++t) {
    double mx = logits(t, 0);
    for (std::size_t k = 1; k < 3; ++k) mx = std::max(mx, logits(t, k));
    double z = 0.0;
    for (std::size_t k = 0; k < 3; ++k) z += std::exp(logits(t, k) - mx);
    expected += mx + std::log(z) - logits(t, static_cast<std::size_t>(targets[t]));
  }
  CHECK(tagger.sentence_loss(s, nullptr) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("charner end-to-end gradient check") {
  TagSet tagset({"PER"});
  SubtokenVocab vocab = SubtokenVocab::bytes();
  CharNerTagger tagger(tiny_charner(), tagset, vocab, 41);
  Sentence s = make_sentence({{"ab", tagset.begin_label(0)}, {"c", 0}});

  SUBCASE("evaluation mode") {
    LossFn fn = [&](ParamStore&, ParamStore* grads) {
      return tagger.sentence_loss(s, grads);
    };
    RngStream rng(99, "gc/charner");
    GradCheckResult res = grad_check(fn, tagger.params(), 1e-5, 300, rng);
    CHECK(res.max_rel_err < 1e-5);
  }

  SUBCASE("training mode with a replayed noise stream") {
    LossFn fn = [&](ParamStore&, ParamStore* grads) {
      RngStream noise(7, "drop");
      return tagger.sentence_loss(s, grads, true, &noise);
    };
    RngStream rng(99, "gc/charner-train");
    GradCheckResult res = grad_check(fn, tagger.params(), 1e-5, 300, rng);
    CHECK(res.max_rel_err < 1e-5);
  }
}

TEST_CASE("charner dropout fires only in training mode") {
  TagSet tagset({"PER"});
  SubtokenVocab vocab = SubtokenVocab::bytes();
  CharNerTagger tagger(tiny_charner(), tagset, vocab, 43);
  Sentence s = make_sentence({{"abcd", 1}, {"efgh", 2}});

  double eval_1 = tagger.sentence_loss(s, nullptr);
  double eval_2 = tagger.sentence_loss(s, nullptr);
  CHECK(eval_1 == eval_2);

  RngStream n1(7, "drop");
  RngStream n2(7, "drop");
  double train_1 = tagger.sentence_loss(s, nullptr, true, &n1);
  double train_2 = tagger.sentence_loss(s, nullptr, true, &n2);
  CHECK(train_1 == train_2);
  CHECK(train_1 != eval_1);

  RngStream n3(8, "drop");
  double train_3 = tagger.sentence_loss(s, nullptr, true, &n3);
  CHECK(train_3 != train_1);

  CHECK_THROWS_AS((void)tagger.sentence_loss(s, nullptr, true, nullptr), Error);
}

TEST_CASE("charner decode agrees with exhaustive search") {
  TagSet tagset({"PER", "LOC"});
  SubtokenVocab vocab = SubtokenVocab::bytes();
  RngStream rng(55, "decode-fuzz");
  for (int trial = 0; trial < 100; ++trial) {
    std::size_t words = 1 + rng.next_index(3);
    std::vector<std::pair<std::string, int>> toks;
    for (std::size_t w = 0; w < words; ++w) {
      std::size_t len = 1 + rng.next_index(2);
      std::string text;
      for (std::size_t i = 0; i < len; ++i) {
        text.push_back(static_cast<char>('a' + rng.next_index(26)));
      }
      toks.push_back({text, 0});
    }
    Sentence s = make_sentence(toks);
    WordBoundaryMap bm = charner_stream(s, vocab).boundaries;
    std::size_t B = bm.size();
    std::size_t K = charner_num_classes(tagset);

    Tensor logits = Tensor::zeros({B, K});
    for (double& v : logits.flat()) v = rng.next_double(-3.0, 3.0);
    Tensor transitions = Tensor::zeros({K, K});
    for (double& v : transitions.flat()) v = rng.next_double(-1.0, 1.0);

    CHECK(charner_decode(logits, bm, transitions, tagset) ==
          brute_decode(logits, bm, transitions, tagset));
  }
}

TEST_CASE("charner decode converts word classes to BIO runs") {
  TagSet tagset({"PER", "LOC"});
  SubtokenVocab vocab = SubtokenVocab::bytes();
  std::size_t K = charner_num_classes(tagset);

  auto decode_classes = [&](const std::vector<int>& classes) {
    std::vector<std::pair<std::string, int>> toks(classes.size(), {"a", 0});
    Sentence s = make_sentence(toks);
    WordBoundaryMap bm = charner_stream(s, vocab).boundaries;
    Tensor logits = Tensor::zeros({bm.size(), K});
    for (std::size_t t = 0; t < bm.size(); ++t) {
      int want = bm.is_separator(t)
                     ? static_cast<int>(tagset.num_types())
                     : classes[static_cast<std::size_t>(bm.word_of_byte[t])];
      logits(t, static_cast<std::size_t>(want)) = 10.0;
    }
    return charner_decode(logits, bm, Tensor::zeros({K, K}), tagset);
  };

  CHECK(decode_classes({0, 0, 2, 1}) == std::vector<int>({1, 2, 0, 3}));
  CHECK(decode_classes({0, 1}) == std::vector<int>({1, 3}));
  CHECK(decode_classes({0, 2, 0}) == std::vector<int>({1, 0, 1}));
  CHECK(decode_classes({2, 2}) == std::vector<int>({0, 0}));
  CHECK(decode_classes({1, 1, 1}) == std::vector<int>({3, 4, 4}));
}

TEST_CASE("charner decode keeps words whole under adversarial logits") {
  TagSet tagset({"PER", "LOC"});
  SubtokenVocab vocab = SubtokenVocab::bytes();
  std::size_t K = charner_num_classes(tagset);
  Sentence s = make_sentence({{"abcd", 0}});
  WordBoundaryMap bm = charner_stream(s, vocab).boundaries;

  // Per-byte argmax alternates classes; the constraint forces one winner.
  Tensor logits = Tensor::zeros({bm.size(), K});
  for (std::size_t t = 0; t < bm.size(); ++t) logits(t, t % 2) = 4.0;
  std::vector<int> labels = charner_decode(logits, bm, Tensor::zeros({K, K}), tagset);
  REQUIRE(labels.size() == 1);
  CHECK((labels[0] == tagset.begin_label(0) || labels[0] == tagset.begin_label(1)));
}

TEST_CASE("charner decode validates its inputs") {
  TagSet tagset({"PER"});
  std::size_t K = charner_num_classes(tagset);
  WordBoundaryMap bm;
  bm.word_of_byte = {0, 0};
  bm.num_words = 1;

  try {
    (void)charner_decode(Tensor::zeros({3, K}), bm, Tensor::zeros({K, K}), tagset);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::BoundaryMismatch);
  }
  try {
    (void)charner_decode(Tensor::zeros({2, K + 1}), bm, Tensor::zeros({K + 1, K + 1}), tagset);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ShapeMismatch);
  }
  CHECK_THROWS_AS(
      (void)charner_decode(Tensor::zeros({2, K}), bm, Tensor::zeros({K, K + 1}), tagset),
      Error);
}

TEST_CASE("charner requires a byte vocab") {
  TagSet tagset({"PER"});
  Sentence s = make_sentence({{"ab", 0}});
  SubtokenVocab chars = SubtokenVocab::chars_from({&s});
  try {
    CharNerTagger tagger(tiny_charner(), tagset, chars, 3);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::VocabIncompatible);
  }
}

TEST_CASE("factory dispatch and parameter restore") {
  TagSet tagset({"PER", "LOC"});
  Sentence s = make_sentence({{"abc", 1}, {"de", 0}, {"fg", 3}});
  std::vector<LanguageId> langs = {LanguageId("en")};

  SUBCASE("hiercrf") {
    SubtokenVocab vocab = SubtokenVocab::chars_from({&s});
    auto t1 = make_tagger(tiny_hiercrf(), tagset, vocab, langs, 61);
    CHECK(t1->architecture() == Architecture::hiercrf);
    ParamStore copy = t1->params();
    auto t2 = make_tagger(tiny_hiercrf(), tagset, vocab, langs, std::move(copy));
    CHECK(t1->predict_labels(s) == t2->predict_labels(s));
    CHECK(t1->sentence_loss(s, nullptr) == t2->sentence_loss(s, nullptr));
  }

  SUBCASE("charner") {
    SubtokenVocab vocab = SubtokenVocab::bytes();
    auto t1 = make_tagger(tiny_charner(), tagset, vocab, langs, 61);
    CHECK(t1->architecture() == Architecture::charner);
    ParamStore copy = t1->params();
    auto t2 = make_tagger(tiny_charner(), tagset, vocab, langs, std::move(copy));
    CHECK(t1->predict_labels(s) == t2->predict_labels(s));
    CHECK(t1->sentence_loss(s, nullptr) == t2->sentence_loss(s, nullptr));
  }
}

TEST_CASE("predict wraps predicted labels as spans") {
  TagSet tagset({"PER", "LOC"});
  Sentence s = make_sentence({{"abc", 1}, {"de", 2}, {"fg", 0}, {"hi", 3}});
  SubtokenVocab vocab = SubtokenVocab::bytes();
  auto tagger = make_tagger(tiny_charner(), tagset, vocab, {LanguageId("en")}, 71);

  std::vector<int> labels = tagger->predict_labels(s);
  REQUIRE(labels.size() == s.size());
  CHECK(tagger->predict(s) == extract_spans(labels, tagset));
}

TEST_CASE("both architectures stay total on random byte soup") {
  TagSet tagset({"PER"});
  SubtokenVocab bytes = SubtokenVocab::bytes();
  RngStream rng(81, "soup");
  auto hier = make_tagger(tiny_hiercrf(VocabMode::byte), tagset, bytes, {LanguageId("en")}, 5);
  auto flat = make_tagger(tiny_charner(), tagset, bytes, {LanguageId("en")}, 5);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<std::pair<std::string, int>> toks;
    std::size_t words = 1 + rng.next_index(3);
    for (std::size_t w = 0; w < words; ++w) {
      std::string text;
      std::size_t len = 1 + rng.next_index(4);
      for (std::size_t i = 0; i < len; ++i) {
        text.push_back(static_cast<char>(rng.next_index(256)));
      }
      toks.push_back({text, static_cast<int>(rng.next_index(3))});
    }
    Sentence s = make_sentence(toks);
    CHECK(hier->predict_labels(s).size() == words);
    CHECK(flat->predict_labels(s).size() == words);
    CHECK(std::isfinite(hier->sentence_loss(s, nullptr)));
    CHECK(std::isfinite(flat->sentence_loss(s, nullptr)));
  }
}

}  // TEST_SUITE
