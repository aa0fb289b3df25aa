#include <doctest.h>

#include <set>
#include <string>
#include <vector>

#include "polyner/corpus.hpp"
#include "polyner/errors.hpp"
#include "polyner/rng.hpp"

using namespace polyner;

namespace {

TagSet two_types() { return TagSet({"PER", "LOC"}); }

Sentence make_sentence(const LanguageId& lang, const std::vector<std::pair<std::string, int>>& toks) {
  Sentence s;
  s.language = lang;
  for (const auto& [text, label] : toks) s.tokens.push_back({text, label});
  return s;
}

// Reference span decoder, written as a separate pass over chunk starts so it
// shares no code path with the production decoder. conlleval rules: a token
// starts a chunk if it is B-t, or it is I-t after O, start of sequence, or a
// different type; the chunk runs while following tokens are I-same-type.
std::vector<EntitySpan> reference_spans(const std::vector<int>& labels, const TagSet& ts) {
  std::vector<EntitySpan> out;
  std::size_t n = labels.size();
  std::vector<bool> starts(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] == TagSet::kOutside) continue;
    if (ts.is_begin(labels[i])) {
      starts[i] = true;
    } else {
      bool after_same = i > 0 && labels[i - 1] != TagSet::kOutside &&
                        ts.type_of_label(labels[i - 1]) == ts.type_of_label(labels[i]);
      starts[i] = !after_same;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!starts[i]) continue;
    std::size_t j = i + 1;
    while (j < n && labels[j] != TagSet::kOutside && !ts.is_begin(labels[j]) &&
           ts.type_of_label(labels[j]) == ts.type_of_label(labels[i])) {
      ++j;
    }
    out.push_back({i, j, ts.entity_types()[static_cast<std::size_t>(ts.type_of_label(labels[i]))]});
  }
  return out;
}

}  // namespace

TEST_SUITE("corpus") {

TEST_CASE("language codes are validated") {
  CHECK(LanguageId("en").code() == "en");
  CHECK(LanguageId("espanyol").code() == "espanyol");
  CHECK_THROWS_AS(LanguageId("E"), Error);
  CHECK_THROWS_AS(LanguageId("EN"), Error);
  CHECK_THROWS_AS(LanguageId("e"), Error);
  CHECK_THROWS_AS(LanguageId("toolonglang"), Error);
  CHECK_THROWS_AS(LanguageId("ab1"), Error);
  CHECK_THROWS_AS(LanguageId(""), Error);
}

TEST_CASE("tagset label layout") {
  TagSet ts = two_types();
  CHECK(ts.num_types() == 2);
  CHECK(ts.num_labels() == 5);
  CHECK(ts.labels() == std::vector<std::string>({"O", "B-PER", "I-PER", "B-LOC", "I-LOC"}));
  CHECK(ts.label_index("O") == 0);
  CHECK(ts.label_index("B-PER") == 1);
  CHECK(ts.label_index("I-LOC") == 4);
  CHECK(ts.label_index("B-ORG") == -1);
  CHECK(ts.type_of_label(0) == -1);
  CHECK(ts.type_of_label(1) == 0);
  CHECK(ts.type_of_label(2) == 0);
  CHECK(ts.type_of_label(4) == 1);
  CHECK(ts.is_begin(1));
  CHECK_FALSE(ts.is_begin(2));
  CHECK_FALSE(ts.is_begin(0));
  CHECK(ts.is_inside(4));
  CHECK(ts.begin_label(1) == 3);
  CHECK(ts.inside_label(0) == 2);
}

TEST_CASE("tagset rejects bad type names") {
  CHECK_THROWS_AS(TagSet({"PER", "PER"}), Error);
  CHECK_THROWS_AS(TagSet({""}), Error);
  CHECK_THROWS_AS(TagSet({"B-PER"}), Error);
}

TEST_CASE("tagset equality is by type inventory") {
  CHECK(two_types() == TagSet({"PER", "LOC"}));
  CHECK(two_types() != TagSet({"LOC", "PER"}));
}

TEST_CASE("parse_conll reads tokens, tags, and sentence breaks") {
  TagSet ts = two_types();
  LanguageId en("en");
  std::string text =
      "-DOCSTART- O\n"
      "\n"
      "John B-PER\n"
      "Smith I-PER\n"
      "visited O\n"
      "Berlin B-LOC\n"
      "\n"
      "Bye O\n";
  auto sents = parse_conll(text, ts, en);
  REQUIRE(sents.size() == 2);
  CHECK(sents[0].size() == 4);
  CHECK(sents[0].tokens[0].text == "John");
  CHECK(sents[0].tokens[0].label == ts.label_index("B-PER"));
  CHECK(sents[0].tokens[3].label == ts.label_index("B-LOC"));
  CHECK(sents[0].language == en);
  CHECK(sents[1].size() == 1);
  CHECK(sents[1].tokens[0].text == "Bye");
}

TEST_CASE("parse_conll keeps first and last column of wide rows") {
  auto sents = parse_conll("Tokyo NNP I-NP B-LOC\n", two_types(), LanguageId("en"));
  REQUIRE(sents.size() == 1);
  CHECK(sents[0].tokens[0].text == "Tokyo");
  CHECK(sents[0].tokens[0].label == two_types().label_index("B-LOC"));
}

TEST_CASE("parse_conll tolerates CR line endings and a missing final newline") {
  auto sents = parse_conll("a O\r\n\r\nb O", two_types(), LanguageId("en"));
  REQUIRE(sents.size() == 2);
  CHECK(sents[0].tokens[0].text == "a");
  CHECK(sents[1].tokens[0].text == "b");
}

TEST_CASE("parse_conll reports a malformed line with its number") {
  try {
    parse_conll("ok O\nbroken\n", two_types(), LanguageId("en"));
    FAIL("expected a parse error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::MalformedLine);
    CHECK(std::string(e.what()).find("2") != std::string::npos);
  }
}

TEST_CASE("parse_conll rejects unknown labels and empty documents") {
  try {
    parse_conll("x B-ORG\n", two_types(), LanguageId("en"));
    FAIL("expected a label error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::UnknownLabel);
  }
  CHECK_THROWS_AS((void)parse_conll("", two_types(), LanguageId("en")), Error);
  CHECK_THROWS_AS((void)parse_conll("\n\n\n", two_types(), LanguageId("en")), Error);
}

TEST_CASE("write then parse is the identity") {
  TagSet ts = two_types();
  LanguageId de("de");
  std::vector<Sentence> sents = {
      make_sentence(de, {{"Angela", 1}, {"Merkel", 2}, {"in", 0}, {"Bonn", 3}}),
      make_sentence(de, {{"Ende", 0}}),
  };
  std::string text = write_conll(sents, ts);
  auto round = parse_conll(text, ts, de);
  REQUIRE(round.size() == sents.size());
  for (std::size_t i = 0; i < sents.size(); ++i) {
    REQUIRE(round[i].size() == sents[i].size());
    for (std::size_t j = 0; j < sents[i].size(); ++j) {
      CHECK(round[i].tokens[j].text == sents[i].tokens[j].text);
      CHECK(round[i].tokens[j].label == sents[i].tokens[j].label);
    }
  }
}

TEST_CASE("extract_spans handles the standard shapes") {
  TagSet ts = two_types();
  auto L = [&](const char* name) { return ts.label_index(name); };

  CHECK(extract_spans({L("O"), L("B-PER"), L("I-PER"), L("O")}, ts) ==
        std::vector<EntitySpan>({{1, 3, "PER"}}));
  CHECK(extract_spans({L("B-PER"), L("B-PER")}, ts) ==
        std::vector<EntitySpan>({{0, 1, "PER"}, {1, 2, "PER"}}));
  // Orphan I-t opens a span.
  CHECK(extract_spans({L("I-LOC"), L("I-LOC")}, ts) ==
        std::vector<EntitySpan>({{0, 2, "LOC"}}));
  // A type switch under I closes and reopens.
  CHECK(extract_spans({L("B-PER"), L("I-LOC")}, ts) ==
        std::vector<EntitySpan>({{0, 1, "PER"}, {1, 2, "LOC"}}));
  // Trailing span is closed at the end of the sequence.
  CHECK(extract_spans({L("O"), L("B-LOC"), L("I-LOC")}, ts) ==
        std::vector<EntitySpan>({{1, 3, "LOC"}}));
  CHECK(extract_spans({}, ts).empty());
  CHECK(extract_spans({L("O"), L("O")}, ts).empty());
}

TEST_CASE("extract_spans agrees with an independent decoder on random input") {
  TagSet ts = two_types();
  RngStream rng(2024, "span-fuzz");
  for (int iter = 0; iter < 500; ++iter) {
    std::size_t len = rng.next_index(12);
    std::vector<int> labels;
    for (std::size_t i = 0; i < len; ++i) {
      labels.push_back(static_cast<int>(rng.next_index(ts.num_labels())));
    }
    CAPTURE(iter);
    CHECK(extract_spans(labels, ts) == reference_spans(labels, ts));
  }
}

TEST_CASE("labeled corpus split management") {
  TagSet ts = two_types();
  LanguageId en("en");
  LabeledCorpus c(en, ts);
  CHECK_FALSE(c.has_split("train"));
  CHECK_THROWS_AS((void)c.split("train"), Error);
  c.set_split("train", {make_sentence(en, {{"x", 0}})});
  CHECK(c.has_split("train"));
  CHECK(c.split("train").size() == 1);
  CHECK_THROWS_AS(c.set_split("validation", {}), Error);
  CHECK_THROWS_AS(c.set_split("dev", {make_sentence(LanguageId("de"), {{"x", 0}})}), Error);
}

TEST_CASE("concat_polyglot validates its inputs") {
  TagSet ts = two_types();
  LabeledCorpus en(LanguageId("en"), ts);
  LabeledCorpus de(LanguageId("de"), ts);
  LabeledCorpus en2(LanguageId("en"), ts);
  LabeledCorpus other(LanguageId("nl"), TagSet({"ORG"}));

  CHECK_THROWS_AS((void)concat_polyglot({en}, false), Error);
  try {
    (void)concat_polyglot({en, other}, false);
    FAIL("expected tagset mismatch");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::TagSetMismatch);
  }
  try {
    (void)concat_polyglot({en, de, en2}, false);
    FAIL("expected duplicate language");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::DuplicateLanguage);
  }
  PolyglotCorpus ok = concat_polyglot({en, de}, true);
  CHECK(ok.languages().size() == 2);
  CHECK(ok.uniform_sampling());
  CHECK(ok.corpus(LanguageId("de")).language() == LanguageId("de"));
  CHECK_THROWS_AS((void)ok.corpus(LanguageId("fr")), Error);
}

TEST_CASE("epoch_train without uniform sampling walks every sentence once") {
  TagSet ts = two_types();
  LanguageId en("en"), de("de");
  LabeledCorpus cen(en, ts), cde(de, ts);
  cen.set_split("train", {make_sentence(en, {{"a", 0}}), make_sentence(en, {{"b", 0}}),
                          make_sentence(en, {{"c", 0}})});
  cde.set_split("train", {make_sentence(de, {{"x", 0}})});
  PolyglotCorpus poly = concat_polyglot({cen, cde}, false);
  RngStream rng(1, "epoch");
  auto epoch = poly.epoch_train(rng);
  REQUIRE(epoch.size() == 4);
  std::set<const Sentence*> unique(epoch.begin(), epoch.end());
  CHECK(unique.size() == 4);
}

TEST_CASE("epoch_train with uniform sampling upsamples small languages") {
  TagSet ts = two_types();
  LanguageId en("en"), de("de");
  LabeledCorpus cen(en, ts), cde(de, ts);
  cen.set_split("train", {make_sentence(en, {{"a", 0}}), make_sentence(en, {{"b", 0}}),
                          make_sentence(en, {{"c", 0}})});
  cde.set_split("train", {make_sentence(de, {{"x", 0}}), make_sentence(de, {{"y", 0}})});
  PolyglotCorpus poly = concat_polyglot({cen, cde}, true);

  RngStream rng(7, "epoch");
  auto epoch = poly.epoch_train(rng);
  REQUIRE(epoch.size() == 6);
  int n_en = 0, n_de = 0;
  for (const Sentence* s : epoch) {
    if (s->language == en) ++n_en;
    if (s->language == de) ++n_de;
  }
  CHECK(n_en == 3);
  CHECK(n_de == 3);

  RngStream rng2(7, "epoch");
  auto again = poly.epoch_train(rng2);
  CHECK(epoch == again);
}

}  // TEST_SUITE
