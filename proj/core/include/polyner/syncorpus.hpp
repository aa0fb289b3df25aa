#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "polyner/corpus.hpp"

namespace polyner {

// Inclusive range of Unicode scalar values, e.g. {U'a', U'z'}.
struct ScriptRange {
  char32_t lo = 0;
  char32_t hi = 0;
};

// Knobs for deterministic multilingual corpus generation. Filler words are
// unigram-sampled from each language's script; entity surfaces come from one
// shared inventory written in `entity_script`, so languages with disjoint
// scripts still share entity forms verbatim. The first character of an
// entity encodes its type (the type's slice of `entity_script`), which makes
// the tagging task separable from surface alone.
struct SynthConfig {
  std::size_t num_languages = 2;
  std::vector<ScriptRange> scripts;         // one per language
  ScriptRange entity_script{U'A', U'Z'};    // shared entity alphabet
  std::size_t shared_inventory = 16;        // entity inventory size
  double inclusion_prob = 1.0;              // per (entity, language) coin
  std::vector<std::string> entity_types{"PER", "LOC"};
  std::size_t train_sentences = 100;
  std::size_t dev_sentences = 25;
  std::size_t test_sentences = 25;
  std::size_t min_tokens = 4;               // sentence length, uniform range
  std::size_t max_tokens = 10;
  double entity_density = 0.3;              // chance an entity starts at a free slot
  std::size_t min_entity_tokens = 1;        // entity length, uniform range
  std::size_t max_entity_tokens = 3;
  // Entity type prior per language: with skew s and K types, language i
  // draws type k with weight (1 - s) / K + s * [k == i mod K].
  double label_skew = 0.0;
  std::uint64_t master_seed = 0;
};

// An inventory entity and the languages whose train split contains it.
struct SharedEntity {
  std::string text;   // tokens joined by single spaces
  std::string etype;
  std::vector<std::string> languages;  // codes in language order

  bool operator==(const SharedEntity& other) const {
    return text == other.text && etype == other.etype && languages == other.languages;
  }
};

struct GeneratedSuite {
  TagSet tagset;
  std::map<std::string, LabeledCorpus> corpora;  // by language code
  std::vector<SharedEntity> manifest;            // whole inventory, in order
};

// Language codes are positional, letters only: "la", "lb", ...
std::string language_code(std::size_t index);

// Throws InvalidConfig explaining the first violated rule. Beyond simple
// range checks, generation needs: entity spans no longer than the shortest
// sentence, an entity alphabet wide enough for one leading character per
// type, and a train split large enough to host every inventory entity once
// (each included entity is guaranteed a train occurrence).
void validate_synth_config(const SynthConfig& config);

// Deterministic for a given config. Each language's train split opens with
// one occurrence of each entity it includes (coverage first), then density
// takes over; dev and test are density-driven only. Every gold sequence is
// well-formed BIO by construction.
GeneratedSuite generate(const SynthConfig& config);

// The manifest plus type and language lists, as a JSON document.
std::string manifest_json(const GeneratedSuite& suite);

// Parses a JSON config document; unknown keys are rejected (InvalidConfig).
// Script ranges appear as two-element arrays of scalar values, e.g.
// {"scripts": [[97, 122], [1072, 1103]], "entity_types": ["PER"], ...};
// omitted keys keep their defaults.
SynthConfig synth_config_from_json(const std::string& text);
std::string synth_config_json(const SynthConfig& config);

}  // namespace polyner
