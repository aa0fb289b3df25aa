#pragma once

#include <cstdint>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "polyner/analysis.hpp"
#include "polyner/taggers.hpp"
#include "polyner/train.hpp"

namespace polyner::cli {

inline constexpr const char* kToolName = "ner";
inline constexpr const char* kToolVersion = "0.1.0";

// One experiment config document: what to train on, with which model, and
// where results go. Parsed from JSON with unknown keys rejected.
struct ExperimentSpec {
  std::string regime;                       // mono | polyglot | finetune
  std::map<std::string, std::string> data;  // language code -> data directory
  std::vector<std::string> entity_types;
  std::optional<TaggerConfig> arch;         // required to train, absent for finetune
  TrainConfig train;                        // arch fills train.model before running
  std::string base_checkpoint;              // finetune only
  std::string target_language;              // finetune only
  std::string out;                          // output directory
};

// Throws InvalidConfig on malformed JSON, unknown keys, or bad field values.
ExperimentSpec experiment_from_json(const std::string& text);

// Canonical serialization: fixed key order, every field present. The config
// hash in run manifests is the FNV-1a of this form minus the output path.
std::string experiment_json(const ExperimentSpec& spec);

// Checks regime-dependent requirements (data languages, arch presence,
// finetune inputs). Throws InvalidConfig with an actionable message.
void validate_experiment(const ExperimentSpec& spec);

// Reads <dir>/train.conll, dev.conll, test.conll (each optional) into a
// corpus; `required_splits` must exist or IoError is thrown.
LabeledCorpus load_corpus_dir(const std::string& dir, const std::string& language,
                              const TagSet& tagset,
                              const std::vector<std::string>& required_splits);

// Fisher diagonals as JSON documents (metadata plus per-layer shapes and
// values), byte-stable for a given diagonal.
std::string fisher_json(const FisherDiagonal& fisher);
FisherDiagonal fisher_from_json(const std::string& text);

// Writes via a temp file plus rename so partial output never lands under
// the final name. Creates parent directories.
void write_atomic(const std::string& path, const std::string& content);

// Runs one command line (no argv[0]). Returns 0 on success, 1 on usage or
// config errors, 2 on runtime failures. Every run that writes files also
// writes manifest.json (tool version, command, config hash, seed) beside
// them.
int dispatch(const std::vector<std::string>& args, std::ostream& out = std::cout,
             std::ostream& err = std::cerr);

}  // namespace polyner::cli
