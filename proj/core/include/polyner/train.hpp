#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "polyner/checkpoint.hpp"
#include "polyner/corpus.hpp"
#include "polyner/optim.hpp"
#include "polyner/taggers.hpp"

namespace polyner {

// Model variant labels joining architecture and vocab mode:
// hiercrf-byte, hiercrf-char, charner.
std::string variant_name(const TaggerConfig& config);
TaggerConfig variant_config(const std::string& name);

struct TrainConfig {
  TaggerConfig model;
  AdamHyper adam;  // lr 0.001 unless overridden
  std::size_t max_epochs = 50;
  std::size_t patience = 5;
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  bool uniform_sampling = false;
  // Fine-tuning: replace the carried step size, or drop the carried
  // optimizer state entirely.
  std::optional<double> finetune_lr;
  bool reset_optimizer = false;
};

void validate_train_config(const TrainConfig& config);

struct TrainResult {
  Checkpoint checkpoint;  // best-scoring epoch's snapshot
  RunHistory history;     // every epoch, in order
};

// One seeded run: epochs of shuffled single-sentence Adam steps, dev F1
// after each epoch, early stop after `patience` epochs without improvement.
// The snapshot returned is from the best epoch, not the last.
TrainResult train(const TrainConfig& config, const LabeledCorpus& corpus, std::uint64_t seed);
TrainResult train(const TrainConfig& config, const PolyglotCorpus& corpus, std::uint64_t seed);

// Continue from a checkpoint on one language: parameters and Adam state are
// restored, the initialization is scored as epoch 0, then training proceeds
// as in train(). Selection may therefore keep the initialization.
TrainResult finetune(const Checkpoint& init, const LabeledCorpus& target,
                     const TrainConfig& config, std::uint64_t seed);

// Highest best-epoch selection score wins; ties go to the lower seed.
const TrainResult& select_best(const std::vector<TrainResult>& runs);

}  // namespace polyner
