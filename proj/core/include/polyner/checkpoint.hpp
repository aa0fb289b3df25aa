#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "polyner/corpus.hpp"
#include "polyner/encoding.hpp"
#include "polyner/optim.hpp"
#include "polyner/taggers.hpp"

namespace polyner {

struct EpochRecord {
  std::size_t epoch = 0;                 // 0 is a pre-training snapshot
  std::map<std::string, double> dev_f1;  // language code -> span micro-F1
  double selection = 0.0;                // single F1 or unweighted mean

  bool operator==(const EpochRecord& other) const {
    return epoch == other.epoch && dev_f1 == other.dev_f1 && selection == other.selection;
  }
};

struct RunHistory {
  std::vector<EpochRecord> epochs;

  // Highest selection score; earlier epoch wins ties.
  std::size_t best_epoch() const;
  double best_score() const;

  bool operator==(const RunHistory& other) const { return epochs == other.epochs; }
};

// Everything needed to evaluate or resume a model: weights, optimizer state,
// tag inventory, vocab, and the run that produced it.
struct Checkpoint {
  TaggerConfig config;
  TagSet tagset;
  SubtokenVocab vocab;
  ParamStore params;
  AdamState adam;
  std::vector<std::string> languages;  // training languages, in corpus order
  std::uint64_t seed = 0;
  std::size_t epoch = 0;  // which epoch this snapshot is
  RunHistory history;
};

bool checkpoint_equal(const Checkpoint& a, const Checkpoint& b);

std::unique_ptr<Tagger> tagger_from(const Checkpoint& ckpt);
bool knows_language(const Checkpoint& ckpt, const LanguageId& lang);

std::uint32_t crc32_ieee(const unsigned char* data, std::size_t n);
inline std::uint32_t crc32_ieee(const std::string& bytes) {
  return crc32_ieee(reinterpret_cast<const unsigned char*>(bytes.data()), bytes.size());
}

// File image: magic "PNLC", u32 version, u64-length-prefixed JSON metadata,
// then each tensor (u32 name length, name, u32 rank, u64 dims, f64 values)
// for the parameters followed by adam/m/* and adam/v/*, and a trailing CRC32
// of everything before it. All integers and floats little-endian.
std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint deserialize_checkpoint(const std::string& bytes);

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace polyner
