#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "polyner/corpus.hpp"
#include "polyner/rng.hpp"

namespace polyner {

enum class VocabMode { byte, chars };

const char* vocab_mode_name(VocabMode mode);
VocabMode vocab_mode_from_name(const std::string& name);

// UTF-8 scalar helpers. Decoding is total: invalid sequences yield U+FFFD,
// one replacement per bad byte.
void append_utf8(std::string& out, std::uint32_t scalar);
std::vector<std::uint32_t> utf8_scalars(const std::string& text);

// Sub-token id space for one model. Byte mode is fixed (byte b -> id b plus
// four specials); char mode is frozen from training data, unseen chars map
// to UNK.
class SubtokenVocab {
 public:
  SubtokenVocab() = default;

  static SubtokenVocab bytes();
  // Char ids are assigned in first-seen order over the given sentences.
  static SubtokenVocab chars_from(const std::vector<const Sentence*>& train);
  static SubtokenVocab chars_from_ids(const std::vector<std::uint32_t>& scalars_in_id_order);

  VocabMode mode() const { return mode_; }
  std::size_t size() const { return size_; }
  int pad_id() const { return pad_; }
  int unk_id() const { return unk_; }
  int bow_id() const { return bow_; }
  int eow_id() const { return eow_; }

  // Char mode only: scalars in id order, for serialization.
  const std::vector<std::uint32_t>& char_scalars() const { return char_scalars_; }

  int id_of_char(std::uint32_t scalar) const;

  bool operator==(const SubtokenVocab& other) const {
    return mode_ == other.mode_ && char_scalars_ == other.char_scalars_;
  }

 private:
  VocabMode mode_ = VocabMode::byte;
  std::size_t size_ = 0;
  int pad_ = 0, unk_ = 0, bow_ = 0, eow_ = 0;
  std::vector<std::uint32_t> char_scalars_;
  std::map<std::uint32_t, int> char_ids_;
};

// BOW ... EOW framed id sequence for one word.
struct SubtokenSeq {
  std::vector<int> ids;

  std::size_t interior_size() const { return ids.size() >= 2 ? ids.size() - 2 : 0; }
};

SubtokenSeq encode_word(const std::string& word, const SubtokenVocab& vocab);

// Word recovered from a byte-mode sequence; inverse of encode_word there.
std::string decode_byte_seq(const SubtokenSeq& seq, const SubtokenVocab& vocab);

// Each interior id is independently replaced by UNK with probability rate.
// Framing ids are never touched.
SubtokenSeq byte_dropout(const SubtokenSeq& seq, double rate, RngStream& rng,
                         const SubtokenVocab& vocab);

}  // namespace polyner
