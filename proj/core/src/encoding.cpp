#include "polyner/encoding.hpp"

#include "polyner/errors.hpp"

namespace polyner {

namespace {

constexpr std::uint32_t kReplacement = 0xFFFD;

}  // namespace

const char* vocab_mode_name(VocabMode mode) {
  return mode == VocabMode::byte ? "byte" : "char";
}

VocabMode vocab_mode_from_name(const std::string& name) {
  if (name == "byte") return VocabMode::byte;
  if (name == "char") return VocabMode::chars;
  raise(ErrorKind::InvalidConfig, "unknown vocab mode '" + name + "'");
}

void append_utf8(std::string& out, std::uint32_t scalar) {
  if (scalar < 0x80) {
    out += static_cast<char>(scalar);
  } else if (scalar < 0x800) {
    out += static_cast<char>(0xC0 | (scalar >> 6));
    out += static_cast<char>(0x80 | (scalar & 0x3F));
  } else if (scalar < 0x10000) {
    out += static_cast<char>(0xE0 | (scalar >> 12));
    out += static_cast<char>(0x80 | ((scalar >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (scalar & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (scalar >> 18));
    out += static_cast<char>(0x80 | ((scalar >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((scalar >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (scalar & 0x3F));
  }
}

std::vector<std::uint32_t> utf8_scalars(const std::string& text) {
  std::vector<std::uint32_t> out;
  std::size_t i = 0;
  while (i < text.size()) {
    unsigned char b0 = static_cast<unsigned char>(text[i]);
    std::size_t len;
    std::uint32_t scalar;
    if (b0 < 0x80) {
      len = 1;
      scalar = b0;
    } else if ((b0 & 0xE0) == 0xC0) {
      len = 2;
      scalar = b0 & 0x1F;
    } else if ((b0 & 0xF0) == 0xE0) {
      len = 3;
      scalar = b0 & 0x0F;
    } else if ((b0 & 0xF8) == 0xF0) {
      len = 4;
      scalar = b0 & 0x07;
    } else {
      out.push_back(kReplacement);
      ++i;
      continue;
    }
    if (i + len > text.size()) {
      out.push_back(kReplacement);
      ++i;
      continue;
    }
    bool ok = true;
    for (std::size_t k = 1; k < len; ++k) {
      unsigned char b = static_cast<unsigned char>(text[i + k]);
      if ((b & 0xC0) != 0x80) {
        ok = false;
        break;
      }
      scalar = (scalar << 6) | (b & 0x3F);
    }
    if (!ok) {
      out.push_back(kReplacement);
      ++i;
      continue;
    }
    out.push_back(scalar);
    i += len;
  }
  return out;
}

SubtokenVocab SubtokenVocab::bytes() {
  SubtokenVocab v;
  v.mode_ = VocabMode::byte;
  v.size_ = 256 + 4;
  v.pad_ = 256;
  v.unk_ = 257;
  v.bow_ = 258;
  v.eow_ = 259;
  return v;
}

SubtokenVocab SubtokenVocab::chars_from(const std::vector<const Sentence*>& train) {
  std::vector<std::uint32_t> scalars;
  std::map<std::uint32_t, int> seen;
  for (const Sentence* s : train) {
    for (const Token& tok : s->tokens) {
      for (std::uint32_t c : utf8_scalars(tok.text)) {
        if (seen.emplace(c, 0).second) scalars.push_back(c);
      }
    }
  }
  return chars_from_ids(scalars);
}

SubtokenVocab SubtokenVocab::chars_from_ids(const std::vector<std::uint32_t>& scalars) {
  SubtokenVocab v;
  v.mode_ = VocabMode::chars;
  v.pad_ = 0;
  v.unk_ = 1;
  v.bow_ = 2;
  v.eow_ = 3;
  v.char_scalars_ = scalars;
  for (std::size_t i = 0; i < scalars.size(); ++i) {
    v.char_ids_[scalars[i]] = static_cast<int>(4 + i);
  }
  v.size_ = 4 + scalars.size();
  return v;
}

int SubtokenVocab::id_of_char(std::uint32_t scalar) const {
  auto it = char_ids_.find(scalar);
  return it == char_ids_.end() ? unk_ : it->second;
}

SubtokenSeq encode_word(const std::string& word, const SubtokenVocab& vocab) {
  if (word.empty()) raise(ErrorKind::InvalidArgument, "cannot encode an empty word");
  SubtokenSeq seq;
  seq.ids.push_back(vocab.bow_id());
  if (vocab.mode() == VocabMode::byte) {
    for (unsigned char b : word) seq.ids.push_back(static_cast<int>(b));
  } else {
    for (std::uint32_t c : utf8_scalars(word)) seq.ids.push_back(vocab.id_of_char(c));
  }
  seq.ids.push_back(vocab.eow_id());
  return seq;
}

std::string decode_byte_seq(const SubtokenSeq& seq, const SubtokenVocab& vocab) {
  if (vocab.mode() != VocabMode::byte) {
    raise(ErrorKind::InvalidArgument, "decode_byte_seq requires a byte vocab");
  }
  std::string out;
  for (std::size_t i = 1; i + 1 < seq.ids.size(); ++i) {
    int id = seq.ids[i];
    if (id < 0 || id > 255) {
      raise(ErrorKind::InvalidArgument, "non-byte id in sequence");
    }
    out += static_cast<char>(static_cast<unsigned char>(id));
  }
  return out;
}

SubtokenSeq byte_dropout(const SubtokenSeq& seq, double rate, RngStream& rng,
                         const SubtokenVocab& vocab) {
  if (rate < 0.0 || rate >= 1.0) {
    raise(ErrorKind::InvalidRate, "dropout rate must be in [0, 1)");
  }
  SubtokenSeq out = seq;
  for (std::size_t i = 1; i + 1 < out.ids.size(); ++i) {
    if (rng.next_bernoulli(rate)) out.ids[i] = vocab.unk_id();
  }
  return out;
}

}  // namespace polyner
