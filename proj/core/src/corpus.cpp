#include "polyner/corpus.hpp"

#include <algorithm>
#include <sstream>

#include "polyner/errors.hpp"

namespace polyner {

LanguageId::LanguageId(std::string code) : code_(std::move(code)) {
  if (code_.size() < 2 || code_.size() > 8) {
    raise(ErrorKind::InvalidArgument, "language code '" + code_ + "' must match [a-z]{2,8}");
  }
  for (char c : code_) {
    if (c < 'a' || c > 'z') {
      raise(ErrorKind::InvalidArgument, "language code '" + code_ + "' must match [a-z]{2,8}");
    }
  }
}

TagSet::TagSet(std::vector<std::string> entity_types)
    : entity_types_(std::move(entity_types)) {
  labels_.push_back("O");
  for (const std::string& t : entity_types_) {
    if (t.empty()) raise(ErrorKind::InvalidArgument, "empty entity type name");
    if (t.find('-') != std::string::npos) {
      raise(ErrorKind::InvalidArgument, "entity type '" + t + "' contains a hyphen");
    }
    labels_.push_back("B-" + t);
    labels_.push_back("I-" + t);
  }
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    auto [it, inserted] = index_.emplace(labels_[i], static_cast<int>(i));
    if (!inserted) raise(ErrorKind::InvalidArgument, "duplicate entity type '" + labels_[i] + "'");
  }
}

int TagSet::label_index(const std::string& label) const {
  auto it = index_.find(label);
  return it == index_.end() ? -1 : it->second;
}

int TagSet::type_of_label(int label) const {
  if (label <= 0) return -1;
  return (label - 1) / 2;
}

LabeledCorpus::LabeledCorpus(LanguageId language, TagSet tagset)
    : language_(std::move(language)), tagset_(std::move(tagset)) {}

void LabeledCorpus::set_split(const std::string& split, std::vector<Sentence> sentences) {
  if (std::find(split_names().begin(), split_names().end(), split) == split_names().end()) {
    raise(ErrorKind::InvalidArgument, "unknown split '" + split + "'");
  }
  for (const Sentence& s : sentences) {
    if (s.language != language_) {
      raise(ErrorKind::InvalidArgument,
            "sentence language '" + s.language.code() + "' does not match corpus '" +
                language_.code() + "'");
    }
  }
  splits_[split] = std::move(sentences);
}

const std::vector<Sentence>& LabeledCorpus::split(const std::string& split) const {
  auto it = splits_.find(split);
  if (it == splits_.end()) {
    raise(ErrorKind::EmptySplit, "corpus '" + language_.code() + "' has no split '" + split + "'");
  }
  return it->second;
}

bool LabeledCorpus::has_split(const std::string& split) const {
  return splits_.count(split) > 0;
}

std::vector<Sentence> parse_conll(const std::string& text, const TagSet& tagset,
                                  const LanguageId& lang) {
  std::vector<Sentence> sentences;
  Sentence current;
  current.language = lang;

  auto flush = [&]() {
    if (!current.tokens.empty()) {
      sentences.push_back(current);
      current.tokens.clear();
    }
  };

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    bool last = eol == std::string::npos;
    std::string line = text.substr(pos, last ? std::string::npos : eol - pos);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    ++line_no;

    bool blank = line.find_first_not_of(" \t") == std::string::npos;
    if (blank) {
      flush();
    } else {
      std::istringstream cols(line);
      std::vector<std::string> fields;
      std::string field;
      while (cols >> field) fields.push_back(field);
      if (fields.front() == "-DOCSTART-") {
        // skip document markers entirely
      } else if (fields.size() < 2) {
        raise(ErrorKind::MalformedLine,
              "line " + std::to_string(line_no) + ": expected at least 2 columns");
      } else {
        int label = tagset.label_index(fields.back());
        if (label < 0) {
          raise(ErrorKind::UnknownLabel,
                "line " + std::to_string(line_no) + ": tag '" + fields.back() +
                    "' not in tag set");
        }
        current.tokens.push_back(Token{fields.front(), label});
      }
    }

    if (last) break;
    pos = eol + 1;
  }
  flush();

  if (sentences.empty()) raise(ErrorKind::EmptyDocument, "no sentences found");
  return sentences;
}

std::string write_conll(const std::vector<Sentence>& sentences, const TagSet& tagset) {
  if (sentences.empty()) raise(ErrorKind::EmptyDocument, "nothing to write");
  std::string out;
  for (const Sentence& s : sentences) {
    for (const Token& tok : s.tokens) {
      out += tok.text;
      out += ' ';
      out += tagset.label_name(tok.label);
      out += '\n';
    }
    out += '\n';
  }
  return out;
}

std::vector<EntitySpan> extract_spans(const std::vector<int>& labels, const TagSet& tagset) {
  std::vector<EntitySpan> spans;
  int open_type = -1;
  std::size_t open_start = 0;

  auto close = [&](std::size_t end) {
    if (open_type >= 0) {
      spans.push_back(EntitySpan{open_start, end, tagset.entity_types()[static_cast<std::size_t>(open_type)]});
      open_type = -1;
    }
  };

  for (std::size_t i = 0; i < labels.size(); ++i) {
    int label = labels[i];
    if (label == TagSet::kOutside) {
      close(i);
    } else if (tagset.is_begin(label)) {
      close(i);
      open_type = tagset.type_of_label(label);
      open_start = i;
    } else {
      int t = tagset.type_of_label(label);
      if (t != open_type) {
        // Orphan I-t (or a type switch): repair by opening a new span.
        close(i);
        open_type = t;
        open_start = i;
      }
    }
  }
  close(labels.size());
  return spans;
}

const LabeledCorpus& PolyglotCorpus::corpus(const LanguageId& lang) const {
  for (const LabeledCorpus& c : corpora_) {
    if (c.language() == lang) return c;
  }
  raise(ErrorKind::InvalidArgument, "no corpus for language '" + lang.code() + "'");
}

std::vector<LanguageId> PolyglotCorpus::languages() const {
  std::vector<LanguageId> out;
  out.reserve(corpora_.size());
  for (const LabeledCorpus& c : corpora_) out.push_back(c.language());
  return out;
}

std::vector<const Sentence*> PolyglotCorpus::epoch_train(RngStream& rng) const {
  std::vector<const Sentence*> epoch;
  if (!uniform_sampling_) {
    for (const LabeledCorpus& c : corpora_) {
      for (const Sentence& s : c.split("train")) epoch.push_back(&s);
    }
    return epoch;
  }
  std::size_t max_size = 0;
  for (const LabeledCorpus& c : corpora_) {
    max_size = std::max(max_size, c.split("train").size());
  }
  for (const LabeledCorpus& c : corpora_) {
    const std::vector<Sentence>& train = c.split("train");
    if (train.size() == max_size) {
      for (const Sentence& s : train) epoch.push_back(&s);
    } else {
      RngStream lang_rng = rng.derive("uniform/" + c.language().code());
      for (std::size_t i = 0; i < max_size; ++i) {
        epoch.push_back(&train[lang_rng.next_index(train.size())]);
      }
    }
  }
  return epoch;
}

PolyglotCorpus concat_polyglot(const std::vector<LabeledCorpus>& corpora,
                               bool uniform_sampling) {
  if (corpora.size() < 2) {
    raise(ErrorKind::InvalidArgument, "polyglot corpus needs at least 2 languages");
  }
  for (std::size_t i = 1; i < corpora.size(); ++i) {
    if (corpora[i].tagset() != corpora[0].tagset()) {
      raise(ErrorKind::TagSetMismatch,
            "corpus '" + corpora[i].language().code() + "' uses a different tag set");
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (corpora[i].language() == corpora[j].language()) {
        raise(ErrorKind::DuplicateLanguage,
              "language '" + corpora[i].language().code() + "' appears twice");
      }
    }
  }
  PolyglotCorpus out;
  out.tagset_ = corpora[0].tagset();
  out.corpora_ = corpora;
  out.uniform_sampling_ = uniform_sampling;
  return out;
}

}  // namespace polyner
