#include "polyner/eval.hpp"

#include <cstdio>
#include <map>

#include <json.hpp>

#include "polyner/errors.hpp"

namespace polyner {

namespace {

double safe_ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

std::string fixed6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace

double precision_of(const TypeCounts& c) { return safe_ratio(c.tp, c.tp + c.fp); }
double recall_of(const TypeCounts& c) { return safe_ratio(c.tp, c.tp + c.fn); }

double f1_of(const TypeCounts& c) {
  double p = precision_of(c);
  double r = recall_of(c);
  return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
}

EvalReport span_f1(const std::vector<Sentence>& gold,
                   const std::vector<std::vector<EntitySpan>>& predicted,
                   const TagSet& tagset) {
  if (gold.size() != predicted.size()) {
    raise(ErrorKind::LengthMismatch, "one prediction list per gold sentence");
  }

  EvalReport report;
  report.sentences = gold.size();
  for (std::size_t i = 0; i < gold.size(); ++i) {
    report.tokens += gold[i].size();
    std::vector<int> labels;
    for (const Token& tok : gold[i].tokens) labels.push_back(tok.label);
    std::vector<EntitySpan> gold_spans = extract_spans(labels, tagset);

    std::map<EntitySpan, std::size_t> unmatched;
    for (const EntitySpan& span : gold_spans) ++unmatched[span];
    for (const EntitySpan& span : predicted[i]) {
      auto it = unmatched.find(span);
      if (it != unmatched.end() && it->second > 0) {
        --it->second;
        ++report.per_type[span.etype].tp;
      } else {
        ++report.per_type[span.etype].fp;
      }
    }
    for (const auto& [span, count] : unmatched) report.per_type[span.etype].fn += count;
  }

  for (const auto& [etype, counts] : report.per_type) {
    report.micro.tp += counts.tp;
    report.micro.fp += counts.fp;
    report.micro.fn += counts.fn;
  }
  report.precision = precision_of(report.micro);
  report.recall = recall_of(report.micro);
  report.f1 = f1_of(report.micro);
  return report;
}

EvalReport evaluate(const Checkpoint& ckpt, const LabeledCorpus& corpus,
                    const std::string& split) {
  if (corpus.tagset() != ckpt.tagset) {
    raise(ErrorKind::TagSetMismatch, "corpus entity types differ from the checkpoint's");
  }
  const std::vector<Sentence>& sentences = corpus.split(split);

  std::unique_ptr<Tagger> tagger = tagger_from(ckpt);
  std::vector<std::vector<EntitySpan>> predicted;
  predicted.reserve(sentences.size());
  for (const Sentence& s : sentences) predicted.push_back(tagger->predict(s));

  EvalReport report = span_f1(sentences, predicted, ckpt.tagset);
  report.language = corpus.language().code();
  report.split = split;
  report.zero_shot = !knows_language(ckpt, corpus.language());

  if (ckpt.vocab.mode() == VocabMode::chars) {
    std::size_t unk = 0, total = 0;
    for (const Sentence& s : sentences) {
      for (const Token& tok : s.tokens) {
        SubtokenSeq seq = encode_word(tok.text, ckpt.vocab);
        for (std::size_t i = 1; i + 1 < seq.ids.size(); ++i) {
          ++total;
          if (seq.ids[i] == ckpt.vocab.unk_id()) ++unk;
        }
      }
    }
    report.unk_rate = safe_ratio(unk, total);
  }
  return report;
}

std::string report_json(const EvalReport& report) {
  nlohmann::ordered_json j;
  j["language"] = report.language;
  j["split"] = report.split;
  j["zero_shot"] = report.zero_shot;
  j["sentences"] = report.sentences;
  j["tokens"] = report.tokens;
  j["micro"] = {{"tp", report.micro.tp},       {"fp", report.micro.fp},
                {"fn", report.micro.fn},       {"precision", report.precision},
                {"recall", report.recall},     {"f1", report.f1}};
  nlohmann::ordered_json types;
  for (const auto& [etype, c] : report.per_type) {
    types[etype] = {{"tp", c.tp},
                    {"fp", c.fp},
                    {"fn", c.fn},
                    {"precision", precision_of(c)},
                    {"recall", recall_of(c)},
                    {"f1", f1_of(c)}};
  }
  j["per_type"] = std::move(types);
  if (report.unk_rate.has_value()) {
    j["unk_rate"] = *report.unk_rate;
  } else {
    j["unk_rate"] = nullptr;
  }
  return j.dump(2) + "\n";
}

std::string report_tsv(const EvalReport& report) {
  return report.language + "\t" + report.split + "\t" + fixed6(report.precision) + "\t" +
         fixed6(report.recall) + "\t" + fixed6(report.f1) + "\n";
}

}  // namespace polyner
