// Acceptance gate: one numbered, independently runnable check per release
// requirement. Run with --criterion N for a single check, or no arguments
// for all of them; each prints exactly one PASS/FAIL line.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cli.hpp"
#include "polyner/analysis.hpp"
#include "polyner/bts.hpp"
#include "polyner/checkpoint.hpp"
#include "polyner/corpus.hpp"
#include "polyner/crf.hpp"
#include "polyner/errors.hpp"
#include "polyner/eval.hpp"
#include "polyner/optim.hpp"
#include "polyner/rng.hpp"
#include "polyner/syncorpus.hpp"
#include "polyner/taggers.hpp"
#include "polyner/train.hpp"

using namespace polyner;
namespace fs = std::filesystem;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string str(const std::string& rel = "") const { return (path / rel).string(); }
};

// ---- criterion 1: chain scores, partition, marginals, viterbi vs enumeration ----

double manual_score(const CrfPotentials& pot, const std::vector<int>& y) {
  auto e = pot.emissions.flat();
  auto tr = pot.transitions.flat();
  std::size_t L = pot.labels();
  double s = pot.start.flat()[static_cast<std::size_t>(y.front())] +
             pot.stop.flat()[static_cast<std::size_t>(y.back())];
  for (std::size_t t = 0; t < y.size(); ++t) {
    s += e[t * L + static_cast<std::size_t>(y[t])];
  }
  for (std::size_t t = 0; t + 1 < y.size(); ++t) {
    s += tr[static_cast<std::size_t>(y[t]) * L + static_cast<std::size_t>(y[t + 1])];
  }
  return s;
}

bool next_sequence(std::vector<int>& y, int L) {
  for (std::size_t i = y.size(); i > 0; --i) {
    if (++y[i - 1] < L) return true;
    y[i - 1] = 0;
  }
  return false;
}

CrfPotentials random_potentials(std::size_t T, std::size_t L, RngStream& rng) {
  auto fill = [&](std::vector<std::size_t> shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    std::vector<double> v(n);
    for (double& x : v) x = rng.next_double(-2.0, 2.0);
    return Tensor::from_values(shape, v);
  };
  return CrfPotentials{fill({T, L}), fill({L, L}), fill({L}), fill({L})};
}

bool criterion_chain_oracle(std::ostream& log) {
  RngStream rng(2024, "chain-oracle");
  double worst = 0.0;
  for (std::size_t T = 1; T <= 5; ++T) {
    for (std::size_t L = 1; L <= 4; ++L) {
      for (int inst = 0; inst < 50; ++inst) {
        CrfPotentials pot = random_potentials(T, L, rng);

        std::vector<int> y(T, 0);
        std::vector<double> scores;
        std::vector<std::vector<int>> seqs;
        do {
          scores.push_back(manual_score(pot, y));
          seqs.push_back(y);
        } while (next_sequence(y, static_cast<int>(L)));

        double mx = *std::max_element(scores.begin(), scores.end());
        double z = 0.0;
        for (double s : scores) z += std::exp(s - mx);
        double log_z = mx + std::log(z);
        worst = std::max(worst, std::abs(log_partition(pot) - log_z));

        std::vector<int> gold(T);
        for (std::size_t t = 0; t < T; ++t) gold[t] = static_cast<int>(rng.next_index(L));
        double ll = manual_score(pot, gold) - log_z;
        worst = std::max(worst, std::abs(log_likelihood(pot, gold) - ll));

        std::vector<double> unary(T * L, 0.0);
        std::vector<double> pair(T > 1 ? (T - 1) * L * L : 0, 0.0);
        for (std::size_t i = 0; i < seqs.size(); ++i) {
          double p = std::exp(scores[i] - log_z);
          for (std::size_t t = 0; t < T; ++t) {
            unary[t * L + static_cast<std::size_t>(seqs[i][t])] += p;
            if (t + 1 < T) {
              pair[(t * L + static_cast<std::size_t>(seqs[i][t])) * L +
                   static_cast<std::size_t>(seqs[i][t + 1])] += p;
            }
          }
        }
        CrfMarginals m = marginals(pot);
        for (std::size_t i = 0; i < unary.size(); ++i) {
          worst = std::max(worst, std::abs(m.unary.flat()[i] - unary[i]));
        }
        for (std::size_t i = 0; i < pair.size(); ++i) {
          worst = std::max(worst, std::abs(m.pairwise.flat()[i] - pair[i]));
        }

        std::size_t arg = static_cast<std::size_t>(
            std::max_element(scores.begin(), scores.end()) - scores.begin());
        ViterbiResult vit = viterbi(pot);
        worst = std::max(worst, std::abs(vit.score - scores[arg]));
        worst = std::max(worst, std::abs(manual_score(pot, vit.labels) - scores[arg]));
      }
    }
  }
  log << "  max abs error " << worst << " over 1000 instances (T<=5, L<=4)\n";
  return worst < 1e-9;
}

// ---- criterion 2: end-to-end gradients vs central finite differences ----

Sentence random_sentence(RngStream& rng, const TagSet& tagset) {
  Sentence s;
  s.language = LanguageId("xx");
  std::size_t n = 2 + rng.next_index(5);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t len = 1 + rng.next_index(5);
    std::string word;
    for (std::size_t j = 0; j < len; ++j) {
      word += static_cast<char>('a' + rng.next_index(26));
    }
    s.tokens.push_back({word, TagSet::kOutside});
  }
  std::size_t i = 0;
  while (i < n) {
    if (rng.next_bernoulli(0.4)) {
      int type = static_cast<int>(rng.next_index(tagset.num_types()));
      s.tokens[i].label = tagset.begin_label(type);
      if (i + 1 < n && rng.next_bernoulli(0.5)) {
        s.tokens[++i].label = tagset.inside_label(type);
      }
    }
    ++i;
  }
  return s;
}

bool criterion_gradients(std::ostream& log) {
  TagSet tagset({"PER", "LOC"});
  RngStream sentence_rng(7, "grad-sentences");
  std::vector<Sentence> sentences;
  for (int i = 0; i < 20; ++i) sentences.push_back(random_sentence(sentence_rng, tagset));

  bool ok = true;
  for (const std::string& name : {std::string("hiercrf-byte"), std::string("hiercrf-char"),
                                  std::string("charner")}) {
    TaggerConfig config = variant_config(name);
    if (config.arch == Architecture::hiercrf) {
      config.hiercrf.subtoken_layers = 1;
      config.hiercrf.subtoken_hidden = 8;
      config.hiercrf.sentence_layers = 1;
      config.hiercrf.sentence_hidden = 8;
      config.hiercrf.embedding_dim = 8;
    } else {
      config.charner.layers = 1;
      config.charner.hidden = 8;
      config.charner.embedding_dim = 8;
    }
    SubtokenVocab vocab = SubtokenVocab::bytes();
    if (name == "hiercrf-char") {
      std::vector<const Sentence*> refs;
      for (const Sentence& s : sentences) refs.push_back(&s);
      vocab = SubtokenVocab::chars_from(refs);
    }
    auto tagger = make_tagger(config, tagset, vocab, {LanguageId("xx")}, 11);

    double worst = 0.0;
    RngStream check_rng(13, "grad-coords");
    for (const Sentence& s : sentences) {
      LossFn fn = [&](ParamStore& p, ParamStore* g) {
        if (&p != &tagger->params()) tagger->params() = p;
        return tagger->sentence_loss(s, g);
      };
      GradCheckResult r = grad_check(fn, tagger->params(), 1e-5, 25, check_rng);
      worst = std::max(worst, r.max_rel_err);
    }
    log << "  " << name << ": max relative error " << worst << " over 20 sentences\n";
    ok = ok && worst < 1e-5;
  }
  return ok;
}

// ---- criterion 3: posterior sampling frequencies vs exact marginals ----

bool criterion_sampling(std::ostream& log) {
  const std::size_t T = 4, L = 3, n = 50000;
  RngStream pot_rng(31, "sampling-potentials");
  double worst = 0.0;
  for (int inst = 0; inst < 3; ++inst) {
    CrfPotentials pot = random_potentials(T, L, pot_rng);
    CrfMarginals exact = marginals(pot);
    RngStream rng(41, "sampling-draws", static_cast<std::uint64_t>(inst));
    std::vector<std::vector<int>> draws = sample_posterior(pot, rng, n);

    std::vector<double> freq(T * L, 0.0);
    for (const std::vector<int>& y : draws) {
      for (std::size_t t = 0; t < T; ++t) {
        freq[t * L + static_cast<std::size_t>(y[t])] += 1.0 / static_cast<double>(n);
      }
    }
    for (std::size_t i = 0; i < freq.size(); ++i) {
      worst = std::max(worst, std::abs(freq[i] - exact.unary.flat()[i]));
    }
  }
  log << "  max |frequency - marginal| " << worst << " at " << n << " samples\n";
  return worst <= 0.01;
}

// ---- criterion 4: sampled squared-gradient diagonal vs exact expectation ----

bool criterion_fisher(std::ostream& log) {
  TagSet tagset({"PER", "LOC"});
  LanguageId lang("xx");
  auto sent = [&](std::vector<std::pair<const char*, int>> tokens) {
    Sentence s;
    s.language = lang;
    for (auto& [text, label] : tokens) s.tokens.push_back({text, label});
    return s;
  };
  std::vector<Sentence> train = {
      sent({{"ab", 1}, {"c", 0}, {"de", 3}}),
      sent({{"fa", 1}, {"bc", 2}}),
      sent({{"ce", 0}, {"d", 3}, {"af", 4}}),
  };

  TaggerConfig config = variant_config("hiercrf-char");
  config.hiercrf.subtoken_layers = 1;
  config.hiercrf.subtoken_hidden = 2;
  config.hiercrf.sentence_layers = 1;
  config.hiercrf.sentence_hidden = 2;
  config.hiercrf.embedding_dim = 2;
  std::vector<const Sentence*> refs;
  for (const Sentence& s : train) refs.push_back(&s);
  SubtokenVocab vocab = SubtokenVocab::chars_from(refs);

  Checkpoint ckpt;
  ckpt.config = config;
  ckpt.tagset = tagset;
  ckpt.vocab = vocab;
  ckpt.params = make_tagger(config, tagset, vocab, {lang}, 3)->params();
  ckpt.adam = init_adam(ckpt.params);
  ckpt.languages = {"xx"};
  ckpt.seed = 3;
  std::size_t total = ckpt.params.total_params();
  log << "  model has " << total << " parameters\n";
  if (total > 500) return false;

  // Exact: enumerate every label sequence of every sentence and average the
  // posterior-weighted squared gradients.
  auto tagger = tagger_from(ckpt);
  ParamStore exact = zeros_like(ckpt.params);
  std::size_t L = tagset.num_labels();
  for (const Sentence& original : train) {
    std::vector<int> y(original.size(), 0);
    double total_p = 0.0;
    ParamStore acc = zeros_like(ckpt.params);
    do {
      Sentence relabeled = original;
      for (std::size_t t = 0; t < y.size(); ++t) relabeled.tokens[t].label = y[t];
      ParamStore g = zeros_like(ckpt.params);
      double p = std::exp(-tagger->sentence_loss(relabeled, &g));
      total_p += p;
      for (std::size_t i = 0; i < g.size(); ++i) {
        auto gf = g.at(i).flat();
        auto af = acc.at(i).flat();
        for (std::size_t j = 0; j < gf.size(); ++j) af[j] += p * gf[j] * gf[j];
      }
    } while (next_sequence(y, static_cast<int>(L)));
    if (std::abs(total_p - 1.0) > 1e-9) {
      log << "  posterior mass " << total_p << " != 1\n";
      return false;
    }
    for (std::size_t i = 0; i < acc.size(); ++i) {
      auto af = acc.at(i).flat();
      auto ef = exact.at(i).flat();
      for (std::size_t j = 0; j < af.size(); ++j) {
        ef[j] += af[j] / static_cast<double>(train.size());
      }
    }
  }

  LabeledCorpus corpus(lang, tagset);
  corpus.set_split("train", train);
  ParamStore se = zeros_like(ckpt.params);
  FisherDiagonal mc = fisher_diagonal(ckpt, corpus, 10000, 5, &se);

  std::size_t within = 0;
  for (std::size_t i = 0; i < exact.size(); ++i) {
    auto ef = exact.at(i).flat();
    auto mf = mc.values.at(i).flat();
    auto sf = se.at(i).flat();
    for (std::size_t j = 0; j < ef.size(); ++j) {
      if (std::abs(mf[j] - ef[j]) <= 3.0 * sf[j] + 1e-12) ++within;
    }
  }
  double frac = static_cast<double>(within) / static_cast<double>(total);
  log << "  " << within << "/" << total << " coordinates within 3 standard errors ("
      << 100.0 * frac << "%)\n";
  return frac >= 0.99;
}

// ---- criterion 5: pruning identities and overprune thresholds ----

Checkpoint small_model_checkpoint() {
  TagSet tagset({"PER", "LOC"});
  TaggerConfig config = variant_config("hiercrf-byte");
  config.hiercrf.subtoken_layers = 1;
  config.hiercrf.subtoken_hidden = 3;
  config.hiercrf.sentence_layers = 1;
  config.hiercrf.sentence_hidden = 3;
  config.hiercrf.embedding_dim = 3;
  Checkpoint ckpt;
  ckpt.config = config;
  ckpt.tagset = tagset;
  ckpt.vocab = SubtokenVocab::bytes();
  ckpt.params = make_tagger(config, tagset, ckpt.vocab, {LanguageId("xx")}, 9)->params();
  ckpt.adam = init_adam(ckpt.params);
  ckpt.languages = {"xx"};
  ckpt.seed = 9;
  return ckpt;
}

bool criterion_pruning(std::ostream& log) {
  Checkpoint ckpt = small_model_checkpoint();

  PruneResult zero = prune(ckpt, 0.0);
  if (!checkpoint_equal(zero.checkpoint, ckpt) ||
      serialize_checkpoint(zero.checkpoint) != serialize_checkpoint(ckpt)) {
    log << "  fraction-0 prune is not bit-identical\n";
    return false;
  }

  std::vector<double> fractions = {0.1, 0.25, 0.5, 0.75, 0.9};
  std::vector<PruneMask> masks;
  for (double f : fractions) masks.push_back(prune(ckpt, f).mask);
  for (std::size_t a = 0; a + 1 < masks.size(); ++a) {
    for (std::size_t i = 0; i < masks[a].keep.size(); ++i) {
      for (std::size_t j = 0; j < masks[a].keep[i].size(); ++j) {
        // Anything kept at the higher fraction must be kept at the lower one.
        if (masks[a + 1].keep[i][j] && !masks[a].keep[i][j]) {
          log << "  masks do not nest between fractions " << fractions[a] << " and "
              << fractions[a + 1] << "\n";
          return false;
        }
      }
    }
  }
  for (std::size_t a = 0; a < masks.size(); ++a) {
    long long expect = std::llround((1.0 - fractions[a]) *
                                    static_cast<double>(masks[a].prunable));
    if (static_cast<long long>(masks[a].kept) != expect) {
      log << "  kept count at fraction " << fractions[a] << " is " << masks[a].kept
          << ", expected " << expect << "\n";
      return false;
    }
  }

  auto curve = [](std::vector<double> fr,
                  std::vector<std::map<std::string, double>> f1) {
    PruneCurve c;
    c.fractions = std::move(fr);
    c.f1 = std::move(f1);
    return c;
  };
  struct Case {
    PruneCurve curve;
    std::string language;
    double delta;
    double expect;
  };
  std::vector<Case> cases = {
      {curve({0.0, 0.3, 0.6, 0.9},
             {{{"aa", 90.0}}, {{"aa", 90.0}}, {{"aa", 90.0}}, {{"aa", 90.0}}}),
       "aa", 1.0, 0.9},  // flat curve survives everywhere
      {curve({0.0, 0.3, 0.5, 0.7},
             {{{"aa", 90.0}}, {{"aa", 89.5}}, {{"aa", 89.0}}, {{"aa", 88.9}}}),
       "aa", 1.0, 0.5},  // a drop of exactly 1.0 is still fine; 1.1 is not
      {curve({0.0, 0.1}, {{{"aa", 80.0}}, {{"aa", 78.0}}}), "aa", 1.0, 0.0},
      {curve({0.0, 0.2, 0.4}, {{{"aa", 90.0}}, {{"aa", 88.0}}, {{"aa", 95.0}}}),
       "aa", 1.0, 0.0},  // recovery after a violation does not count
      {curve({0.0, 0.3, 0.6}, {{{"aa", 70.0}}, {{"aa", 75.0}}, {{"aa", 69.5}}}),
       "aa", 1.0, 0.6},  // gains never violate
      {curve({0.0, 0.4}, {{{"aa", 90.0}, {"bb", 90.0}}, {{"aa", 89.5}, {"bb", 88.0}}}),
       "bb", 1.0, 0.0},  // per-language answer
      {curve({0.0, 0.2, 0.4}, {{{"aa", 90.0}}, {{"aa", 88.5}}, {{"aa", 87.9}}}),
       "aa", 2.0, 0.2},  // wider tolerance moves the threshold
      {curve({0.0, 0.5}, {{{"aa", 50.0}}, {{"aa", 48.99}}}), "aa", 1.0, 0.0},
      {curve({0.0, 0.1, 0.2, 0.3},
             {{{"aa", 90.0}}, {{"aa", 89.9}}, {{"aa", 89.2}}, {{"aa", 88.5}}}),
       "aa", 1.0, 0.2},  // monotone decay crosses between 0.2 and 0.3
      {curve({0.0}, {{{"aa", 77.0}}}), "aa", 1.0, 0.0},  // nothing swept
  };
  for (std::size_t i = 0; i < cases.size(); ++i) {
    double got = overprune_threshold(cases[i].curve, cases[i].language, cases[i].delta);
    if (got != cases[i].expect) {
      log << "  hand case " << i + 1 << ": threshold " << got << ", expected "
          << cases[i].expect << "\n";
      return false;
    }
  }
  log << "  fraction-0 identity, mask nesting, kept-count law, 10 hand thresholds\n";
  return true;
}

// ---- criterion 6: overlap identities and chance level ----

bool criterion_overlap(std::ostream& log) {
  RngStream rng(53, "overlap-values");
  FisherDiagonal self;
  self.values.add("wa", Tensor::from_values({40}, [&] {
    std::vector<double> v(40);
    for (double& x : v) x = rng.next_double();
    return v;
  }()));
  self.values.add("wb", Tensor::from_values({25}, [&] {
    std::vector<double> v(25);
    for (double& x : v) x = rng.next_double();
    return v;
  }()));
  OverlapReport identity = topk_overlap(self, self);
  for (const auto& [layer, by_k] : identity.per_layer) {
    for (const auto& [k, value] : by_k) {
      if (value != 100.0) {
        log << "  self overlap at " << layer << " k=" << k << " is " << value << "\n";
        return false;
      }
    }
  }

  const std::size_t n = 10000;
  const std::vector<int> ks = {5, 25, 50};
  std::map<int, double> mean;
  for (int trial = 0; trial < 100; ++trial) {
    auto ranking = [&](std::uint64_t index) {
      std::vector<double> v(n);
      for (std::size_t i = 0; i < n; ++i) v[i] = static_cast<double>(i);
      RngStream shuffle_rng(61, "overlap-trial", 200 * static_cast<std::uint64_t>(trial) + index);
      shuffle_rng.shuffle(v);
      FisherDiagonal f;
      f.values.add("layer", Tensor::from_values({n}, v));
      return f;
    };
    FisherDiagonal fa = ranking(0), fb = ranking(1);
    OverlapReport r = topk_overlap(fa, fb, ks);
    for (int k : ks) mean[k] += r.average.at(k) / 100.0;
  }
  bool ok = true;
  for (int k : ks) {
    log << "  k=" << k << "%: mean overlap " << mean[k] << " over 100 random trials\n";
    ok = ok && std::abs(mean[k] - static_cast<double>(k)) <= 2.0;
  }
  return ok;
}

// ---- criterion 7: codec worked example, roundtrip, fuzz ----

bool criterion_codec(std::ostream& log) {
  ByteWindow window{std::string(12, 'x'), 0, 12};
  std::vector<TargetSymbol> symbols = encode_spans(window, {{5, 5, "PER"}});
  std::vector<TargetSymbol> expect = {TargetSymbol::start(5), TargetSymbol::length(5),
                                      TargetSymbol::type("PER"), TargetSymbol::stop()};
  std::string line = format_target_line(0, symbols);
  if (symbols != expect || line != "@0 S:5 L:5 PER STOP") {
    log << "  worked example produced '" << line << "'\n";
    return false;
  }

  RngStream rng(71, "codec-roundtrip");
  const std::vector<std::string> types = {"PER", "LOC", "ORG"};
  std::size_t spans_done = 0;
  while (spans_done < 10000) {
    std::size_t size = 8 + rng.next_index(60);
    std::size_t offset = rng.next_index(1000);
    ByteWindow w{std::string(size, 'b'), offset, size};
    std::vector<ByteSpan> spans;
    std::size_t cursor = 0;
    while (cursor < size && spans.size() < 6) {
      std::size_t gap = rng.next_index(4);
      std::size_t len = 1 + rng.next_index(5);
      if (cursor + gap + len > size) break;
      spans.push_back({offset + cursor + gap, len, types[rng.next_index(types.size())]});
      cursor += gap + len;
    }
    std::vector<ByteSpan> back = decode_targets(encode_spans(w, spans), w);
    if (back != spans) {
      log << "  roundtrip mismatch in a window of size " << size << "\n";
      return false;
    }
    spans_done += std::max<std::size_t>(spans.size(), 1);
  }

  RngStream fuzz(79, "codec-fuzz");
  const std::vector<std::string> junk = {"PER", "", "S:", "L:-1", "@9", "STOP", "xyz", "??"};
  for (int i = 0; i < 10000; ++i) {
    std::size_t size = 1 + fuzz.next_index(40);
    ByteWindow w{std::string(size, 'c'), fuzz.next_index(100), size};
    std::vector<TargetSymbol> seq;
    std::size_t len = fuzz.next_index(12);
    for (std::size_t j = 0; j < len; ++j) {
      switch (fuzz.next_index(4)) {
        case 0: seq.push_back(TargetSymbol::start(static_cast<int>(fuzz.next_index(90)) - 10)); break;
        case 1: seq.push_back(TargetSymbol::length(static_cast<int>(fuzz.next_index(90)) - 10)); break;
        case 2: seq.push_back(TargetSymbol::type(junk[fuzz.next_index(junk.size())])); break;
        default: seq.push_back(TargetSymbol::stop()); break;
      }
    }
    try {
      std::vector<ByteSpan> out = decode_targets(seq, w);
      for (const ByteSpan& s : out) {
        if (s.start < w.global_offset || s.start + s.length > w.global_offset + size) {
          log << "  fuzz decode produced an out-of-window span\n";
          return false;
        }
      }
      (void)symbol_from_token(junk[fuzz.next_index(junk.size())]);
    } catch (const std::exception& e) {
      log << "  fuzz decode threw: " << e.what() << "\n";
      return false;
    }
  }
  log << "  worked example, 10000-span roundtrip, 10000-sequence fuzz\n";
  return true;
}

// ---- criterion 8: a separable corpus is learned to high F1 ----

bool criterion_learnability(std::ostream& log) {
  SynthConfig synth;
  synth.num_languages = 1;
  synth.scripts = {{U'a', U'z'}};
  synth.entity_script = {U'A', U'Z'};
  synth.shared_inventory = 10;
  synth.inclusion_prob = 1.0;
  synth.entity_types = {"PER", "LOC"};
  synth.train_sentences = 200;
  synth.dev_sentences = 50;
  synth.test_sentences = 10;
  synth.entity_density = 0.3;
  synth.master_seed = 21;
  GeneratedSuite suite = generate(synth);

  TrainConfig config;
  config.model = variant_config("hiercrf-byte");
  config.model.hiercrf.subtoken_layers = 1;
  config.model.hiercrf.subtoken_hidden = 8;
  config.model.hiercrf.sentence_layers = 1;
  config.model.hiercrf.sentence_hidden = 8;
  config.model.hiercrf.embedding_dim = 8;
  config.adam.lr = 0.01;
  config.max_epochs = 200;
  config.patience = 200;  // the epoch budget is the only stop
  config.seeds = {1};

  TrainResult result = train(config, suite.corpora.at("la"), 1);
  double best = result.history.best_score();
  log << "  dev F1 " << best << " after " << result.history.epochs.size() - 1
      << " epochs (200 train / 50 dev sentences)\n";
  return best >= 0.95;
}

// ---- criterion 9: finetuned polyglot matches or beats monolingual ----

bool criterion_direction(std::ostream& log) {
  TempDir dir("polyner-acc-repro");
  std::ostringstream out, err;
  int code = polyner::cli::dispatch({"repro", "--out", dir.str("rep")}, out, err);
  if (code != 0) {
    log << "  pipeline exited " << code << "\n" << err.str();
    return false;
  }
  nlohmann::json summary = nlohmann::json::parse(slurp(dir.str("rep/summary.json")));
  bool direction = summary.at("direction_ok").get<bool>();
  bool degradation = summary.at("degradation_ok").get<bool>();
  log << "  medians (mono -> finetuned):";
  for (const auto& [code_name, value] : summary.at("median_mono").items()) {
    log << " " << code_name << " " << value.get<double>() << "->"
        << summary.at("median_finetuned").at(code_name).get<double>();
  }
  log << "\n  direction_ok=" << direction << " degradation_ok=" << degradation
      << " over " << summary.at("seeds").size() << " seeds\n";
  return direction && degradation && summary.at("seeds").size() == 5;
}

// ---- criterion 10: common-entity classification closes the loop ----

bool criterion_common_entities(std::ostream& log) {
  SynthConfig synth;
  synth.num_languages = 2;
  synth.scripts = {{U'a', U'z'}, {U'а', U'я'}};
  synth.entity_script = {U'A', U'Z'};
  synth.shared_inventory = 10;
  synth.inclusion_prob = 0.6;
  synth.entity_types = {"PER", "LOC"};
  synth.train_sentences = 25;
  synth.dev_sentences = 5;
  synth.test_sentences = 5;
  synth.master_seed = 17;
  GeneratedSuite suite = generate(synth);

  // Every entity the manifest assigns to language lb must be found verbatim
  // in lb's train split when used as a reference set.
  SpanErrors errors;
  for (const SharedEntity& entity : suite.manifest) {
    if (std::find(entity.languages.begin(), entity.languages.end(), "lb") !=
        entity.languages.end()) {
      errors.recall_errors.push_back({entity.text, entity.etype});
    }
  }
  if (errors.recall_errors.empty()) {
    log << "  no entities assigned to lb\n";
    return false;
  }
  std::vector<SurfaceEntity> reference =
      collect_entities(suite.corpora.at("lb").split("train"), suite.tagset);
  CommonEntityReport closure = common_entity_rate(errors, reference);
  if (closure.recall_rate.at("exact") != 1.0) {
    log << "  exact rate " << closure.recall_rate.at("exact") << " for "
        << errors.recall_errors.size() << " manifest entities\n";
    return false;
  }

  SpanErrors morph;
  morph.precision_errors.push_back({"Berliner", "LOC"});
  CommonEntityReport partial = common_entity_rate(morph, {{"Berlin", "LOC"}});
  log << "  manifest closure exact rate 1.0 on " << errors.recall_errors.size()
      << " entities; partial-match average " << partial.avg_precision_rate << "\n";
  return partial.avg_precision_rate == 0.5;
}

// ---- criterion 11: repeated runs are byte-identical ----

bool criterion_determinism(std::ostream& log) {
  using polyner::cli::dispatch;
  using polyner::cli::write_atomic;
  TempDir dir("polyner-acc-determinism");
  std::ostringstream sink;

  write_atomic(dir.str("synth.json"), R"({
    "num_languages": 2,
    "scripts": [[97, 122], [1072, 1103]],
    "entity_script": [65, 90],
    "shared_inventory": 4,
    "inclusion_prob": 1.0,
    "entity_types": ["PER", "LOC"],
    "train_sentences": 15,
    "dev_sentences": 6,
    "test_sentences": 3,
    "master_seed": 3
  })");
  if (dispatch({"gen-synth", "--config", dir.str("synth.json"), "--out", dir.str("data")},
               sink, sink) != 0) {
    log << "  data generation failed\n";
    return false;
  }

  std::string arch = R"("arch": {"variant": "hiercrf-byte", "subtoken_layers": 1,
    "subtoken_hidden": 6, "sentence_layers": 1, "sentence_hidden": 6, "embedding_dim": 6})";
  write_atomic(dir.str("poly.json"),
               std::string("{\"regime\": \"polyglot\", \"data\": {\"la\": \"") +
                   dir.str("data/la") + "\", \"lb\": \"" + dir.str("data/lb") + "\"}, " +
                   "\"entity_types\": [\"PER\", \"LOC\"], " + arch +
                   ", \"train\": {\"lr\": 0.01, \"max_epochs\": 5, \"patience\": 5, "
                   "\"seeds\": [1, 2]}, \"out\": \"\"}");

  auto rerun = [&](const std::vector<std::string>& base, const std::string& out_a,
                   const std::string& out_b, const std::vector<std::string>& files,
                   const std::string& what) {
    for (const std::string& out_dir : {out_a, out_b}) {
      std::vector<std::string> args = base;
      args.push_back("--out");
      args.push_back(dir.str(out_dir));
      if (dispatch(args, sink, sink) != 0) {
        log << "  " << what << " run failed\n";
        return false;
      }
    }
    for (const std::string& file : files) {
      if (slurp(dir.str(out_a + "/" + file)) != slurp(dir.str(out_b + "/" + file))) {
        log << "  " << what << " rerun differs in " << file << "\n";
        return false;
      }
    }
    log << "  " << what << " rerun byte-identical (" << files.size() << " files)\n";
    return true;
  };

  if (!rerun({"train-polyglot", "--config", dir.str("poly.json")}, "poly-a", "poly-b",
             {"checkpoint.pnlc", "history.json", "manifest.json"}, "train")) {
    return false;
  }

  write_atomic(dir.str("ft.json"),
               std::string("{\"regime\": \"finetune\", \"data\": {\"la\": \"") +
                   dir.str("data/la") + "\"}, \"entity_types\": [\"PER\", \"LOC\"], " +
                   "\"base_checkpoint\": \"" + dir.str("poly-a/checkpoint.pnlc") + "\", " +
                   "\"target_language\": \"la\", \"train\": {\"lr\": 0.005, "
                   "\"max_epochs\": 3, \"patience\": 3, \"seeds\": [4]}, \"out\": \"\"}");
  if (!rerun({"finetune", "--config", dir.str("ft.json")}, "ft-a", "ft-b",
             {"checkpoint.pnlc", "history.json", "manifest.json"}, "finetune")) {
    return false;
  }

  if (!rerun({"fisher", "--ckpt", dir.str("poly-a/checkpoint.pnlc"), "--data",
              dir.str("data/la"), "--samples", "8", "--seed", "2"},
             "fish-a", "fish-b", {"fisher.json", "manifest.json"}, "fisher")) {
    return false;
  }
  return true;
}

struct Criterion {
  int number;
  const char* name;
  bool (*check)(std::ostream&);
};

const Criterion kCriteria[] = {
    {1, "chain inference matches exhaustive enumeration", criterion_chain_oracle},
    {2, "network gradients match finite differences", criterion_gradients},
    {3, "posterior sample frequencies match marginals", criterion_sampling},
    {4, "sampled squared-gradient diagonal matches enumeration", criterion_fisher},
    {5, "pruning identities and overprune thresholds", criterion_pruning},
    {6, "top-k overlap identity and chance level", criterion_overlap},
    {7, "byte-span codec example, roundtrip, and fuzz", criterion_codec},
    {8, "separable corpus learned to high F1", criterion_learnability},
    {9, "finetuned polyglot matches or beats monolingual", criterion_direction},
    {10, "common-entity classification closes the loop", criterion_common_entities},
    {11, "repeated runs are byte-identical", criterion_determinism},
};

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  if (argc == 3 && std::string(argv[1]) == "--criterion") {
    only = std::atoi(argv[2]);
    if (only < 1 || only > 11) {
      std::cerr << "criterion number must be 1..11\n";
      return 1;
    }
  } else if (argc != 1) {
    std::cerr << "usage: " << argv[0] << " [--criterion N]\n";
    return 1;
  }

  bool all_ok = true;
  for (const Criterion& c : kCriteria) {
    if (only != 0 && c.number != only) continue;
    std::ostringstream detail;
    auto started = std::chrono::steady_clock::now();
    bool ok = false;
    try {
      ok = c.check(detail);
    } catch (const std::exception& e) {
      detail << "  threw: " << e.what() << "\n";
    }
    double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                                   started).count();
    std::cout << "criterion " << c.number << " " << (ok ? "PASS" : "FAIL") << " " << c.name
              << " (" << seconds << "s)\n" << detail.str();
    all_ok = all_ok && ok;
  }
  return all_ok ? 0 : 1;
}
