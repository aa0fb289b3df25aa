#include "polyner/syncorpus.hpp"

#include <algorithm>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "polyner/errors.hpp"
#include "polyner/rng.hpp"

namespace polyner {

namespace {

constexpr std::size_t kMinEntityChars = 3;
constexpr std::size_t kMaxEntityChars = 8;
constexpr std::size_t kMinFillerChars = 2;
constexpr std::size_t kMaxFillerChars = 6;
constexpr std::size_t kUniqueRetries = 1000;

void check(bool ok, const std::string& message) {
  if (!ok) throw Error(ErrorKind::InvalidConfig, message);
}

void check_range(const ScriptRange& range, const std::string& name) {
  check(range.lo <= range.hi, name + ": empty range");
  check(range.hi <= 0x10FFFF, name + ": beyond the last Unicode scalar");
  check(range.hi < 0xD800 || range.lo > 0xDFFF, name + ": range covers surrogates");
}

void append_utf8(std::string& out, char32_t cp) {
  std::uint32_t c = static_cast<std::uint32_t>(cp);
  if (c < 0x80) {
    out += static_cast<char>(c);
  } else if (c < 0x800) {
    out += static_cast<char>(0xC0 | (c >> 6));
    out += static_cast<char>(0x80 | (c & 0x3F));
  } else if (c < 0x10000) {
    out += static_cast<char>(0xE0 | (c >> 12));
    out += static_cast<char>(0x80 | ((c >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (c & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (c >> 18));
    out += static_cast<char>(0x80 | ((c >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((c >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (c & 0x3F));
  }
}

char32_t random_char(RngStream& rng, const ScriptRange& range) {
  std::uint64_t span = static_cast<std::uint64_t>(range.hi) - range.lo + 1;
  return static_cast<char32_t>(range.lo + rng.next_index(span));
}

std::string random_word(RngStream& rng, const ScriptRange& range, std::size_t lo,
                        std::size_t hi) {
  std::size_t len = lo + rng.next_index(hi - lo + 1);
  std::string word;
  for (std::size_t i = 0; i < len; ++i) append_utf8(word, random_char(rng, range));
  return word;
}

struct InventoryEntity {
  std::vector<std::string> tokens;
  int type = 0;
  std::string text;  // tokens joined by spaces
};

// The leading character of an entity comes from its type's slice of the
// entity alphabet, so type is decidable from the surface.
std::string entity_token(RngStream& rng, const ScriptRange& script, int type,
                         std::size_t num_types, bool leading) {
  std::string word = random_word(rng, script, kMinEntityChars, kMaxEntityChars);
  if (leading) {
    std::uint64_t span = static_cast<std::uint64_t>(script.hi) - script.lo + 1;
    std::uint64_t width = span / num_types;
    ScriptRange slice{static_cast<char32_t>(script.lo + width * static_cast<std::uint64_t>(type)),
                      static_cast<char32_t>(script.lo + width * (static_cast<std::uint64_t>(type) + 1) - 1)};
    std::string head;
    append_utf8(head, random_char(rng, slice));
    std::size_t first_len = 1;
    while (first_len < word.size() && (static_cast<unsigned char>(word[first_len]) & 0xC0) == 0x80) {
      ++first_len;
    }
    word = head + word.substr(first_len);
  }
  return word;
}

std::vector<InventoryEntity> build_inventory(const SynthConfig& config) {
  RngStream rng(config.master_seed, "inventory");
  std::size_t num_types = config.entity_types.size();
  std::vector<InventoryEntity> inventory;
  std::set<std::string> seen;
  for (std::size_t e = 0; e < config.shared_inventory; ++e) {
    InventoryEntity entity;
    entity.type = static_cast<int>(e % num_types);
    for (std::size_t attempt = 0;; ++attempt) {
      if (attempt >= kUniqueRetries) {
        throw Error(ErrorKind::InvalidConfig,
                    "entity alphabet too small to draw a unique inventory");
      }
      std::size_t len = config.min_entity_tokens +
                        rng.next_index(config.max_entity_tokens - config.min_entity_tokens + 1);
      entity.tokens.clear();
      for (std::size_t t = 0; t < len; ++t) {
        entity.tokens.push_back(
            entity_token(rng, config.entity_script, entity.type, num_types, t == 0));
      }
      entity.text.clear();
      for (std::size_t t = 0; t < len; ++t) {
        if (t > 0) entity.text += ' ';
        entity.text += entity.tokens[t];
      }
      if (seen.insert(entity.text).second) break;
    }
    inventory.push_back(std::move(entity));
  }
  return inventory;
}

std::vector<double> type_weights(const SynthConfig& config, std::size_t lang_index) {
  std::size_t k = config.entity_types.size();
  std::vector<double> weights(k, (1.0 - config.label_skew) / static_cast<double>(k));
  weights[lang_index % k] += config.label_skew;
  return weights;
}

// Appends one entity occurrence: B-type, then I-type for the rest.
void emit_entity(Sentence& s, const InventoryEntity& entity, const TagSet& tagset) {
  for (std::size_t t = 0; t < entity.tokens.size(); ++t) {
    int label = t == 0 ? tagset.begin_label(entity.type) : tagset.inside_label(entity.type);
    s.tokens.push_back(Token{entity.tokens[t], label});
  }
}

// Draws an entity by skewed type; falls back to any included entity when the
// drawn type has none. Null when the language includes nothing.
const InventoryEntity* draw_entity(RngStream& rng, const std::vector<InventoryEntity>& inventory,
                                   const std::vector<std::size_t>& included,
                                   const std::vector<std::vector<std::size_t>>& included_by_type,
                                   const std::vector<double>& weights) {
  if (included.empty()) return nullptr;
  std::size_t type = rng.next_categorical(weights);
  const std::vector<std::size_t>& pool =
      included_by_type[type].empty() ? included : included_by_type[type];
  return &inventory[pool[rng.next_index(pool.size())]];
}

Sentence make_synth_sentence(RngStream& rng, const SynthConfig& config, std::size_t lang_index,
                             const std::string& code, const TagSet& tagset,
                             const std::vector<InventoryEntity>& inventory,
                             const std::vector<std::size_t>& included,
                             const std::vector<std::vector<std::size_t>>& included_by_type,
                             const std::vector<double>& weights,
                             const InventoryEntity* forced) {
  std::size_t total = config.min_tokens +
                      rng.next_index(config.max_tokens - config.min_tokens + 1);
  std::size_t forced_at = 0;
  if (forced != nullptr) {
    forced_at = rng.next_index(total - forced->tokens.size() + 1);
  }

  Sentence s;
  s.language = LanguageId(code);
  while (s.tokens.size() < total) {
    std::size_t t = s.tokens.size();
    if (forced != nullptr && t == forced_at) {
      emit_entity(s, *forced, tagset);
      continue;
    }
    // Free space before the forced placement or the sentence end.
    std::size_t limit = (forced != nullptr && t < forced_at) ? forced_at : total;
    if (rng.next_bernoulli(config.entity_density)) {
      const InventoryEntity* entity =
          draw_entity(rng, inventory, included, included_by_type, weights);
      if (entity != nullptr && t + entity->tokens.size() <= limit) {
        emit_entity(s, *entity, tagset);
        continue;
      }
    }
    s.tokens.push_back(Token{
        random_word(rng, config.scripts[lang_index], kMinFillerChars, kMaxFillerChars),
        TagSet::kOutside});
  }
  return s;
}

}  // namespace

std::string language_code(std::size_t index) {
  std::string suffix;
  do {
    suffix += static_cast<char>('a' + index % 26);
    index /= 26;
  } while (index > 0);
  std::reverse(suffix.begin(), suffix.end());
  return "l" + suffix;
}

void validate_synth_config(const SynthConfig& config) {
  check(config.num_languages >= 1, "at least one language required");
  check(config.scripts.size() == config.num_languages,
        "one script range per language required");
  for (std::size_t i = 0; i < config.scripts.size(); ++i) {
    check_range(config.scripts[i], "script " + std::to_string(i));
  }
  check_range(config.entity_script, "entity script");
  check(!config.entity_types.empty(), "at least one entity type required");
  std::set<std::string> types;
  for (const std::string& t : config.entity_types) {
    check(!t.empty() && t != "O", "entity types must be non-empty and not 'O'");
    check(types.insert(t).second, "duplicate entity type '" + t + "'");
  }
  check(config.inclusion_prob >= 0.0 && config.inclusion_prob <= 1.0,
        "inclusion probability must be in [0, 1]");
  check(config.entity_density >= 0.0 && config.entity_density <= 1.0,
        "entity density must be in [0, 1]");
  check(config.label_skew >= 0.0 && config.label_skew <= 1.0,
        "label skew must be in [0, 1]");
  check(config.min_tokens >= 1, "sentences need at least one token");
  check(config.max_tokens >= config.min_tokens, "sentence length range is inverted");
  check(config.min_entity_tokens >= 1, "entities need at least one token");
  check(config.max_entity_tokens >= config.min_entity_tokens,
        "entity length range is inverted");
  check(config.max_entity_tokens <= config.min_tokens,
        "entities must fit in the shortest sentence");
  if (config.shared_inventory > 0) {
    std::uint64_t span = static_cast<std::uint64_t>(config.entity_script.hi) -
                         config.entity_script.lo + 1;
    check(span >= config.entity_types.size(),
          "entity script needs one leading character per type");
    if (config.inclusion_prob > 0.0) {
      check(config.train_sentences >= config.shared_inventory,
            "train split too small to cover the entity inventory");
    }
  }
}

GeneratedSuite generate(const SynthConfig& config) {
  validate_synth_config(config);

  GeneratedSuite suite;
  suite.tagset = TagSet(config.entity_types);
  std::vector<InventoryEntity> inventory = build_inventory(config);
  std::vector<std::vector<std::string>> entity_languages(inventory.size());

  for (std::size_t lang = 0; lang < config.num_languages; ++lang) {
    std::string code = language_code(lang);
    RngStream inclusion_rng(config.master_seed, "inclusion", lang);
    std::vector<std::size_t> included;
    std::vector<std::vector<std::size_t>> included_by_type(config.entity_types.size());
    for (std::size_t e = 0; e < inventory.size(); ++e) {
      if (inclusion_rng.next_bernoulli(config.inclusion_prob)) {
        included.push_back(e);
        included_by_type[static_cast<std::size_t>(inventory[e].type)].push_back(e);
      }
    }
    std::vector<double> weights = type_weights(config, lang);

    LabeledCorpus corpus(LanguageId(code), suite.tagset);
    const struct {
      const char* name;
      const char* purpose;
      std::size_t count;
      bool coverage;
    } splits[] = {{"train", "train", config.train_sentences, true},
                  {"dev", "dev", config.dev_sentences, false},
                  {"test", "test", config.test_sentences, false}};
    for (const auto& split : splits) {
      RngStream rng(config.master_seed, split.purpose, lang);
      std::vector<std::size_t> queue;
      if (split.coverage) {
        queue = included;
        rng.shuffle(queue);
      }
      std::vector<Sentence> sentences;
      for (std::size_t i = 0; i < split.count; ++i) {
        const InventoryEntity* forced =
            i < queue.size() ? &inventory[queue[i]] : nullptr;
        sentences.push_back(make_synth_sentence(rng, config, lang, code, suite.tagset,
                                                inventory, included, included_by_type,
                                                weights, forced));
      }
      corpus.set_split(split.name, sentences);
    }
    suite.corpora.emplace(code, std::move(corpus));
    for (std::size_t e : included) entity_languages[e].push_back(code);
  }

  for (std::size_t e = 0; e < inventory.size(); ++e) {
    suite.manifest.push_back(SharedEntity{inventory[e].text,
                                          config.entity_types[static_cast<std::size_t>(inventory[e].type)],
                                          entity_languages[e]});
  }
  return suite;
}

std::string manifest_json(const GeneratedSuite& suite) {
  nlohmann::ordered_json j;
  j["languages"] = nlohmann::json::array();
  for (const auto& [code, corpus] : suite.corpora) j["languages"].push_back(code);
  j["types"] = suite.tagset.entity_types();
  j["entities"] = nlohmann::json::array();
  for (const SharedEntity& entity : suite.manifest) {
    nlohmann::ordered_json item;
    item["text"] = entity.text;
    item["type"] = entity.etype;
    item["languages"] = entity.languages;
    j["entities"].push_back(item);
  }
  return j.dump(2) + "\n";
}

SynthConfig synth_config_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::InvalidConfig, std::string("bad config JSON: ") + e.what());
  }
  check(j.is_object(), "config must be a JSON object");

  SynthConfig config;
  auto range_from = [](const nlohmann::json& value, const std::string& name) {
    check(value.is_array() && value.size() == 2, name + " must be a [lo, hi] pair");
    return ScriptRange{static_cast<char32_t>(value[0].get<std::uint32_t>()),
                       static_cast<char32_t>(value[1].get<std::uint32_t>())};
  };
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "num_languages") config.num_languages = value.get<std::size_t>();
      else if (key == "scripts") {
        config.scripts.clear();
        check(value.is_array(), "scripts must be an array of [lo, hi] pairs");
        for (const auto& r : value) config.scripts.push_back(range_from(r, "script"));
      }
      else if (key == "entity_script") config.entity_script = range_from(value, "entity_script");
      else if (key == "shared_inventory") config.shared_inventory = value.get<std::size_t>();
      else if (key == "inclusion_prob") config.inclusion_prob = value.get<double>();
      else if (key == "entity_types") config.entity_types = value.get<std::vector<std::string>>();
      else if (key == "train_sentences") config.train_sentences = value.get<std::size_t>();
      else if (key == "dev_sentences") config.dev_sentences = value.get<std::size_t>();
      else if (key == "test_sentences") config.test_sentences = value.get<std::size_t>();
      else if (key == "min_tokens") config.min_tokens = value.get<std::size_t>();
      else if (key == "max_tokens") config.max_tokens = value.get<std::size_t>();
      else if (key == "entity_density") config.entity_density = value.get<double>();
      else if (key == "min_entity_tokens") config.min_entity_tokens = value.get<std::size_t>();
      else if (key == "max_entity_tokens") config.max_entity_tokens = value.get<std::size_t>();
      else if (key == "label_skew") config.label_skew = value.get<double>();
      else if (key == "master_seed") config.master_seed = value.get<std::uint64_t>();
      else throw Error(ErrorKind::InvalidConfig, "unknown config key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::InvalidConfig, std::string("bad config value: ") + e.what());
  }
  return config;
}

std::string synth_config_json(const SynthConfig& config) {
  nlohmann::ordered_json j;
  j["num_languages"] = config.num_languages;
  j["scripts"] = nlohmann::json::array();
  for (const ScriptRange& r : config.scripts) {
    j["scripts"].push_back({static_cast<std::uint32_t>(r.lo), static_cast<std::uint32_t>(r.hi)});
  }
  j["entity_script"] = {static_cast<std::uint32_t>(config.entity_script.lo),
                        static_cast<std::uint32_t>(config.entity_script.hi)};
  j["shared_inventory"] = config.shared_inventory;
  j["inclusion_prob"] = config.inclusion_prob;
  j["entity_types"] = config.entity_types;
  j["train_sentences"] = config.train_sentences;
  j["dev_sentences"] = config.dev_sentences;
  j["test_sentences"] = config.test_sentences;
  j["min_tokens"] = config.min_tokens;
  j["max_tokens"] = config.max_tokens;
  j["entity_density"] = config.entity_density;
  j["min_entity_tokens"] = config.min_entity_tokens;
  j["max_entity_tokens"] = config.max_entity_tokens;
  j["label_skew"] = config.label_skew;
  j["master_seed"] = config.master_seed;
  return j.dump(2) + "\n";
}

}  // namespace polyner
