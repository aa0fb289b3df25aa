#include "polyner/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "polyner/errors.hpp"

namespace polyner {

namespace {

using ordered_json = nlohmann::ordered_json;

constexpr char kMagic[4] = {'P', 'N', 'L', 'C'};
constexpr std::uint32_t kVersion = 1;

void append_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void append_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void append_f64(std::string& out, double d) { append_u64(out, std::bit_cast<std::uint64_t>(d)); }

struct ByteReader {
  const std::string& bytes;
  std::size_t pos = 0;
  std::size_t limit = 0;

  void need(std::size_t n) const {
    if (pos + n > limit) raise(ErrorKind::IoError, "checkpoint data ends unexpectedly");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[pos + i])) << (8 * i);
    }
    pos += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[pos + i])) << (8 * i);
    }
    pos += 8;
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str(std::size_t n) {
    need(n);
    std::string s = bytes.substr(pos, n);
    pos += n;
    return s;
  }
};

void append_tensor(std::string& out, const std::string& name, const Tensor& t) {
  append_u32(out, static_cast<std::uint32_t>(name.size()));
  out += name;
  append_u32(out, static_cast<std::uint32_t>(t.rank()));
  for (std::size_t d : t.shape()) append_u64(out, d);
  for (double v : t.flat()) append_f64(out, v);
}

ordered_json config_json(const TaggerConfig& config) {
  ordered_json j;
  j["arch"] = architecture_name(config.arch);
  j["hiercrf"] = {{"subtoken_layers", config.hiercrf.subtoken_layers},
                  {"subtoken_hidden", config.hiercrf.subtoken_hidden},
                  {"sentence_layers", config.hiercrf.sentence_layers},
                  {"sentence_hidden", config.hiercrf.sentence_hidden},
                  {"embedding_dim", config.hiercrf.embedding_dim},
                  {"vocab_mode", vocab_mode_name(config.hiercrf.vocab_mode)},
                  {"language_specific_transitions",
                   config.hiercrf.language_specific_transitions}};
  j["charner"] = {{"layers", config.charner.layers},
                  {"hidden", config.charner.hidden},
                  {"embedding_dim", config.charner.embedding_dim},
                  {"byte_dropout", config.charner.byte_dropout},
                  {"interior_dropout", config.charner.interior_dropout},
                  {"final_dropout", config.charner.final_dropout}};
  return j;
}

TaggerConfig config_from_json(const ordered_json& j) {
  TaggerConfig config;
  config.arch = architecture_from_name(j.at("arch").get<std::string>());
  const ordered_json& h = j.at("hiercrf");
  config.hiercrf.subtoken_layers = h.at("subtoken_layers").get<std::size_t>();
  config.hiercrf.subtoken_hidden = h.at("subtoken_hidden").get<std::size_t>();
  config.hiercrf.sentence_layers = h.at("sentence_layers").get<std::size_t>();
  config.hiercrf.sentence_hidden = h.at("sentence_hidden").get<std::size_t>();
  config.hiercrf.embedding_dim = h.at("embedding_dim").get<std::size_t>();
  config.hiercrf.vocab_mode = vocab_mode_from_name(h.at("vocab_mode").get<std::string>());
  config.hiercrf.language_specific_transitions =
      h.at("language_specific_transitions").get<bool>();
  const ordered_json& c = j.at("charner");
  config.charner.layers = c.at("layers").get<std::size_t>();
  config.charner.hidden = c.at("hidden").get<std::size_t>();
  config.charner.embedding_dim = c.at("embedding_dim").get<std::size_t>();
  config.charner.byte_dropout = c.at("byte_dropout").get<double>();
  config.charner.interior_dropout = c.at("interior_dropout").get<double>();
  config.charner.final_dropout = c.at("final_dropout").get<double>();
  return config;
}

}  // namespace

std::size_t RunHistory::best_epoch() const {
  if (epochs.empty()) raise(ErrorKind::InvalidArgument, "history has no epochs");
  std::size_t best = 0;
  for (std::size_t i = 1; i < epochs.size(); ++i) {
    if (epochs[i].selection > epochs[best].selection) best = i;
  }
  return best;
}

double RunHistory::best_score() const { return epochs[best_epoch()].selection; }

bool checkpoint_equal(const Checkpoint& a, const Checkpoint& b) {
  return a.config.arch == b.config.arch && a.tagset == b.tagset && a.vocab == b.vocab &&
         a.params == b.params && a.adam == b.adam && a.languages == b.languages &&
         a.seed == b.seed && a.epoch == b.epoch && a.history == b.history;
}

std::unique_ptr<Tagger> tagger_from(const Checkpoint& ckpt) {
  std::vector<LanguageId> langs;
  for (const std::string& code : ckpt.languages) langs.push_back(LanguageId(code));
  return make_tagger(ckpt.config, ckpt.tagset, ckpt.vocab, langs, ckpt.params);
}

bool knows_language(const Checkpoint& ckpt, const LanguageId& lang) {
  for (const std::string& code : ckpt.languages) {
    if (code == lang.code()) return true;
  }
  return false;
}

std::uint32_t crc32_ieee(const unsigned char* data, std::size_t n) {
  static const auto table = [] {
    std::array<std::uint32_t, 256> t{};
    for (std::uint32_t i = 0; i < 256; ++i) {
      std::uint32_t c = i;
      for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xedb88320u ^ (c >> 1) : c >> 1;
      t[i] = c;
    }
    return t;
  }();
  std::uint32_t crc = 0xffffffffu;
  for (std::size_t i = 0; i < n; ++i) crc = table[(crc ^ data[i]) & 0xff] ^ (crc >> 8);
  return crc ^ 0xffffffffu;
}

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  ordered_json meta;
  meta["config"] = config_json(ckpt.config);
  meta["entity_types"] = ckpt.tagset.entity_types();
  meta["vocab_mode"] = vocab_mode_name(ckpt.vocab.mode());
  meta["vocab_chars"] = ckpt.vocab.char_scalars();
  meta["languages"] = ckpt.languages;
  meta["seed"] = ckpt.seed;
  meta["epoch"] = ckpt.epoch;
  meta["adam"] = {{"lr", ckpt.adam.hyper.lr},
                  {"beta1", ckpt.adam.hyper.beta1},
                  {"beta2", ckpt.adam.hyper.beta2},
                  {"eps", ckpt.adam.hyper.eps},
                  {"t", ckpt.adam.t}};
  ordered_json history = ordered_json::array();
  for (const EpochRecord& rec : ckpt.history.epochs) {
    ordered_json r;
    r["epoch"] = rec.epoch;
    r["dev_f1"] = rec.dev_f1;
    r["selection"] = rec.selection;
    history.push_back(std::move(r));
  }
  meta["history"] = std::move(history);
  std::string meta_bytes = meta.dump();

  std::string out(kMagic, 4);
  append_u32(out, kVersion);
  append_u64(out, meta_bytes.size());
  out += meta_bytes;
  for (std::size_t i = 0; i < ckpt.params.size(); ++i) {
    append_tensor(out, ckpt.params.names()[i], ckpt.params.at(i));
  }
  for (std::size_t i = 0; i < ckpt.adam.m.size(); ++i) {
    append_tensor(out, "adam/m/" + ckpt.adam.m.names()[i], ckpt.adam.m.at(i));
  }
  for (std::size_t i = 0; i < ckpt.adam.v.size(); ++i) {
    append_tensor(out, "adam/v/" + ckpt.adam.v.names()[i], ckpt.adam.v.at(i));
  }
  append_u32(out, crc32_ieee(out));
  return out;
}

Checkpoint deserialize_checkpoint(const std::string& bytes) {
  if (bytes.size() < 4 || bytes.compare(0, 4, kMagic, 4) != 0) {
    raise(ErrorKind::IoError, "not a checkpoint file");
  }
  if (bytes.size() < 12) raise(ErrorKind::ChecksumMismatch, "checkpoint is truncated");

  ByteReader header{bytes, 4, bytes.size()};
  std::uint32_t version = header.u32();
  if (version != kVersion) {
    raise(ErrorKind::VersionMismatch, "checkpoint format version " + std::to_string(version) +
                                          ", this build reads version " +
                                          std::to_string(kVersion));
  }

  std::uint32_t stored = 0;
  for (int i = 0; i < 4; ++i) {
    stored |= static_cast<std::uint32_t>(
                  static_cast<unsigned char>(bytes[bytes.size() - 4 + static_cast<std::size_t>(i)]))
              << (8 * i);
  }
  std::uint32_t actual =
      crc32_ieee(reinterpret_cast<const unsigned char*>(bytes.data()), bytes.size() - 4);
  if (stored != actual) raise(ErrorKind::ChecksumMismatch, "checkpoint checksum does not match");

  ByteReader r{bytes, 8, bytes.size() - 4};
  std::uint64_t meta_len = r.u64();
  std::string meta_bytes = r.str(meta_len);
  ordered_json meta;
  try {
    meta = ordered_json::parse(meta_bytes);
  } catch (const std::exception& e) {
    raise(ErrorKind::IoError, std::string("checkpoint metadata is not valid JSON: ") + e.what());
  }

  Checkpoint ckpt;
  try {
    ckpt.config = config_from_json(meta.at("config"));
    ckpt.tagset = TagSet(meta.at("entity_types").get<std::vector<std::string>>());
    VocabMode mode = vocab_mode_from_name(meta.at("vocab_mode").get<std::string>());
    if (mode == VocabMode::byte) {
      ckpt.vocab = SubtokenVocab::bytes();
    } else {
      ckpt.vocab = SubtokenVocab::chars_from_ids(
          meta.at("vocab_chars").get<std::vector<std::uint32_t>>());
    }
    ckpt.languages = meta.at("languages").get<std::vector<std::string>>();
    ckpt.seed = meta.at("seed").get<std::uint64_t>();
    ckpt.epoch = meta.at("epoch").get<std::size_t>();
    ckpt.adam.hyper.lr = meta.at("adam").at("lr").get<double>();
    ckpt.adam.hyper.beta1 = meta.at("adam").at("beta1").get<double>();
    ckpt.adam.hyper.beta2 = meta.at("adam").at("beta2").get<double>();
    ckpt.adam.hyper.eps = meta.at("adam").at("eps").get<double>();
    ckpt.adam.t = meta.at("adam").at("t").get<std::uint64_t>();
    for (const ordered_json& rec : meta.at("history")) {
      EpochRecord er;
      er.epoch = rec.at("epoch").get<std::size_t>();
      er.dev_f1 = rec.at("dev_f1").get<std::map<std::string, double>>();
      er.selection = rec.at("selection").get<double>();
      ckpt.history.epochs.push_back(std::move(er));
    }
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    raise(ErrorKind::IoError, std::string("checkpoint metadata is incomplete: ") + e.what());
  }

  while (r.pos < r.limit) {
    std::uint32_t name_len = r.u32();
    std::string name = r.str(name_len);
    std::uint32_t rank = r.u32();
    std::vector<std::size_t> shape;
    std::size_t count = 1;
    for (std::uint32_t d = 0; d < rank; ++d) {
      std::uint64_t dim = r.u64();
      shape.push_back(dim);
      count *= dim;
    }
    std::vector<double> values(count);
    for (std::size_t i = 0; i < count; ++i) values[i] = r.f64();
    Tensor t = Tensor::from_values(std::move(shape), std::move(values));
    if (name.rfind("adam/m/", 0) == 0) {
      ckpt.adam.m.add(name.substr(7), std::move(t));
    } else if (name.rfind("adam/v/", 0) == 0) {
      ckpt.adam.v.add(name.substr(7), std::move(t));
    } else {
      ckpt.params.add(std::move(name), std::move(t));
    }
  }
  if (!ckpt.adam.m.same_layout(ckpt.params) || !ckpt.adam.v.same_layout(ckpt.params)) {
    raise(ErrorKind::IoError, "optimizer tensors do not match the parameter layout");
  }
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  std::string bytes = serialize_checkpoint(ckpt);
  std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) raise(ErrorKind::IoError, "cannot write " + tmp);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) raise(ErrorKind::IoError, "short write to " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) raise(ErrorKind::IoError, "cannot move " + tmp + " to " + path + ": " + ec.message());
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorKind::IoError, "cannot read " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_checkpoint(bytes);
}

}  // namespace polyner
