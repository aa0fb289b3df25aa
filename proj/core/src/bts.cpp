#include "polyner/bts.hpp"

#include <algorithm>
#include <sstream>

#include "polyner/errors.hpp"

namespace polyner {

namespace {

void check_window(const ByteWindow& window) {
  if (window.window_size == 0) raise(ErrorKind::InvalidArgument, "window size must be >= 1");
  if (window.bytes.empty() || window.bytes.size() > window.window_size) {
    raise(ErrorKind::InvalidArgument, "window must hold between 1 and window_size bytes");
  }
}

bool parse_int_after(const std::string& token, std::size_t prefix_len, int& out) {
  if (token.size() <= prefix_len) return false;
  int value = 0;
  for (std::size_t i = prefix_len; i < token.size(); ++i) {
    char c = token[i];
    if (c < '0' || c > '9') return false;
    if (value > 100000000) return false;
    value = value * 10 + (c - '0');
  }
  out = value;
  return true;
}

}  // namespace

std::vector<ByteWindow> window_stream(const std::string& bytes, std::size_t window_size,
                                      std::size_t stride) {
  if (window_size == 0) raise(ErrorKind::InvalidArgument, "window size must be >= 1");
  if (stride == 0) stride = window_size;
  std::vector<ByteWindow> windows;
  for (std::size_t offset = 0; offset < bytes.size(); offset += stride) {
    ByteWindow w;
    w.bytes = bytes.substr(offset, window_size);
    w.global_offset = offset;
    w.window_size = window_size;
    windows.push_back(std::move(w));
  }
  return windows;
}

std::vector<TargetSymbol> encode_spans(const ByteWindow& window,
                                       const std::vector<ByteSpan>& spans) {
  check_window(window);
  std::size_t lo = window.global_offset;
  std::size_t hi = lo + window.bytes.size();

  std::vector<TargetSymbol> out;
  std::size_t prev_end = 0;
  bool have_prev = false;
  std::size_t prev_start = 0;
  for (const ByteSpan& span : spans) {
    if (span.length == 0) raise(ErrorKind::InvalidArgument, "spans must cover >= 1 byte");
    if (have_prev && span.start < prev_start) {
      raise(ErrorKind::InvalidArgument, "spans must be sorted by start");
    }
    if (span.start < lo || span.start + span.length > hi) {
      continue;  // not fully inside this window
    }
    if (have_prev && span.start < prev_end) {
      raise(ErrorKind::OverlappingSpans, "entity spans overlap");
    }
    have_prev = true;
    prev_start = span.start;
    prev_end = span.start + span.length;
    out.push_back(TargetSymbol::start(static_cast<int>(span.start - lo)));
    out.push_back(TargetSymbol::length(static_cast<int>(span.length)));
    out.push_back(TargetSymbol::type(span.etype));
  }
  out.push_back(TargetSymbol::stop());
  return out;
}

std::vector<ByteSpan> decode_targets(const std::vector<TargetSymbol>& symbols,
                                     const ByteWindow& window) {
  check_window(window);
  std::vector<ByteSpan> out;
  std::size_t i = 0;
  while (i < symbols.size()) {
    if (symbols[i].kind == TargetKind::stop) break;
    if (i + 2 < symbols.size() && symbols[i].kind == TargetKind::start &&
        symbols[i + 1].kind == TargetKind::length &&
        symbols[i + 2].kind == TargetKind::type) {
      int s = symbols[i].value;
      int l = symbols[i + 1].value;
      bool in_range = s >= 0 && static_cast<std::size_t>(s) < window.window_size && l >= 1 &&
                      static_cast<std::size_t>(l) <= window.window_size &&
                      static_cast<std::size_t>(s) + static_cast<std::size_t>(l) <=
                          window.bytes.size();
      if (in_range) {
        out.push_back(ByteSpan{window.global_offset + static_cast<std::size_t>(s),
                               static_cast<std::size_t>(l), symbols[i + 2].etype});
        i += 3;
        continue;
      }
    }
    ++i;  // malformed fragment, skip one symbol and resync
  }
  return out;
}

std::vector<ByteSpan> merge_window_spans(const std::vector<std::vector<ByteSpan>>& per_window) {
  std::vector<ByteSpan> all;
  for (const auto& spans : per_window) all.insert(all.end(), spans.begin(), spans.end());
  std::sort(all.begin(), all.end(), [](const ByteSpan& a, const ByteSpan& b) {
    if (a.start != b.start) return a.start < b.start;
    if (a.length != b.length) return a.length > b.length;
    return a.etype < b.etype;
  });

  std::vector<ByteSpan> out;
  for (const ByteSpan& span : all) {
    if (!out.empty()) {
      const ByteSpan& kept = out.back();
      if (span == kept) continue;
      if (span.start < kept.start + kept.length) continue;  // conflicting overlap
    }
    out.push_back(span);
  }
  return out;
}

std::string symbol_to_token(const TargetSymbol& symbol) {
  switch (symbol.kind) {
    case TargetKind::start:
      return "S:" + std::to_string(symbol.value);
    case TargetKind::length:
      return "L:" + std::to_string(symbol.value);
    case TargetKind::type:
      return symbol.etype;
    case TargetKind::stop:
      return "STOP";
  }
  raise(ErrorKind::InvalidArgument, "unknown symbol kind");
}

TargetSymbol symbol_from_token(const std::string& token) {
  int value = 0;
  if (token.rfind("S:", 0) == 0 && parse_int_after(token, 2, value)) {
    return TargetSymbol::start(value);
  }
  if (token.rfind("L:", 0) == 0 && parse_int_after(token, 2, value)) {
    return TargetSymbol::length(value);
  }
  if (token == "STOP") return TargetSymbol::stop();
  return TargetSymbol::type(token);
}

std::string format_target_line(std::size_t global_offset,
                               const std::vector<TargetSymbol>& symbols) {
  std::string line = "@" + std::to_string(global_offset);
  for (const TargetSymbol& symbol : symbols) {
    line += ' ';
    line += symbol_to_token(symbol);
  }
  return line;
}

std::pair<std::size_t, std::vector<TargetSymbol>> parse_target_line(const std::string& line) {
  std::istringstream in(line);
  std::string head;
  if (!(in >> head) || head.size() < 2 || head[0] != '@') {
    raise(ErrorKind::MalformedLine, "expected an @offset prefix");
  }
  std::size_t offset = 0;
  for (std::size_t i = 1; i < head.size(); ++i) {
    char c = head[i];
    if (c < '0' || c > '9') raise(ErrorKind::MalformedLine, "offset must be a number");
    offset = offset * 10 + static_cast<std::size_t>(c - '0');
  }
  std::vector<TargetSymbol> symbols;
  std::string token;
  while (in >> token) symbols.push_back(symbol_from_token(token));
  return {offset, std::move(symbols)};
}

}  // namespace polyner
