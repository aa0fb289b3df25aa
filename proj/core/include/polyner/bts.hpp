#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

namespace polyner {

// Byte-to-span codec: entity spans over a raw byte stream become short
// symbol sequences per fixed-size window, and decode back totally.

struct ByteWindow {
  std::string bytes;              // at most window_size of them
  std::size_t global_offset = 0;  // index of bytes[0] in the stream
  std::size_t window_size = 60;
};

enum class TargetKind { start, length, type, stop };

struct TargetSymbol {
  TargetKind kind = TargetKind::stop;
  int value = 0;      // window-relative start, or span length
  std::string etype;  // set for kind == type

  static TargetSymbol start(int k) { return {TargetKind::start, k, {}}; }
  static TargetSymbol length(int k) { return {TargetKind::length, k, {}}; }
  static TargetSymbol type(std::string t) { return {TargetKind::type, 0, std::move(t)}; }
  static TargetSymbol stop() { return {TargetKind::stop, 0, {}}; }

  bool operator==(const TargetSymbol& other) const {
    return kind == other.kind && value == other.value && etype == other.etype;
  }
};

struct ByteSpan {
  std::size_t start = 0;  // global byte offset
  std::size_t length = 0;
  std::string etype;

  bool operator==(const ByteSpan& other) const {
    return start == other.start && length == other.length && etype == other.etype;
  }
};

// Windows at offsets 0, stride, 2*stride, ... covering the whole stream; the
// last window may be short. stride 0 means "use window_size" (no overlap).
std::vector<ByteWindow> window_stream(const std::string& bytes, std::size_t window_size = 60,
                                      std::size_t stride = 0);

// Spans fully inside the window, in order, each as start/length/type, closed
// by a stop symbol. Spans must be sorted by start and non-overlapping.
std::vector<TargetSymbol> encode_spans(const ByteWindow& window,
                                       const std::vector<ByteSpan>& spans);

// Greedy left-to-right parse of start/length/type triples, rebased to global
// offsets. Total: malformed fragments and out-of-window spans are skipped,
// and the first stop symbol ends the parse.
std::vector<ByteSpan> decode_targets(const std::vector<TargetSymbol>& symbols,
                                     const ByteWindow& window);

// Union of per-window decodes: exact duplicates collapse; overlapping
// conflicts keep the earlier-starting, then longer, span.
std::vector<ByteSpan> merge_window_spans(const std::vector<std::vector<ByteSpan>>& per_window);

// Text form: "S:5", "L:5", "PER", "STOP". Parsing single tokens is total;
// anything that is not a start, length, or stop token reads as a type.
std::string symbol_to_token(const TargetSymbol& symbol);
TargetSymbol symbol_from_token(const std::string& token);

// One window per line: "@<offset> S:5 L:5 PER STOP".
std::string format_target_line(std::size_t global_offset,
                               const std::vector<TargetSymbol>& symbols);
std::pair<std::size_t, std::vector<TargetSymbol>> parse_target_line(const std::string& line);

}  // namespace polyner
