#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace prunerank {

// Half-open codepoint range [start, end) into a passage text.
struct SentenceSpan {
  size_t start = 0;
  size_t end = 0;
  bool operator==(const SentenceSpan&) const = default;
};

// Half-open codepoint range of one scoring token. Special tokens (markers a
// model may inject, never produced by the local tokenizer) carry no text.
struct TokenSpan {
  size_t start = 0;
  size_t end = 0;
  bool is_special = false;
  bool operator==(const TokenSpan&) const = default;
};

struct SegmentedPassage {
  std::string text;
  std::vector<SentenceSpan> sentences;
  std::string language_hint;  // BCP-47-ish tag, empty when unknown
};

// Declarative sentence-splitting rules: terminator codepoints, abbreviations
// that suppress a following '.', and scripts that end sentences without a
// trailing space. Loaded from a directive file or built in.
class SegmenterRules {
 public:
  static const SegmenterRules& embedded_default();
  static SegmenterRules from_string(std::string_view directives);
  static SegmenterRules load(const std::string& path);
  static std::string_view default_directives();

  bool is_terminator(char32_t cp) const { return terminators_.count(cp) > 0; }
  bool is_abbreviation(std::u32string_view folded_word) const;
  bool nospace_script(char32_t cp) const;
  int version() const { return version_; }

 private:
  int version_ = 1;
  std::unordered_set<char32_t> terminators_;
  std::unordered_set<std::string> abbreviations_;  // folded, UTF-8
  unsigned nospace_mask_ = 0;
};

// Splits text into non-overlapping sentence spans in order. Spans cover every
// non-whitespace codepoint exactly once; gaps between spans are whitespace.
SegmentedPassage segment(std::string_view text, std::string_view language_hint = {},
                         const SegmenterRules& rules = SegmenterRules::embedded_default());

// Maps each content token to the index of the last sentence whose start is at
// or before the token start. Special tokens are skipped. Throws
// InconsistentSpans when a content token precedes every sentence.
std::vector<size_t> align_tokens(const std::vector<TokenSpan>& tokens,
                                 const std::vector<SentenceSpan>& sentences);

}  // namespace prunerank
