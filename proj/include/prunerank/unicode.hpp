#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

// Small UTF-8 toolkit. All public offsets in this project are counted in
// Unicode scalar values (codepoints), never in bytes; these helpers do the
// byte<->codepoint bookkeeping in one place.
namespace prunerank::uni {

// Decodes UTF-8, replacing each invalid byte with U+FFFD. Never throws.
std::u32string decode_utf8(std::string_view text);

std::string encode_utf8(char32_t cp);
std::string encode_utf8(std::u32string_view text);

// Number of codepoints decode_utf8(text) would produce.
size_t cp_length(std::string_view text);

// Byte offset where each codepoint starts, plus text.size() as a sentinel.
// Size is always cp_length(text) + 1.
std::vector<size_t> cp_byte_offsets(std::string_view text);

// Substring [start, end) in codepoint offsets, returned as the original
// bytes (invalid sequences survive untouched).
std::string cp_slice(std::string_view text, size_t start, size_t end);

bool is_space(char32_t cp);

// Pragmatic case folding: ASCII, Latin-1, Latin Extended-A, Greek, Cyrillic
// and fullwidth Latin. Everything else folds to itself.
char32_t fold_case(char32_t cp);
std::u32string fold_case(std::u32string_view text);

enum class Script {
  other,
  han,
  hiragana,
  katakana,
  hangul,
  cjk_punct,
  fullwidth,
};

Script script_of(char32_t cp);

// Distinct character 3-grams of an already-folded string, encoded back to
// UTF-8. Inputs shorter than 3 codepoints contribute the whole string as a
// single pseudo-gram; the empty string has no grams.
std::unordered_set<std::string> char3gram_set(std::u32string_view text);

}  // namespace prunerank::uni
