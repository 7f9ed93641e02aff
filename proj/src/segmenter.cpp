#include "prunerank/segmenter.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "prunerank/errors.hpp"
#include "prunerank/unicode.hpp"

namespace prunerank {

namespace {

constexpr std::string_view kDefaultRules = R"(VERSION 1

# Sentence terminators.
TERMINATOR .
TERMINATOR !
TERMINATOR ?
TERMINATOR …
TERMINATOR 。
TERMINATOR ！
TERMINATOR ？
TERMINATOR ؟
TERMINATOR ।
TERMINATOR ॥

# A '.' directly after one of these words does not end a sentence.
ABBREV mr
ABBREV mrs
ABBREV ms
ABBREV dr
ABBREV prof
ABBREV st
ABBREV jr
ABBREV sr
ABBREV vs
ABBREV etc
ABBREV e.g
ABBREV i.e
ABBREV cf
ABBREV al
ABBREV ca
ABBREV approx
ABBREV dept
ABBREV fig
ABBREV vol
ABBREV inc
ABBREV ltd
ABBREV co
ABBREV corp
ABBREV u.s
ABBREV u.k

# Scripts whose sentence ends need no following space.
NOSPACE_SCRIPT Han
NOSPACE_SCRIPT Hiragana
NOSPACE_SCRIPT Katakana
NOSPACE_SCRIPT Hangul
NOSPACE_SCRIPT CJKPunct
NOSPACE_SCRIPT Fullwidth
)";

unsigned script_bit(uni::Script s) { return 1u << static_cast<unsigned>(s); }

// Closing codepoint paired with an opener, or 0 when cp opens nothing.
// The straight double quote is handled separately because it both opens and
// closes; straight single quotes are ignored entirely (apostrophes).
char32_t closer_for(char32_t cp) {
  switch (cp) {
    case U'(': return U')';
    case U'[': return U']';
    case U'{': return U'}';
    case 0x00AB: return 0x00BB;  // « »
    case 0x201C: return 0x201D;  // “ ”
    case 0x2018: return 0x2019;  // ‘ ’  (tracked only as closer match, see below)
    case 0x300C: return 0x300D;  // 「 」
    case 0x300E: return 0x300F;  // 『 』
    case 0xFF08: return 0xFF09;  // （ ）
    case 0xFF3B: return 0xFF3D;  // ［ ］
    case 0xFF5B: return 0xFF5D;  // ｛ ｝
    case 0xFF62: return 0xFF63;  // ｢ ｣
    default: return 0;
  }
}

bool is_any_closer(char32_t cp) {
  switch (cp) {
    case U')':
    case U']':
    case U'}':
    case 0x00BB:
    case 0x201D:
    case 0x2019:
    case 0x300D:
    case 0x300F:
    case 0xFF09:
    case 0xFF3D:
    case 0xFF5D:
    case 0xFF63:
      return true;
    default:
      return false;
  }
}

// One step of quote/bracket tracking. The stack holds expected closers.
void track_nesting(std::vector<char32_t>& stack, char32_t cp) {
  if (cp == U'"') {
    if (!stack.empty() && stack.back() == U'"') {
      stack.pop_back();
    } else {
      stack.push_back(U'"');
    }
    return;
  }
  // U+2018 opens, but it is also a common apostrophe; only treat it as an
  // opener, and its closer U+2019 only pops when a matching open is pending,
  // so stray apostrophes cannot poison the stack.
  if (char32_t cl = closer_for(cp)) {
    stack.push_back(cl);
    return;
  }
  if (!stack.empty() && cp == stack.back()) stack.pop_back();
}

}  // namespace

std::string_view SegmenterRules::default_directives() { return kDefaultRules; }

const SegmenterRules& SegmenterRules::embedded_default() {
  static const SegmenterRules rules = from_string(kDefaultRules);
  return rules;
}

SegmenterRules SegmenterRules::from_string(std::string_view directives) {
  SegmenterRules rules;
  std::istringstream in{std::string(directives)};
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    // Trim ASCII whitespace; directives themselves are ASCII keywords.
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    auto last = line.find_last_not_of(" \t\r");
    std::string_view sv{line.data() + first, last - first + 1};
    if (sv.front() == '#') continue;
    auto space = sv.find_first_of(" \t");
    if (space == std::string_view::npos) {
      throw ParseError(line_no, "directive needs an argument: " + std::string(sv));
    }
    std::string_view key = sv.substr(0, space);
    std::string_view arg = sv.substr(sv.find_first_not_of(" \t", space));
    if (key == "VERSION") {
      rules.version_ = std::stoi(std::string(arg));
    } else if (key == "TERMINATOR") {
      auto cps = uni::decode_utf8(arg);
      if (cps.size() != 1) {
        throw ParseError(line_no, "TERMINATOR takes one codepoint: " + std::string(arg));
      }
      rules.terminators_.insert(cps[0]);
    } else if (key == "ABBREV") {
      rules.abbreviations_.insert(uni::encode_utf8(uni::fold_case(uni::decode_utf8(arg))));
    } else if (key == "NOSPACE_SCRIPT") {
      uni::Script s;
      if (arg == "Han") s = uni::Script::han;
      else if (arg == "Hiragana") s = uni::Script::hiragana;
      else if (arg == "Katakana") s = uni::Script::katakana;
      else if (arg == "Hangul") s = uni::Script::hangul;
      else if (arg == "CJKPunct") s = uni::Script::cjk_punct;
      else if (arg == "Fullwidth") s = uni::Script::fullwidth;
      else throw ParseError(line_no, "unknown script: " + std::string(arg));
      rules.nospace_mask_ |= script_bit(s);
    } else {
      throw ParseError(line_no, "unknown directive: " + std::string(key));
    }
  }
  if (rules.terminators_.empty()) {
    throw Error("rules define no TERMINATOR");
  }
  return rules;
}

SegmenterRules SegmenterRules::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open rules file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_string(buf.str());
}

bool SegmenterRules::is_abbreviation(std::u32string_view folded_word) const {
  return abbreviations_.count(uni::encode_utf8(folded_word)) > 0;
}

bool SegmenterRules::nospace_script(char32_t cp) const {
  return (nospace_mask_ & script_bit(uni::script_of(cp))) != 0;
}

namespace {

// Word characters for abbreviation lookup: letters, loosely defined as
// anything that is not whitespace, a digit, a terminator, nesting
// punctuation, or a common separator.
bool is_word_cp(char32_t cp, const SegmenterRules& rules) {
  if (uni::is_space(cp) || rules.is_terminator(cp)) return false;
  if (cp >= U'0' && cp <= U'9') return false;
  if (closer_for(cp) != 0 || is_any_closer(cp) || cp == U'"') return false;
  switch (cp) {
    case U',':
    case U';':
    case U':':
    case U'-':
    case U'/':
    case 0x3001:  // 、
    case 0xFF0C:  // ，
    case 0xFF1B:  // ；
    case 0xFF1A:  // ：
      return false;
    default:
      return true;
  }
}

// True when the '.' at dot_idx directly follows a known abbreviation.
bool abbreviation_before(const std::u32string& cps, size_t dot_idx,
                         const SegmenterRules& rules) {
  size_t b = dot_idx;
  while (b > 0 && (is_word_cp(cps[b - 1], rules) || cps[b - 1] == U'.')) --b;
  while (b < dot_idx && cps[b] == U'.') ++b;  // drop dots carried from earlier
  if (b == dot_idx) return false;
  std::u32string word(cps.begin() + b, cps.begin() + dot_idx);
  return rules.is_abbreviation(uni::fold_case(word));
}

}  // namespace

SegmentedPassage segment(std::string_view text, std::string_view language_hint,
                         const SegmenterRules& rules) {
  SegmentedPassage out;
  out.text = std::string(text);
  out.language_hint = std::string(language_hint);

  const std::u32string cps = uni::decode_utf8(text);
  const size_t n = cps.size();

  std::vector<char32_t> stack;  // expected closers, innermost last
  size_t start = 0;
  while (start < n && uni::is_space(cps[start])) ++start;
  if (start == n) return out;

  size_t i = start;
  while (i < n) {
    const char32_t c = cps[i];
    if (rules.is_terminator(c)) {
      size_t j = i + 1;
      while (j < n && rules.is_terminator(cps[j])) ++j;

      // Tentatively pull trailing closers into the sentence. Committed only
      // if the boundary is accepted, so a rejected boundary leaves the
      // nesting state to the main scan.
      std::vector<char32_t> tmp = stack;
      size_t k = j;
      while (k < n) {
        const char32_t cc = cps[k];
        if (!tmp.empty() && cc == tmp.back()) {
          tmp.pop_back();
          ++k;
        } else {
          break;
        }
      }

      bool nospace_ok = false;
      for (size_t t = i; t < j && !nospace_ok; ++t) {
        nospace_ok = rules.nospace_script(cps[t]);
      }
      const bool next_ok = k == n || uni::is_space(cps[k]) || nospace_ok ||
                           rules.nospace_script(cps[k]);
      const bool abbrev = c == U'.' && j == i + 1 && abbreviation_before(cps, i, rules);

      if (tmp.empty() && next_ok && !abbrev) {
        out.sentences.push_back({start, k});
        stack = std::move(tmp);
        i = k;
        while (i < n && uni::is_space(cps[i])) ++i;
        start = i;
        continue;
      }
      i = j;
      continue;
    }
    track_nesting(stack, c);
    ++i;
  }

  if (start < n) {
    size_t e = n;
    while (e > start && uni::is_space(cps[e - 1])) --e;
    if (e > start) out.sentences.push_back({start, e});
  }
  return out;
}

std::vector<size_t> align_tokens(const std::vector<TokenSpan>& tokens,
                                 const std::vector<SentenceSpan>& sentences) {
  std::vector<size_t> out;
  out.reserve(tokens.size());
  for (const TokenSpan& t : tokens) {
    if (t.is_special) continue;
    // Last sentence with start <= t.start, via binary search over starts.
    size_t lo = 0, hi = sentences.size();
    while (lo < hi) {
      const size_t mid = (lo + hi) / 2;
      if (sentences[mid].start <= t.start) {
        lo = mid + 1;
      } else {
        hi = mid;
      }
    }
    if (lo == 0) {
      throw InconsistentSpans("content token at offset " + std::to_string(t.start) +
                              " precedes every sentence");
    }
    out.push_back(lo - 1);
  }
  return out;
}

}  // namespace prunerank
