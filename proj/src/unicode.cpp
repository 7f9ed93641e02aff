#include "prunerank/unicode.hpp"

namespace prunerank::uni {

namespace {

constexpr char32_t kReplacement = 0xFFFD;

// Decodes one codepoint starting at byte i. Advances i past the bytes
// consumed; invalid input consumes exactly one byte and yields U+FFFD.
char32_t next_cp(std::string_view s, size_t& i) {
  const auto c = static_cast<unsigned char>(s[i]);
  size_t len;
  char32_t acc;
  if (c < 0x80) {
    ++i;
    return c;
  } else if ((c >> 5) == 0x6) {
    len = 2;
    acc = c & 0x1F;
  } else if ((c >> 4) == 0xE) {
    len = 3;
    acc = c & 0x0F;
  } else if ((c >> 3) == 0x1E) {
    len = 4;
    acc = c & 0x07;
  } else {
    ++i;
    return kReplacement;
  }
  if (i + len > s.size()) {
    ++i;
    return kReplacement;
  }
  for (size_t k = 1; k < len; ++k) {
    const auto cc = static_cast<unsigned char>(s[i + k]);
    if ((cc >> 6) != 0x2) {
      ++i;
      return kReplacement;
    }
    acc = (acc << 6) | (cc & 0x3F);
  }
  const bool overlong = (len == 2 && acc < 0x80) || (len == 3 && acc < 0x800) ||
                        (len == 4 && acc < 0x10000);
  if (overlong || acc > 0x10FFFF || (acc >= 0xD800 && acc <= 0xDFFF)) {
    ++i;
    return kReplacement;
  }
  i += len;
  return acc;
}

}  // namespace

std::u32string decode_utf8(std::string_view text) {
  std::u32string out;
  out.reserve(text.size());
  size_t i = 0;
  while (i < text.size()) out.push_back(next_cp(text, i));
  return out;
}

std::string encode_utf8(char32_t cp) {
  std::string out;
  if (cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) cp = kReplacement;
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
  return out;
}

std::string encode_utf8(std::u32string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char32_t cp : text) out += encode_utf8(cp);
  return out;
}

size_t cp_length(std::string_view text) {
  size_t i = 0, n = 0;
  while (i < text.size()) {
    next_cp(text, i);
    ++n;
  }
  return n;
}

std::vector<size_t> cp_byte_offsets(std::string_view text) {
  std::vector<size_t> out;
  size_t i = 0;
  while (i < text.size()) {
    out.push_back(i);
    next_cp(text, i);
  }
  out.push_back(text.size());
  return out;
}

std::string cp_slice(std::string_view text, size_t start, size_t end) {
  if (start >= end) return {};
  const auto offs = cp_byte_offsets(text);
  const size_t n = offs.size() - 1;
  if (start >= n) return {};
  if (end > n) end = n;
  return std::string(text.substr(offs[start], offs[end] - offs[start]));
}

bool is_space(char32_t cp) {
  switch (cp) {
    case U' ':
    case U'\t':
    case U'\n':
    case U'\r':
    case U'\f':
    case U'\v':
    case 0x00A0:  // no-break space
    case 0x1680:
    case 0x2028:  // line separator
    case 0x2029:  // paragraph separator
    case 0x202F:
    case 0x205F:
    case 0x3000:  // ideographic space
    case 0xFEFF:
      return true;
    default:
      return cp >= 0x2000 && cp <= 0x200A;  // en quad .. hair space
  }
}

char32_t fold_case(char32_t cp) {
  if (cp >= U'A' && cp <= U'Z') return cp + 32;
  if (cp < 0x80) return cp;
  // Latin-1 supplement, minus the multiplication sign.
  if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) return cp + 32;
  // Latin Extended-A comes in upper/lower pairs with three parity runs.
  if (cp >= 0x100 && cp <= 0x137) return (cp % 2 == 0) ? cp + 1 : cp;
  if (cp >= 0x139 && cp <= 0x148) return (cp % 2 == 1) ? cp + 1 : cp;
  if (cp >= 0x14A && cp <= 0x177) return (cp % 2 == 0) ? cp + 1 : cp;
  if (cp == 0x178) return 0xFF;  // Y with diaeresis
  if (cp >= 0x179 && cp <= 0x17E) return (cp % 2 == 1) ? cp + 1 : cp;
  // Greek capitals (0x3A2 is unassigned).
  if (cp >= 0x391 && cp <= 0x3AB && cp != 0x3A2) return cp + 32;
  if (cp >= 0x386 && cp <= 0x38F) {
    switch (cp) {
      case 0x386: return 0x3AC;
      case 0x388: return 0x3AD;
      case 0x389: return 0x3AE;
      case 0x38A: return 0x3AF;
      case 0x38C: return 0x3CC;
      case 0x38E: return 0x3CD;
      case 0x38F: return 0x3CE;
      default: return cp;
    }
  }
  // Cyrillic.
  if (cp >= 0x410 && cp <= 0x42F) return cp + 32;
  if (cp >= 0x400 && cp <= 0x40F) return cp + 80;
  // Fullwidth Latin capitals.
  if (cp >= 0xFF21 && cp <= 0xFF3A) return cp + 32;
  return cp;
}

std::u32string fold_case(std::u32string_view text) {
  std::u32string out;
  out.reserve(text.size());
  for (char32_t cp : text) out.push_back(fold_case(cp));
  return out;
}

Script script_of(char32_t cp) {
  if ((cp >= 0x4E00 && cp <= 0x9FFF) || (cp >= 0x3400 && cp <= 0x4DBF) ||
      (cp >= 0xF900 && cp <= 0xFAFF) || (cp >= 0x20000 && cp <= 0x2A6DF)) {
    return Script::han;
  }
  if (cp >= 0x3040 && cp <= 0x309F) return Script::hiragana;
  if ((cp >= 0x30A0 && cp <= 0x30FF) || (cp >= 0x31F0 && cp <= 0x31FF)) {
    return Script::katakana;
  }
  if ((cp >= 0xAC00 && cp <= 0xD7AF) || (cp >= 0x1100 && cp <= 0x11FF) ||
      (cp >= 0x3130 && cp <= 0x318F) || (cp >= 0xA960 && cp <= 0xA97F)) {
    return Script::hangul;
  }
  if (cp >= 0x3000 && cp <= 0x303F) return Script::cjk_punct;
  if (cp >= 0xFF00 && cp <= 0xFFEF) return Script::fullwidth;
  return Script::other;
}

std::unordered_set<std::string> char3gram_set(std::u32string_view text) {
  std::unordered_set<std::string> out;
  if (text.empty()) return out;
  if (text.size() < 3) {
    out.insert(encode_utf8(text));
    return out;
  }
  for (size_t i = 0; i + 3 <= text.size(); ++i) {
    out.insert(encode_utf8(text.substr(i, 3)));
  }
  return out;
}

}  // namespace prunerank::uni
