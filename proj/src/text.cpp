#include "sstories/text.hpp"

namespace sstories::text {

std::u32string decode_utf8(std::string_view s) {
  std::u32string out;
  out.reserve(s.size());
  std::size_t i = 0;
  const auto n = s.size();
  while (i < n) {
    const auto b0 = static_cast<unsigned char>(s[i]);
    char32_t cp = 0xFFFD;
    std::size_t len = 1;
    if (b0 < 0x80) {
      cp = b0;
    } else if ((b0 >> 5) == 0x6) {
      len = 2;
    } else if ((b0 >> 4) == 0xE) {
      len = 3;
    } else if ((b0 >> 3) == 0x1E) {
      len = 4;
    }
    if (len > 1) {
      bool ok = i + len <= n;
      char32_t v = b0 & (0xFF >> (len + 1));
      for (std::size_t k = 1; ok && k < len; ++k) {
        const auto b = static_cast<unsigned char>(s[i + k]);
        if ((b >> 6) != 0x2) {
          ok = false;
        } else {
          v = (v << 6) | (b & 0x3F);
        }
      }
      if (ok) {
        cp = v;
      } else {
        len = 1;
      }
    }
    out.push_back(cp);
    i += len;
  }
  return out;
}

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

std::string encode_utf8(std::u32string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char32_t cp : s) append_utf8(out, cp);
  return out;
}

bool is_letter(char32_t cp) {
  if (cp < 0x80) return (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z');
  if (cp == 0xAA || cp == 0xB5 || cp == 0xBA) return true;
  if (cp >= 0xC0 && cp <= 0x2AF) return cp != 0xD7 && cp != 0xF7;
  if (cp >= 0x370 && cp <= 0x3FF) {
    return cp != 0x375 && cp != 0x37E && cp != 0x384 && cp != 0x385 && cp != 0x387;
  }
  if (cp >= 0x400 && cp <= 0x481) return true;
  if (cp >= 0x48A && cp <= 0x52F) return true;
  if (cp >= 0x1E00 && cp <= 0x1EFF) return true;
  if (cp >= 0x3041 && cp <= 0x3096) return true;  // hiragana
  if (cp >= 0x30A1 && cp <= 0x30FA) return true;  // katakana
  if (cp == 0x30FC) return true;                  // prolonged sound mark
  if (cp >= 0x4E00 && cp <= 0x9FFF) return true;
  if (cp >= 0xAC00 && cp <= 0xD7A3) return true;
  return false;
}

bool is_digit(char32_t cp) { return cp >= '0' && cp <= '9'; }

bool is_space(char32_t cp) {
  return cp == ' ' || cp == '\t' || cp == '\n' || cp == '\r' || cp == '\v' || cp == '\f' ||
         cp == 0x85 || cp == 0xA0 || cp == 0x1680 || (cp >= 0x2000 && cp <= 0x200A) ||
         cp == 0x2028 || cp == 0x2029 || cp == 0x202F || cp == 0x205F || cp == 0x3000;
}

bool is_apostrophe(char32_t cp) { return cp == '\'' || cp == 0x2019; }

char32_t to_lower(char32_t cp) {
  if (cp < 0x80) return (cp >= 'A' && cp <= 'Z') ? cp + 32 : cp;
  if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) return cp + 32;
  if (cp >= 0x100 && cp <= 0x137) return cp | 1;
  if (cp >= 0x139 && cp <= 0x148) return (cp & 1) ? cp + 1 : cp;
  if (cp >= 0x14A && cp <= 0x177) return cp | 1;
  if (cp == 0x178) return 0xFF;
  if (cp >= 0x179 && cp <= 0x17E) return (cp & 1) ? cp + 1 : cp;
  if (cp == 0x386) return 0x3AC;
  if (cp >= 0x388 && cp <= 0x38A) return cp + 37;
  if (cp == 0x38C) return 0x3CC;
  if (cp == 0x38E || cp == 0x38F) return cp + 63;
  if (cp >= 0x391 && cp <= 0x3A9 && cp != 0x3A2) return cp + 32;
  if (cp >= 0x400 && cp <= 0x40F) return cp + 80;
  if (cp >= 0x410 && cp <= 0x42F) return cp + 32;
  if (cp >= 0x1E00 && cp <= 0x1EFF) return cp | 1;
  return cp;
}

bool is_upper(char32_t cp) { return to_lower(cp) != cp; }

std::string to_lower(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char32_t cp : decode_utf8(s)) append_utf8(out, to_lower(cp));
  return out;
}

std::string trim(std::string_view s) {
  const auto u = decode_utf8(s);
  std::size_t b = 0;
  std::size_t e = u.size();
  while (b < e && is_space(u[b])) ++b;
  while (e > b && is_space(u[e - 1])) --e;
  return encode_utf8(std::u32string_view(u).substr(b, e - b));
}

std::string collapse_whitespace(std::string_view s) {
  std::string out;
  bool pending_space = false;
  for (char32_t cp : decode_utf8(s)) {
    if (is_space(cp)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    append_utf8(out, cp);
  }
  return out;
}

std::string normalize_quotes(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char32_t cp : decode_utf8(s)) {
    switch (cp) {
      case 0x2018:
      case 0x2019:
      case 0x201A:
      case 0x2032:
        out.push_back('\'');
        break;
      case 0x201C:
      case 0x201D:
      case 0x201E:
      case 0x2033:
        out.push_back('"');
        break;
      default:
        append_utf8(out, cp);
    }
  }
  return out;
}

std::vector<std::string> word_tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  const auto u = decode_utf8(text);
  std::string cur;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const char32_t cp = u[i];
    if (is_letter(cp)) {
      append_utf8(cur, to_lower(cp));
    } else if (is_apostrophe(cp) && !cur.empty() && i + 1 < u.size() && is_letter(u[i + 1])) {
      cur.push_back('\'');
    } else if (!cur.empty()) {
      tokens.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

std::vector<std::string> tag_tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  const auto u = decode_utf8(text);
  auto is_word_char = [](char32_t cp) { return is_letter(cp) || is_digit(cp); };
  std::string cur;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const char32_t cp = u[i];
    if (is_word_char(cp)) {
      append_utf8(cur, cp);
      continue;
    }
    if (is_apostrophe(cp) && !cur.empty() && i + 1 < u.size() && is_word_char(u[i + 1])) {
      cur.push_back('\'');
      continue;
    }
    if (!cur.empty()) {
      tokens.push_back(std::move(cur));
      cur.clear();
    }
    if (!is_space(cp)) {
      std::string p;
      append_utf8(p, cp);
      tokens.push_back(std::move(p));
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

bool is_word_token(std::string_view token) {
  for (char32_t cp : decode_utf8(token)) {
    if (is_letter(cp) || is_digit(cp)) return true;
  }
  return false;
}

std::vector<std::string> split_sentences(std::string_view text) {
  std::vector<std::string> out;
  const auto u = decode_utf8(text);
  std::size_t start = 0;
  auto flush = [&](std::size_t end) {
    auto s = trim(encode_utf8(std::u32string_view(u).substr(start, end - start)));
    if (!s.empty()) out.push_back(std::move(s));
    start = end;
  };
  auto closing = [](char32_t c) { return c == '"' || c == '\'' || c == U'\u201D' || c == U'\u2019' || c == ')'; };
  for (std::size_t i = 0; i < u.size(); ++i) {
    const char32_t cp = u[i];
    if (cp != '.' && cp != '!' && cp != '?') continue;
    // closing quotes and brackets stay with the sentence they end
    std::size_t j = i + 1;
    while (j < u.size() && closing(u[j])) ++j;
    if (j == u.size() || is_space(u[j])) {
      flush(j);
      i = j;
    }
  }
  flush(u.size());
  return out;
}

bool is_ascii_clean(std::string_view text) {
  for (char c : text) {
    const auto b = static_cast<unsigned char>(c);
    if (b == '\t' || b == '\n' || b == '\r') continue;
    if (b < 0x20 || b > 0x7E) return false;
  }
  return true;
}

}  // namespace sstories::text
