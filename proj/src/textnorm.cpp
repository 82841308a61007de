#include "plfilter/textnorm.hpp"

#include <unicode/uchar.h>
#include <unicode/utf8.h>

namespace plf {

void to_json(nlohmann::json& j, const NormConfig& cfg) {
  j = nlohmann::json{{"remove_diacritics", cfg.remove_diacritics},
                     {"remove_punctuation", cfg.remove_punctuation},
                     {"collapse_whitespace", cfg.collapse_whitespace},
                     {"unify_alef_variants", cfg.unify_alef_variants},
                     {"unify_ya_alefmaqsura", cfg.unify_ya_alefmaqsura}};
}

void from_json(const nlohmann::json& j, NormConfig& cfg) {
  cfg.remove_diacritics = j.value("remove_diacritics", cfg.remove_diacritics);
  cfg.remove_punctuation = j.value("remove_punctuation", cfg.remove_punctuation);
  cfg.collapse_whitespace = j.value("collapse_whitespace", cfg.collapse_whitespace);
  cfg.unify_alef_variants = j.value("unify_alef_variants", cfg.unify_alef_variants);
  cfg.unify_ya_alefmaqsura = j.value("unify_ya_alefmaqsura", cfg.unify_ya_alefmaqsura);
}

bool is_arabic_diacritic(char32_t cp) {
  return (cp >= 0x064B && cp <= 0x065F) || cp == 0x0670 || cp == 0x0640;
}

bool is_unicode_whitespace(char32_t cp) {
  return u_isUWhiteSpace(static_cast<UChar32>(cp)) != 0;
}

bool is_punctuation(char32_t cp) {
  if (cp == 0x060C || cp == 0x061B || cp == 0x061F) {
    return true;
  }
  return u_ispunct(static_cast<UChar32>(cp)) != 0;
}

std::u32string utf8_decode(std::string_view text) {
  std::u32string out;
  out.reserve(text.size());
  const auto* s = reinterpret_cast<const uint8_t*>(text.data());
  const auto length = static_cast<int32_t>(text.size());
  int32_t i = 0;
  while (i < length) {
    UChar32 c;
    U8_NEXT(s, i, length, c);
    out.push_back(c < 0 ? U'\uFFFD' : static_cast<char32_t>(c));
  }
  return out;
}

std::string utf8_encode(std::u32string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char32_t cp : text) {
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
  return out;
}

namespace {

char32_t unify(char32_t cp, const NormConfig& cfg) {
  if (cfg.unify_alef_variants &&
      (cp == 0x0622 || cp == 0x0623 || cp == 0x0625 || cp == 0x0671)) {
    return 0x0627;
  }
  if (cfg.unify_ya_alefmaqsura && cp == 0x0649) {
    return 0x064A;
  }
  return cp;
}

std::u32string collapse(std::u32string_view text) {
  std::u32string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char32_t cp : text) {
    if (is_unicode_whitespace(cp)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out.push_back(U' ');
      pending_space = false;
    }
    out.push_back(cp);
  }
  return out;
}

}  // namespace

std::string normalize(std::string_view text, const NormConfig& cfg) {
  std::u32string kept;
  for (char32_t cp : utf8_decode(text)) {
    if (cfg.remove_diacritics && is_arabic_diacritic(cp)) continue;
    if (cfg.remove_punctuation && is_punctuation(cp)) continue;
    kept.push_back(unify(cp, cfg));
  }
  if (cfg.collapse_whitespace) {
    kept = collapse(kept);
  }
  return utf8_encode(kept);
}

std::vector<std::string> word_tokens(std::string_view text) {
  std::vector<std::string> out;
  std::u32string word;
  for (char32_t cp : utf8_decode(text)) {
    if (is_unicode_whitespace(cp)) {
      if (!word.empty()) {
        out.push_back(utf8_encode(word));
        word.clear();
      }
    } else {
      word.push_back(cp);
    }
  }
  if (!word.empty()) {
    out.push_back(utf8_encode(word));
  }
  return out;
}

std::size_t word_count(std::string_view text) {
  std::size_t count = 0;
  bool in_word = false;
  for (char32_t cp : utf8_decode(text)) {
    const bool ws = is_unicode_whitespace(cp);
    if (!ws && !in_word) ++count;
    in_word = !ws;
  }
  return count;
}

std::u32string char_sequence(std::string_view text) { return collapse(utf8_decode(text)); }

std::vector<std::string> char_tokens(std::string_view text) {
  std::vector<std::string> out;
  for (char32_t cp : char_sequence(text)) {
    out.push_back(utf8_encode(std::u32string_view(&cp, 1)));
  }
  return out;
}

}  // namespace plf
