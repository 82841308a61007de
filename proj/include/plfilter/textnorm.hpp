#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace plf {

/// Text normalization applied before WER/CER and pWER.
///
/// Steps run in a fixed order: diacritic removal, punctuation removal,
/// alef/ya unification, whitespace collapsing. Defaults give the
/// "normalized, diacritics removed" evaluation mode; `orthographic()` keeps
/// the raw text and only collapses whitespace so word boundaries stay stable.
struct NormConfig {
  bool remove_diacritics = true;
  bool remove_punctuation = true;
  bool collapse_whitespace = true;
  bool unify_alef_variants = false;
  bool unify_ya_alefmaqsura = false;

  static NormConfig defaults() { return {}; }
  static NormConfig orthographic() { return {false, false, true, false, false}; }
  static NormConfig identity() { return {false, false, false, false, false}; }

  bool operator==(const NormConfig&) const = default;
};

void to_json(nlohmann::json& j, const NormConfig& cfg);
void from_json(const nlohmann::json& j, NormConfig& cfg);

// Harakat, tanween, shadda, sukun (U+064B..U+065F), dagger alef and tatweel.
bool is_arabic_diacritic(char32_t cp);
bool is_unicode_whitespace(char32_t cp);
// General category P* plus the Arabic comma, semicolon and question mark.
bool is_punctuation(char32_t cp);

/// Decodes UTF-8; malformed sequences become U+FFFD.
std::u32string utf8_decode(std::string_view text);
std::string utf8_encode(std::u32string_view text);

std::string normalize(std::string_view text, const NormConfig& cfg);

/// Splits on runs of Unicode whitespace. Never yields empty tokens.
std::vector<std::string> word_tokens(std::string_view text);
std::size_t word_count(std::string_view text);

/// Unicode scalar values after collapsing whitespace runs to one space and
/// trimming. Internal spaces are kept as tokens.
std::vector<std::string> char_tokens(std::string_view text);
std::u32string char_sequence(std::string_view text);

}  // namespace plf
