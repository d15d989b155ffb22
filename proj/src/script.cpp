#include "cultureval/script.hpp"

#include <array>
#include <map>

#include "cultureval/common.hpp"

namespace cultureval::script {

std::string_view to_string(ScriptClass s) {
  switch (s) {
    case ScriptClass::unknown: return "unknown";
    case ScriptClass::latin: return "latin";
    case ScriptClass::han: return "han";
    case ScriptClass::kana: return "kana";
    case ScriptClass::hangul: return "hangul";
    case ScriptClass::arabic: return "arabic";
    case ScriptClass::devanagari: return "devanagari";
    case ScriptClass::thai: return "thai";
    case ScriptClass::cyrillic: return "cyrillic";
    case ScriptClass::greek: return "greek";
    case ScriptClass::hebrew: return "hebrew";
  }
  return "unknown";
}

ScriptClass classify_codepoint(char32_t cp) {
  auto in = [cp](char32_t lo, char32_t hi) { return cp >= lo && cp <= hi; };
  if (in(0x41, 0x5A) || in(0x61, 0x7A) || in(0xC0, 0x24F) || in(0x1E00, 0x1EFF))
    return ScriptClass::latin;
  if (in(0x4E00, 0x9FFF) || in(0x3400, 0x4DBF) || in(0xF900, 0xFAFF))
    return ScriptClass::han;
  if (in(0x3040, 0x309F) || in(0x30A0, 0x30FF) || in(0x31F0, 0x31FF))
    return ScriptClass::kana;
  if (in(0xAC00, 0xD7AF) || in(0x1100, 0x11FF) || in(0x3130, 0x318F))
    return ScriptClass::hangul;
  if (in(0x600, 0x6FF) || in(0x750, 0x77F) || in(0x8A0, 0x8FF) || in(0xFB50, 0xFDFF))
    return ScriptClass::arabic;
  if (in(0x900, 0x97F)) return ScriptClass::devanagari;
  if (in(0xE00, 0xE7F)) return ScriptClass::thai;
  if (in(0x400, 0x4FF) || in(0x500, 0x52F)) return ScriptClass::cyrillic;
  if (in(0x370, 0x3FF)) return ScriptClass::greek;
  if (in(0x590, 0x5FF)) return ScriptClass::hebrew;
  return ScriptClass::unknown;
}

ScriptClass dominant_script(std::string_view text) {
  std::array<std::size_t, 11> counts{};
  std::size_t i = 0;
  while (i < text.size()) {
    const ScriptClass cls = classify_codepoint(utf8_next(text, i));
    counts[static_cast<std::size_t>(cls)]++;
  }
  // Kana decides Japanese even when kanji dominate the character count.
  if (counts[static_cast<std::size_t>(ScriptClass::kana)] > 0 &&
      counts[static_cast<std::size_t>(ScriptClass::han)] > 0)
    return ScriptClass::kana;

  ScriptClass best = ScriptClass::unknown;
  std::size_t best_count = 0;
  for (std::size_t k = 1; k < counts.size(); ++k) {
    if (counts[k] > best_count) {
      best_count = counts[k];
      best = static_cast<ScriptClass>(k);
    }
  }
  return best_count == 0 ? ScriptClass::unknown : best;
}

bool script_matches_language(ScriptClass cls, std::string_view language) {
  std::string lang = to_lower_ascii(language);
  const std::size_t dash = lang.find('-');
  const std::string primary = dash == std::string::npos ? lang : lang.substr(0, dash);

  static const std::map<std::string, std::array<ScriptClass, 2>> expected = {
      {"zh", {ScriptClass::han, ScriptClass::unknown}},
      {"ja", {ScriptClass::kana, ScriptClass::han}},
      {"ko", {ScriptClass::hangul, ScriptClass::unknown}},
      {"ar", {ScriptClass::arabic, ScriptClass::unknown}},
      {"fa", {ScriptClass::arabic, ScriptClass::unknown}},
      {"hi", {ScriptClass::devanagari, ScriptClass::unknown}},
      {"th", {ScriptClass::thai, ScriptClass::unknown}},
      {"ru", {ScriptClass::cyrillic, ScriptClass::unknown}},
      {"el", {ScriptClass::greek, ScriptClass::unknown}},
      {"he", {ScriptClass::hebrew, ScriptClass::unknown}},
  };
  auto it = expected.find(primary);
  if (it == expected.end()) return cls == ScriptClass::latin;
  return cls == it->second[0] || (it->second[1] != ScriptClass::unknown && cls == it->second[1]);
}

}  // namespace cultureval::script
