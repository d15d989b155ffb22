#pragma once

#include <string>
#include <string_view>

namespace cultureval::script {

/// Unicode block classes the mismatch heuristic distinguishes.
enum class ScriptClass {
  unknown,
  latin,
  han,
  kana,
  hangul,
  arabic,
  devanagari,
  thai,
  cyrillic,
  greek,
  hebrew,
};

std::string_view to_string(ScriptClass s);

ScriptClass classify_codepoint(char32_t cp);

/// Majority script class over the letter codepoints of `text`; kana presence
/// wins over han so Japanese prose is not misread as Chinese.
ScriptClass dominant_script(std::string_view text);

/// True when `cls` is an acceptable script for prose in `language`
/// (BCP-47-style code; Japanese accepts han and kana, Persian/Arabic share
/// the arabic class, all latin-script languages share latin).
bool script_matches_language(ScriptClass cls, std::string_view language);

}  // namespace cultureval::script
