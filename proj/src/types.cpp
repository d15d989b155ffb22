#include "cultureval/types.hpp"

namespace cultureval {

std::string_view to_string(Topic t) {
  switch (t) {
    case Topic::food: return "food";
    case Topic::beverage: return "beverage";
    case Topic::clothing: return "clothing";
    case Topic::book: return "book";
    case Topic::music: return "music";
    case Topic::transportation: return "transportation";
  }
  return "food";
}

Topic topic_from_string(std::string_view s) {
  for (Topic t : kAllTopics)
    if (to_string(t) == s) return t;
  throw ConfigError("unknown topic: " + std::string(s));
}

std::string_view to_string(Condition c) {
  switch (c) {
    case Condition::neutral: return "neutral";
    case Condition::explicit_country: return "explicit";
    case Condition::implicit_name: return "implicit";
  }
  return "neutral";
}

Condition condition_from_string(std::string_view s) {
  for (Condition c : kAllConditions)
    if (to_string(c) == s) return c;
  throw ConfigError("unknown condition: " + std::string(s));
}

std::string_view to_string(GranularityClass g) {
  switch (g) {
    case GranularityClass::specific: return "specific";
    case GranularityClass::general: return "general";
    case GranularityClass::unscored: return "unscored";
  }
  return "unscored";
}

GranularityClass granularity_from_string(std::string_view s) {
  if (s == "specific") return GranularityClass::specific;
  if (s == "general") return GranularityClass::general;
  if (s == "unscored") return GranularityClass::unscored;
  throw ConfigError("unknown granularity class: " + std::string(s));
}

}  // namespace cultureval
