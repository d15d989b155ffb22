#pragma once

#include <array>
#include <string>
#include <string_view>

#include "cultureval/common.hpp"

namespace cultureval {

enum class Topic { food, beverage, clothing, book, music, transportation };

inline constexpr std::array<Topic, 6> kAllTopics = {
    Topic::food, Topic::beverage, Topic::clothing,
    Topic::book, Topic::music,    Topic::transportation};

std::string_view to_string(Topic t);
Topic topic_from_string(std::string_view s);

/// neutral: no cultural cue; explicit_country: a {country} slot;
/// implicit_name: a culturally typical person {name} slot.
enum class Condition { neutral, explicit_country, implicit_name };

inline constexpr std::array<Condition, 3> kAllConditions = {
    Condition::neutral, Condition::explicit_country, Condition::implicit_name};

std::string_view to_string(Condition c);
Condition condition_from_string(std::string_view s);

enum class GranularityClass { specific, general, unscored };

std::string_view to_string(GranularityClass g);
GranularityClass granularity_from_string(std::string_view s);

}  // namespace cultureval
