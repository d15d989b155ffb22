#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "cultureval/types.hpp"

namespace cultureval::prompts {

/// One template row: a (language, topic, condition) cell plus optional
/// per-model answer-language suffixes (matched by model-id prefix).
struct TemplateSet {
  std::string language;
  Topic topic = Topic::food;
  Condition condition = Condition::neutral;
  std::string template_text;
  // Ordered (model-id prefix, suffix) pairs; first prefix match wins.
  std::vector<std::pair<std::string, std::string>> suffix_rules;
};

struct CountryEntry {
  std::string id;        // canonical short code, e.g. "US"
  std::string qid;       // Wikidata item used by the metrics stage
  std::map<std::string, std::string> labels;  // language -> localized name
};

struct NameEntry {
  std::string language;
  std::string country_id;  // the culture the names are typical for
  std::vector<std::string> names;
};

struct ContextCatalog {
  std::vector<std::string> languages;
  std::vector<Topic> topics;
  std::vector<CountryEntry> countries;
  std::vector<NameEntry> names;
  // language -> country ids natively tied to that language
  std::map<std::string, std::vector<std::string>> native;

  const CountryEntry* find_country(std::string_view id) const;
  /// Localized label; throws ConfigError when the localization is missing.
  const std::string& country_label(std::string_view id, const std::string& language) const;
  std::vector<const NameEntry*> names_for(const std::string& language) const;
  bool is_native(const std::string& language, const std::string& country_id) const;
};

struct PromptSpec {
  std::string prompt_id;  // stable content hash
  std::string language;
  Topic topic = Topic::food;
  Condition condition = Condition::neutral;
  std::string context_country;  // country id, empty unless tied to one
  std::string context_name;     // person name, empty unless implicit
  std::string model_id;
  std::string final_text;
};

/// Optional filters applied before instantiation. Empty set = no filter.
/// When a filter names a value, every filtered (language, topic, condition)
/// cell must have a template, otherwise instantiation fails.
struct ForgeFilter {
  std::set<std::string> languages;
  std::set<Topic> topics;
  std::set<Condition> conditions;
};

/// Parses the tab-separated template file. Rejects the whole file on any
/// malformed row; messages carry the 1-based line number.
std::vector<TemplateSet> load_templates(const std::filesystem::path& path);

ContextCatalog load_catalog(const std::filesystem::path& path);

/// Emits one PromptSpec per (model, template, context) tuple: neutral rows
/// yield one prompt, explicit rows one per catalog country, implicit rows one
/// per catalog name for the row's language. Pure and deterministic.
std::vector<PromptSpec> instantiate(const std::vector<TemplateSet>& templates,
                                    const ContextCatalog& catalog,
                                    const std::vector<std::string>& models,
                                    const ForgeFilter& filter = {});

/// The context string that makes a prompt cell unique alongside
/// (language, topic, condition): country id, name, or "" for neutral.
std::string context_key(const PromptSpec& spec);

std::string prompt_spec_to_json(const PromptSpec& spec);
PromptSpec prompt_spec_from_json(const std::string& line);

}  // namespace cultureval::prompts
