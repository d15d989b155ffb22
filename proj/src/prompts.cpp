#include "cultureval/prompts.hpp"

#include <algorithm>
#include <sstream>

#include <json.hpp>

namespace cultureval::prompts {

using nlohmann::json;

namespace {

int count_occurrences(std::string_view text, std::string_view needle) {
  int n = 0;
  std::size_t pos = 0;
  while ((pos = text.find(needle, pos)) != std::string_view::npos) {
    ++n;
    pos += needle.size();
  }
  return n;
}

/// Placeholder grammar is exactly {country} / {name}; any other {...} token
/// in a template is an authoring mistake.
void check_placeholders(const TemplateSet& t, std::size_t line_no) {
  const int n_country = count_occurrences(t.template_text, "{country}");
  const int n_name = count_occurrences(t.template_text, "{name}");
  int other = 0;
  std::size_t pos = 0;
  while ((pos = t.template_text.find('{', pos)) != std::string::npos) {
    ++other;
    ++pos;
  }
  other -= n_country + n_name;

  auto fail = [&](const std::string& what) {
    throw ParseError("line " + std::to_string(line_no) + ": " + what);
  };
  if (other != 0) fail("unknown placeholder; only {country} and {name} are allowed");
  switch (t.condition) {
    case Condition::neutral:
      if (n_country + n_name != 0) fail("neutral template must not contain a placeholder");
      break;
    case Condition::explicit_country:
      if (n_country != 1 || n_name != 0) fail("explicit template must contain exactly one {country}");
      break;
    case Condition::implicit_name:
      if (n_name != 1 || n_country != 0) fail("implicit template must contain exactly one {name}");
      break;
  }
}

std::vector<std::pair<std::string, std::string>> parse_suffix_rules(std::string_view cell,
                                                                    std::size_t line_no) {
  std::vector<std::pair<std::string, std::string>> rules;
  if (trim(cell).empty()) return rules;
  for (const std::string& pair : split(cell, '|')) {
    const std::size_t eq = pair.find('=');
    if (eq == std::string::npos || eq == 0)
      throw ParseError("line " + std::to_string(line_no) +
                       ": suffix rule must be model-prefix=suffix");
    rules.emplace_back(std::string(trim(pair.substr(0, eq))), std::string(pair.substr(eq + 1)));
  }
  return rules;
}

}  // namespace

std::vector<TemplateSet> load_templates(const std::filesystem::path& path) {
  const std::string content = read_file(path);
  std::vector<TemplateSet> out;
  std::set<std::tuple<std::string, Topic, Condition>> seen;

  std::istringstream in(content);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty() || line[0] == '#') continue;

    const std::vector<std::string> cols = split(line, '\t');
    if (cols.size() < 4 || cols.size() > 5)
      throw ParseError("line " + std::to_string(line_no) +
                       ": expected 4 or 5 tab-separated fields, got " +
                       std::to_string(cols.size()));
    TemplateSet t;
    t.language = std::string(trim(cols[0]));
    if (t.language.empty())
      throw ParseError("line " + std::to_string(line_no) + ": empty language");
    try {
      t.topic = topic_from_string(trim(cols[1]));
      t.condition = condition_from_string(trim(cols[2]));
    } catch (const ConfigError& e) {
      throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
    }
    t.template_text = cols[3];
    if (trim(t.template_text).empty())
      throw ParseError("line " + std::to_string(line_no) + ": empty template text");
    if (cols.size() == 5) t.suffix_rules = parse_suffix_rules(cols[4], line_no);
    check_placeholders(t, line_no);

    if (!seen.insert({t.language, t.topic, t.condition}).second)
      throw ParseError("line " + std::to_string(line_no) + ": duplicate (" + t.language +
                       ", " + std::string(to_string(t.topic)) + ", " +
                       std::string(to_string(t.condition)) + ") template");
    out.push_back(std::move(t));
  }
  return out;
}

const CountryEntry* ContextCatalog::find_country(std::string_view id) const {
  for (const CountryEntry& c : countries)
    if (c.id == id) return &c;
  return nullptr;
}

const std::string& ContextCatalog::country_label(std::string_view id,
                                                 const std::string& language) const {
  const CountryEntry* c = find_country(id);
  if (!c) throw ConfigError("country not in catalog: " + std::string(id));
  auto it = c->labels.find(language);
  if (it == c->labels.end())
    throw ConfigError("missing " + language + " localization for country " + c->id);
  return it->second;
}

std::vector<const NameEntry*> ContextCatalog::names_for(const std::string& language) const {
  std::vector<const NameEntry*> out;
  for (const NameEntry& n : names)
    if (n.language == language) out.push_back(&n);
  return out;
}

bool ContextCatalog::is_native(const std::string& language, const std::string& country_id) const {
  auto it = native.find(language);
  if (it == native.end()) return false;
  return std::find(it->second.begin(), it->second.end(), country_id) != it->second.end();
}

ContextCatalog load_catalog(const std::filesystem::path& path) {
  json doc = json::parse(read_file(path), nullptr, true, true);
  ContextCatalog cat;
  try {
    for (const auto& l : doc.at("languages")) cat.languages.push_back(l.get<std::string>());
    for (const auto& t : doc.at("topics")) cat.topics.push_back(topic_from_string(t.get<std::string>()));
    for (const auto& c : doc.at("countries")) {
      CountryEntry e;
      e.id = c.at("id").get<std::string>();
      e.qid = c.value("qid", "");
      for (auto it = c.at("labels").begin(); it != c.at("labels").end(); ++it)
        e.labels[it.key()] = it.value().get<std::string>();
      cat.countries.push_back(std::move(e));
    }
    if (doc.contains("names")) {
      for (const auto& n : doc.at("names")) {
        NameEntry e;
        e.language = n.at("language").get<std::string>();
        e.country_id = n.at("country").get<std::string>();
        for (const auto& name : n.at("names")) e.names.push_back(name.get<std::string>());
        cat.names.push_back(std::move(e));
      }
    }
    if (doc.contains("native")) {
      for (auto it = doc.at("native").begin(); it != doc.at("native").end(); ++it) {
        std::vector<std::string> ids;
        for (const auto& v : it.value()) ids.push_back(v.get<std::string>());
        cat.native[it.key()] = std::move(ids);
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError("catalog " + path.string() + ": " + e.what());
  }
  for (const NameEntry& n : cat.names)
    if (!cat.find_country(n.country_id))
      throw ConfigError("catalog names reference unknown country " + n.country_id);
  return cat;
}

namespace {

std::string apply_suffix(const TemplateSet& t, const std::string& model_id, std::string text) {
  for (const auto& [prefix, suffix] : t.suffix_rules) {
    if (starts_with_fold(model_id, prefix)) {
      if (!suffix.empty()) {
        text += ' ';
        text += suffix;
      }
      break;
    }
  }
  return text;
}

PromptSpec make_spec(const TemplateSet& t, const std::string& model_id,
                     const std::string& country_id, const std::string& name,
                     std::string final_text) {
  PromptSpec s;
  s.language = t.language;
  s.topic = t.topic;
  s.condition = t.condition;
  s.context_country = country_id;
  s.context_name = name;
  s.model_id = model_id;
  s.final_text = std::move(final_text);
  const std::string context = s.condition == Condition::implicit_name ? s.context_name
                                                                      : s.context_country;
  s.prompt_id = hash_hex(s.language + "\x1f" + std::string(to_string(s.topic)) + "\x1f" +
                         std::string(to_string(s.condition)) + "\x1f" + context + "\x1f" +
                         s.model_id + "\x1f" + s.final_text);
  return s;
}

}  // namespace

std::vector<PromptSpec> instantiate(const std::vector<TemplateSet>& templates,
                                    const ContextCatalog& catalog,
                                    const std::vector<std::string>& models,
                                    const ForgeFilter& filter) {
  auto selected = [&](const TemplateSet& t) {
    if (!filter.languages.empty() && !filter.languages.count(t.language)) return false;
    if (!filter.topics.empty() && !filter.topics.count(t.topic)) return false;
    if (!filter.conditions.empty() && !filter.conditions.count(t.condition)) return false;
    return true;
  };

  // A filter that names cells with no template is a caller mistake, not an
  // empty result.
  if (!filter.languages.empty() || !filter.topics.empty() || !filter.conditions.empty()) {
    const auto langs = !filter.languages.empty()
                           ? std::vector<std::string>(filter.languages.begin(), filter.languages.end())
                           : catalog.languages;
    std::vector<Topic> topics(filter.topics.begin(), filter.topics.end());
    if (topics.empty()) topics = catalog.topics;
    std::vector<Condition> conds(filter.conditions.begin(), filter.conditions.end());
    if (conds.empty()) conds.assign(kAllConditions.begin(), kAllConditions.end());
    for (const std::string& l : langs)
      for (Topic tp : topics)
        for (Condition cd : conds) {
          const bool found = std::any_of(templates.begin(), templates.end(), [&](const auto& t) {
            return t.language == l && t.topic == tp && t.condition == cd;
          });
          if (!found)
            throw ConfigError("no template for requested cell (" + l + ", " +
                              std::string(to_string(tp)) + ", " + std::string(to_string(cd)) + ")");
        }
  }

  std::vector<PromptSpec> out;
  for (const std::string& model : models) {
    for (const TemplateSet& t : templates) {
      if (!selected(t)) continue;
      switch (t.condition) {
        case Condition::neutral: {
          out.push_back(make_spec(t, model, "", "", apply_suffix(t, model, t.template_text)));
          break;
        }
        case Condition::explicit_country: {
          for (const CountryEntry& c : catalog.countries) {
            const std::string& label = catalog.country_label(c.id, t.language);
            std::string text = replace_all(t.template_text, "{country}", label);
            out.push_back(make_spec(t, model, c.id, "", apply_suffix(t, model, std::move(text))));
          }
          break;
        }
        case Condition::implicit_name: {
          for (const NameEntry* entry : catalog.names_for(t.language)) {
            for (const std::string& name : entry->names) {
              std::string text = replace_all(t.template_text, "{name}", name);
              out.push_back(
                  make_spec(t, model, entry->country_id, name, apply_suffix(t, model, std::move(text))));
            }
          }
          break;
        }
      }
    }
  }
  return out;
}

std::string context_key(const PromptSpec& spec) {
  return spec.condition == Condition::implicit_name ? spec.context_name : spec.context_country;
}

std::string prompt_spec_to_json(const PromptSpec& spec) {
  json j;
  j["prompt_id"] = spec.prompt_id;
  j["language"] = spec.language;
  j["topic"] = std::string(to_string(spec.topic));
  j["condition"] = std::string(to_string(spec.condition));
  j["context_country"] = spec.context_country;
  j["context_name"] = spec.context_name;
  j["model_id"] = spec.model_id;
  j["final_text"] = spec.final_text;
  return j.dump();
}

PromptSpec prompt_spec_from_json(const std::string& line) {
  json j = json::parse(line);
  PromptSpec s;
  s.prompt_id = j.at("prompt_id").get<std::string>();
  s.language = j.at("language").get<std::string>();
  s.topic = topic_from_string(j.at("topic").get<std::string>());
  s.condition = condition_from_string(j.at("condition").get<std::string>());
  s.context_country = j.value("context_country", "");
  s.context_name = j.value("context_name", "");
  s.model_id = j.at("model_id").get<std::string>();
  s.final_text = j.at("final_text").get<std::string>();
  return s;
}

}  // namespace cultureval::prompts
