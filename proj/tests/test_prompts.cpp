#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "cultureval/prompts.hpp"

using namespace cultureval;
using namespace cultureval::prompts;

namespace {

const std::filesystem::path kData = std::filesystem::path(CULTUREVAL_SOURCE_DIR) / "data";

std::filesystem::path write_temp(const std::string& name, const std::string& content) {
  const auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
  return path;
}

ContextCatalog small_catalog() {
  ContextCatalog cat;
  cat.languages = {"en"};
  cat.topics = {Topic::food};
  CountryEntry us{"US", "Q30", {{"en", "United States"}}};
  CountryEntry cn{"CN", "Q148", {{"en", "China"}}};
  cat.countries = {us, cn};
  cat.names = {{"en", "US", {"Emily", "James"}}};
  cat.native = {{"en", {"US"}}};
  return cat;
}

}  // namespace

TEST_CASE("load_templates parses the three-condition food rows") {
  const auto path = write_temp(
      "tpl_ok.tsv",
      "en\tfood\tneutral\tWrite about a person having dinner.\n"
      "en\tfood\texplicit\tWrite about a person from {country} having dinner.\n"
      "en\tfood\timplicit\tWrite about {name} having dinner.\n");
  const auto t = load_templates(path);
  REQUIRE(t.size() == 3);
  CHECK(t[0].condition == Condition::neutral);
  CHECK(t[1].template_text.find("{country}") != std::string::npos);
  CHECK(t[2].condition == Condition::implicit_name);
}

TEST_CASE("load_templates identity and error cases") {
  CHECK(load_templates(write_temp("tpl_empty.tsv", "")).empty());

  // duplicate cell
  CHECK_THROWS_WITH_AS(
      load_templates(write_temp("tpl_dup.tsv",
                                "en\tfood\tneutral\tA sentence.\n"
                                "en\tfood\tneutral\tAnother sentence.\n")),
      doctest::Contains("line 2"), ParseError);

  // column count
  CHECK_THROWS_AS(load_templates(write_temp("tpl_cols.tsv", "en\tfood\tneutral\n")), ParseError);

  // placeholder grammar
  CHECK_THROWS_AS(
      load_templates(write_temp("tpl_ph1.tsv", "en\tfood\tneutral\tHas a {country} slot.\n")),
      ParseError);
  CHECK_THROWS_AS(
      load_templates(write_temp("tpl_ph2.tsv", "en\tfood\texplicit\tNo slot at all.\n")),
      ParseError);
  CHECK_THROWS_AS(
      load_templates(write_temp("tpl_ph3.tsv",
                                "en\tfood\texplicit\tTwo {country} slots {country}.\n")),
      ParseError);
  CHECK_THROWS_AS(
      load_templates(write_temp("tpl_ph4.tsv", "en\tfood\timplicit\tWrong {slot} kind.\n")),
      ParseError);

  // unknown topic
  CHECK_THROWS_AS(load_templates(write_temp("tpl_topic.tsv", "en\tsports\tneutral\tText.\n")),
                  ParseError);
}

TEST_CASE("suffix rules parse and apply by model-id prefix") {
  const auto path = write_temp(
      "tpl_sfx.tsv",
      "en\tfood\tneutral\tDinner text.\tmistral=Answer in English.|qwen=Answer in English.\n");
  const auto templates = load_templates(path);
  REQUIRE(templates.size() == 1);
  REQUIRE(templates[0].suffix_rules.size() == 2);

  const auto catalog = small_catalog();
  const auto qwen = instantiate(templates, catalog, {"Qwen/Qwen2.5-7B-Instruct"});
  REQUIRE(qwen.size() == 1);
  CHECK(qwen[0].final_text == "Dinner text. Answer in English.");

  const auto other = instantiate(templates, catalog, {"meta-llama/Llama-3.1-8B-Instruct"});
  CHECK(other[0].final_text == "Dinner text.");
}

TEST_CASE("instantiate minimal cross-product") {
  const auto path = write_temp("tpl_min.tsv", "en\tfood\tneutral\tOne dinner text.\n");
  const auto specs = instantiate(load_templates(path), small_catalog(), {"m1"});
  REQUIRE(specs.size() == 1);
  CHECK(specs[0].context_country.empty());
  CHECK(specs[0].context_name.empty());
  CHECK(specs[0].final_text == "One dinner text.");
}

TEST_CASE("instantiate is deterministic including prompt ids") {
  const auto templates = load_templates(kData / "templates.tsv");
  const auto catalog = load_catalog(kData / "catalog.json");
  const auto a = instantiate(templates, catalog, {"m1", "m2"});
  const auto b = instantiate(templates, catalog, {"m1", "m2"});
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].prompt_id == b[i].prompt_id);
    CHECK(a[i].final_text == b[i].final_text);
  }
}

TEST_CASE("placeholder exhaustion: final_text is the template with the slot filled") {
  const auto templates = load_templates(kData / "templates.tsv");
  const auto catalog = load_catalog(kData / "catalog.json");
  const auto specs = instantiate(templates, catalog, {"plain-model"});

  auto find_template = [&](const PromptSpec& s) -> const TemplateSet& {
    for (const TemplateSet& t : templates)
      if (t.language == s.language && t.topic == s.topic && t.condition == s.condition) return t;
    throw std::logic_error("template not found");
  };

  for (const PromptSpec& s : specs) {
    CHECK(s.final_text.find('{') == std::string::npos);
    const TemplateSet& t = find_template(s);
    std::string expected = t.template_text;
    if (s.condition == Condition::explicit_country)
      expected = replace_all(expected, "{country}", catalog.country_label(s.context_country, s.language));
    if (s.condition == Condition::implicit_name)
      expected = replace_all(expected, "{name}", s.context_name);
    // plain-model matches no suffix rule, so nothing else may change
    CHECK(s.final_text == expected);
  }
}

TEST_CASE("cross-product count matches the closed form") {
  const auto templates = load_templates(kData / "templates.tsv");
  const auto catalog = load_catalog(kData / "catalog.json");
  for (int n_models : {1, 2}) {
    std::vector<std::string> models;
    for (int i = 0; i < n_models; ++i) models.push_back("m" + std::to_string(i));
    const auto specs = instantiate(templates, catalog, models);

    std::size_t expected = 0;
    for (const TemplateSet& t : templates) {
      switch (t.condition) {
        case Condition::neutral: expected += 1; break;
        case Condition::explicit_country: expected += catalog.countries.size(); break;
        case Condition::implicit_name:
          for (const NameEntry* e : catalog.names_for(t.language)) expected += e->names.size();
          break;
      }
    }
    CHECK(specs.size() == expected * models.size());
  }
}

TEST_CASE("missing localization is an error") {
  const auto path = write_temp("tpl_loc.tsv", "de\tfood\texplicit\tEssen aus {country}.\n");
  const auto templates = load_templates(path);
  const auto catalog = small_catalog();  // has no German labels
  CHECK_THROWS_WITH_AS(instantiate(templates, catalog, {"m"}), doctest::Contains("localization"),
                       ConfigError);
}

TEST_CASE("filters reject cells without templates") {
  const auto path = write_temp("tpl_filter.tsv", "en\tfood\tneutral\tDinner text.\n");
  const auto templates = load_templates(path);
  const auto catalog = small_catalog();

  ForgeFilter ok;
  ok.languages = {"en"};
  ok.topics = {Topic::food};
  ok.conditions = {Condition::neutral};
  CHECK(instantiate(templates, catalog, {"m"}, ok).size() == 1);

  ForgeFilter missing;
  missing.languages = {"en"};
  missing.topics = {Topic::music};
  CHECK_THROWS_WITH_AS(instantiate(templates, catalog, {"m"}, missing),
                       doctest::Contains("no template"), ConfigError);
}

TEST_CASE("default catalog satisfies its coverage invariants") {
  const auto catalog = load_catalog(kData / "catalog.json");
  CHECK(catalog.languages.size() == 13);
  CHECK(catalog.countries.size() == 19);
  CHECK(catalog.topics.size() == 6);
  for (const CountryEntry& c : catalog.countries)
    for (const std::string& lang : catalog.languages)
      CHECK_NOTHROW(catalog.country_label(c.id, lang));
  std::size_t native_pairs = 0;
  for (const auto& [lang, ids] : catalog.native) native_pairs += ids.size();
  CHECK(native_pairs == 19);
}
