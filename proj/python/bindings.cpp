#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "cultureval/extraction.hpp"
#include "cultureval/gateway.hpp"
#include "cultureval/metrics.hpp"
#include "cultureval/pipeline.hpp"
#include "cultureval/prompts.hpp"
#include "cultureval/script.hpp"
#include "cultureval/wikidata.hpp"

namespace py = pybind11;
using namespace cultureval;

namespace {

py::dict spec_to_dict(const prompts::PromptSpec& s) {
  py::dict d;
  d["prompt_id"] = s.prompt_id;
  d["language"] = s.language;
  d["topic"] = std::string(to_string(s.topic));
  d["condition"] = std::string(to_string(s.condition));
  d["context_country"] = s.context_country;
  d["context_name"] = s.context_name;
  d["model_id"] = s.model_id;
  d["final_text"] = s.final_text;
  return d;
}

metrics::EntitySet set_from_qids(const std::vector<std::string>& qids) {
  metrics::EntitySet set;
  for (const std::string& q : qids) {
    metrics::EntityMember m;
    m.surface = q;
    m.qid = q;
    m.granularity = GranularityClass::unscored;
    set.add_member(m);
  }
  return set;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "cultureval core: prompt forging, extraction parsing, wikidata linking, metrics";
  m.attr("__version__") = std::string(pipeline::kToolVersion);

  m.def(
      "instantiate_prompts",
      [](const std::filesystem::path& templates, const std::filesystem::path& catalog,
         const std::vector<std::string>& models, const std::vector<std::string>& languages,
         const std::vector<std::string>& topics, const std::vector<std::string>& conditions) {
        const auto tset = prompts::load_templates(templates);
        const auto cat = prompts::load_catalog(catalog);
        prompts::ForgeFilter filter;
        filter.languages.insert(languages.begin(), languages.end());
        for (const auto& t : topics) filter.topics.insert(topic_from_string(t));
        for (const auto& c : conditions) filter.conditions.insert(condition_from_string(c));
        py::list out;
        for (const auto& s : prompts::instantiate(tset, cat, models, filter))
          out.append(spec_to_dict(s));
        return out;
      },
      py::arg("templates"), py::arg("catalog"), py::arg("models"),
      py::arg("languages") = std::vector<std::string>{},
      py::arg("topics") = std::vector<std::string>{},
      py::arg("conditions") = std::vector<std::string>{},
      "Instantiate the prompt cross-product from a template file and catalog.");

  m.def(
      "consensus",
      [](const std::vector<std::string>& a, const std::vector<std::string>& b) -> py::object {
        metrics::EntitySet sa = set_from_qids(a);
        metrics::EntitySet sb = set_from_qids(b);
        sb.key.language = sa.key.language + "-other";
        const std::optional<double> v = metrics::consensus(sa, sb);
        return v ? py::cast(*v) : py::none();
      },
      py::arg("qids_a"), py::arg("qids_b"),
      "Jaccard consensus between two QID sets; None when both are empty.");

  m.def(
      "diversity",
      [](const std::vector<std::string>& qids) { return metrics::diversity(set_from_qids(qids)); },
      py::arg("qids"), "Count of distinct QIDs.");

  m.def(
      "granularity",
      [](const std::vector<std::string>& classes) -> py::object {
        metrics::EntitySet set;
        int i = 0;
        for (const std::string& c : classes) {
          metrics::EntityMember member;
          member.surface = "m" + std::to_string(i);
          member.qid = "Q" + std::to_string(1000 + i);
          member.granularity = granularity_from_string(c);
          set.add_member(member);
          ++i;
        }
        const std::optional<double> v = metrics::granularity(set);
        return v ? py::cast(*v) : py::none();
      },
      py::arg("classes"),
      "Mean binary score over granularity classes (specific/general/unscored).");

  m.def(
      "build_extraction_prompt",
      [](const std::filesystem::path& schemas, const std::string& topic,
         const std::string& response_text) {
        const auto all = extraction::load_schemas(schemas);
        return extraction::build_extraction_prompt(all.at(topic_from_string(topic)), response_text);
      },
      py::arg("schemas"), py::arg("topic"), py::arg("response_text"));

  m.def(
      "parse_extraction_output",
      [](const std::filesystem::path& schemas, const std::string& topic, const std::string& raw) {
        const auto all = extraction::load_schemas(schemas);
        const extraction::ParseResult r =
            extraction::parse_extraction_output(raw, all.at(topic_from_string(topic)));
        py::dict d;
        py::list entities;
        for (const auto& e : r.entities) {
          py::dict ent;
          ent["surface"] = e.surface;
          ent["type"] = e.type_label;
          ent["granularity"] = std::string(to_string(e.granularity));
          entities.append(ent);
        }
        d["entities"] = entities;
        d["pre_dedup_count"] = r.pre_dedup_count;
        d["dropped_unknown_types"] = r.dropped_unknown_types;
        d["parse_failed"] = r.parse_failed;
        return d;
      },
      py::arg("schemas"), py::arg("topic"), py::arg("raw"),
      "Parse extractor output; never raises on malformed input.");

  m.def(
      "detect_script",
      [](const std::string& text) {
        return std::string(script::to_string(script::dominant_script(text)));
      },
      py::arg("text"));

  m.def("detect_language", &gateway::detect_language, py::arg("text"));

  m.def(
      "resolve_surface",
      [](const std::string& surface, const std::string& language, const std::string& topic,
         const std::filesystem::path& cache_dir, const std::filesystem::path& roots_path,
         bool offline) {
        wikidata::WikidataClient::Options opts;
        opts.cache_dir = cache_dir;
        opts.offline = offline;
        wikidata::WikidataClient client(opts);
        const wikidata::TopicRootConfig roots = wikidata::load_roots(roots_path);
        std::set<wikidata::SurfaceKey> keys{{surface, language, topic_from_string(topic)}};
        const wikidata::LinkResult result = wikidata::link_all(keys, roots, {"en"}, client);
        py::dict d;
        const wikidata::LinkedEntity& e = result.table.at(0);
        d["surface"] = e.surface;
        d["status"] = std::string(to_string(e.status));
        d["qid"] = e.qid;
        d["origin_countries"] = e.origin_countries;
        d["labels"] = e.labels;
        if (e.winning_path) d["path_length"] = e.winning_path->steps.size();
        return d;
      },
      py::arg("surface"), py::arg("language"), py::arg("topic"), py::arg("cache_dir"),
      py::arg("roots"), py::arg("offline") = true,
      "Link one surface against a snapshot cache; offline by default.");
}
