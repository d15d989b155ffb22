#include "cultureval/scoring.hpp"

#include <algorithm>
#include <sstream>

#include <json.hpp>

namespace cultureval::scoring {

using metrics::EntitySet;
using metrics::EntitySetKey;
using metrics::MetricReport;

std::map<EntitySetKey, EntitySet> build_entity_sets(
    const std::vector<prompts::PromptSpec>& specs,
    const std::vector<extraction::ExtractionRecord>& extractions,
    const std::vector<wikidata::LinkedEntity>& linked,
    const std::map<Topic, extraction::ExtractionSchema>& schemas) {
  std::map<std::string, const prompts::PromptSpec*> by_prompt;
  for (const prompts::PromptSpec& s : specs) by_prompt[s.prompt_id] = &s;

  std::map<std::tuple<std::string, std::string, Topic>, const wikidata::LinkedEntity*> links;
  for (const wikidata::LinkedEntity& e : linked)
    links[{e.surface, e.language, e.topic}] = &e;

  std::map<EntitySetKey, EntitySet> cells;
  std::map<EntitySetKey, std::set<std::pair<std::string, int>>> responses_seen;

  for (const extraction::ExtractionRecord& rec : extractions) {
    auto spec_it = by_prompt.find(rec.ref.prompt_id);
    if (spec_it == by_prompt.end()) continue;  // stale record from another run
    const prompts::PromptSpec& spec = *spec_it->second;

    EntitySetKey key;
    key.model_id = spec.model_id;
    key.language = spec.language;
    key.topic = spec.topic;
    key.condition = spec.condition;
    key.context_country = spec.context_country;

    EntitySet& cell = cells[key];
    cell.key = key;
    if (responses_seen[key].emplace(rec.ref.prompt_id, rec.ref.sample_index).second)
      ++cell.n_responses;
    cell.pre_dedup_count += rec.pre_dedup_count;

    auto schema_it = schemas.find(spec.topic);
    for (const auto& [surface, type_label] : rec.entities) {
      metrics::EntityMember member;
      member.surface = surface;
      member.granularity = schema_it != schemas.end()
                               ? schema_it->second.classify(type_label)
                               : GranularityClass::unscored;
      auto link_it = links.find({surface, spec.language, spec.topic});
      if (link_it != links.end() && link_it->second->status == wikidata::LinkStatus::resolved) {
        member.qid = link_it->second->qid;
        member.origins = link_it->second->origin_countries;
      }
      cell.add_member(member);
    }
  }
  return cells;
}

namespace {

std::optional<double> mean_of(const std::vector<double>& values) {
  if (values.empty()) return std::nullopt;
  return metrics::summarize(values).mean;
}

}  // namespace

AggregateOutputs aggregate(const std::map<EntitySetKey, EntitySet>& cells,
                           const prompts::ContextCatalog& catalog,
                           const std::vector<std::string>& models,
                           const std::vector<std::string>& languages,
                           const std::vector<Topic>& topics) {
  AggregateOutputs out;

  std::vector<std::pair<std::string, std::string>> targets;
  for (const prompts::CountryEntry& c : catalog.countries) targets.emplace_back(c.id, c.qid);

  for (const auto& [key, set] : cells) out.cell_reports.push_back(metrics::evaluate(set, targets));

  auto find_cell = [&](const std::string& model, const std::string& lang, Topic topic,
                       Condition cond, const std::string& country) -> const EntitySet* {
    auto it = cells.find(EntitySetKey{model, lang, topic, cond, country});
    return it == cells.end() ? nullptr : &it->second;
  };

  // Per-model summaries over present cells (undefined cells excluded).
  for (const std::string& model : models) {
    std::vector<double> consensus_values, diversity_values, granularity_values;
    for (Topic topic : topics) {
      const metrics::ConsensusMatrix matrix =
          metrics::consensus_matrix(cells, model, topic, languages);
      out.consensus[model][topic] = matrix;
      for (std::size_t i = 0; i < languages.size(); ++i)
        for (std::size_t j = i + 1; j < languages.size(); ++j)
          if (matrix.values[i][j]) consensus_values.push_back(*matrix.values[i][j]);
    }
    for (const auto& [key, set] : cells) {
      if (key.model_id != model) continue;
      diversity_values.push_back(static_cast<double>(metrics::diversity(set)));
      const std::optional<double> g = metrics::granularity(set);
      if (g) granularity_values.push_back(*g);
    }
    out.model_summaries.push_back({model, "consensus", metrics::summarize(consensus_values)});
    out.model_summaries.push_back({model, "diversity", metrics::summarize(diversity_values)});
    out.model_summaries.push_back({model, "granularity", metrics::summarize(granularity_values)});
  }

  // Granularity radar: one grid per language, countries x models, averaged
  // over topics (explicit condition).
  for (const std::string& lang : languages) {
    grid::Grid g;
    for (const prompts::CountryEntry& c : catalog.countries) g.row_labels.push_back(c.id);
    g.col_labels = models;
    bool any = false;
    for (const prompts::CountryEntry& c : catalog.countries) {
      std::vector<std::optional<double>> row;
      for (const std::string& model : models) {
        std::vector<double> values;
        for (Topic topic : topics) {
          const EntitySet* cell = find_cell(model, lang, topic, Condition::explicit_country, c.id);
          if (!cell) continue;
          const std::optional<double> v = metrics::granularity(*cell);
          if (v) values.push_back(*v);
        }
        const std::optional<double> m = mean_of(values);
        if (m) any = true;
        row.push_back(m);
      }
      g.values.push_back(std::move(row));
    }
    if (any) out.radar[lang] = std::move(g);
  }

  // Culture specificity matrices: countries x languages per model, neutral
  // and explicit-minus-neutral, averaged over topics.
  for (const std::string& model : models) {
    grid::Grid neutral, delta;
    for (const prompts::CountryEntry& c : catalog.countries) {
      neutral.row_labels.push_back(c.id);
      delta.row_labels.push_back(c.id);
    }
    neutral.col_labels = languages;
    delta.col_labels = languages;
    bool any_neutral = false, any_delta = false;
    for (const prompts::CountryEntry& c : catalog.countries) {
      std::vector<std::optional<double>> neutral_row, delta_row;
      for (const std::string& lang : languages) {
        std::vector<double> n_values, d_values;
        for (Topic topic : topics) {
          const EntitySet* n_cell = find_cell(model, lang, topic, Condition::neutral, "");
          const EntitySet* e_cell = find_cell(model, lang, topic, Condition::explicit_country, c.id);
          if (n_cell) {
            const std::optional<double> nv = metrics::specificity(*n_cell, c.qid);
            if (nv) n_values.push_back(*nv);
          }
          if (n_cell && e_cell) {
            const std::optional<double> gain = metrics::specificity_gain(*e_cell, *n_cell, c.qid);
            if (gain) d_values.push_back(*gain);
          }
        }
        const std::optional<double> nm = mean_of(n_values);
        const std::optional<double> dm = mean_of(d_values);
        if (nm) any_neutral = true;
        if (dm) any_delta = true;
        neutral_row.push_back(nm);
        delta_row.push_back(dm);
      }
      neutral.values.push_back(std::move(neutral_row));
      delta.values.push_back(std::move(delta_row));
    }
    if (any_neutral) out.specificity_neutral[model] = std::move(neutral);
    if (any_delta) out.specificity_delta[model] = std::move(delta);
  }

  // Native vs non-native diversity over explicit cells.
  out.native_diversity.col_labels = {"native_mean", "non_native_mean", "native_n", "non_native_n"};
  for (const std::string& model : models) {
    std::vector<double> native_values, other_values;
    for (const auto& [key, set] : cells) {
      if (key.model_id != model || key.condition != Condition::explicit_country) continue;
      const double d = static_cast<double>(metrics::diversity(set));
      if (catalog.is_native(key.language, key.context_country))
        native_values.push_back(d);
      else
        other_values.push_back(d);
    }
    out.native_diversity.row_labels.push_back(model);
    out.native_diversity.values.push_back(
        {mean_of(native_values), mean_of(other_values),
         std::optional<double>(static_cast<double>(native_values.size())),
         std::optional<double>(static_cast<double>(other_values.size()))});
  }

  return out;
}

// ---------------------------------------------------------------------------
// Report files

namespace {

std::string opt_str(const std::optional<double>& v) { return v ? format_double(*v) : "NA"; }

}  // namespace

std::string cells_to_csv(const std::vector<MetricReport>& reports) {
  std::ostringstream out;
  out << "model,language,topic,condition,context_country,n_responses,members,resolved,"
         "pre_dedup_count,granularity,diversity,unresolved_fraction\n";
  for (const MetricReport& r : reports) {
    out << r.key.model_id << ',' << r.key.language << ',' << to_string(r.key.topic) << ','
        << to_string(r.key.condition) << ',' << r.key.context_country << ',' << r.n_responses
        << ',' << r.members << ',' << r.resolved << ',' << r.pre_dedup_count << ','
        << opt_str(r.granularity) << ',' << r.diversity << ','
        << format_double(r.unresolved_fraction) << '\n';
  }
  return out.str();
}

std::string specificity_to_csv(const std::vector<MetricReport>& reports) {
  std::ostringstream out;
  out << "model,language,topic,condition,context_country,target_country,specificity\n";
  for (const MetricReport& r : reports)
    for (const auto& [country, value] : r.specificity)
      out << r.key.model_id << ',' << r.key.language << ',' << to_string(r.key.topic) << ','
          << to_string(r.key.condition) << ',' << r.key.context_country << ',' << country << ','
          << opt_str(value) << '\n';
  return out.str();
}

std::string model_summary_to_csv(const std::vector<ModelSummaryRow>& rows) {
  std::ostringstream out;
  out << "model,metric,mean,variance,cells\n";
  for (const ModelSummaryRow& r : rows)
    out << r.model_id << ',' << r.metric << ',' << format_double(r.summary.mean) << ','
        << format_double(r.summary.variance) << ',' << r.summary.n << '\n';
  return out.str();
}

std::string diagnostics_to_json(const std::map<Topic, wikidata::TopicDiagnostics>& diagnostics) {
  nlohmann::json j;
  for (const auto& [topic, d] : diagnostics) {
    nlohmann::json t;
    t["surfaces"] = d.surfaces;
    t["resolved"] = d.resolved;
    t["unresolved"] = d.unresolved;
    t["unique_qids"] = d.unique_qids;
    t["fetch_failures"] = d.fetch_failures;
    t["defined"] = d.defined;
    if (d.defined) {
      t["missing_qid_proportion"] = d.missing_qid_proportion;
      t["resolve_rate"] = d.resolve_rate;
    }
    j[std::string(to_string(topic))] = std::move(t);
  }
  return j.dump(2) + "\n";
}

std::vector<PlotArtifact> emit_plots(const AggregateOutputs& outputs,
                                     const std::set<std::string>& kinds,
                                     std::vector<std::string>* warnings) {
  std::vector<PlotArtifact> artifacts;
  auto warn = [&](const std::string& msg) {
    if (warnings) warnings->push_back(msg);
  };

  if (kinds.count("heatmap_matrix")) {
    bool any = false;
    for (const auto& [model, per_topic] : outputs.consensus) {
      for (const auto& [topic, matrix] : per_topic) {
        grid::Grid g;
        g.row_labels = matrix.languages;
        g.col_labels = matrix.languages;
        g.values = matrix.values;
        const std::string name =
            "consensus__" + sanitize_filename(model) + "__" + std::string(to_string(topic));
        artifacts.push_back(
            {"heatmap_matrix", name, g, grid::grid_to_svg_heatmap(g, "consensus " + model)});
        any = true;
      }
    }
    for (const auto& [model, g] : outputs.specificity_neutral) {
      const std::string name = "specificity_neutral__" + sanitize_filename(model);
      artifacts.push_back({"heatmap_matrix", name, g,
                           grid::grid_to_svg_heatmap(g, "specificity (neutral) " + model)});
      any = true;
    }
    for (const auto& [model, g] : outputs.specificity_delta) {
      const std::string name = "specificity_delta__" + sanitize_filename(model);
      artifacts.push_back({"heatmap_matrix", name, g,
                           grid::grid_to_svg_heatmap(g, "specificity gain " + model)});
      any = true;
    }
    if (!any) warn("heatmap_matrix: no consensus or specificity aggregates present");
  }

  if (kinds.count("radar_table")) {
    if (outputs.radar.empty()) {
      warn("radar_table: no granularity aggregates present");
    } else {
      for (const auto& [lang, g] : outputs.radar)
        artifacts.push_back({"radar_table", "granularity_radar__" + sanitize_filename(lang), g, ""});
    }
  }

  if (kinds.count("box_comparison")) {
    if (outputs.native_diversity.row_labels.empty()) {
      warn("box_comparison: no diversity aggregates present");
    } else {
      artifacts.push_back({"box_comparison", "diversity_native", outputs.native_diversity, ""});
    }
  }

  return artifacts;
}

}  // namespace cultureval::scoring
