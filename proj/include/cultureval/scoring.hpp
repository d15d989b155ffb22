#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "cultureval/extraction.hpp"
#include "cultureval/grid.hpp"
#include "cultureval/metrics.hpp"
#include "cultureval/prompts.hpp"
#include "cultureval/wikidata.hpp"

namespace cultureval::scoring {

/// Joins extraction records with the linked-entity table into one EntitySet
/// per prompt cell (union over responses, set semantics).
std::map<metrics::EntitySetKey, metrics::EntitySet> build_entity_sets(
    const std::vector<prompts::PromptSpec>& specs,
    const std::vector<extraction::ExtractionRecord>& extractions,
    const std::vector<wikidata::LinkedEntity>& linked,
    const std::map<Topic, extraction::ExtractionSchema>& schemas);

struct ModelSummaryRow {
  std::string model_id;
  std::string metric;  // consensus | diversity | granularity
  metrics::Summary summary;
};

struct AggregateOutputs {
  std::vector<metrics::MetricReport> cell_reports;       // sorted by key
  std::vector<ModelSummaryRow> model_summaries;          // mean +/- variance per model
  std::map<std::string, grid::Grid> radar;               // language -> countries x models granularity
  std::map<std::string, grid::Grid> specificity_neutral; // model -> countries x languages
  std::map<std::string, grid::Grid> specificity_delta;   // model -> countries x languages (explicit - neutral)
  std::map<std::string, std::map<Topic, metrics::ConsensusMatrix>> consensus;  // model -> topic -> matrix
  grid::Grid native_diversity;  // models x {native_mean, non_native_mean, native_n, non_native_n}
};

AggregateOutputs aggregate(const std::map<metrics::EntitySetKey, metrics::EntitySet>& cells,
                           const prompts::ContextCatalog& catalog,
                           const std::vector<std::string>& models,
                           const std::vector<std::string>& languages,
                           const std::vector<Topic>& topics);

// Report files (deterministic: sorted keys, fixed float format).
std::string cells_to_csv(const std::vector<metrics::MetricReport>& reports);
std::string specificity_to_csv(const std::vector<metrics::MetricReport>& reports);
std::string model_summary_to_csv(const std::vector<ModelSummaryRow>& rows);
std::string diagnostics_to_json(const std::map<Topic, wikidata::TopicDiagnostics>& diagnostics);

struct PlotArtifact {
  std::string kind;  // heatmap_matrix | radar_table | box_comparison
  std::string name;  // file stem
  grid::Grid data;
  std::string rendered_svg;  // empty for grid-only kinds
};

/// Materializes plot-ready artifacts for the requested kinds; grids always,
/// vector renderings for heatmaps. Missing aggregates are skipped.
std::vector<PlotArtifact> emit_plots(const AggregateOutputs& outputs,
                                     const std::set<std::string>& kinds,
                                     std::vector<std::string>* warnings = nullptr);

}  // namespace cultureval::scoring
