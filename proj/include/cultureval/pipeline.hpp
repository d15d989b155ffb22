#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "cultureval/extraction.hpp"
#include "cultureval/gateway.hpp"
#include "cultureval/prompts.hpp"
#include "cultureval/scoring.hpp"
#include "cultureval/wikidata.hpp"

namespace cultureval::pipeline {

inline constexpr std::string_view kToolVersion = "0.1.0";

enum class Stage { forge, generate, extract, link, score, report };

inline constexpr std::array<Stage, 6> kAllStages = {Stage::forge,  Stage::generate,
                                                    Stage::extract, Stage::link,
                                                    Stage::score,  Stage::report};

std::string_view to_string(Stage s);
Stage stage_from_string(std::string_view s);

struct RunConfig {
  std::string run_id;  // default: content hash of the config
  std::filesystem::path out_dir = "runs";
  std::vector<std::string> models;
  std::vector<std::string> languages;    // empty = all templates
  std::vector<std::string> topics;       // empty = all templates
  std::vector<std::string> conditions;   // empty = all templates

  std::filesystem::path templates_path;
  std::filesystem::path catalog_path;
  std::filesystem::path schemas_path;
  std::filesystem::path roots_path;

  gateway::ProviderConfig generate_endpoint;
  gateway::ProviderConfig extract_endpoint;
  gateway::SamplingParams sampling;
  int generate_concurrency = 4;
  int extract_concurrency = 4;

  wikidata::WikidataClient::Options link_options;
  int depth_cap_override = 0;  // 0 = take depth_cap from the roots file
  std::vector<std::string> label_languages{"en"};

  std::set<std::string> plot_kinds{"heatmap_matrix", "radar_table", "box_comparison"};
  bool resume = true;

  std::string canonical_json;  // snapshot used for run_id and the manifest
};

/// Parses the per-module config file (JSON with one section per stage).
/// Relative paths resolve against the config file's directory.
RunConfig load_config(const std::filesystem::path& path);

/// Recomputes canonical_json after fields were overridden (CLI flags).
void refresh_canonical(RunConfig& config);

/// The effective run id (explicit or config-content hash).
std::string effective_run_id(const RunConfig& config);

struct StageInfo {
  bool completed = false;
  std::map<std::string, long long> counts;
  std::string finished_at;
};

/// Written before any stage starts and rewritten atomically after each stage;
/// a run is resumable from the manifest plus the stage outputs alone.
struct RunManifest {
  std::string run_id;
  std::string tool_version;
  std::string created_at;
  std::string config_snapshot;  // canonical config JSON
  std::map<std::string, std::string> input_hashes;
  std::map<std::string, StageInfo> stages;

  void save(const std::filesystem::path& path) const;
  static std::optional<RunManifest> load(const std::filesystem::path& path);
};

struct RunOutcome {
  int exit_code = 0;  // 0 ok, 1 stage failure, 2 config error
  std::vector<std::string> messages;
  std::map<std::string, StageInfo> stages;
};

class Runner {
 public:
  explicit Runner(RunConfig config);

  RunOutcome run(const std::vector<Stage>& stages);
  RunOutcome run_all() { return run({kAllStages.begin(), kAllStages.end()}); }

  std::filesystem::path run_dir() const;
  std::filesystem::path prompts_path() const { return run_dir() / "prompts.jsonl"; }
  std::filesystem::path generations_dir() const { return run_dir() / "generations"; }
  std::filesystem::path extractions_dir() const { return run_dir() / "extractions"; }
  std::filesystem::path linked_path() const { return run_dir() / "linked" / "entities.jsonl"; }
  std::filesystem::path diagnostics_path() const { return run_dir() / "linked" / "diagnostics.json"; }
  std::filesystem::path reports_dir() const { return run_dir() / "reports"; }
  std::filesystem::path plots_dir() const { return run_dir() / "plots"; }
  std::filesystem::path manifest_path() const { return run_dir() / "manifest.json"; }

 private:
  StageInfo do_forge();
  StageInfo do_generate();
  StageInfo do_extract();
  StageInfo do_link();
  StageInfo do_score();
  StageInfo do_report();

  /// Empty when satisfied, else a message naming the missing stage.
  std::string dependency_error(Stage stage) const;
  bool stage_outputs_present(Stage stage) const;

  std::vector<prompts::PromptSpec> load_prompts() const;
  std::vector<extraction::ExtractionRecord> load_extractions() const;
  std::vector<wikidata::LinkedEntity> load_linked() const;

  RunConfig config_;
  RunManifest manifest_;
};

/// validate-config: parse + check referenced files; returns human-readable
/// findings. ok=false maps to exit code 2.
struct ConfigCheck {
  bool ok = true;
  std::vector<std::string> findings;
};
ConfigCheck validate_config(const std::filesystem::path& path);

}  // namespace cultureval::pipeline
