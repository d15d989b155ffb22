#include "cultureval/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace cultureval::pipeline {

using nlohmann::json;

std::string_view to_string(Stage s) {
  switch (s) {
    case Stage::forge: return "forge";
    case Stage::generate: return "generate";
    case Stage::extract: return "extract";
    case Stage::link: return "link";
    case Stage::score: return "score";
    case Stage::report: return "report";
  }
  return "forge";
}

Stage stage_from_string(std::string_view s) {
  for (Stage st : kAllStages)
    if (to_string(st) == s) return st;
  throw ConfigError("unknown stage: " + std::string(s));
}

// ---------------------------------------------------------------------------
// Config

namespace {

gateway::ProviderConfig parse_endpoint(const json& j, const std::filesystem::path& base) {
  gateway::ProviderConfig cfg;
  cfg.kind = j.value("kind", "openai_chat");
  cfg.base_url = j.value("base_url", "");
  cfg.api_path = j.value("api_path", "/v1/chat/completions");
  cfg.auth_env = j.value("auth_env", "");
  cfg.model = j.value("model", "");
  cfg.requests_per_minute = j.value("rpm", 0.0);
  cfg.max_concurrency = j.value("concurrency", 4);
  cfg.retries = j.value("retries", 5);
  cfg.backoff_initial_ms = j.value("backoff_ms", 500.0);
  if (j.contains("canned_path")) {
    std::filesystem::path p = j["canned_path"].get<std::string>();
    cfg.canned_path = p.is_relative() ? base / p : p;
  }
  return cfg;
}

json endpoint_to_json(const gateway::ProviderConfig& cfg) {
  json j;
  j["kind"] = cfg.kind;
  j["base_url"] = cfg.base_url;
  j["api_path"] = cfg.api_path;
  j["auth_env"] = cfg.auth_env;
  j["model"] = cfg.model;
  j["rpm"] = cfg.requests_per_minute;
  j["concurrency"] = cfg.max_concurrency;
  j["retries"] = cfg.retries;
  j["backoff_ms"] = cfg.backoff_initial_ms;
  j["canned_path"] = cfg.canned_path.string();
  return j;
}

std::string canonicalize(const RunConfig& c) {
  json j;
  j["out_dir"] = c.out_dir.string();
  j["models"] = c.models;
  j["languages"] = c.languages;
  j["topics"] = c.topics;
  j["conditions"] = c.conditions;
  j["templates"] = c.templates_path.string();
  j["catalog"] = c.catalog_path.string();
  j["schemas"] = c.schemas_path.string();
  j["roots"] = c.roots_path.string();
  j["generate_endpoint"] = endpoint_to_json(c.generate_endpoint);
  j["extract_endpoint"] = endpoint_to_json(c.extract_endpoint);
  j["sampling"] = {{"temperature", c.sampling.temperature},
                   {"top_p", c.sampling.top_p},
                   {"top_k", c.sampling.top_k},
                   {"max_tokens", c.sampling.max_tokens},
                   {"n_samples", c.sampling.n_samples}};
  j["link"] = {{"base_url", c.link_options.base_url},
               {"api_path", c.link_options.api_path},
               {"offline", c.link_options.offline},
               {"cache_dir", c.link_options.cache_dir.string()},
               {"rpm", c.link_options.requests_per_minute},
               {"depth_cap_override", c.depth_cap_override},
               {"search_limit", c.link_options.search_limit}};
  j["label_languages"] = c.label_languages;
  j["plot_kinds"] = std::vector<std::string>(c.plot_kinds.begin(), c.plot_kinds.end());
  return j.dump();
}

}  // namespace

RunConfig load_config(const std::filesystem::path& path) {
  json doc;
  try {
    doc = json::parse(read_file(path), nullptr, true, true);
  } catch (const json::exception& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  const std::filesystem::path base = path.has_parent_path()
                                         ? std::filesystem::absolute(path).parent_path()
                                         : std::filesystem::current_path();
  auto resolve = [&](const std::string& p) -> std::filesystem::path {
    if (p.empty()) return {};
    std::filesystem::path fp = p;
    return fp.is_relative() ? base / fp : fp;
  };

  RunConfig cfg;
  try {
    cfg.run_id = doc.value("run_id", "");
    cfg.out_dir = resolve(doc.value("out_dir", "runs"));
    if (doc.contains("models"))
      for (const auto& m : doc["models"]) cfg.models.push_back(m.get<std::string>());
    if (doc.contains("languages"))
      for (const auto& l : doc["languages"]) cfg.languages.push_back(l.get<std::string>());
    if (doc.contains("topics"))
      for (const auto& t : doc["topics"]) cfg.topics.push_back(t.get<std::string>());
    if (doc.contains("conditions"))
      for (const auto& c : doc["conditions"]) cfg.conditions.push_back(c.get<std::string>());

    const json forge = doc.value("forge", json::object());
    cfg.templates_path = resolve(forge.value("templates", "data/templates.tsv"));
    cfg.catalog_path = resolve(forge.value("catalog", "data/catalog.json"));

    const json gen = doc.value("generate", json::object());
    cfg.generate_endpoint = parse_endpoint(gen.value("endpoint", json::object()), base);
    cfg.sampling.temperature = gen.value("temperature", 0.7);
    cfg.sampling.top_p = gen.value("top_p", 0.9);
    cfg.sampling.top_k = gen.value("top_k", 10);
    cfg.sampling.max_tokens = gen.value("max_tokens", 256);
    cfg.sampling.n_samples = gen.value("n_samples", 500);

    const json ext = doc.value("extract", json::object());
    cfg.schemas_path = resolve(ext.value("schemas", "data/schemas.json"));
    cfg.extract_endpoint = parse_endpoint(ext.value("endpoint", json::object()), base);

    const json link = doc.value("link", json::object());
    cfg.roots_path = resolve(link.value("roots", "data/roots.json"));
    cfg.link_options.base_url = link.value("base_url", "https://www.wikidata.org");
    cfg.link_options.api_path = link.value("api_path", "/w/api.php");
    cfg.link_options.offline = link.value("offline", false);
    cfg.link_options.cache_dir = resolve(link.value("cache_dir", "wikidata-cache"));
    cfg.link_options.requests_per_minute = link.value("rpm", 0.0);
    cfg.link_options.retries = link.value("retries", 3);
    cfg.link_options.search_limit = link.value("search_limit", 20);
    cfg.depth_cap_override = link.value("depth_cap", 0);
    if (link.contains("label_languages")) {
      cfg.label_languages.clear();
      for (const auto& l : link["label_languages"])
        cfg.label_languages.push_back(l.get<std::string>());
    }

    const json rep = doc.value("report", json::object());
    if (rep.contains("plots")) {
      cfg.plot_kinds.clear();
      for (const auto& k : rep["plots"]) cfg.plot_kinds.insert(k.get<std::string>());
    }
    cfg.resume = doc.value("resume", true);
  } catch (const json::exception& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }

  if (cfg.models.empty()) throw ConfigError("config: at least one model id is required");
  for (const std::string& t : cfg.topics) topic_from_string(t);        // validates
  for (const std::string& c : cfg.conditions) condition_from_string(c);

  cfg.canonical_json = canonicalize(cfg);
  return cfg;
}

void refresh_canonical(RunConfig& config) { config.canonical_json = canonicalize(config); }

std::string effective_run_id(const RunConfig& config) {
  if (!config.run_id.empty()) return config.run_id;
  return "run-" + hash_hex(config.canonical_json);
}

// ---------------------------------------------------------------------------
// Manifest

void RunManifest::save(const std::filesystem::path& path) const {
  json j;
  j["run_id"] = run_id;
  j["tool_version"] = tool_version;
  j["created_at"] = created_at;
  j["config_snapshot"] = config_snapshot;
  j["input_hashes"] = input_hashes;
  json stages_json = json::object();
  for (const auto& [name, info] : stages) {
    stages_json[name] = {{"completed", info.completed},
                         {"counts", info.counts},
                         {"finished_at", info.finished_at}};
  }
  j["stages"] = std::move(stages_json);
  write_file_atomic(path, j.dump(2) + "\n");
}

std::optional<RunManifest> RunManifest::load(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) return std::nullopt;
  json j = json::parse(read_file(path), nullptr, false);
  if (!j.is_object()) return std::nullopt;
  RunManifest m;
  m.run_id = j.value("run_id", "");
  m.tool_version = j.value("tool_version", "");
  m.created_at = j.value("created_at", "");
  m.config_snapshot = j.value("config_snapshot", "");
  if (j.contains("input_hashes"))
    m.input_hashes = j["input_hashes"].get<std::map<std::string, std::string>>();
  if (j.contains("stages")) {
    for (auto it = j["stages"].begin(); it != j["stages"].end(); ++it) {
      StageInfo info;
      info.completed = it.value().value("completed", false);
      if (it.value().contains("counts"))
        info.counts = it.value()["counts"].get<std::map<std::string, long long>>();
      info.finished_at = it.value().value("finished_at", "");
      m.stages[it.key()] = std::move(info);
    }
  }
  return m;
}

// ---------------------------------------------------------------------------
// Runner

Runner::Runner(RunConfig config) : config_(std::move(config)) {
  manifest_.run_id = effective_run_id(config_);
  manifest_.tool_version = std::string(kToolVersion);
}

std::filesystem::path Runner::run_dir() const {
  return config_.out_dir / effective_run_id(config_);
}

std::vector<prompts::PromptSpec> Runner::load_prompts() const {
  std::vector<prompts::PromptSpec> specs;
  std::ifstream in(prompts_path());
  if (!in) throw ConfigError("missing prompts file: " + prompts_path().string());
  std::string line;
  while (std::getline(in, line))
    if (!trim(line).empty()) specs.push_back(prompts::prompt_spec_from_json(line));
  return specs;
}

std::vector<extraction::ExtractionRecord> Runner::load_extractions() const {
  extraction::ExtractionStore store(extractions_dir());
  std::vector<extraction::ExtractionRecord> all;
  for (const std::string& partition : store.partitions())
    for (extraction::ExtractionRecord& r : store.read_partition(partition))
      all.push_back(std::move(r));
  return all;
}

std::vector<wikidata::LinkedEntity> Runner::load_linked() const {
  std::vector<wikidata::LinkedEntity> out;
  std::ifstream in(linked_path());
  if (!in) throw ConfigError("missing linked table: " + linked_path().string());
  std::string line;
  while (std::getline(in, line))
    if (!trim(line).empty()) out.push_back(wikidata::linked_from_json(line));
  return out;
}

bool Runner::stage_outputs_present(Stage stage) const {
  namespace fs = std::filesystem;
  switch (stage) {
    case Stage::forge: return fs::exists(prompts_path());
    case Stage::generate: return fs::exists(generations_dir());
    case Stage::extract: return fs::exists(extractions_dir());
    case Stage::link: return fs::exists(linked_path());
    case Stage::score: return fs::exists(reports_dir() / "cells.csv");
    case Stage::report: return fs::exists(plots_dir());
  }
  return false;
}

std::string Runner::dependency_error(Stage stage) const {
  auto missing = [&](Stage dep, const std::filesystem::path& artifact) -> std::string {
    if (std::filesystem::exists(artifact)) return "";
    return "stage '" + std::string(to_string(stage)) + "' requires output of stage '" +
           std::string(to_string(dep)) + "' (missing " + artifact.string() + ")";
  };
  switch (stage) {
    case Stage::forge: return "";
    case Stage::generate: return missing(Stage::forge, prompts_path());
    case Stage::extract: {
      std::string e = missing(Stage::forge, prompts_path());
      if (e.empty()) e = missing(Stage::generate, generations_dir());
      return e;
    }
    case Stage::link: {
      std::string e = missing(Stage::forge, prompts_path());
      if (e.empty()) e = missing(Stage::extract, extractions_dir());
      return e;
    }
    case Stage::score:
    case Stage::report: {
      std::string e = missing(Stage::forge, prompts_path());
      if (e.empty()) e = missing(Stage::extract, extractions_dir());
      if (e.empty()) e = missing(Stage::link, linked_path());
      return e;
    }
  }
  return "";
}

RunOutcome Runner::run(const std::vector<Stage>& requested) {
  RunOutcome outcome;

  std::vector<Stage> stages;
  for (Stage s : kAllStages)
    if (std::find(requested.begin(), requested.end(), s) != requested.end()) stages.push_back(s);

  try {
    std::filesystem::create_directories(run_dir());
    if (auto existing = RunManifest::load(manifest_path())) {
      manifest_ = *existing;
    } else {
      manifest_.created_at = iso8601_now();
    }
    manifest_.run_id = effective_run_id(config_);
    manifest_.tool_version = std::string(kToolVersion);
    manifest_.config_snapshot = config_.canonical_json;
    for (const auto& [name, p] : std::initializer_list<std::pair<std::string, std::filesystem::path>>{
             {"templates", config_.templates_path},
             {"catalog", config_.catalog_path},
             {"schemas", config_.schemas_path},
             {"roots", config_.roots_path}}) {
      if (!p.empty() && std::filesystem::exists(p)) manifest_.input_hashes[name] = hash_hex(read_file(p));
    }
    // Manifest exists on disk before the first stage runs.
    manifest_.save(manifest_path());
  } catch (const std::exception& e) {
    outcome.exit_code = 2;
    outcome.messages.push_back(std::string("manifest: ") + e.what());
    return outcome;
  }

  for (Stage stage : stages) {
    const std::string name(to_string(stage));
    const std::string dep = dependency_error(stage);
    if (!dep.empty()) {
      outcome.exit_code = 1;
      outcome.messages.push_back(dep);
      return outcome;
    }
    auto it = manifest_.stages.find(name);
    if (config_.resume && it != manifest_.stages.end() && it->second.completed &&
        stage_outputs_present(stage)) {
      outcome.messages.push_back("stage '" + name + "' already complete; skipped");
      outcome.stages[name] = it->second;
      continue;
    }
    try {
      StageInfo info;
      switch (stage) {
        case Stage::forge: info = do_forge(); break;
        case Stage::generate: info = do_generate(); break;
        case Stage::extract: info = do_extract(); break;
        case Stage::link: info = do_link(); break;
        case Stage::score: info = do_score(); break;
        case Stage::report: info = do_report(); break;
      }
      info.completed = true;
      info.finished_at = iso8601_now();
      manifest_.stages[name] = info;
      manifest_.save(manifest_path());
      outcome.stages[name] = info;
      outcome.messages.push_back("stage '" + name + "' done");
    } catch (const ConfigError& e) {
      outcome.exit_code = 2;
      outcome.messages.push_back("stage '" + name + "': " + e.what());
      return outcome;
    } catch (const std::exception& e) {
      outcome.exit_code = 1;
      outcome.messages.push_back("stage '" + name + "' failed: " + e.what());
      return outcome;
    }
  }
  return outcome;
}

StageInfo Runner::do_forge() {
  const auto templates = prompts::load_templates(config_.templates_path);
  const auto catalog = prompts::load_catalog(config_.catalog_path);

  prompts::ForgeFilter filter;
  filter.languages.insert(config_.languages.begin(), config_.languages.end());
  for (const std::string& t : config_.topics) filter.topics.insert(topic_from_string(t));
  for (const std::string& c : config_.conditions) filter.conditions.insert(condition_from_string(c));

  const auto specs = prompts::instantiate(templates, catalog, config_.models, filter);

  std::ostringstream out;
  std::set<std::tuple<std::string, Topic, Condition, std::string>> unique_cells;
  for (const prompts::PromptSpec& s : specs) {
    out << prompts::prompt_spec_to_json(s) << '\n';
    unique_cells.insert({s.language, s.topic, s.condition, prompts::context_key(s)});
  }
  write_file_atomic(prompts_path(), out.str());

  StageInfo info;
  info.counts["templates"] = static_cast<long long>(templates.size());
  info.counts["prompts"] = static_cast<long long>(specs.size());
  info.counts["unique_prompt_cells"] = static_cast<long long>(unique_cells.size());
  return info;
}

StageInfo Runner::do_generate() {
  const auto specs = load_prompts();
  auto provider = gateway::make_provider(config_.generate_endpoint);
  gateway::RunStore store(generations_dir());

  gateway::GenerateOptions options;
  options.concurrency = config_.generate_endpoint.max_concurrency;
  options.retries = config_.generate_endpoint.retries;
  options.backoff_initial_ms = config_.generate_endpoint.backoff_initial_ms;
  options.requests_per_minute = config_.generate_endpoint.requests_per_minute;

  const gateway::GenerateStats stats = gateway::generate_batch(specs, config_.sampling, *provider,
                                                               store, options);
  StageInfo info;
  info.counts["specs"] = static_cast<long long>(stats.specs);
  info.counts["requested"] = static_cast<long long>(stats.requested);
  info.counts["skipped"] = static_cast<long long>(stats.skipped);
  info.counts["persisted"] = static_cast<long long>(stats.persisted);
  info.counts["failures"] = static_cast<long long>(stats.failures);
  return info;
}

StageInfo Runner::do_extract() {
  const auto specs = load_prompts();
  std::map<std::string, const prompts::PromptSpec*> by_prompt;
  for (const auto& s : specs) by_prompt[s.prompt_id] = &s;

  const auto schemas = extraction::load_schemas(config_.schemas_path);
  auto provider = gateway::make_provider(config_.extract_endpoint);
  gateway::RunStore gen_store(generations_dir());
  extraction::ExtractionStore store(extractions_dir());

  extraction::ExtractOptions options;
  options.concurrency = config_.extract_endpoint.max_concurrency;
  options.retries = config_.extract_endpoint.retries;
  options.backoff_initial_ms = config_.extract_endpoint.backoff_initial_ms;
  options.requests_per_minute = config_.extract_endpoint.requests_per_minute;

  StageInfo info;
  for (const std::string& partition : gen_store.partitions()) {
    const auto records = gen_store.read_partition(partition);
    if (records.empty()) continue;
    auto spec_it = by_prompt.find(records.front().prompt_id);
    if (spec_it == by_prompt.end())
      throw ConfigError("generation partition " + partition + " has no matching prompts");
    auto schema_it = schemas.find(spec_it->second->topic);
    if (schema_it == schemas.end())
      throw ConfigError("no extraction schema for topic " +
                        std::string(to_string(spec_it->second->topic)));
    const extraction::ExtractStats stats =
        extraction::extract_all(records, schema_it->second, *provider, store, partition, options);
    info.counts["records"] += static_cast<long long>(stats.records);
    info.counts["calls"] += static_cast<long long>(stats.calls);
    info.counts["skipped"] += static_cast<long long>(stats.skipped);
    info.counts["entities"] += static_cast<long long>(stats.entities);
    info.counts["failures"] += static_cast<long long>(stats.failures);
    info.counts["parse_failures"] += static_cast<long long>(stats.parse_failures);
  }
  return info;
}

StageInfo Runner::do_link() {
  const auto specs = load_prompts();
  std::map<std::string, const prompts::PromptSpec*> by_prompt;
  for (const auto& s : specs) by_prompt[s.prompt_id] = &s;

  std::set<wikidata::SurfaceKey> keys;
  for (const extraction::ExtractionRecord& rec : load_extractions()) {
    auto it = by_prompt.find(rec.ref.prompt_id);
    if (it == by_prompt.end()) continue;
    for (const auto& [surface, _] : rec.entities)
      keys.insert({surface, it->second->language, it->second->topic});
  }

  wikidata::TopicRootConfig roots = wikidata::load_roots(config_.roots_path);
  if (config_.depth_cap_override > 0) roots.depth_cap = config_.depth_cap_override;
  wikidata::WikidataClient client(config_.link_options);
  const wikidata::LinkResult result =
      wikidata::link_all(keys, roots, config_.label_languages, client);

  std::ostringstream out;
  for (const wikidata::LinkedEntity& e : result.table) out << wikidata::linked_to_json(e) << '\n';
  write_file_atomic(linked_path(), out.str());
  write_file_atomic(diagnostics_path(), scoring::diagnostics_to_json(result.diagnostics));

  StageInfo info;
  info.counts["surfaces"] = static_cast<long long>(result.table.size());
  long long resolved = 0;
  for (const auto& e : result.table)
    if (e.status == wikidata::LinkStatus::resolved) ++resolved;
  info.counts["resolved"] = resolved;
  info.counts["unresolved"] = static_cast<long long>(result.table.size()) - resolved;
  info.counts["network_calls"] = static_cast<long long>(client.network_calls());
  info.counts["cache_hits"] = static_cast<long long>(client.cache_hits());
  return info;
}

namespace {

std::string mismatch_csv(const std::vector<prompts::PromptSpec>& specs,
                         const std::filesystem::path& generations_dir) {
  std::map<std::string, const prompts::PromptSpec*> by_prompt;
  for (const auto& s : specs) by_prompt[s.prompt_id] = &s;

  gateway::RunStore store(generations_dir);
  using CellKey = std::tuple<std::string, std::string, Topic, Condition, std::string>;
  std::map<CellKey, std::vector<gateway::GenerationRecord>> per_cell;
  for (const std::string& partition : store.partitions()) {
    for (gateway::GenerationRecord& r : store.read_partition(partition)) {
      auto it = by_prompt.find(r.prompt_id);
      if (it == by_prompt.end()) continue;
      const prompts::PromptSpec& s = *it->second;
      per_cell[{s.model_id, s.language, s.topic, s.condition, prompts::context_key(s)}].push_back(
          std::move(r));
    }
  }

  std::ostringstream out;
  out << "model,language,topic,condition,context,responses,mismatched,unknown,fraction\n";
  for (const auto& [key, records] : per_cell) {
    const auto& [model, language, topic, condition, context] = key;
    const gateway::MismatchReport report = gateway::detect_language_mismatch(records, language);
    out << model << ',' << language << ',' << to_string(topic) << ',' << to_string(condition)
        << ',' << context << ',' << report.overall.responses << ',' << report.overall.mismatched
        << ',' << report.overall.unknown << ',' << format_double(report.overall.fraction) << '\n';
  }
  return out.str();
}

}  // namespace

StageInfo Runner::do_score() {
  const auto specs = load_prompts();
  const auto extractions = load_extractions();
  const auto linked = load_linked();
  const auto schemas = extraction::load_schemas(config_.schemas_path);
  const auto catalog = prompts::load_catalog(config_.catalog_path);

  const auto cells = scoring::build_entity_sets(specs, extractions, linked, schemas);

  const std::vector<std::string> languages =
      config_.languages.empty() ? catalog.languages : config_.languages;
  std::vector<Topic> topics;
  if (config_.topics.empty())
    topics = catalog.topics;
  else
    for (const std::string& t : config_.topics) topics.push_back(topic_from_string(t));

  const scoring::AggregateOutputs aggregates =
      scoring::aggregate(cells, catalog, config_.models, languages, topics);

  write_file_atomic(reports_dir() / "cells.csv", scoring::cells_to_csv(aggregates.cell_reports));
  write_file_atomic(reports_dir() / "specificity.csv",
                    scoring::specificity_to_csv(aggregates.cell_reports));
  write_file_atomic(reports_dir() / "model_summary.csv",
                    scoring::model_summary_to_csv(aggregates.model_summaries));
  if (std::filesystem::exists(diagnostics_path()))
    write_file_atomic(reports_dir() / "diagnostics.json", read_file(diagnostics_path()));

  for (const auto& [model, per_topic] : aggregates.consensus) {
    for (const auto& [topic, matrix] : per_topic) {
      grid::Grid g;
      g.row_labels = matrix.languages;
      g.col_labels = matrix.languages;
      g.values = matrix.values;
      write_file_atomic(reports_dir() / ("consensus__" + sanitize_filename(model) + "__" +
                                         std::string(to_string(topic)) + ".csv"),
                        grid::grid_to_csv(g));
    }
  }
  for (const auto& [model, g] : aggregates.specificity_neutral)
    write_file_atomic(reports_dir() / ("specificity_neutral__" + sanitize_filename(model) + ".csv"),
                      grid::grid_to_csv(g));
  for (const auto& [model, g] : aggregates.specificity_delta)
    write_file_atomic(reports_dir() / ("specificity_delta__" + sanitize_filename(model) + ".csv"),
                      grid::grid_to_csv(g));
  for (const auto& [lang, g] : aggregates.radar)
    write_file_atomic(reports_dir() / ("granularity_radar__" + sanitize_filename(lang) + ".csv"),
                      grid::grid_to_csv(g));
  if (!aggregates.native_diversity.row_labels.empty())
    write_file_atomic(reports_dir() / "diversity_native.csv",
                      grid::grid_to_csv(aggregates.native_diversity));
  write_file_atomic(reports_dir() / "language_mismatch.csv",
                    mismatch_csv(specs, generations_dir()));

  StageInfo info;
  info.counts["cells"] = static_cast<long long>(cells.size());
  info.counts["reports"] = static_cast<long long>(aggregates.cell_reports.size());
  return info;
}

StageInfo Runner::do_report() {
  const auto specs = load_prompts();
  const auto extractions = load_extractions();
  const auto linked = load_linked();
  const auto schemas = extraction::load_schemas(config_.schemas_path);
  const auto catalog = prompts::load_catalog(config_.catalog_path);
  const auto cells = scoring::build_entity_sets(specs, extractions, linked, schemas);

  const std::vector<std::string> languages =
      config_.languages.empty() ? catalog.languages : config_.languages;
  std::vector<Topic> topics;
  if (config_.topics.empty())
    topics = catalog.topics;
  else
    for (const std::string& t : config_.topics) topics.push_back(topic_from_string(t));

  const scoring::AggregateOutputs aggregates =
      scoring::aggregate(cells, catalog, config_.models, languages, topics);

  std::vector<std::string> warnings;
  const std::vector<scoring::PlotArtifact> artifacts =
      scoring::emit_plots(aggregates, config_.plot_kinds, &warnings);

  std::filesystem::create_directories(plots_dir());
  for (const scoring::PlotArtifact& a : artifacts) {
    write_file_atomic(plots_dir() / (a.name + ".csv"), grid::grid_to_csv(a.data));
    if (!a.rendered_svg.empty())
      write_file_atomic(plots_dir() / (a.name + ".svg"), a.rendered_svg);
  }

  StageInfo info;
  info.counts["artifacts"] = static_cast<long long>(artifacts.size());
  info.counts["warnings"] = static_cast<long long>(warnings.size());
  return info;
}

// ---------------------------------------------------------------------------

ConfigCheck validate_config(const std::filesystem::path& path) {
  ConfigCheck check;
  RunConfig cfg;
  try {
    cfg = load_config(path);
  } catch (const std::exception& e) {
    check.ok = false;
    check.findings.push_back(e.what());
    return check;
  }

  auto try_load = [&](const std::string& what, auto&& fn) {
    try {
      fn();
      check.findings.push_back(what + ": ok");
    } catch (const std::exception& e) {
      check.ok = false;
      check.findings.push_back(what + ": " + e.what());
    }
  };
  try_load("templates", [&] { prompts::load_templates(cfg.templates_path); });
  try_load("catalog", [&] { prompts::load_catalog(cfg.catalog_path); });
  try_load("schemas", [&] { extraction::load_schemas(cfg.schemas_path); });
  try_load("roots", [&] { wikidata::load_roots(cfg.roots_path); });

  if (cfg.generate_endpoint.kind == "canned" && !std::filesystem::exists(cfg.generate_endpoint.canned_path)) {
    check.ok = false;
    check.findings.push_back("generate endpoint: canned_path missing: " +
                             cfg.generate_endpoint.canned_path.string());
  }
  if (cfg.generate_endpoint.kind != "canned" && cfg.generate_endpoint.base_url.empty()) {
    check.ok = false;
    check.findings.push_back("generate endpoint: base_url is empty");
  }
  if (cfg.link_options.offline && cfg.link_options.cache_dir.empty()) {
    check.ok = false;
    check.findings.push_back("link: offline mode requires cache_dir");
  }
  check.findings.push_back("run_id: " + effective_run_id(cfg));
  return check;
}

}  // namespace cultureval::pipeline
