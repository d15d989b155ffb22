#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cultureval/pipeline.hpp"

namespace {

using namespace cultureval;

struct CliOverrides {
  std::string templates, catalog, schemas, roots, cache_dir, out_dir, run_id;
  std::string endpoint, extractor_endpoint;
  std::vector<std::string> models, languages, topics, conditions;
  double rpm = -1;
  int n_samples = -1;
  int depth_cap = -1;
  bool offline = false;
  bool no_resume = false;
};

void apply_overrides(pipeline::RunConfig& config, const CliOverrides& o) {
  auto set_path = [](std::filesystem::path& target, const std::string& value) {
    if (!value.empty()) target = std::filesystem::absolute(value);
  };
  set_path(config.templates_path, o.templates);
  set_path(config.catalog_path, o.catalog);
  set_path(config.schemas_path, o.schemas);
  set_path(config.roots_path, o.roots);
  set_path(config.link_options.cache_dir, o.cache_dir);
  set_path(config.out_dir, o.out_dir);
  if (!o.run_id.empty()) config.run_id = o.run_id;
  if (!o.endpoint.empty()) config.generate_endpoint.base_url = o.endpoint;
  if (!o.extractor_endpoint.empty()) config.extract_endpoint.base_url = o.extractor_endpoint;
  if (!o.models.empty()) config.models = o.models;
  if (!o.languages.empty()) config.languages = o.languages;
  if (!o.topics.empty()) config.topics = o.topics;
  if (!o.conditions.empty()) config.conditions = o.conditions;
  if (o.rpm >= 0) config.generate_endpoint.requests_per_minute = o.rpm;
  if (o.n_samples > 0) config.sampling.n_samples = o.n_samples;
  if (o.depth_cap > 0) config.depth_cap_override = o.depth_cap;
  if (o.offline) config.link_options.offline = true;
  if (o.no_resume) config.resume = false;
  pipeline::refresh_canonical(config);
}

int run_stages(const std::string& config_path, const CliOverrides& overrides,
               const std::vector<pipeline::Stage>& stages) {
  pipeline::RunConfig config;
  try {
    config = pipeline::load_config(config_path);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }
  apply_overrides(config, overrides);

  pipeline::Runner runner(std::move(config));
  const pipeline::RunOutcome outcome = runner.run(stages);
  for (const std::string& msg : outcome.messages) std::cout << msg << "\n";
  for (const auto& [stage, info] : outcome.stages) {
    std::cout << stage << ":";
    for (const auto& [key, value] : info.counts) std::cout << ' ' << key << '=' << value;
    std::cout << "\n";
  }
  std::cout << "run dir: " << runner.run_dir().string() << "\n";
  return outcome.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cultureval: cultural-awareness evaluation pipeline for text-generation models"};
  app.require_subcommand(1);

  std::string config_path;
  CliOverrides overrides;
  std::string stages_arg = "forge,generate,extract,link,score,report";

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "pipeline config file (JSON)")->required();
    cmd->add_option("--templates", overrides.templates, "template file override");
    cmd->add_option("--catalog", overrides.catalog, "context catalog override");
    cmd->add_option("--schema", overrides.schemas, "extraction schema file override");
    cmd->add_option("--roots", overrides.roots, "topic root config override");
    cmd->add_option("--models", overrides.models, "model ids")->delimiter(',');
    cmd->add_option("--languages", overrides.languages, "language filter")->delimiter(',');
    cmd->add_option("--topics", overrides.topics, "topic filter")->delimiter(',');
    cmd->add_option("--conditions", overrides.conditions, "condition filter")->delimiter(',');
    cmd->add_option("--endpoint", overrides.endpoint, "generation endpoint base URL");
    cmd->add_option("--extractor-endpoint", overrides.extractor_endpoint,
                    "extraction endpoint base URL");
    cmd->add_option("--rpm", overrides.rpm, "generation requests per minute");
    cmd->add_option("--n-samples", overrides.n_samples, "samples per prompt");
    cmd->add_option("--depth-cap", overrides.depth_cap, "ontology traversal depth cap");
    cmd->add_option("--cache-dir", overrides.cache_dir, "wikidata snapshot cache dir");
    cmd->add_option("--out-dir", overrides.out_dir, "run output root");
    cmd->add_option("--run-id", overrides.run_id, "explicit run id");
    cmd->add_flag("--offline", overrides.offline, "serve wikidata from snapshots only");
    cmd->add_flag("--no-resume", overrides.no_resume, "redo stages even if marked complete");
  };

  CLI::App* run = app.add_subcommand("run", "execute pipeline stages in order");
  add_common(run);
  run->add_option("--stages", stages_arg, "comma-separated subset of stages");

  for (pipeline::Stage s : pipeline::kAllStages)
    add_common(app.add_subcommand(std::string(pipeline::to_string(s)),
                                  "run the " + std::string(pipeline::to_string(s)) + " stage"));

  CLI::App* validate = app.add_subcommand("validate-config", "parse and check a config file");
  validate->add_option("--config", config_path, "pipeline config file (JSON)")->required();

  CLI11_PARSE(app, argc, argv);

  if (validate->parsed()) {
    const pipeline::ConfigCheck check = pipeline::validate_config(config_path);
    for (const std::string& f : check.findings) std::cout << f << "\n";
    std::cout << (check.ok ? "config ok" : "config invalid") << "\n";
    return check.ok ? 0 : 2;
  }

  try {
    if (run->parsed()) {
      std::vector<pipeline::Stage> stages;
      for (const std::string& s : split(stages_arg, ','))
        stages.push_back(pipeline::stage_from_string(trim(s)));
      return run_stages(config_path, overrides, stages);
    }
    for (pipeline::Stage s : pipeline::kAllStages) {
      if (app.get_subcommand(std::string(pipeline::to_string(s)))->parsed())
        return run_stages(config_path, overrides, {s});
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
