// Acceptance suite: one pass/fail line per criterion, offline only.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "cultureval/metrics.hpp"
#include "cultureval/pipeline.hpp"
#include "cultureval/prompts.hpp"
#include "cultureval/wikidata.hpp"

using namespace cultureval;
namespace fs = std::filesystem;

namespace {

const fs::path kRoot = CULTUREVAL_SOURCE_DIR;

int g_failures = 0;

void report(int criterion, const std::string& what, bool ok, const std::string& detail = "") {
  std::printf("%s criterion %d: %s%s%s\n", ok ? "PASS" : "FAIL", criterion, what.c_str(),
              detail.empty() ? "" : " - ", detail.c_str());
  if (!ok) ++g_failures;
}

struct Check {
  bool ok = true;
  std::string detail;
  void expect(bool cond, const std::string& why) {
    if (!cond && ok) {
      ok = false;
      detail = why;
    }
  }
};

fs::path fresh_dir(const std::string& tag) {
  fs::path dir = fs::temp_directory_path() / ("cultureval_acceptance_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// ---------------------------------------------------------------------------
// Brute-force oracles (independent of the metrics implementation).

double oracle_jaccard(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<std::string> uni;
  for (const auto& x : a)
    if (std::find(uni.begin(), uni.end(), x) == uni.end()) uni.push_back(x);
  for (const auto& x : b)
    if (std::find(uni.begin(), uni.end(), x) == uni.end()) uni.push_back(x);
  int inter = 0;
  for (const auto& x : uni)
    if (std::find(a.begin(), a.end(), x) != a.end() &&
        std::find(b.begin(), b.end(), x) != b.end())
      ++inter;
  return static_cast<double>(inter) / static_cast<double>(uni.size());
}

int oracle_distinct(const std::vector<std::string>& qids) {
  std::vector<std::string> uniq;
  for (const auto& q : qids)
    if (std::find(uniq.begin(), uniq.end(), q) == uniq.end()) uniq.push_back(q);
  return static_cast<int>(uniq.size());
}

double oracle_mean(const std::vector<int>& scores) {
  double sum = 0;
  for (int s : scores) sum += s;
  return sum / static_cast<double>(scores.size());
}

metrics::EntitySet qid_set(const std::vector<std::string>& qids, const std::string& language,
                           Topic topic = Topic::food,
                           Condition condition = Condition::neutral,
                           const std::string& context = "",
                           const std::string& model = "m") {
  metrics::EntitySet set;
  set.key = {model, language, topic, condition, context};
  for (const auto& q : qids) {
    metrics::EntityMember member;
    member.surface = "s-" + q;
    member.qid = q;
    member.granularity = GranularityClass::specific;
    set.add_member(member);
  }
  return set;
}

// ---------------------------------------------------------------------------

void criterion_1_metric_oracles() {
  const auto start = std::chrono::steady_clock::now();
  std::mt19937 rng(987654321);
  std::uniform_int_distribution<int> size_dist(0, 12);
  std::uniform_int_distribution<int> qid_dist(1, 20);
  std::uniform_int_distribution<int> bit(0, 1);

  Check check;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<std::string> a, b;
    const int na = size_dist(rng), nb = size_dist(rng);
    for (int i = 0; i < na; ++i) a.push_back("Q" + std::to_string(qid_dist(rng)));
    for (int i = 0; i < nb; ++i) b.push_back("Q" + std::to_string(qid_dist(rng)));

    const metrics::EntitySet sa = qid_set(a, "en");
    const metrics::EntitySet sb = qid_set(b, "zh");
    const std::optional<double> c = metrics::consensus(sa, sb);
    if (a.empty() && b.empty()) {
      check.expect(!c.has_value(), "consensus of two empty sets must be undefined");
    } else {
      check.expect(c.has_value(), "consensus must be defined");
      if (c) check.expect(*c == oracle_jaccard(a, b), "consensus != oracle (bit-equal)");
    }
    check.expect(metrics::diversity(sa) == oracle_distinct(a), "diversity != distinct count");

    // granularity vs brute-force mean of binary scores
    metrics::EntitySet gran;
    std::vector<int> scores;
    for (int i = 0; i < na; ++i) {
      const int s = bit(rng);
      scores.push_back(s);
      metrics::EntityMember m;
      m.surface = "g" + std::to_string(i);
      m.qid = "Q" + std::to_string(5000 + i);  // distinct: mean over all scores
      m.granularity = s ? GranularityClass::specific : GranularityClass::general;
      gran.add_member(m);
    }
    const std::optional<double> g = metrics::granularity(gran);
    if (scores.empty())
      check.expect(!g.has_value(), "granularity of empty set must be undefined");
    else
      check.expect(g.has_value() && *g == oracle_mean(scores), "granularity != oracle mean");
  }
  const double elapsed = seconds_since(start);
  check.expect(elapsed < 5.0, "runtime " + std::to_string(elapsed) + "s >= 5s");
  report(1, "metric oracle equivalence over 1000 randomized set pairs", check.ok, check.detail);
}

pipeline::RunConfig fixture_config(const std::string& which, const fs::path& out_dir) {
  pipeline::RunConfig config = pipeline::load_config(kRoot / "fixtures" / which / "config.json");
  config.out_dir = out_dir;
  pipeline::refresh_canonical(config);
  return config;
}

void criterion_2_repeated_entity() {
  Check check;
  const fs::path out = fresh_dir("fig2");
  pipeline::Runner runner(fixture_config("fig2", out));
  const pipeline::RunOutcome outcome = runner.run_all();
  check.expect(outcome.exit_code == 0,
               outcome.messages.empty() ? "run failed" : outcome.messages.back());
  if (check.ok) {
    const std::string cells = read_file(runner.reports_dir() / "cells.csv");
    // 3 extracted mentions, one repeated, 2 QIDs -> diversity exactly 2
    check.expect(cells.find("mock-chat,en,book,neutral,,1,2,2,3,1,2,0") != std::string::npos,
                 "expected cell row with pre-dedup 3 and diversity 2, got: " + cells);
  }
  report(2, "canned repeated-entity scenario yields diversity = 2", check.ok, check.detail);
}

void criterion_3_disambiguation() {
  Check check;
  wikidata::WikidataClient::Options opts;
  opts.offline = true;
  opts.cache_dir = kRoot / "fixtures" / "snapshots";
  wikidata::WikidataClient client(std::move(opts));
  const wikidata::TopicRootConfig roots = wikidata::load_roots(kRoot / "data" / "roots.json");

  const auto lemon = client.search_candidates("lemon", "en");
  check.expect(lemon.size() == 2, "lemon snapshot must hold two senses");
  const auto result = wikidata::disambiguate(lemon, roots, Topic::food, client);
  check.expect(result.status == wikidata::LinkStatus::resolved, "lemon must resolve");
  check.expect(result.winner && result.winner->qid == "Q9200500", "fruit sense must win");
  bool film_rejected = false;
  for (const auto& eval : result.evals) {
    std::printf("    candidate %s: %s (path length %d)\n", eval.qid.c_str(),
                eval.reason.c_str(), eval.path_length);
    if (eval.qid == "Q9200400" && !eval.valid && eval.reason == "no_path_to_root")
      film_rejected = true;
  }
  check.expect(film_rejected, "film sense must be rejected with a logged reason");

  const auto tie = client.search_candidates("twin dish", "en");
  for (int i = 0; i < 100 && check.ok; ++i) {
    const auto t = wikidata::disambiguate(tie, roots, Topic::food, client);
    check.expect(t.winner && t.winner->qid == "Q9300100",
                 "tie must deterministically pick the lower numeric QID");
  }
  report(3, "lemon disambiguation and deterministic tie-break", check.ok, check.detail);
}

void criterion_4_cycle_termination() {
  Check check;
  wikidata::WikidataClient::Options opts;
  opts.offline = true;
  opts.cache_dir = kRoot / "fixtures" / "snapshots";
  wikidata::WikidataClient client(std::move(opts));
  const wikidata::TopicRootConfig roots = wikidata::load_roots(kRoot / "data" / "roots.json");

  const auto start = std::chrono::steady_clock::now();
  const auto candidates = client.search_candidates("ouroboros item", "en");
  const auto result = wikidata::disambiguate(candidates, roots, Topic::food, client);
  const double elapsed = seconds_since(start);
  check.expect(result.status == wikidata::LinkStatus::unresolved_no_valid_path,
               "cyclic fixture must end unresolved_no_valid_path");
  check.expect(elapsed < 1.0, "runtime " + std::to_string(elapsed) + "s >= 1s");
  report(4, "cyclic 50-node ontology terminates unresolved within the depth cap", check.ok,
         check.detail);
}

void criterion_5_cross_product() {
  Check check;
  const auto templates = prompts::load_templates(kRoot / "data" / "templates.tsv");
  const auto catalog = prompts::load_catalog(kRoot / "data" / "catalog.json");
  const auto specs = prompts::instantiate(templates, catalog, {"one-model"});
  std::set<std::tuple<std::string, Topic, Condition, std::string>> cells;
  for (const auto& s : specs) cells.insert({s.language, s.topic, s.condition, prompts::context_key(s)});
  check.expect(cells.size() == 1716,
               "unique prompt cells = " + std::to_string(cells.size()) + ", want 1716");
  check.expect(specs.size() == 1716, "specs = " + std::to_string(specs.size()) + ", want 1716");
  report(5, "default catalog instantiates exactly 1,716 unique prompts", check.ok, check.detail);
}

void criterion_6_diagnostics() {
  Check check;
  wikidata::WikidataClient::Options opts;
  opts.offline = true;
  opts.cache_dir = kRoot / "fixtures" / "snapshots";
  wikidata::WikidataClient client(std::move(opts));
  const wikidata::TopicRootConfig roots = wikidata::load_roots(kRoot / "data" / "roots.json");

  std::set<wikidata::SurfaceKey> ten;
  for (const char* s : {"cola", "root beer", "lemonade", "iced tea", "ginger ale", "green tea",
                        "soda water", "phantom fizz", "dream nectar", "void cola"})
    ten.insert({s, "en", Topic::beverage});
  const auto missing = wikidata::link_all(ten, roots, {"en"}, client);
  check.expect(missing.diagnostics.at(Topic::beverage).missing_qid_proportion == 0.30,
               "missing-QID proportion must be exactly 0.30");

  std::set<wikidata::SurfaceKey> four;
  for (const char* s : {"soda pop", "soft drink", "fizzy water", "sparkling water"})
    four.insert({s, "en", Topic::beverage});
  const auto rate = wikidata::link_all(four, roots, {"en"}, client);
  check.expect(rate.diagnostics.at(Topic::beverage).resolve_rate == 0.50,
               "resolve rate must be exactly 0.50");
  report(6, "diagnostics formulas exact on counted fixtures", check.ok, check.detail);
}

std::map<std::string, std::string> artifact_tree(const fs::path& run_dir) {
  std::map<std::string, std::string> tree;
  for (const char* sub : {"reports", "plots"}) {
    const fs::path dir = run_dir / sub;
    if (!fs::exists(dir)) continue;
    for (const auto& entry : fs::recursive_directory_iterator(dir))
      if (entry.is_regular_file())
        tree[std::string(sub) + "/" + entry.path().filename().string()] =
            read_file(entry.path());
  }
  return tree;
}

std::map<std::string, std::string> g_reference_tree;

void criterion_7_end_to_end() {
  Check check;
  const auto start = std::chrono::steady_clock::now();

  const fs::path out_a = fresh_dir("e2e_a");
  pipeline::Runner run_a(fixture_config("e2e", out_a));
  const pipeline::RunOutcome outcome_a = run_a.run_all();
  check.expect(outcome_a.exit_code == 0,
               outcome_a.messages.empty() ? "run failed" : outcome_a.messages.back());

  if (check.ok) {
    const std::string cells = read_file(run_a.reports_dir() / "cells.csv");
    std::size_t rows = std::count(cells.begin(), cells.end(), '\n');
    check.expect(rows == 7, "cells.csv must hold 6 cell reports (+header), got " +
                                std::to_string(rows ? rows - 1 : 0));

    const fs::path consensus = run_a.reports_dir() / "consensus__mock-chat__food.csv";
    check.expect(fs::exists(consensus), "consensus matrix file missing");
    if (fs::exists(consensus)) {
      const auto grid = grid::grid_from_csv(read_file(consensus));
      check.expect(grid.row_labels.size() == 2 && grid.col_labels.size() == 2,
                   "consensus matrix must be 2x2");
    }
    check.expect(fs::exists(run_a.reports_dir() / "specificity_neutral__mock-chat.csv") &&
                     fs::exists(run_a.reports_dir() / "specificity_delta__mock-chat.csv"),
                 "specificity neutral+delta grid pair missing");
  }

  const fs::path out_b = fresh_dir("e2e_b");
  pipeline::Runner run_b(fixture_config("e2e", out_b));
  check.expect(run_b.run_all().exit_code == 0, "second run failed");
  if (check.ok) {
    g_reference_tree = artifact_tree(run_a.run_dir());
    check.expect(!g_reference_tree.empty(), "no artifacts emitted");
    check.expect(artifact_tree(run_b.run_dir()) == g_reference_tree,
                 "two consecutive runs differ byte-wise");
  }

  const double elapsed = seconds_since(start);
  check.expect(elapsed < 60.0, "runtime " + std::to_string(elapsed) + "s >= 60s");
  report(7, "end-to-end offline run emits the full report set, byte-stable", check.ok,
         check.detail);
}

void criterion_8_resumability() {
  Check check;
  if (g_reference_tree.empty()) {
    report(8, "resumability (skipped: criterion 7 produced no reference)", false);
    return;
  }
  const std::vector<pipeline::Stage> all(pipeline::kAllStages.begin(), pipeline::kAllStages.end());
  for (std::size_t cut = 1; cut < all.size() && check.ok; ++cut) {
    const fs::path out = fresh_dir("resume_" + std::to_string(cut));
    {
      pipeline::Runner partial(fixture_config("e2e", out));
      const std::vector<pipeline::Stage> prefix(all.begin(), all.begin() + cut);
      check.expect(partial.run(prefix).exit_code == 0,
                   "prefix run to stage " + std::to_string(cut) + " failed");
    }
    pipeline::Runner resumed(fixture_config("e2e", out));
    check.expect(resumed.run_all().exit_code == 0, "resumed run failed");
    if (check.ok)
      check.expect(artifact_tree(resumed.run_dir()) == g_reference_tree,
                   "artifacts differ after interrupting at stage boundary " +
                       std::to_string(cut));
  }
  report(8, "interrupt-after-each-stage reruns reproduce identical artifacts", check.ok,
         check.detail);
}

void criterion_9_aggregation_format() {
  Check check;

  // Synthetic multi-model fixture: two topics give each model exactly two
  // consensus cells, with hand-computable values.
  std::map<metrics::EntitySetKey, metrics::EntitySet> cells;
  auto put = [&](const std::string& model, Topic topic, const std::string& lang,
                 const std::vector<std::string>& qids) {
    metrics::EntitySet set =
        qid_set(qids, lang, topic, Condition::explicit_country, "US", model);
    cells[set.key] = set;
  };
  // model-a: jaccard 1/10 on food, 3/10 on music
  put("model-a", Topic::food, "en", {"Q1", "Q2", "Q3", "Q4", "Q5"});
  put("model-a", Topic::food, "zh", {"Q1", "Q10", "Q11", "Q12", "Q13", "Q14"});
  put("model-a", Topic::music, "en", {"Q1", "Q2", "Q3", "Q20", "Q21", "Q22"});
  put("model-a", Topic::music, "zh", {"Q1", "Q2", "Q3", "Q30", "Q31", "Q32", "Q33"});
  // model-b: jaccard 1/2 on food, 7/10 on music
  put("model-b", Topic::food, "en", {"QA", "QB", "QC"});
  put("model-b", Topic::food, "zh", {"QB", "QC", "QD"});
  put("model-b", Topic::music, "en", {"Q1", "Q2", "Q3", "Q4", "Q5", "Q6", "Q7", "Q8", "Q9"});
  put("model-b", Topic::music, "zh", {"Q1", "Q2", "Q3", "Q4", "Q5", "Q6", "Q7", "Q40"});

  prompts::ContextCatalog catalog;
  catalog.languages = {"en", "zh"};
  catalog.topics = {Topic::food, Topic::music};
  catalog.countries = {{"US", "Q30", {{"en", "United States"}, {"zh", "美国"}}},
                       {"CN", "Q148", {{"en", "China"}, {"zh", "中国"}}}};
  catalog.native = {{"en", {"US"}}, {"zh", {"CN"}}};

  const scoring::AggregateOutputs outputs = scoring::aggregate(
      cells, catalog, {"model-a", "model-b"}, {"en", "zh"}, {Topic::food, Topic::music});

  auto summary_of = [&](const std::string& model) -> const metrics::Summary* {
    for (const auto& row : outputs.model_summaries)
      if (row.model_id == model && row.metric == "consensus") return &row.summary;
    return nullptr;
  };
  const metrics::Summary* a = summary_of("model-a");
  const metrics::Summary* b = summary_of("model-b");
  check.expect(a && b, "per-model consensus summary rows missing");
  if (a && b) {
    check.expect(a->n == 2 && b->n == 2, "each model must aggregate exactly two cells");
    check.expect(std::abs(a->mean - 0.2) < 1e-12, "model-a mean must be 0.2 (got " +
                                                      std::to_string(a->mean) + ")");
    check.expect(std::abs(a->variance - 0.01) < 1e-12, "model-a variance must be 0.01");
    check.expect(std::abs(b->mean - 0.6) < 1e-12, "model-b mean must be 0.6");
    check.expect(std::abs(b->variance - 0.01) < 1e-12, "model-b variance must be 0.01");
  }

  // Table shape: one mean/variance row per model for each metric.
  const std::string csv = scoring::model_summary_to_csv(outputs.model_summaries);
  check.expect(csv.rfind("model,metric,mean,variance,cells\n", 0) == 0,
               "summary header mismatch");
  check.expect(csv.find("model-a,consensus,") != std::string::npos &&
                   csv.find("model-b,consensus,") != std::string::npos,
               "summary rows missing");
  report(9, "aggregation emits the mean-and-variance per-model table, exact on two cells",
         check.ok, check.detail);
}

}  // namespace

int main() {
  criterion_1_metric_oracles();
  criterion_2_repeated_entity();
  criterion_3_disambiguation();
  criterion_4_cycle_termination();
  criterion_5_cross_product();
  criterion_6_diagnostics();
  criterion_7_end_to_end();
  criterion_8_resumability();
  criterion_9_aggregation_format();
  if (g_failures == 0)
    std::printf("all acceptance criteria passed\n");
  else
    std::printf("%d acceptance criteria FAILED\n", g_failures);
  return g_failures == 0 ? 0 : 1;
}
