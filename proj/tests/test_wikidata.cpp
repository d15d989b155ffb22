#include <doctest.h>

#include <chrono>
#include <filesystem>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "cultureval/wikidata.hpp"

using namespace cultureval;
using namespace cultureval::wikidata;

namespace {

const std::filesystem::path kSnapshots =
    std::filesystem::path(CULTUREVAL_SOURCE_DIR) / "fixtures" / "snapshots";
const std::filesystem::path kRoots =
    std::filesystem::path(CULTUREVAL_SOURCE_DIR) / "data" / "roots.json";

WikidataClient offline_client() {
  WikidataClient::Options opts;
  opts.offline = true;
  opts.cache_dir = kSnapshots;
  return WikidataClient(std::move(opts));
}

}  // namespace

TEST_CASE("qid helpers") {
  CHECK(is_qid("Q42"));
  CHECK_FALSE(is_qid("P31"));
  CHECK_FALSE(is_qid("Q"));
  CHECK_FALSE(is_qid("Q12x"));
  CHECK(qid_number("Q9100001") == 9100001);
}

TEST_CASE("search_candidates: exact match, deterministic order") {
  auto client = offline_client();
  const auto lemon = client.search_candidates("lemon", "en");
  REQUIRE(lemon.size() == 2);
  CHECK(lemon[0].qid == "Q9200400");  // ascending numeric QID
  CHECK(lemon[1].qid == "Q9200500");

  // case-folded lookup hits the same snapshot and labels
  const auto upper = client.search_candidates("LEMON", "en");
  REQUIRE(upper.size() == 2);
  CHECK(upper[0].qid == lemon[0].qid);
}

TEST_CASE("search_candidates rejects empty surfaces") {
  auto client = offline_client();
  CHECK_THROWS_AS(client.search_candidates("", "en"), UsageError);
  CHECK_THROWS_AS(client.search_candidates("   ", "en"), UsageError);
}

TEST_CASE("search_candidates falls back to English when the language has no match") {
  auto client = offline_client();
  const auto hits = client.search_candidates("Butterbrezel", "de");
  REQUIRE(hits.size() == 1);
  CHECK(hits[0].qid == "Q9100041");
  CHECK(hits[0].kind == CandidateEntity::MatchKind::alias);
  CHECK(hits[0].match_language == "en");
}

TEST_CASE("offline cache misses are retriable fetch errors") {
  auto client = offline_client();
  CHECK_THROWS_AS(client.search_candidates("definitely not in snapshots", "en"), FetchError);
  CHECK_THROWS_AS(client.entity_raw("Q99999999"), FetchError);
}

TEST_CASE("disambiguate: food roots pick the fruit over the film") {
  auto client = offline_client();
  const auto roots = load_roots(kRoots);
  const auto candidates = client.search_candidates("lemon", "en");
  const auto result = disambiguate(candidates, roots, Topic::food, client);
  CHECK(result.status == LinkStatus::resolved);
  REQUIRE(result.winner);
  CHECK(result.winner->qid == "Q9200500");
  REQUIRE(result.evals.size() == 2);
  CHECK(result.evals[0].qid == "Q9200400");
  CHECK_FALSE(result.evals[0].valid);
  CHECK(result.evals[0].reason == "no_path_to_root");
  CHECK(result.evals[1].valid);
  CHECK(result.evals[1].reason == "reached_root");
  REQUIRE(result.path);
  CHECK(result.path->steps.size() == 2);  // fruit -> citrus class -> food
  CHECK(result.path->terminal_qid == "Q2095");
}

TEST_CASE("disambiguate: direct instance of a root has path length 1") {
  auto client = offline_client();
  const auto roots = load_roots(kRoots);
  const auto candidates = client.search_candidates("comfort food", "en");
  REQUIRE(candidates.size() == 1);
  const auto result = disambiguate(candidates, roots, Topic::food, client);
  CHECK(result.status == LinkStatus::resolved);
  REQUIRE(result.path);
  CHECK(result.path->steps.size() == 1);
  CHECK(result.path->steps[0].relation == Relation::subclass_of);
  CHECK(result.path->terminal_qid == "Q2095");
}

TEST_CASE("disambiguate: equal-depth tie goes to the lower numeric QID") {
  auto client = offline_client();
  const auto roots = load_roots(kRoots);
  const auto candidates = client.search_candidates("twin dish", "en");
  REQUIRE(candidates.size() == 2);
  for (int i = 0; i < 100; ++i) {
    const auto result = disambiguate(candidates, roots, Topic::food, client);
    REQUIRE(result.winner);
    CHECK(result.winner->qid == "Q9300100");
  }
}

TEST_CASE("disambiguate: cyclic ontology terminates unresolved") {
  auto client = offline_client();
  const auto roots = load_roots(kRoots);
  const auto candidates = client.search_candidates("ouroboros item", "en");
  REQUIRE(candidates.size() == 1);
  const auto start = std::chrono::steady_clock::now();
  const auto result = disambiguate(candidates, roots, Topic::food, client);
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  CHECK(result.status == LinkStatus::unresolved_no_valid_path);
  CHECK(elapsed < 1.0);
}

TEST_CASE("disambiguate: failing candidate is skipped and counted") {
  auto client = offline_client();
  const auto roots = load_roots(kRoots);
  std::vector<CandidateEntity> candidates{
      {"Q77777777", "ghost", "en", CandidateEntity::MatchKind::label},   // no snapshot
      {"Q9100001", "hamburger", "en", CandidateEntity::MatchKind::label}};
  const auto result = disambiguate(candidates, roots, Topic::food, client);
  CHECK(result.status == LinkStatus::resolved);
  CHECK(result.winner->qid == "Q9100001");
  CHECK(result.fetch_failures == 1);
  CHECK(result.evals[0].reason == "fetch_failed");

  std::vector<CandidateEntity> all_bad{
      {"Q77777777", "ghost", "en", CandidateEntity::MatchKind::label},
      {"Q77777778", "ghost2", "en", CandidateEntity::MatchKind::label}};
  CHECK_THROWS_AS(disambiguate(all_bad, roots, Topic::food, client), FetchError);
}

TEST_CASE("enrich fills labels and origin countries") {
  auto client = offline_client();
  const auto roots = load_roots(kRoots);
  LinkedEntity e;
  e.surface = "dumplings";
  e.language = "en";
  e.topic = Topic::food;
  e.qid = "Q9100013";
  e.status = LinkStatus::resolved;
  e.winning_path = OntologyPath{{{"Q9100013", Relation::instance_of}}, "Q2095"};
  enrich(e, {"en", "zh"}, roots, client);
  CHECK(e.origin_countries == std::set<std::string>{"Q148"});
  CHECK(e.labels.at("en") == "dumpling");
  CHECK(e.labels.at("zh") == "饺子");
  CHECK_FALSE(e.description.empty());
  CHECK_FALSE(e.enrichment_pending);
}

TEST_CASE("enrich falls back to the author's citizenship for books") {
  auto client = offline_client();
  const auto roots = load_roots(kRoots);
  LinkedEntity e;
  e.surface = "To Kill a Mockingbird";
  e.language = "en";
  e.topic = Topic::book;
  e.qid = "Q9200301";
  e.status = LinkStatus::resolved;
  e.winning_path = OntologyPath{{{"Q9200301", Relation::instance_of}}, "Q7725634"};
  enrich(e, {"en"}, roots, client);
  CHECK(e.origin_countries == std::set<std::string>{"Q30"});
}

TEST_CASE("enrich leaves entities without origin metadata resolved and empty") {
  auto client = offline_client();
  const auto roots = load_roots(kRoots);
  LinkedEntity e;
  e.surface = "soda pop";
  e.language = "en";
  e.topic = Topic::beverage;
  e.qid = "Q9500100";
  e.status = LinkStatus::resolved;
  e.winning_path = OntologyPath{{{"Q9500100", Relation::instance_of}}, "Q40050"};
  enrich(e, {"en"}, roots, client);
  CHECK(e.origin_countries.empty());
  CHECK(e.status == LinkStatus::resolved);
}

TEST_CASE("enrich requires a resolved entity") {
  auto client = offline_client();
  const auto roots = load_roots(kRoots);
  LinkedEntity e;
  e.status = LinkStatus::unresolved_no_match;
  CHECK_THROWS_AS(enrich(e, {"en"}, roots, client), UsageError);
}

// ---------------------------------------------------------------------------
// link_all

TEST_CASE("link_all diagnostics: missing-QID proportion and resolve rate") {
  auto client = offline_client();
  const auto roots = load_roots(kRoots);

  // 10 surfaces, 3 unresolvable -> missing proportion 0.30
  std::set<SurfaceKey> ten;
  for (const char* s : {"cola", "root beer", "lemonade", "iced tea", "ginger ale", "green tea",
                        "soda water", "phantom fizz", "dream nectar", "void cola"})
    ten.insert({s, "en", Topic::beverage});
  const auto result = link_all(ten, roots, {"en"}, client);
  const auto& diag = result.diagnostics.at(Topic::beverage);
  CHECK(diag.surfaces == 10);
  CHECK(diag.unresolved == 3);
  CHECK(diag.missing_qid_proportion == doctest::Approx(0.30).epsilon(1e-15));
  CHECK(diag.unique_qids == 7);
  for (const LinkedEntity& e : result.table)
    if (e.qid.empty()) CHECK(e.status == LinkStatus::unresolved_no_match);

  // 4 surfaces mapping to 2 QIDs -> resolve rate 0.50
  std::set<SurfaceKey> four;
  for (const char* s : {"soda pop", "soft drink", "fizzy water", "sparkling water"})
    four.insert({s, "en", Topic::beverage});
  const auto aliased = link_all(four, roots, {"en"}, client);
  const auto& diag2 = aliased.diagnostics.at(Topic::beverage);
  CHECK(diag2.surfaces == 4);
  CHECK(diag2.unique_qids == 2);
  CHECK(diag2.resolve_rate == doctest::Approx(0.50).epsilon(1e-15));
}

TEST_CASE("link_all on empty input yields empty table and undefined diagnostics") {
  auto client = offline_client();
  const auto roots = load_roots(kRoots);
  const auto result = link_all({}, roots, {"en"}, client);
  CHECK(result.table.empty());
  CHECK(result.diagnostics.empty());
}

TEST_CASE("link_all is idempotent byte-for-byte") {
  const auto roots = load_roots(kRoots);
  std::set<SurfaceKey> keys{{"lemon", "en", Topic::food}, {"hamburger", "en", Topic::food}};
  auto client = offline_client();
  const auto first = link_all(keys, roots, {"en", "zh"}, client);
  const auto second = link_all(keys, roots, {"en", "zh"}, client);
  REQUIRE(first.table.size() == second.table.size());
  for (std::size_t i = 0; i < first.table.size(); ++i)
    CHECK(linked_to_json(first.table[i]) == linked_to_json(second.table[i]));
}

TEST_CASE("winning paths replay as real edges in the snapshot ontology") {
  auto client = offline_client();
  const auto roots = load_roots(kRoots);
  std::set<SurfaceKey> keys{{"lemon", "en", Topic::food},
                            {"hamburger", "en", Topic::food},
                            {"comfort food", "en", Topic::food},
                            {"宫保鸡丁", "zh", Topic::food}};
  const auto result = link_all(keys, roots, {"en"}, client);
  for (const LinkedEntity& e : result.table) {
    REQUIRE(e.status == LinkStatus::resolved);
    REQUIRE(e.winning_path);
    const auto& steps = e.winning_path->steps;
    REQUIRE_FALSE(steps.empty());
    CHECK(steps.front().qid == e.qid);
    for (std::size_t i = 0; i < steps.size(); ++i) {
      const EntityData data = client.entity(steps[i].qid);
      const std::string& next =
          i + 1 < steps.size() ? steps[i + 1].qid : e.winning_path->terminal_qid;
      const auto& parents = data.parents[static_cast<std::size_t>(steps[i].relation)];
      CHECK(std::find(parents.begin(), parents.end(), next) != parents.end());
    }
    CHECK(roots.roots_for(e.topic).count(e.winning_path->terminal_qid) == 1);
    // cycle-free by construction
    std::set<std::string> seen;
    for (const PathStep& s : steps) CHECK(seen.insert(s.qid).second);
  }
}

TEST_CASE("unresolvable but fetchable surfaces get no_valid_path, fetch errors get ambiguous") {
  auto client = offline_client();
  const auto roots = load_roots(kRoots);
  std::set<SurfaceKey> keys{{"Beijing", "en", Topic::food},        // resolves to a city: no path
                            {"mystery surface", "en", Topic::food}};  // no snapshot: fetch error
  const auto result = link_all(keys, roots, {"en"}, client);
  REQUIRE(result.table.size() == 2);
  CHECK(result.table[0].surface == "Beijing");
  CHECK(result.table[0].status == LinkStatus::unresolved_no_valid_path);
  CHECK(result.table[1].status == LinkStatus::unresolved_ambiguous);
  CHECK(result.diagnostics.at(Topic::food).fetch_failures >= 1);
}

// ---------------------------------------------------------------------------
// two-tier cache against a live (local) endpoint

TEST_CASE("client snapshots every response and replays offline") {
  httplib::Server server;
  std::atomic<int> hits{0};
  server.Get("/w/api.php", [&](const httplib::Request& req, httplib::Response& res) {
    ++hits;
    const std::string action = req.get_param_value("action");
    if (action == "wbsearchentities") {
      nlohmann::json out = {
          {"search",
           {{{"id", "Q4242"},
             {"label", "cachling"},
             {"match", {{"type", "label"}, {"language", "en"}, {"text", "cachling"}}}}}},
          {"success", 1}};
      res.set_content(out.dump(), "application/json");
    } else {
      nlohmann::json out = {
          {"entities",
           {{"Q4242",
             {{"id", "Q4242"},
              {"labels", {{"en", {{"language", "en"}, {"value", "cachling"}}}}},
              {"claims", nlohmann::json::object()}}}}},
          {"success", 1}};
      res.set_content(out.dump(), "application/json");
    }
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread listener([&] { server.listen_after_bind(); });

  auto cache_dir = std::filesystem::temp_directory_path() / "cultureval_wd_cache";
  std::filesystem::remove_all(cache_dir);

  {
    WikidataClient::Options opts;
    opts.base_url = "http://127.0.0.1:" + std::to_string(port);
    opts.cache_dir = cache_dir;
    WikidataClient client(std::move(opts));
    CHECK(client.search_candidates("cachling", "en").size() == 1);
    CHECK(client.entity("Q4242").labels.at("en") == "cachling");
    CHECK(client.network_calls() == 2);
    // repeat: served from memory
    client.search_candidates("cachling", "en");
    CHECK(client.network_calls() == 2);
  }
  server.stop();
  listener.join();
  CHECK(hits == 2);

  // a fresh offline client replays from the disk snapshots
  WikidataClient::Options offline_opts;
  offline_opts.offline = true;
  offline_opts.cache_dir = cache_dir;
  WikidataClient replay(std::move(offline_opts));
  CHECK(replay.search_candidates("cachling", "en").at(0).qid == "Q4242");
  CHECK(replay.entity("Q4242").qid == "Q4242");
  CHECK(replay.network_calls() == 0);
}

TEST_CASE("linked entity json round-trips") {
  LinkedEntity e;
  e.surface = "lemon";
  e.language = "en";
  e.topic = Topic::food;
  e.qid = "Q9200500";
  e.status = LinkStatus::resolved;
  e.winning_path = OntologyPath{{{"Q9200500", Relation::instance_of},
                                 {"Q9200501", Relation::subclass_of}},
                                "Q2095"};
  e.labels = {{"en", "lemon"}};
  e.origin_countries = {"Q29"};
  e.description = "yellow citrus fruit";
  const std::string line = linked_to_json(e);
  const LinkedEntity back = linked_from_json(line);
  CHECK(linked_to_json(back) == line);
  CHECK(back.winning_path->steps.size() == 2);
}
