#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <vector>

#include "cultureval/types.hpp"

namespace cultureval::wikidata {

struct CandidateEntity {
  enum class MatchKind { label, alias };
  std::string qid;           // Q + digits
  std::string matched_label; // the label/alias text that matched
  std::string match_language;
  MatchKind kind = MatchKind::label;
};

bool is_qid(std::string_view s);
long long qid_number(std::string_view qid);

enum class Relation { instance_of, subclass_of, part_of };
inline constexpr std::array<Relation, 3> kAllRelations = {
    Relation::instance_of, Relation::subclass_of, Relation::part_of};

std::string_view to_string(Relation r);
std::string_view property_of(Relation r);  // P31 / P279 / P361
Relation relation_from_string(std::string_view s);

struct PathStep {
  std::string qid;       // node the step leaves
  Relation relation;     // edge taken upward from that node
  bool operator==(const PathStep&) const = default;
};

/// Upward chain from a candidate to a topic root. steps.size() is the edge
/// count; a candidate that is itself a root has an empty chain.
struct OntologyPath {
  std::vector<PathStep> steps;
  std::string terminal_qid;
};

enum class LinkStatus {
  resolved,
  unresolved_no_match,       // label/alias search found nothing
  unresolved_ambiguous,      // candidates exist but could not be evaluated
  unresolved_no_valid_path,  // no candidate reaches a topic root
};

std::string_view to_string(LinkStatus s);
LinkStatus link_status_from_string(std::string_view s);

struct LinkedEntity {
  std::string surface;
  std::string language;  // prompt language the surface came from
  Topic topic = Topic::food;
  std::string qid;       // empty unless resolved
  LinkStatus status = LinkStatus::unresolved_no_match;
  std::optional<OntologyPath> winning_path;
  std::map<std::string, std::string> labels;   // language -> label
  std::set<std::string> origin_countries;      // country QIDs
  std::string description;
  bool enrichment_pending = false;
};

std::string linked_to_json(const LinkedEntity& e);
LinkedEntity linked_from_json(const std::string& line);

struct TopicRootConfig {
  std::map<Topic, std::set<std::string>> roots;
  int depth_cap = 10;
  int branching_bound = 64;  // node budget per candidate = bound * depth_cap
  std::string origin_property = "P495";
  std::string citizenship_property = "P27";
  // Creative-work topics fall back to the creator's citizenship when the
  // work itself has no origin country.
  std::map<Topic, std::vector<std::string>> creator_properties;

  const std::set<std::string>& roots_for(Topic topic) const;
};

TopicRootConfig load_roots(const std::filesystem::path& path);

/// Ontology fragment of one entity: labels, aliases, upward relations and the
/// item-valued claims the pipeline consumes.
struct EntityData {
  std::string qid;
  std::map<std::string, std::string> labels;
  std::map<std::string, std::vector<std::string>> aliases;
  std::map<std::string, std::string> descriptions;
  std::array<std::vector<std::string>, 3> parents;  // indexed by Relation
  std::map<std::string, std::vector<std::string>> item_claims;  // property -> QIDs
};

/// Caching client for the entity-search and entity-data endpooints. Every raw
/// response body is snapshotted to cache_dir (one file per request key), so
/// runs are resumable and tests replay offline.
class WikidataClient {
 public:
  struct Options {
    std::string base_url = "https://www.wikidata.org";
    std::string api_path = "/w/api.php";
    bool offline = false;
    std::filesystem::path cache_dir;
    double requests_per_minute = 0;
    int retries = 3;
    double backoff_initial_ms = 250;
    int search_limit = 20;
  };

  explicit WikidataClient(Options options);
  ~WikidataClient();

  /// Verbatim wbsearchentities body (cache-through).
  std::string search_raw(const std::string& term, const std::string& language);
  /// Verbatim wbgetentities body (cache-through).
  std::string entity_raw(const std::string& qid);

  /// Exact-match candidates (case-folded, whitespace-normalized) against
  /// labels and aliases in `language`, falling back to English when empty.
  /// Deterministic order: ascending numeric QID.
  std::vector<CandidateEntity> search_candidates(const std::string& surface,
                                                 const std::string& language);

  EntityData entity(const std::string& qid);

  std::size_t network_calls() const { return network_calls_; }
  std::size_t cache_hits() const { return cache_hits_; }
  const Options& options() const { return options_; }

 private:
  std::string fetch_cached(const std::string& cache_key, const std::string& query);
  std::string http_get(const std::string& query);

  Options options_;
  std::shared_mutex cache_mu_;
  std::map<std::string, std::string> memory_cache_;
  std::mutex net_mu_;  // serializes outbound traffic with the rate limiter
  std::size_t network_calls_ = 0;
  std::size_t cache_hits_ = 0;
  std::unique_ptr<class RateGate> gate_;
};

// ---------------------------------------------------------------------------
// Disambiguation

struct CandidateEval {
  std::string qid;
  bool valid = false;
  int path_length = -1;
  std::string reason;  // "reached_root" | "no_path_to_root" | "fetch_failed" | "budget_exhausted"
};

struct DisambiguationResult {
  std::optional<CandidateEntity> winner;
  std::optional<OntologyPath> path;
  LinkStatus status = LinkStatus::unresolved_no_valid_path;
  std::vector<CandidateEval> evals;  // one per candidate, input order
  int fetch_failures = 0;
};

/// Breadth-first upward traversal per candidate over instance-of /
/// subclass-of / part-of, depth-capped and cycle-safe. A candidate is valid
/// if any path reaches a root for the topic; the winner is the valid
/// candidate with the shortest path, ties broken by ascending numeric QID.
/// Throws FetchError when every candidate lookup failed.
DisambiguationResult disambiguate(const std::vector<CandidateEntity>& candidates,
                                  const TopicRootConfig& roots, Topic topic,
                                  WikidataClient& client);

/// Fills labels, description and origin countries for a resolved entity.
/// Creative works without an origin fall back to the creator's citizenship.
/// Fetch failures leave the entity intact with enrichment_pending set.
void enrich(LinkedEntity& entity, const std::vector<std::string>& languages,
            const TopicRootConfig& roots, WikidataClient& client);

// ---------------------------------------------------------------------------
// Whole-table linking

struct SurfaceKey {
  std::string surface;
  std::string language;
  Topic topic = Topic::food;
  auto operator<=>(const SurfaceKey&) const = default;
};

struct TopicDiagnostics {
  std::size_t surfaces = 0;
  std::size_t resolved = 0;
  std::size_t unresolved = 0;
  std::size_t unique_qids = 0;
  std::size_t fetch_failures = 0;
  double missing_qid_proportion = 0.0;  // unresolved / surfaces
  double resolve_rate = 0.0;            // unique QIDs / unique surfaces
  bool defined = false;                 // false when surfaces == 0
};

struct LinkResult {
  std::vector<LinkedEntity> table;  // sorted by (topic, language, surface)
  std::map<Topic, TopicDiagnostics> diagnostics;
};

/// Links every distinct (surface, language, topic) once; never aborts on
/// per-item failures.
LinkResult link_all(const std::set<SurfaceKey>& keys, const TopicRootConfig& roots,
                    const std::vector<std::string>& label_languages, WikidataClient& client);

}  // namespace cultureval::wikidata
