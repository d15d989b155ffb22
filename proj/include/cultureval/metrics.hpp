#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "cultureval/types.hpp"

namespace cultureval::metrics {

/// One evaluated prompt cell. Implicit cells carry the country the prompt
/// name is typical for, so cross-language pairing works for all conditions.
struct EntitySetKey {
  std::string model_id;
  std::string language;
  Topic topic = Topic::food;
  Condition condition = Condition::neutral;
  std::string context_country;  // empty for neutral
  auto operator<=>(const EntitySetKey&) const = default;
};

struct EntityMember {
  std::string surface;
  std::string qid;  // empty when unresolved
  GranularityClass granularity = GranularityClass::unscored;
  std::set<std::string> origins;  // country QIDs

  bool resolved() const { return !qid.empty(); }
};

/// Union of entities over all responses of one cell. Resolved members form a
/// set keyed by QID; unresolved members dedup by surface.
struct EntitySet {
  EntitySetKey key;
  std::vector<EntityMember> members;
  int n_responses = 0;
  int pre_dedup_count = 0;

  /// Set-semantics insert; first occurrence wins on conflicts.
  void add_member(const EntityMember& member);
  std::size_t resolved_count() const;
  std::set<std::string> qid_set() const;
};

/// Mean binary score (specific=1, general=0) over resolved, scored members.
/// No scored members -> nullopt (undefined, never zero).
std::optional<double> granularity(const EntitySet& set);

/// Count of distinct resolved QIDs.
int diversity(const EntitySet& set);

/// Fraction of resolved members whose origins contain the target country
/// QID. No resolved members -> nullopt.
std::optional<double> specificity(const EntitySet& set, const std::string& target_country_qid);

/// specificity(explicit) - specificity(neutral); range [-1, 1]. Undefined
/// when either side is undefined.
std::optional<double> specificity_gain(const EntitySet& explicit_set,
                                       const EntitySet& neutral_set,
                                       const std::string& target_country_qid);

/// Jaccard similarity over resolved QID sets. Both empty -> nullopt.
/// Throws UsageError unless the sets differ only in language.
std::optional<double> consensus(const EntitySet& a, const EntitySet& b);

struct MetricReport {
  EntitySetKey key;
  std::optional<double> granularity;
  int diversity = 0;
  std::map<std::string, std::optional<double>> specificity;  // country id -> value
  double unresolved_fraction = 0.0;
  int n_responses = 0;
  std::size_t members = 0;
  std::size_t resolved = 0;
  int pre_dedup_count = 0;
};

/// All per-cell metrics in one pass; specificity is computed for each
/// (country id, country QID) target.
MetricReport evaluate(const EntitySet& set,
                      const std::vector<std::pair<std::string, std::string>>& country_targets);

// ---------------------------------------------------------------------------
// Aggregation

struct Summary {
  double mean = 0.0;
  double variance = 0.0;  // population variance
  std::size_t n = 0;
};

Summary summarize(const std::vector<double>& values);

/// Languages-by-languages consensus matrix for one (model, topic): each pair
/// averages consensus over the (condition, context) combinations present in
/// both languages. Diagonal is 1 for nonempty cells.
struct ConsensusMatrix {
  std::vector<std::string> languages;
  std::vector<std::vector<std::optional<double>>> values;
};

ConsensusMatrix consensus_matrix(const std::map<EntitySetKey, EntitySet>& cells,
                                 const std::string& model_id, Topic topic,
                                 const std::vector<std::string>& languages);

}  // namespace cultureval::metrics
