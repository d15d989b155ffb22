#include "cultureval/metrics.hpp"

#include <algorithm>

namespace cultureval::metrics {

void EntitySet::add_member(const EntityMember& member) {
  if (member.resolved()) {
    for (const EntityMember& m : members)
      if (m.qid == member.qid) return;
  } else {
    for (const EntityMember& m : members)
      if (!m.resolved() && m.surface == member.surface) return;
  }
  members.push_back(member);
}

std::size_t EntitySet::resolved_count() const {
  return static_cast<std::size_t>(
      std::count_if(members.begin(), members.end(), [](const auto& m) { return m.resolved(); }));
}

std::set<std::string> EntitySet::qid_set() const {
  std::set<std::string> out;
  for (const EntityMember& m : members)
    if (m.resolved()) out.insert(m.qid);
  return out;
}

std::optional<double> granularity(const EntitySet& set) {
  std::size_t scored = 0, specific = 0;
  for (const EntityMember& m : set.members) {
    if (!m.resolved() || m.granularity == GranularityClass::unscored) continue;
    ++scored;
    if (m.granularity == GranularityClass::specific) ++specific;
  }
  if (scored == 0) return std::nullopt;
  return static_cast<double>(specific) / static_cast<double>(scored);
}

int diversity(const EntitySet& set) {
  return static_cast<int>(set.qid_set().size());
}

std::optional<double> specificity(const EntitySet& set, const std::string& target_country_qid) {
  std::size_t resolved = 0, matching = 0;
  for (const EntityMember& m : set.members) {
    if (!m.resolved()) continue;
    ++resolved;
    if (m.origins.count(target_country_qid)) ++matching;
  }
  if (resolved == 0) return std::nullopt;
  return static_cast<double>(matching) / static_cast<double>(resolved);
}

std::optional<double> specificity_gain(const EntitySet& explicit_set,
                                       const EntitySet& neutral_set,
                                       const std::string& target_country_qid) {
  const std::optional<double> e = specificity(explicit_set, target_country_qid);
  const std::optional<double> n = specificity(neutral_set, target_country_qid);
  if (!e || !n) return std::nullopt;
  return *e - *n;
}

std::optional<double> consensus(const EntitySet& a, const EntitySet& b) {
  if (a.key.model_id != b.key.model_id || a.key.topic != b.key.topic ||
      a.key.condition != b.key.condition || a.key.context_country != b.key.context_country)
    throw UsageError("consensus requires sets differing only in language");

  const std::set<std::string> qa = a.qid_set();
  const std::set<std::string> qb = b.qid_set();
  if (qa.empty() && qb.empty()) return std::nullopt;

  std::size_t inter = 0;
  for (const std::string& q : qa)
    if (qb.count(q)) ++inter;
  const std::size_t uni = qa.size() + qb.size() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

MetricReport evaluate(const EntitySet& set,
                      const std::vector<std::pair<std::string, std::string>>& country_targets) {
  MetricReport report;
  report.key = set.key;
  report.granularity = granularity(set);
  report.diversity = diversity(set);
  for (const auto& [country_id, country_qid] : country_targets)
    report.specificity[country_id] = specificity(set, country_qid);
  report.n_responses = set.n_responses;
  report.members = set.members.size();
  report.resolved = set.resolved_count();
  report.pre_dedup_count = set.pre_dedup_count;
  report.unresolved_fraction =
      set.members.empty()
          ? 0.0
          : static_cast<double>(set.members.size() - report.resolved) / set.members.size();
  return report;
}

Summary summarize(const std::vector<double>& values) {
  Summary s;
  s.n = values.size();
  if (s.n == 0) return s;
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(s.n);
  double sq = 0.0;
  for (double v : values) sq += (v - s.mean) * (v - s.mean);
  s.variance = sq / static_cast<double>(s.n);
  return s;
}

ConsensusMatrix consensus_matrix(const std::map<EntitySetKey, EntitySet>& cells,
                                 const std::string& model_id, Topic topic,
                                 const std::vector<std::string>& languages) {
  ConsensusMatrix matrix;
  matrix.languages = languages;
  const std::size_t n = languages.size();
  matrix.values.assign(n, std::vector<std::optional<double>>(n));

  // (condition, context) combinations present per language for this model/topic
  auto sets_for = [&](const std::string& lang) {
    std::map<std::pair<Condition, std::string>, const EntitySet*> out;
    for (const auto& [key, set] : cells) {
      if (key.model_id != model_id || key.topic != topic || key.language != lang) continue;
      out[{key.condition, key.context_country}] = &set;
    }
    return out;
  };

  std::vector<std::map<std::pair<Condition, std::string>, const EntitySet*>> per_lang;
  per_lang.reserve(n);
  for (const std::string& lang : languages) per_lang.push_back(sets_for(lang));

  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) {
        bool nonempty = false;
        for (const auto& [_, set] : per_lang[i])
          if (!set->qid_set().empty()) nonempty = true;
        if (nonempty) matrix.values[i][j] = 1.0;
        continue;
      }
      if (j < i) {
        matrix.values[i][j] = matrix.values[j][i];
        continue;
      }
      std::vector<double> pair_values;
      for (const auto& [ctx, set_a] : per_lang[i]) {
        auto it = per_lang[j].find(ctx);
        if (it == per_lang[j].end()) continue;
        const std::optional<double> c = consensus(*set_a, *it->second);
        if (c) pair_values.push_back(*c);
      }
      if (!pair_values.empty()) matrix.values[i][j] = summarize(pair_values).mean;
    }
  }
  return matrix;
}

}  // namespace cultureval::metrics
