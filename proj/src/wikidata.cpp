#include "cultureval/wikidata.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <thread>

#include <json.hpp>

namespace cultureval::wikidata {

using nlohmann::json;

bool is_qid(std::string_view s) {
  if (s.size() < 2 || s[0] != 'Q') return false;
  for (std::size_t i = 1; i < s.size(); ++i)
    if (s[i] < '0' || s[i] > '9') return false;
  return true;
}

long long qid_number(std::string_view qid) {
  if (!is_qid(qid)) return -1;
  long long n = 0;
  for (std::size_t i = 1; i < qid.size(); ++i) n = n * 10 + (qid[i] - '0');
  return n;
}

std::string_view to_string(Relation r) {
  switch (r) {
    case Relation::instance_of: return "instance_of";
    case Relation::subclass_of: return "subclass_of";
    case Relation::part_of: return "part_of";
  }
  return "instance_of";
}

std::string_view property_of(Relation r) {
  switch (r) {
    case Relation::instance_of: return "P31";
    case Relation::subclass_of: return "P279";
    case Relation::part_of: return "P361";
  }
  return "P31";
}

Relation relation_from_string(std::string_view s) {
  for (Relation r : kAllRelations)
    if (to_string(r) == s) return r;
  throw ConfigError("unknown relation: " + std::string(s));
}

std::string_view to_string(LinkStatus s) {
  switch (s) {
    case LinkStatus::resolved: return "resolved";
    case LinkStatus::unresolved_no_match: return "unresolved_no_match";
    case LinkStatus::unresolved_ambiguous: return "unresolved_ambiguous";
    case LinkStatus::unresolved_no_valid_path: return "unresolved_no_valid_path";
  }
  return "unresolved_no_match";
}

LinkStatus link_status_from_string(std::string_view s) {
  if (s == "resolved") return LinkStatus::resolved;
  if (s == "unresolved_no_match") return LinkStatus::unresolved_no_match;
  if (s == "unresolved_ambiguous") return LinkStatus::unresolved_ambiguous;
  if (s == "unresolved_no_valid_path") return LinkStatus::unresolved_no_valid_path;
  throw ConfigError("unknown link status: " + std::string(s));
}

std::string linked_to_json(const LinkedEntity& e) {
  json j;
  j["surface"] = e.surface;
  j["language"] = e.language;
  j["topic"] = std::string(to_string(e.topic));
  j["qid"] = e.qid;
  j["status"] = std::string(to_string(e.status));
  if (e.winning_path) {
    json steps = json::array();
    for (const PathStep& s : e.winning_path->steps)
      steps.push_back({{"qid", s.qid}, {"relation", std::string(to_string(s.relation))}});
    j["path"] = {{"steps", std::move(steps)}, {"terminal", e.winning_path->terminal_qid}};
  }
  j["labels"] = e.labels;
  j["origin_countries"] = e.origin_countries;
  j["description"] = e.description;
  j["enrichment_pending"] = e.enrichment_pending;
  return j.dump();
}

LinkedEntity linked_from_json(const std::string& line) {
  json j = json::parse(line);
  LinkedEntity e;
  e.surface = j.at("surface").get<std::string>();
  e.language = j.at("language").get<std::string>();
  e.topic = topic_from_string(j.at("topic").get<std::string>());
  e.qid = j.value("qid", "");
  e.status = link_status_from_string(j.at("status").get<std::string>());
  if (j.contains("path")) {
    OntologyPath p;
    for (const auto& s : j["path"]["steps"])
      p.steps.push_back({s.at("qid").get<std::string>(),
                         relation_from_string(s.at("relation").get<std::string>())});
    p.terminal_qid = j["path"]["terminal"].get<std::string>();
    e.winning_path = std::move(p);
  }
  if (j.contains("labels"))
    e.labels = j["labels"].get<std::map<std::string, std::string>>();
  if (j.contains("origin_countries"))
    for (const auto& c : j["origin_countries"]) e.origin_countries.insert(c.get<std::string>());
  e.description = j.value("description", "");
  e.enrichment_pending = j.value("enrichment_pending", false);
  return e;
}

const std::set<std::string>& TopicRootConfig::roots_for(Topic topic) const {
  auto it = roots.find(topic);
  if (it == roots.end() || it->second.empty())
    throw ConfigError("no root QIDs configured for topic " + std::string(to_string(topic)));
  return it->second;
}

TopicRootConfig load_roots(const std::filesystem::path& path) {
  json doc = json::parse(read_file(path), nullptr, true, true);
  TopicRootConfig cfg;
  try {
    for (auto it = doc.at("topics").begin(); it != doc.at("topics").end(); ++it) {
      std::set<std::string> qids;
      for (const auto& q : it.value()) {
        const std::string qid = q.get<std::string>();
        if (!is_qid(qid)) throw ConfigError("invalid root QID: " + qid);
        qids.insert(qid);
      }
      cfg.roots[topic_from_string(it.key())] = std::move(qids);
    }
    cfg.depth_cap = doc.value("depth_cap", 10);
    cfg.branching_bound = doc.value("branching_bound", 64);
    cfg.origin_property = doc.value("origin_property", "P495");
    cfg.citizenship_property = doc.value("citizenship_property", "P27");
    if (doc.contains("creator_properties")) {
      for (auto it = doc["creator_properties"].begin(); it != doc["creator_properties"].end(); ++it) {
        std::vector<std::string> props;
        for (const auto& p : it.value()) props.push_back(p.get<std::string>());
        cfg.creator_properties[topic_from_string(it.key())] = std::move(props);
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError("roots " + path.string() + ": " + e.what());
  }
  if (cfg.depth_cap <= 0) throw ConfigError("depth_cap must be positive");
  return cfg;
}

// ---------------------------------------------------------------------------
// Client

namespace {

std::string url_encode(std::string_view s) {
  static const char* hex = "0123456789ABCDEF";
  std::string out;
  out.reserve(s.size() * 3);
  for (unsigned char c : s) {
    const bool keep = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                      (c >= '0' && c <= '9') || c == '-' || c == '_' || c == '.' || c == '~';
    if (keep) {
      out += static_cast<char>(c);
    } else {
      out += '%';
      out += hex[c >> 4];
      out += hex[c & 0xF];
    }
  }
  return out;
}

}  // namespace

// Thin indirection so the header does not pull in the gateway just for the
// token bucket.
class RateGate {
 public:
  explicit RateGate(double rpm) : rpm_(rpm), tokens_(1.0), last_(std::chrono::steady_clock::now()) {}

  void acquire() {
    if (rpm_ <= 0) return;
    const double per_second = rpm_ / 60.0;
    while (true) {
      std::unique_lock lock(mu_);
      const auto now = std::chrono::steady_clock::now();
      tokens_ = std::min(1.0 + per_second,
                         tokens_ + std::chrono::duration<double>(now - last_).count() * per_second);
      last_ = now;
      if (tokens_ >= 1.0) {
        tokens_ -= 1.0;
        return;
      }
      const double wait_s = (1.0 - tokens_) / per_second;
      lock.unlock();
      std::this_thread::sleep_for(std::chrono::duration<double>(wait_s));
    }
  }

 private:
  double rpm_;
  double tokens_;
  std::chrono::steady_clock::time_point last_;
  std::mutex mu_;
};

WikidataClient::WikidataClient(Options options)
    : options_(std::move(options)), gate_(std::make_unique<RateGate>(options_.requests_per_minute)) {
  if (!options_.cache_dir.empty()) std::filesystem::create_directories(options_.cache_dir);
}

WikidataClient::~WikidataClient() = default;

std::string WikidataClient::fetch_cached(const std::string& cache_key, const std::string& query) {
  {
    std::shared_lock lock(cache_mu_);
    auto it = memory_cache_.find(cache_key);
    if (it != memory_cache_.end()) {
      ++cache_hits_;
      return it->second;
    }
  }

  const std::filesystem::path snapshot =
      options_.cache_dir.empty() ? std::filesystem::path()
                                 : options_.cache_dir / (cache_key + ".json");
  if (!snapshot.empty() && std::filesystem::exists(snapshot)) {
    std::string body = read_file(snapshot);
    std::unique_lock lock(cache_mu_);
    ++cache_hits_;
    memory_cache_[cache_key] = body;
    return body;
  }

  if (options_.offline)
    throw FetchError("offline: no snapshot for request key " + cache_key);

  std::string body;
  std::string last_error;
  bool got = false;
  for (int attempt = 0; attempt < std::max(1, options_.retries); ++attempt) {
    if (attempt > 0)
      std::this_thread::sleep_for(std::chrono::duration<double, std::milli>(
          options_.backoff_initial_ms * std::pow(2.0, attempt - 1)));
    try {
      gate_->acquire();
      body = http_get(query);
      got = true;
      break;
    } catch (const FetchError& e) {
      last_error = e.what();
    }
  }
  if (!got) throw FetchError("wikidata request failed: " + last_error);

  {
    std::unique_lock lock(cache_mu_);
    memory_cache_[cache_key] = body;
  }
  if (!snapshot.empty()) write_file_atomic(snapshot, body);
  return body;
}

std::string WikidataClient::search_raw(const std::string& term, const std::string& language) {
  const std::string norm = normalize_surface(term);
  const std::string key =
      "search__" + sanitize_filename(language) + "__" + hash_hex(norm);
  const std::string query = options_.api_path +
                            "?action=wbsearchentities&format=json&type=item&limit=" +
                            std::to_string(options_.search_limit) + "&language=" +
                            url_encode(language) + "&search=" + url_encode(norm);
  return fetch_cached(key, query);
}

std::string WikidataClient::entity_raw(const std::string& qid) {
  if (!is_qid(qid)) throw UsageError("entity_raw: not a QID: " + qid);
  const std::string key = "entity__" + qid;
  const std::string query =
      options_.api_path +
      "?action=wbgetentities&format=json&props=claims%7Clabels%7Caliases%7Cdescriptions&ids=" + qid;
  return fetch_cached(key, query);
}

std::vector<CandidateEntity> WikidataClient::search_candidates(const std::string& surface,
                                                               const std::string& language) {
  const std::string norm = normalize_surface(surface);
  if (norm.empty()) throw UsageError("search_candidates: surface is empty after normalization");

  auto collect = [&](const std::string& lang) {
    std::vector<CandidateEntity> found;
    json doc = json::parse(search_raw(norm, lang), nullptr, false);
    if (!doc.is_object() || !doc.contains("search")) return found;
    for (const auto& item : doc["search"]) {
      CandidateEntity c;
      c.qid = item.value("id", "");
      if (!is_qid(c.qid)) continue;
      std::string matched;
      std::string kind = "label";
      if (item.contains("match")) {
        matched = item["match"].value("text", "");
        kind = item["match"].value("type", "label");
        c.match_language = item["match"].value("language", lang);
      } else {
        matched = item.value("label", "");
        c.match_language = lang;
      }
      // The endpoint matches prefixes; keep exact (folded) matches only.
      if (normalize_surface(matched) != norm) continue;
      c.matched_label = matched;
      c.kind = kind == "alias" ? CandidateEntity::MatchKind::alias
                               : CandidateEntity::MatchKind::label;
      found.push_back(std::move(c));
    }
    return found;
  };

  std::vector<CandidateEntity> out = collect(language);
  if (out.empty() && language != "en") out = collect("en");

  std::sort(out.begin(), out.end(), [](const CandidateEntity& a, const CandidateEntity& b) {
    return qid_number(a.qid) < qid_number(b.qid);
  });
  out.erase(std::unique(out.begin(), out.end(),
                        [](const CandidateEntity& a, const CandidateEntity& b) {
                          return a.qid == b.qid;
                        }),
            out.end());
  return out;
}

EntityData WikidataClient::entity(const std::string& qid) {
  json doc = json::parse(entity_raw(qid), nullptr, false);
  EntityData data;
  data.qid = qid;
  if (!doc.is_object() || !doc.contains("entities") || !doc["entities"].contains(qid))
    throw FetchError("malformed entity response for " + qid);
  const json& ent = doc["entities"][qid];

  if (ent.contains("labels"))
    for (auto it = ent["labels"].begin(); it != ent["labels"].end(); ++it)
      data.labels[it.key()] = it.value().value("value", "");
  if (ent.contains("aliases"))
    for (auto it = ent["aliases"].begin(); it != ent["aliases"].end(); ++it)
      for (const auto& a : it.value()) data.aliases[it.key()].push_back(a.value("value", ""));
  if (ent.contains("descriptions"))
    for (auto it = ent["descriptions"].begin(); it != ent["descriptions"].end(); ++it)
      data.descriptions[it.key()] = it.value().value("value", "");

  if (ent.contains("claims")) {
    auto items_of = [&](const std::string& prop) {
      std::vector<std::string> out;
      if (!ent["claims"].contains(prop)) return out;
      for (const auto& stmt : ent["claims"][prop]) {
        try {
          const json& dv = stmt.at("mainsnak").at("datavalue").at("value");
          std::string target = dv.value("id", "");
          if (target.empty() && dv.contains("numeric-id"))
            target = "Q" + std::to_string(dv["numeric-id"].get<long long>());
          if (is_qid(target)) out.push_back(target);
        } catch (const json::exception&) {
          // novalue / somevalue snaks carry no item
        }
      }
      return out;
    };
    for (Relation r : kAllRelations)
      data.parents[static_cast<std::size_t>(r)] = items_of(std::string(property_of(r)));
    for (const std::string& prop : {std::string("P495"), std::string("P27"), std::string("P50"),
                                    std::string("P175"), std::string("P86"), std::string("P170")})
      data.item_claims[prop] = items_of(prop);
  }
  return data;
}

// ---------------------------------------------------------------------------
// Traversal

namespace {

std::optional<OntologyPath> shortest_path_to_root(const std::string& start,
                                                  const std::set<std::string>& roots,
                                                  const TopicRootConfig& cfg,
                                                  WikidataClient& client, bool* budget_hit) {
  if (roots.count(start)) return OntologyPath{{}, start};

  const std::size_t budget =
      static_cast<std::size_t>(cfg.branching_bound) * static_cast<std::size_t>(cfg.depth_cap);
  std::set<std::string> visited{start};
  std::map<std::string, std::pair<std::string, Relation>> came_from;
  std::deque<std::string> frontier{start};

  auto reconstruct = [&](const std::string& terminal) {
    OntologyPath path;
    path.terminal_qid = terminal;
    std::string node = terminal;
    std::vector<PathStep> reversed;
    while (node != start) {
      const auto& [prev, rel] = came_from.at(node);
      reversed.push_back({prev, rel});
      node = prev;
    }
    path.steps.assign(reversed.rbegin(), reversed.rend());
    return path;
  };

  for (int depth = 1; depth <= cfg.depth_cap && !frontier.empty(); ++depth) {
    std::deque<std::string> next_frontier;
    for (const std::string& node : frontier) {
      const EntityData data = client.entity(node);
      for (Relation rel : kAllRelations) {
        for (const std::string& parent : data.parents[static_cast<std::size_t>(rel)]) {
          if (visited.count(parent)) continue;
          if (visited.size() >= budget) {
            if (budget_hit) *budget_hit = true;
            return std::nullopt;
          }
          visited.insert(parent);
          came_from[parent] = {node, rel};
          if (roots.count(parent)) return reconstruct(parent);
          next_frontier.push_back(parent);
        }
      }
    }
    frontier = std::move(next_frontier);
  }
  return std::nullopt;
}

}  // namespace

DisambiguationResult disambiguate(const std::vector<CandidateEntity>& candidates,
                                  const TopicRootConfig& cfg, Topic topic,
                                  WikidataClient& client) {
  DisambiguationResult result;
  if (candidates.empty()) {
    result.status = LinkStatus::unresolved_no_match;
    return result;
  }
  const std::set<std::string>& roots = cfg.roots_for(topic);

  const CandidateEntity* best = nullptr;
  std::optional<OntologyPath> best_path;
  for (const CandidateEntity& cand : candidates) {
    CandidateEval eval;
    eval.qid = cand.qid;
    try {
      bool budget_hit = false;
      std::optional<OntologyPath> path =
          shortest_path_to_root(cand.qid, roots, cfg, client, &budget_hit);
      if (path) {
        eval.valid = true;
        eval.path_length = static_cast<int>(path->steps.size());
        eval.reason = "reached_root";
        const bool better =
            !best || eval.path_length < static_cast<int>(best_path->steps.size()) ||
            (eval.path_length == static_cast<int>(best_path->steps.size()) &&
             qid_number(cand.qid) < qid_number(best->qid));
        if (better) {
          best = &cand;
          best_path = std::move(path);
        }
      } else {
        eval.reason = budget_hit ? "budget_exhausted" : "no_path_to_root";
      }
    } catch (const FetchError&) {
      eval.reason = "fetch_failed";
      ++result.fetch_failures;
    }
    result.evals.push_back(std::move(eval));
  }

  if (best) {
    result.winner = *best;
    result.path = std::move(best_path);
    result.status = LinkStatus::resolved;
  } else if (result.fetch_failures == static_cast<int>(candidates.size())) {
    throw FetchError("all " + std::to_string(candidates.size()) + " candidates failed to fetch");
  } else {
    result.status = LinkStatus::unresolved_no_valid_path;
  }
  return result;
}

void enrich(LinkedEntity& entity, const std::vector<std::string>& languages,
            const TopicRootConfig& cfg, WikidataClient& client) {
  if (entity.status != LinkStatus::resolved || entity.qid.empty())
    throw UsageError("enrich requires a resolved entity");

  EntityData data;
  try {
    data = client.entity(entity.qid);
  } catch (const FetchError&) {
    entity.enrichment_pending = true;
    return;
  }

  for (const std::string& lang : languages) {
    auto it = data.labels.find(lang);
    if (it != data.labels.end()) entity.labels[lang] = it->second;
  }
  auto desc = data.descriptions.find("en");
  if (desc == data.descriptions.end() && !languages.empty())
    desc = data.descriptions.find(languages.front());
  if (desc != data.descriptions.end()) entity.description = desc->second;

  std::set<std::string> origins(data.item_claims[cfg.origin_property].begin(),
                                data.item_claims[cfg.origin_property].end());

  if (origins.empty()) {
    auto props = cfg.creator_properties.find(entity.topic);
    if (props != cfg.creator_properties.end()) {
      for (const std::string& prop : props->second) {
        for (const std::string& creator : data.item_claims[prop]) {
          try {
            const EntityData person = client.entity(creator);
            auto it = person.item_claims.find(cfg.citizenship_property);
            if (it != person.item_claims.end())
              origins.insert(it->second.begin(), it->second.end());
          } catch (const FetchError&) {
            entity.enrichment_pending = true;
          }
        }
      }
    }
  }
  entity.origin_countries = std::move(origins);
}

LinkResult link_all(const std::set<SurfaceKey>& keys, const TopicRootConfig& cfg,
                    const std::vector<std::string>& label_languages, WikidataClient& client) {
  LinkResult result;
  std::map<Topic, std::set<std::string>> qids_per_topic;
  std::map<Topic, std::set<std::string>> surfaces_per_topic;

  for (const SurfaceKey& key : keys) {
    if (normalize_surface(key.surface).empty()) continue;

    LinkedEntity entity;
    entity.surface = key.surface;
    entity.language = key.language;
    entity.topic = key.topic;

    TopicDiagnostics& diag = result.diagnostics[key.topic];
    ++diag.surfaces;
    surfaces_per_topic[key.topic].insert(normalize_surface(key.surface));
    diag.defined = true;

    try {
      const std::vector<CandidateEntity> candidates =
          client.search_candidates(key.surface, key.language);
      if (candidates.empty()) {
        entity.status = LinkStatus::unresolved_no_match;
      } else {
        DisambiguationResult dis = disambiguate(candidates, cfg, key.topic, client);
        diag.fetch_failures += static_cast<std::size_t>(dis.fetch_failures);
        entity.status = dis.status;
        if (dis.status == LinkStatus::resolved) {
          entity.qid = dis.winner->qid;
          entity.winning_path = dis.path;
          enrich(entity, label_languages, cfg, client);
        }
      }
    } catch (const FetchError&) {
      // Search or every candidate failed: undecidable this run, not "no match".
      entity.status = LinkStatus::unresolved_ambiguous;
      ++diag.fetch_failures;
    }

    if (entity.status == LinkStatus::resolved) {
      ++diag.resolved;
      qids_per_topic[key.topic].insert(entity.qid);
    } else {
      ++diag.unresolved;
    }
    result.table.push_back(std::move(entity));
  }

  for (auto& [topic, diag] : result.diagnostics) {
    diag.unique_qids = qids_per_topic[topic].size();
    const std::size_t unique_surfaces = surfaces_per_topic[topic].size();
    if (diag.surfaces > 0) {
      diag.missing_qid_proportion = static_cast<double>(diag.unresolved) / diag.surfaces;
      diag.resolve_rate =
          unique_surfaces ? static_cast<double>(diag.unique_qids) / unique_surfaces : 0.0;
    }
  }

  std::sort(result.table.begin(), result.table.end(),
            [](const LinkedEntity& a, const LinkedEntity& b) {
              return std::tie(a.topic, a.language, a.surface) <
                     std::tie(b.topic, b.language, b.surface);
            });
  return result;
}

}  // namespace cultureval::wikidata
