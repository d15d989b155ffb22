#include "cultureval/extraction.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <thread>

#include <json.hpp>

namespace cultureval::extraction {

using nlohmann::json;

bool ExtractionSchema::valid(std::string* why) const {
  auto explain = [&](const std::string& msg) {
    if (why) *why = msg;
    return false;
  };
  if (entity_types.empty()) return explain("schema has no entity types");
  if (prompt_template.find("{response}") == std::string::npos)
    return explain("prompt template lacks a {response} slot");
  for (const std::string& t : specific_types) {
    if (general_types.count(t)) return explain("type in both partitions: " + t);
    if (std::find(entity_types.begin(), entity_types.end(), t) == entity_types.end())
      return explain("specific type not in entity_types: " + t);
  }
  for (const std::string& t : general_types)
    if (std::find(entity_types.begin(), entity_types.end(), t) == entity_types.end())
      return explain("general type not in entity_types: " + t);
  return true;
}

GranularityClass ExtractionSchema::classify(const std::string& type_label) const {
  if (specific_types.count(type_label)) return GranularityClass::specific;
  if (general_types.count(type_label)) return GranularityClass::general;
  return GranularityClass::unscored;
}

std::map<Topic, ExtractionSchema> load_schemas(const std::filesystem::path& path) {
  json doc = json::parse(read_file(path), nullptr, true, true);
  std::map<Topic, ExtractionSchema> out;
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    ExtractionSchema s;
    s.topic = topic_from_string(it.key());
    const json& body = it.value();
    for (const auto& t : body.at("entity_types")) s.entity_types.push_back(t.get<std::string>());
    for (const auto& t : body.at("specific")) s.specific_types.insert(t.get<std::string>());
    for (const auto& t : body.at("general")) s.general_types.insert(t.get<std::string>());
    s.prompt_template = body.at("prompt_template").get<std::string>();
    std::string why;
    if (!s.valid(&why)) throw ConfigError("schema " + it.key() + ": " + why);
    out[s.topic] = std::move(s);
  }
  return out;
}

std::string build_extraction_prompt(const ExtractionSchema& schema,
                                    const std::string& response_text) {
  return replace_all(schema.prompt_template, "{response}", response_text);
}

// ---------------------------------------------------------------------------
// Output parsing

namespace {

// Scans raw for a balanced top-level {...} span, respecting string literals
// and escapes, and counts the top-level key/value pairs while at it.
struct MappingSpan {
  std::size_t begin = std::string::npos;
  std::size_t end = std::string::npos;  // one past the closing brace
  int pair_count = 0;
};

MappingSpan find_mapping(const std::string& raw, std::size_t from) {
  MappingSpan span;
  const std::size_t open = raw.find('{', from);
  if (open == std::string::npos) return span;
  int depth = 0;
  bool in_string = false;
  bool escaped = false;
  int colons = 0;
  for (std::size_t i = open; i < raw.size(); ++i) {
    const char c = raw[i];
    if (in_string) {
      if (escaped)
        escaped = false;
      else if (c == '\\')
        escaped = true;
      else if (c == '"')
        in_string = false;
      continue;
    }
    switch (c) {
      case '"': in_string = true; break;
      case '{': ++depth; break;
      case '}':
        --depth;
        if (depth == 0) {
          span.begin = open;
          span.end = i + 1;
          span.pair_count = colons;
          return span;
        }
        break;
      case ':':
        if (depth == 1) ++colons;
        break;
      default: break;
    }
  }
  return span;
}

}  // namespace

ParseResult parse_extraction_output(const std::string& raw,
                                    const ExtractionSchema& schema) noexcept {
  ParseResult result;
  try {
    std::size_t from = 0;
    while (from < raw.size()) {
      const MappingSpan span = find_mapping(raw, from);
      if (span.begin == std::string::npos) break;
      json doc = json::parse(raw.substr(span.begin, span.end - span.begin), nullptr, false);
      if (doc.is_object()) {
        result.pre_dedup_count = span.pair_count;
        std::set<std::pair<std::string, std::string>> seen;
        for (auto it = doc.begin(); it != doc.end(); ++it) {
          const std::string surface(trim(it.key()));
          if (surface.empty()) continue;
          if (!it.value().is_string()) {
            ++result.dropped_unknown_types;
            continue;
          }
          const std::string type_label(trim(it.value().get<std::string>()));
          if (std::find(schema.entity_types.begin(), schema.entity_types.end(), type_label) ==
              schema.entity_types.end()) {
            ++result.dropped_unknown_types;
            continue;
          }
          if (!seen.emplace(surface, type_label).second) continue;
          ExtractedEntity e;
          e.surface = surface;
          e.type_label = type_label;
          e.granularity = schema.classify(type_label);
          result.entities.push_back(std::move(e));
        }
        return result;
      }
      from = span.begin + 1;  // balanced but not valid JSON; scan on
    }
  } catch (...) {
    // fall through to the failure flag
  }
  result.parse_failed = true;
  result.entities.clear();
  result.pre_dedup_count = 0;
  return result;
}

// ---------------------------------------------------------------------------
// Persistence

std::string extraction_to_json(const ExtractionRecord& r) {
  json j;
  j["prompt_id"] = r.ref.prompt_id;
  j["model_id"] = r.ref.model_id;
  j["sample_index"] = r.ref.sample_index;
  json ents = json::array();
  for (const auto& [surface, type] : r.entities)
    ents.push_back({{"surface", surface}, {"type", type}});
  j["entities"] = std::move(ents);
  j["pre_dedup_count"] = r.pre_dedup_count;
  j["parse_failed"] = r.parse_failed;
  return j.dump();
}

ExtractionRecord extraction_from_json(const std::string& line) {
  json j = json::parse(line);
  ExtractionRecord r;
  r.ref.prompt_id = j.at("prompt_id").get<std::string>();
  r.ref.model_id = j.at("model_id").get<std::string>();
  r.ref.sample_index = j.at("sample_index").get<int>();
  for (const auto& e : j.at("entities"))
    r.entities.emplace_back(e.at("surface").get<std::string>(), e.at("type").get<std::string>());
  r.pre_dedup_count = j.value("pre_dedup_count", 0);
  r.parse_failed = j.value("parse_failed", false);
  return r;
}

ExtractionStore::ExtractionStore(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
}

std::filesystem::path ExtractionStore::path_of(const std::string& partition) const {
  return dir_ / (partition + ".jsonl");
}

std::mutex& ExtractionStore::mutex_for(const std::string& partition) const {
  std::lock_guard lock(map_mu_);
  auto& slot = partition_mu_[partition];
  if (!slot) slot = std::make_unique<std::mutex>();
  return *slot;
}

std::set<RecordRef> ExtractionStore::existing_refs(const std::string& partition) const {
  std::set<RecordRef> refs;
  std::ifstream in(path_of(partition), std::ios::binary);
  if (!in) return refs;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    try {
      refs.insert(extraction_from_json(line).ref);
    } catch (const json::exception&) {
    }
  }
  return refs;
}

void ExtractionStore::append(const std::string& partition, const ExtractionRecord& record) {
  std::lock_guard lock(mutex_for(partition));
  std::ofstream out(path_of(partition), std::ios::binary | std::ios::app);
  if (!out) throw ConfigError("cannot append to extraction partition " + partition);
  out << extraction_to_json(record) << '\n';
  out.flush();
}

std::vector<ExtractionRecord> ExtractionStore::read_partition(const std::string& partition) const {
  std::vector<ExtractionRecord> out;
  std::set<RecordRef> seen;
  std::ifstream in(path_of(partition), std::ios::binary);
  if (!in) return out;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    try {
      ExtractionRecord r = extraction_from_json(line);
      if (seen.insert(r.ref).second) out.push_back(std::move(r));
    } catch (const json::exception&) {
    }
  }
  return out;
}

std::vector<std::string> ExtractionStore::partitions() const {
  std::vector<std::string> out;
  if (!std::filesystem::exists(dir_)) return out;
  for (const auto& entry : std::filesystem::directory_iterator(dir_)) {
    const std::string name = entry.path().filename().string();
    if (entry.is_regular_file() && name.ends_with(".jsonl"))
      out.push_back(name.substr(0, name.size() - 6));
  }
  std::sort(out.begin(), out.end());
  return out;
}

ExtractStats extract_all(const std::vector<gateway::GenerationRecord>& records,
                         const ExtractionSchema& schema, gateway::ChatProvider& extractor,
                         ExtractionStore& store, const std::string& partition,
                         const ExtractOptions& options) {
  ExtractStats stats;
  stats.records = records.size();

  const std::set<RecordRef> existing = store.existing_refs(partition);
  std::vector<const gateway::GenerationRecord*> work;
  for (const auto& r : records) {
    if (existing.count({r.prompt_id, r.model_id, r.sample_index})) {
      ++stats.skipped;
      continue;
    }
    work.push_back(&r);
  }

  gateway::RateLimiter limiter(options.requests_per_minute);
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> calls{0}, entities{0}, failures{0}, parse_failures{0};

  auto worker = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= work.size()) return;
      const gateway::GenerationRecord& rec = *work[i];

      gateway::ChatRequest req;
      req.model = rec.model_id;
      req.user = build_extraction_prompt(schema, rec.response_text);
      calls.fetch_add(1);

      std::string raw;
      bool got = false;
      std::string last_error;
      for (int attempt = 0; attempt < std::max(1, options.retries); ++attempt) {
        if (attempt > 0)
          std::this_thread::sleep_for(std::chrono::duration<double, std::milli>(
              options.backoff_initial_ms * std::pow(2.0, attempt - 1)));
        limiter.acquire();
        try {
          raw = extractor.complete(req).text;
          got = true;
          break;
        } catch (const std::exception& e) {
          last_error = e.what();
        }
      }

      ExtractionRecord out;
      out.ref = {rec.prompt_id, rec.model_id, rec.sample_index};
      if (!got) {
        out.parse_failed = true;
        failures.fetch_add(1);
      } else {
        const ParseResult parsed = parse_extraction_output(raw, schema);
        out.parse_failed = parsed.parse_failed;
        out.pre_dedup_count = parsed.pre_dedup_count;
        for (const ExtractedEntity& e : parsed.entities)
          out.entities.emplace_back(e.surface, e.type_label);
        if (parsed.parse_failed) parse_failures.fetch_add(1);
        entities.fetch_add(parsed.entities.size());
      }
      store.append(partition, out);
    }
  };

  const int n_threads = std::max(1, options.concurrency);
  std::vector<std::thread> threads;
  for (int t = 0; t < n_threads; ++t) threads.emplace_back(worker);
  for (std::thread& t : threads) t.join();

  stats.calls = calls.load();
  stats.entities = entities.load();
  stats.failures = failures.load();
  stats.parse_failures = parse_failures.load();
  return stats;
}

}  // namespace cultureval::extraction
