#include "cultureval/gateway.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "cultureval/script.hpp"

namespace cultureval::gateway {

using nlohmann::json;

std::string record_to_json(const GenerationRecord& r) {
  json j;
  j["prompt_id"] = r.prompt_id;
  j["model_id"] = r.model_id;
  j["sample_index"] = r.sample_index;
  j["response_text"] = r.response_text;
  j["detected_language"] = r.detected_language;
  j["created_at"] = r.created_at;
  j["provider_metadata"] = r.provider_metadata;
  return j.dump();
}

GenerationRecord record_from_json(const std::string& line) {
  json j = json::parse(line);
  GenerationRecord r;
  r.prompt_id = j.at("prompt_id").get<std::string>();
  r.model_id = j.at("model_id").get<std::string>();
  r.sample_index = j.at("sample_index").get<int>();
  r.response_text = j.at("response_text").get<std::string>();
  r.detected_language = j.value("detected_language", "");
  r.created_at = j.value("created_at", "");
  if (j.contains("provider_metadata"))
    r.provider_metadata = j.at("provider_metadata").get<std::map<std::string, std::string>>();
  return r;
}

std::string detect_language(const std::string& text) {
  using script::ScriptClass;
  switch (script::dominant_script(text)) {
    case ScriptClass::latin: return "und-Latn";
    case ScriptClass::han: return "zh";
    case ScriptClass::kana: return "ja";
    case ScriptClass::hangul: return "ko";
    case ScriptClass::arabic: return "ar";
    case ScriptClass::devanagari: return "hi";
    case ScriptClass::thai: return "th";
    case ScriptClass::cyrillic: return "und-Cyrl";
    case ScriptClass::greek: return "el";
    case ScriptClass::hebrew: return "he";
    case ScriptClass::unknown: return "";
  }
  return "";
}

// ---------------------------------------------------------------------------
// Rate limiter

RateLimiter::RateLimiter(double requests_per_minute)
    : rpm_(requests_per_minute), tokens_(1.0), last_(std::chrono::steady_clock::now()) {}

void RateLimiter::acquire() {
  if (rpm_ <= 0) return;
  const double per_second = rpm_ / 60.0;
  while (true) {
    std::unique_lock lock(mu_);
    const auto now = std::chrono::steady_clock::now();
    const double elapsed = std::chrono::duration<double>(now - last_).count();
    last_ = now;
    tokens_ = std::min(1.0 + per_second, tokens_ + elapsed * per_second);
    if (tokens_ >= 1.0) {
      tokens_ -= 1.0;
      return;
    }
    const double wait_s = (1.0 - tokens_) / per_second;
    lock.unlock();
    std::this_thread::sleep_for(std::chrono::duration<double>(wait_s));
  }
}

// ---------------------------------------------------------------------------
// Run store

RunStore::RunStore(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
}

std::string RunStore::partition_of(const std::string& model_id, const std::string& language,
                                   Topic topic) {
  return sanitize_filename(model_id) + "__" + sanitize_filename(language) + "__" +
         std::string(to_string(topic));
}

std::filesystem::path RunStore::partition_path(const std::string& partition) const {
  return dir_ / (partition + ".jsonl");
}

std::mutex& RunStore::mutex_for(const std::string& partition) const {
  std::lock_guard lock(map_mu_);
  auto& slot = partition_mu_[partition];
  if (!slot) slot = std::make_unique<std::mutex>();
  return *slot;
}

std::set<std::pair<std::string, int>> RunStore::existing_keys(const std::string& partition) const {
  std::set<std::pair<std::string, int>> keys;
  std::ifstream in(partition_path(partition), std::ios::binary);
  if (!in) return keys;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    try {
      json j = json::parse(line);
      keys.emplace(j.at("prompt_id").get<std::string>(), j.at("sample_index").get<int>());
    } catch (const json::exception&) {
      // Torn trailing line from an interrupted run; the sample is re-issued.
    }
  }
  return keys;
}

void RunStore::append(const std::string& partition, const GenerationRecord& record) {
  std::lock_guard lock(mutex_for(partition));
  std::ofstream out(partition_path(partition), std::ios::binary | std::ios::app);
  if (!out) throw ConfigError("cannot append to store partition " + partition);
  out << record_to_json(record) << '\n';
  out.flush();
  if (!out) throw ConfigError("short write on store partition " + partition);
}

void RunStore::append_failure(const std::string& partition, const std::string& prompt_id,
                              int sample_index, const std::string& error) {
  std::lock_guard lock(mutex_for(partition));
  json j;
  j["prompt_id"] = prompt_id;
  j["sample_index"] = sample_index;
  j["error"] = error;
  j["at"] = iso8601_now();
  std::ofstream out(partition_path(partition + ".failures"), std::ios::binary | std::ios::app);
  out << j.dump() << '\n';
}

std::vector<GenerationRecord> RunStore::read_partition(const std::string& partition) const {
  std::vector<GenerationRecord> out;
  std::set<std::pair<std::string, int>> seen;
  std::ifstream in(partition_path(partition), std::ios::binary);
  if (!in) return out;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    try {
      GenerationRecord r = record_from_json(line);
      if (seen.emplace(r.prompt_id, r.sample_index).second) out.push_back(std::move(r));
    } catch (const json::exception&) {
    }
  }
  return out;
}

std::vector<std::string> RunStore::partitions() const {
  std::vector<std::string> out;
  if (!std::filesystem::exists(dir_)) return out;
  for (const auto& entry : std::filesystem::directory_iterator(dir_)) {
    const std::string name = entry.path().filename().string();
    if (entry.is_regular_file() && name.size() > 6 && name.ends_with(".jsonl") &&
        !name.ends_with(".failures.jsonl"))
      out.push_back(name.substr(0, name.size() - 6));
  }
  std::sort(out.begin(), out.end());
  return out;
}

// ---------------------------------------------------------------------------
// Canned provider

namespace {

class CannedProvider final : public ChatProvider {
 public:
  explicit CannedProvider(const std::filesystem::path& corpus) {
    json doc = json::parse(read_file(corpus), nullptr, true, true);
    if (doc.contains("generations"))
      for (auto it = doc["generations"].begin(); it != doc["generations"].end(); ++it)
        for (const auto& r : it.value()) generations_[it.key()].push_back(r.get<std::string>());
    if (doc.contains("extractions"))
      for (auto it = doc["extractions"].begin(); it != doc["extractions"].end(); ++it)
        extractions_[it.key()] = it.value().get<std::string>();
  }

  ChatResult complete(const ChatRequest& request) override {
    if (!request.tag.empty()) {
      auto it = generations_.find(request.tag);
      if (it == generations_.end() || it->second.empty())
        throw FetchError("no canned responses for cell " + request.tag);
      const auto& pool = it->second;
      return {pool[static_cast<std::size_t>(request.sample_index) % pool.size()],
              {{"provider", "canned"}}};
    }
    // Extraction calls carry the original response inlined after "Text: ".
    const std::size_t pos = request.user.rfind("Text: ");
    if (pos != std::string::npos) {
      const std::string key(trim(request.user.substr(pos + 6)));
      auto it = extractions_.find(key);
      if (it != extractions_.end()) return {it->second, {{"provider", "canned"}}};
    }
    throw FetchError("no canned extraction for request");
  }

 private:
  std::map<std::string, std::vector<std::string>> generations_;
  std::map<std::string, std::string> extractions_;
};

}  // namespace

std::unique_ptr<ChatProvider> make_canned_provider(const std::filesystem::path& corpus,
                                                   const std::filesystem::path&) {
  return std::make_unique<CannedProvider>(corpus);
}

}  // namespace cultureval::gateway

// The HTTP adapter lives in its own TU (provider_http.cpp) so httplib is
// compiled once.

namespace cultureval::gateway {

std::unique_ptr<ChatProvider> make_provider(const ProviderConfig& config) {
  if (config.kind == "canned") {
    if (config.canned_path.empty())
      throw ConfigError("canned provider requires canned_path");
    return make_canned_provider(config.canned_path);
  }
  if (config.kind == "openai_chat" || config.kind == "openai_chat_topk")
    return make_http_provider(config);
  throw ConfigError("unknown provider kind: " + config.kind);
}

// ---------------------------------------------------------------------------
// Batch generation

namespace {

struct WorkItem {
  const prompts::PromptSpec* spec;
  int sample_index;
  std::string partition;
};

}  // namespace

GenerateStats generate_batch(const std::vector<prompts::PromptSpec>& specs,
                             const SamplingParams& params, ChatProvider& provider,
                             RunStore& store, const GenerateOptions& options) {
  GenerateStats stats;
  stats.specs = specs.size();

  std::vector<WorkItem> work;
  std::map<std::string, std::set<std::pair<std::string, int>>> existing;
  for (const prompts::PromptSpec& spec : specs) {
    const std::string partition = RunStore::partition_of(spec.model_id, spec.language, spec.topic);
    auto [it, inserted] = existing.try_emplace(partition);
    if (inserted) it->second = store.existing_keys(partition);
    for (int idx = 0; idx < params.n_samples; ++idx) {
      if (it->second.count({spec.prompt_id, idx})) {
        ++stats.skipped;
        continue;
      }
      work.push_back({&spec, idx, partition});
    }
  }

  RateLimiter limiter(options.requests_per_minute);
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> requested{0}, persisted{0}, failures{0};
  std::mutex abort_mu;
  std::string abort_error;
  std::atomic<bool> aborted{false};

  auto worker = [&] {
    while (!aborted.load()) {
      const std::size_t i = next.fetch_add(1);
      if (i >= work.size()) return;
      const WorkItem& item = work[i];

      ChatRequest req;
      req.model = item.spec->model_id;
      req.user = item.spec->final_text;
      req.params = params;
      req.tag = item.spec->language + "|" + std::string(to_string(item.spec->topic)) + "|" +
                std::string(to_string(item.spec->condition)) + "|" + prompts::context_key(*item.spec);
      req.sample_index = item.sample_index;

      requested.fetch_add(1);
      std::string last_error;
      bool done = false;
      for (int attempt = 0; attempt < std::max(1, options.retries) && !aborted.load(); ++attempt) {
        if (attempt > 0)
          std::this_thread::sleep_for(std::chrono::duration<double, std::milli>(
              options.backoff_initial_ms * std::pow(2.0, attempt - 1)));
        limiter.acquire();
        try {
          ChatResult result = provider.complete(req);
          GenerationRecord rec;
          rec.prompt_id = item.spec->prompt_id;
          rec.model_id = item.spec->model_id;
          rec.sample_index = item.sample_index;
          rec.response_text = result.text;
          rec.detected_language = detect_language(result.text);
          rec.created_at = iso8601_now();
          rec.provider_metadata = result.metadata;
          store.append(item.partition, rec);
          persisted.fetch_add(1);
          done = true;
          break;
        } catch (const AuthError& e) {
          std::lock_guard lock(abort_mu);
          abort_error = e.what();
          aborted.store(true);
          return;
        } catch (const std::exception& e) {
          last_error = e.what();
        }
      }
      if (!done && !aborted.load()) {
        store.append_failure(item.partition, item.spec->prompt_id, item.sample_index, last_error);
        failures.fetch_add(1);
        if (options.on_progress) options.on_progress("failure: " + last_error);
      }
    }
  };

  const int n_threads = std::max(1, options.concurrency);
  std::vector<std::thread> threads;
  threads.reserve(static_cast<std::size_t>(n_threads));
  for (int t = 0; t < n_threads; ++t) threads.emplace_back(worker);
  for (std::thread& t : threads) t.join();

  if (aborted.load()) throw AuthError("generation aborted: " + abort_error);

  stats.requested = requested.load();
  stats.persisted = persisted.load();
  stats.failures = failures.load();
  return stats;
}

// ---------------------------------------------------------------------------
// Language mismatch report

MismatchReport detect_language_mismatch(const std::vector<GenerationRecord>& records,
                                        const std::string& expected_language,
                                        const LanguageDetector& detector) {
  if (records.empty()) throw UsageError("detect_language_mismatch: records must be nonempty");
  MismatchReport report;
  for (const GenerationRecord& r : records) {
    MismatchCell& cell = report.per_prompt[r.prompt_id];
    ++cell.responses;
    ++report.overall.responses;

    bool unknown = false, mismatch = false;
    if (detector) {
      const std::string det = detector(r.response_text);
      if (det.empty()) {
        unknown = true;
      } else {
        auto primary = [](const std::string& code) {
          const std::string lower = to_lower_ascii(code);
          const std::size_t dash = lower.find('-');
          return dash == std::string::npos ? lower : lower.substr(0, dash);
        };
        mismatch = primary(det) != primary(expected_language);
      }
    } else {
      const script::ScriptClass cls = script::dominant_script(r.response_text);
      if (cls == script::ScriptClass::unknown)
        unknown = true;
      else
        mismatch = !script::script_matches_language(cls, expected_language);
    }
    if (unknown) {
      ++cell.unknown;
      ++report.overall.unknown;
    } else if (mismatch) {
      ++cell.mismatched;
      ++report.overall.mismatched;
    }
  }
  for (auto& [_, cell] : report.per_prompt)
    cell.fraction = cell.responses ? static_cast<double>(cell.mismatched) / cell.responses : 0.0;
  report.overall.fraction = report.overall.responses
                                ? static_cast<double>(report.overall.mismatched) / report.overall.responses
                                : 0.0;
  return report;
}

}  // namespace cultureval::gateway
