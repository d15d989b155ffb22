#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "cultureval/prompts.hpp"
#include "cultureval/types.hpp"

namespace cultureval::gateway {

struct SamplingParams {
  double temperature = 0.7;
  double top_p = 0.9;
  int top_k = 10;         // <= 0 means unlimited / omitted
  int max_tokens = 256;   // generous for ~50-word outputs; config knob
  int n_samples = 500;
};

struct GenerationRecord {
  std::string prompt_id;
  std::string model_id;
  int sample_index = 0;
  std::string response_text;           // verbatim provider bytes
  std::string detected_language;       // script heuristic, may be empty
  std::string created_at;
  std::map<std::string, std::string> provider_metadata;
};

std::string record_to_json(const GenerationRecord& r);
GenerationRecord record_from_json(const std::string& line);

// ---------------------------------------------------------------------------
// Provider abstraction: one chat-completion contract for every backend.

struct ChatRequest {
  std::string model;
  std::string system;  // empty = omitted
  std::string user;
  SamplingParams params;
  // Opaque routing hints for replay providers; HTTP adapters ignore them.
  std::string tag;
  int sample_index = 0;
};

struct ChatResult {
  std::string text;
  std::map<std::string, std::string> metadata;
};

class ChatProvider {
 public:
  virtual ~ChatProvider() = default;
  virtual ChatResult complete(const ChatRequest& request) = 0;
};

struct ProviderConfig {
  std::string kind = "openai_chat";  // openai_chat | openai_chat_topk | canned
  std::string base_url;              // http(s)://host[:port]
  std::string api_path = "/v1/chat/completions";
  std::string auth_env;              // env var holding the bearer token
  std::string model;                 // overrides the per-request model if set
  double requests_per_minute = 0;    // 0 = unthrottled
  int max_concurrency = 4;
  int retries = 5;
  double backoff_initial_ms = 500;   // doubles per attempt
  std::filesystem::path canned_path; // for kind == "canned"
};

/// HTTP chat-completions adapter (OpenAI wire shape). `openai_chat_topk`
/// additionally sends top_k for local servers that accept it.
std::unique_ptr<ChatProvider> make_http_provider(const ProviderConfig& config);

/// Replays canned responses from a JSON file keyed by
/// "language|topic|condition|context"; sample i gets responses[i % n].
std::unique_ptr<ChatProvider> make_canned_provider(const std::filesystem::path& corpus,
                                                   const std::filesystem::path& extractions = {});

std::unique_ptr<ChatProvider> make_provider(const ProviderConfig& config);

// ---------------------------------------------------------------------------

/// Token bucket; acquire() blocks until a request slot is available.
class RateLimiter {
 public:
  explicit RateLimiter(double requests_per_minute);
  void acquire();

 private:
  double rpm_;
  double tokens_;
  std::chrono::steady_clock::time_point last_;
  std::mutex mu_;
};

/// Append-only line-delimited store, one file per (model, language, topic)
/// partition. Appends are serialized per partition; readers see a prefix.
class RunStore {
 public:
  explicit RunStore(std::filesystem::path dir);

  static std::string partition_of(const std::string& model_id, const std::string& language,
                                  Topic topic);

  std::set<std::pair<std::string, int>> existing_keys(const std::string& partition) const;
  void append(const std::string& partition, const GenerationRecord& record);
  void append_failure(const std::string& partition, const std::string& prompt_id,
                      int sample_index, const std::string& error);
  std::vector<GenerationRecord> read_partition(const std::string& partition) const;
  std::vector<std::string> partitions() const;
  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path partition_path(const std::string& partition) const;
  std::filesystem::path dir_;
  mutable std::mutex map_mu_;
  mutable std::map<std::string, std::unique_ptr<std::mutex>> partition_mu_;
  std::mutex& mutex_for(const std::string& partition) const;
};

struct GenerateOptions {
  int concurrency = 4;
  int retries = 5;
  double backoff_initial_ms = 500;
  double requests_per_minute = 0;
  std::function<void(const std::string&)> on_progress;  // optional
};

struct GenerateStats {
  std::size_t specs = 0;
  std::size_t requested = 0;  // requests actually issued
  std::size_t skipped = 0;    // already persisted (resume)
  std::size_t persisted = 0;
  std::size_t failures = 0;   // record-level failures after retries
};

/// Issues n_samples requests per spec, skipping (prompt_id, sample_index)
/// pairs already in the store. Auth failures abort; transport failures retry
/// with exponential backoff and then become failure entries.
GenerateStats generate_batch(const std::vector<prompts::PromptSpec>& specs,
                             const SamplingParams& params, ChatProvider& provider,
                             RunStore& store, const GenerateOptions& options = {});

// ---------------------------------------------------------------------------

struct MismatchCell {
  std::size_t responses = 0;
  std::size_t mismatched = 0;
  std::size_t unknown = 0;
  double fraction = 0.0;  // mismatched / responses
};

struct MismatchReport {
  std::map<std::string, MismatchCell> per_prompt;  // prompt_id -> cell
  MismatchCell overall;
};

using LanguageDetector = std::function<std::string(const std::string&)>;

/// Fraction of responses whose detected script class conflicts with the
/// expected language. Undetectable responses count as unknown, not mismatch.
/// `detector` optionally overrides the built-in script heuristic; it returns
/// a language code or "" for unknown.
MismatchReport detect_language_mismatch(const std::vector<GenerationRecord>& records,
                                        const std::string& expected_language,
                                        const LanguageDetector& detector = nullptr);

/// Script-heuristic language guess recorded on generation records.
std::string detect_language(const std::string& text);

}  // namespace cultureval::gateway
