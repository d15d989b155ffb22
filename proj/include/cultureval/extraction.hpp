#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "cultureval/gateway.hpp"
#include "cultureval/types.hpp"

namespace cultureval::extraction {

/// Topic-specific extraction contract: the type labels the extractor may
/// assign, which of them count as specific vs. general for granularity
/// scoring, and the instruction frame sent to the extraction model.
struct ExtractionSchema {
  Topic topic = Topic::food;
  std::vector<std::string> entity_types;
  std::set<std::string> specific_types;
  std::set<std::string> general_types;
  std::string prompt_template;  // contains one {response} slot

  bool valid(std::string* why = nullptr) const;
  GranularityClass classify(const std::string& type_label) const;
};

/// Loads the per-topic schema file; validates the specific/general partition.
std::map<Topic, ExtractionSchema> load_schemas(const std::filesystem::path& path);

struct RecordRef {
  std::string prompt_id;
  std::string model_id;
  int sample_index = 0;
  auto operator<=>(const RecordRef&) const = default;
};

struct ExtractedEntity {
  RecordRef ref;
  std::string surface;
  std::string type_label;
  GranularityClass granularity = GranularityClass::unscored;
};

struct ParseResult {
  std::vector<ExtractedEntity> entities;  // deduped per (surface, type)
  int pre_dedup_count = 0;                // pairs in the raw mapping
  int dropped_unknown_types = 0;
  bool parse_failed = false;
};

std::string build_extraction_prompt(const ExtractionSchema& schema,
                                    const std::string& response_text);

/// Total parser for extractor output: finds the first balanced {...} mapping,
/// tolerating code fences and surrounding prose. Unknown type labels are
/// dropped and counted; duplicate (surface, type) pairs collapse but the raw
/// pair count is kept. Never throws.
ParseResult parse_extraction_output(const std::string& raw,
                                    const ExtractionSchema& schema) noexcept;

/// One persisted extraction per generation record.
struct ExtractionRecord {
  RecordRef ref;
  std::vector<std::pair<std::string, std::string>> entities;  // (surface, type)
  int pre_dedup_count = 0;
  bool parse_failed = false;
};

std::string extraction_to_json(const ExtractionRecord& r);
ExtractionRecord extraction_from_json(const std::string& line);

/// Append-only extraction store mirroring the generation partitions.
class ExtractionStore {
 public:
  explicit ExtractionStore(std::filesystem::path dir);
  std::set<RecordRef> existing_refs(const std::string& partition) const;
  void append(const std::string& partition, const ExtractionRecord& record);
  std::vector<ExtractionRecord> read_partition(const std::string& partition) const;
  std::vector<std::string> partitions() const;
  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path path_of(const std::string& partition) const;
  std::filesystem::path dir_;
  mutable std::mutex map_mu_;
  mutable std::map<std::string, std::unique_ptr<std::mutex>> partition_mu_;
  std::mutex& mutex_for(const std::string& partition) const;
};

struct ExtractStats {
  std::size_t records = 0;
  std::size_t calls = 0;     // extraction requests issued
  std::size_t skipped = 0;   // already extracted (resume)
  std::size_t entities = 0;
  std::size_t failures = 0;  // transport failures after retries
  std::size_t parse_failures = 0;
};

struct ExtractOptions {
  int concurrency = 4;
  int retries = 5;
  double backoff_initial_ms = 500;
  double requests_per_minute = 0;
};

/// One extraction call per generation record; results persist keyed by
/// (prompt_id, model_id, sample_index) and reruns skip existing refs.
ExtractStats extract_all(const std::vector<gateway::GenerationRecord>& records,
                         const ExtractionSchema& schema, gateway::ChatProvider& extractor,
                         ExtractionStore& store, const std::string& partition,
                         const ExtractOptions& options = {});

}  // namespace cultureval::extraction
