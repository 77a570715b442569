#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "surveyor/llm_gateway.hpp"
#include "surveyor/types.hpp"
#include "surveyor/vector_store.hpp"

namespace surveyor::ingest {

struct CategoryFilter {
  std::set<std::string> allowed = {"cs.AI", "cs.CL", "cs.CV", "cs.LG",
                                   "stat.ML"};

  bool matches(const std::vector<std::string>& categories) const;
  void validate() const;  // allowed must be nonempty
};

struct IngestReport {
  std::size_t total_read = 0;
  std::size_t filtered_kept = 0;
  std::size_t dropped = 0;     // out-of-category
  std::size_t malformed = 0;   // unparseable lines, skipped with a warning
  std::size_t already_present = 0;
  std::size_t newly_embedded = 0;
  std::size_t batches = 0;
  std::size_t failed_batches = 0;
};

std::string format_report(const IngestReport& report);

/// Parse one snapshot line (a JSON record with id, title, authors, abstract,
/// categories as a space-separated string, versions). Returns nullopt and
/// fills `error` when the line is unusable.
std::optional<PaperMeta> parse_snapshot_record(const std::string& line,
                                               std::string* error);

/// Keep exactly the records whose category set intersects filter.allowed,
/// preserving input order.
std::vector<PaperMeta> filter_papers(const std::vector<PaperMeta>& records,
                                     const CategoryFilter& filter);

/// Records whose ids are not yet in the store.
std::vector<PaperMeta> diff_new(const std::vector<PaperMeta>& filtered,
                                const std::set<std::string>& existing_ids);

struct EmbedBatchResult {
  std::vector<std::pair<std::string, Embedding>> embedded;  // input order
  std::size_t batches = 0;
  std::size_t failed_batches = 0;
};

/// Embed abstracts through the gateway, one provider call per batch of
/// `batch_size`. A batch whose retries are exhausted is reported failed and
/// the remaining batches continue.
EmbedBatchResult embed_batch(const std::vector<PaperMeta>& records,
                             std::size_t batch_size, llm::Gateway& gateway);

/// Full ingestion: read the snapshot, filter, diff against the store, embed
/// only the new records, and insert them batch by batch.
IngestReport ingest(const std::filesystem::path& snapshot_path,
                    const CategoryFilter& filter, store::VectorStore& store,
                    llm::Gateway& gateway, std::size_t batch_size = 10000);

}  // namespace surveyor::ingest
