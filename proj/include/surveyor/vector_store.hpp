#pragma once

#include <memory>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <utility>
#include <vector>

#include "surveyor/types.hpp"

namespace surveyor::store {

/// One result of a similarity query. Hit lists are ordered by descending
/// similarity; ties are broken by ascending paper id so every query has a
/// single well-defined answer.
struct SearchHit {
  std::string paper_id;
  double similarity = 0.0;
  bool operator==(const SearchHit&) const = default;
};

/// Cosine similarity of two embeddings, accumulated in double precision.
/// Throws ArgumentError on dimension mismatch or a zero-norm operand.
double cosine_similarity(const Embedding& a, const Embedding& b);

/// Throws ValidationError unless the embedding is 768-dim with norm > 0.
void validate_embedding(const Embedding& e);

/// Persistence + top-K cosine retrieval over embedded paper records.
///
/// Reads may run concurrently; writes are serialized and a batch upsert is
/// atomic (readers never observe part of a batch).
class VectorStore {
 public:
  virtual ~VectorStore() = default;

  /// Insert papers whose ids are not yet present; existing ids are left
  /// untouched. Returns the number actually inserted. An empty batch
  /// performs no backend round-trip.
  virtual std::size_t upsert_batch(const std::vector<StoredPaper>& papers) = 0;

  /// Top-K cosine retrieval. When `threshold` is given, papers below it are
  /// filtered out before truncation to K.
  virtual std::vector<SearchHit> search_topk(
      const Embedding& query, std::size_t k,
      std::optional<double> threshold = std::nullopt) const = 0;

  virtual std::pair<std::size_t, std::set<std::string>> count_and_ids()
      const = 0;

  /// Fetch full records by id, in request order; unknown ids are skipped.
  virtual std::vector<StoredPaper> fetch(
      const std::vector<std::string>& ids) const = 0;
};

/// Exhaustive-scan store held entirely in memory.
class MemoryVectorStore : public VectorStore {
 public:
  std::size_t upsert_batch(const std::vector<StoredPaper>& papers) override;
  std::vector<SearchHit> search_topk(
      const Embedding& query, std::size_t k,
      std::optional<double> threshold) const override;
  std::pair<std::size_t, std::set<std::string>> count_and_ids() const override;
  std::vector<StoredPaper> fetch(
      const std::vector<std::string>& ids) const override;

 private:
  mutable std::shared_mutex mutex_;
  std::vector<StoredPaper> papers_;          // insertion order
  std::set<std::string> ids_;
};

/// Open a store from a URL-style connection string:
///   "memory:"             in-memory store (default when empty)
///   "sqlite:<path>"       file-backed relational store
/// Unsupported schemes (e.g. postgres://) raise ConfigError with guidance.
std::unique_ptr<VectorStore> open_store(const std::string& url);

/// Shared query logic for exhaustive scans: scores every (id, embedding)
/// pair against the query and returns the ordered, thresholded top K.
std::vector<SearchHit> rank_topk(
    const std::vector<std::pair<std::string, const Embedding*>>& corpus,
    const Embedding& query, std::size_t k, std::optional<double> threshold);

}  // namespace surveyor::store
