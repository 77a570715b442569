#include "surveyor/vector_store.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>

#include "surveyor/errors.hpp"

namespace surveyor::store {

PaperRef make_ref(const StoredPaper& paper, double similarity);

double cosine_similarity(const Embedding& a, const Embedding& b) {
  if (a.size() != b.size()) {
    throw ArgumentError("cosine_similarity: dimension mismatch");
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    na += static_cast<double>(a[i]) * static_cast<double>(a[i]);
    nb += static_cast<double>(b[i]) * static_cast<double>(b[i]);
  }
  if (na <= 0.0 || nb <= 0.0) {
    throw ArgumentError("cosine_similarity: zero-norm vector");
  }
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

void validate_embedding(const Embedding& e) {
  if (e.size() != kEmbeddingDim) {
    throw ValidationError("embedding must have exactly " +
                          std::to_string(kEmbeddingDim) + " components, got " +
                          std::to_string(e.size()));
  }
  for (float v : e) {
    if (v != 0.0f) return;
  }
  throw ValidationError("embedding has zero norm");
}

std::vector<SearchHit> rank_topk(
    const std::vector<std::pair<std::string, const Embedding*>>& corpus,
    const Embedding& query, std::size_t k, std::optional<double> threshold) {
  if (k < 1) throw ArgumentError("search_topk: K must be >= 1");
  validate_embedding(query);

  std::vector<SearchHit> hits;
  hits.reserve(corpus.size());
  for (const auto& [id, emb] : corpus) {
    double sim = cosine_similarity(query, *emb);
    if (threshold && sim < *threshold) continue;
    hits.push_back({id, sim});
  }
  std::sort(hits.begin(), hits.end(), [](const SearchHit& a, const SearchHit& b) {
    if (a.similarity != b.similarity) return a.similarity > b.similarity;
    return a.paper_id < b.paper_id;
  });
  if (hits.size() > k) hits.resize(k);
  return hits;
}

std::size_t MemoryVectorStore::upsert_batch(
    const std::vector<StoredPaper>& papers) {
  if (papers.empty()) return 0;
  for (const auto& p : papers) validate_embedding(p.embedding);

  std::unique_lock lock(mutex_);
  std::size_t inserted = 0;
  for (const auto& p : papers) {
    if (ids_.contains(p.meta.id)) continue;
    ids_.insert(p.meta.id);
    papers_.push_back(p);
    ++inserted;
  }
  return inserted;
}

std::vector<SearchHit> MemoryVectorStore::search_topk(
    const Embedding& query, std::size_t k,
    std::optional<double> threshold) const {
  std::shared_lock lock(mutex_);
  std::vector<std::pair<std::string, const Embedding*>> corpus;
  corpus.reserve(papers_.size());
  for (const auto& p : papers_) corpus.emplace_back(p.meta.id, &p.embedding);
  return rank_topk(corpus, query, k, threshold);
}

std::pair<std::size_t, std::set<std::string>> MemoryVectorStore::count_and_ids()
    const {
  std::shared_lock lock(mutex_);
  return {papers_.size(), ids_};
}

std::vector<StoredPaper> MemoryVectorStore::fetch(
    const std::vector<std::string>& ids) const {
  std::shared_lock lock(mutex_);
  std::vector<StoredPaper> out;
  out.reserve(ids.size());
  for (const auto& id : ids) {
    for (const auto& p : papers_) {
      if (p.meta.id == id) {
        out.push_back(p);
        break;
      }
    }
  }
  return out;
}

std::unique_ptr<VectorStore> open_sqlite_store(const std::string& path);

std::unique_ptr<VectorStore> open_store(const std::string& url) {
  if (url.empty() || url == "memory:" || url == "memory") {
    return std::make_unique<MemoryVectorStore>();
  }
  if (url.rfind("sqlite:", 0) == 0) {
    std::string path = url.substr(7);
    // tolerate sqlite:///path spellings
    while (path.rfind("//", 0) == 0) path.erase(0, 1);
    if (path.empty()) {
      throw ConfigError("sqlite store URL needs a file path, e.g. sqlite:corpus.db");
    }
    return open_sqlite_store(path);
  }
  if (url.rfind("postgres://", 0) == 0 || url.rfind("postgresql://", 0) == 0) {
    throw ConfigError(
        "postgres backends are not compiled into this build; "
        "use sqlite:<path> for a persistent store or memory: for tests");
  }
  throw ConfigError("unrecognized store URL: " + url);
}

}  // namespace surveyor::store
