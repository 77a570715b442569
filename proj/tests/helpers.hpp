#pragma once

// Shared deterministic helpers for the test suites. The ranking oracle here
// is intentionally independent of the library's search implementation.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "surveyor/types.hpp"
#include "surveyor/vector_store.hpp"

namespace testutil {

inline std::uint64_t splitmix(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline double unit(std::uint64_t& state) {
  return static_cast<double>(splitmix(state) >> 11) * 0x1.0p-53;
}

inline surveyor::Embedding random_unit_vector(std::uint64_t& state) {
  surveyor::Embedding v(surveyor::kEmbeddingDim);
  double norm = 0.0;
  for (auto& c : v) {
    double x = unit(state) * 2.0 - 1.0;
    c = static_cast<float>(x);
    norm += x * x;
  }
  norm = std::sqrt(norm);
  for (auto& c : v) c = static_cast<float>(c / norm);
  return v;
}

inline surveyor::StoredPaper synth_paper(std::size_t index,
                                         surveyor::Embedding embedding) {
  surveyor::StoredPaper p;
  p.meta.id = "p" + std::to_string(10000 + index);
  p.meta.title = "Synthetic Paper " + std::to_string(index);
  p.meta.authors = "Doe, Jane";
  p.meta.abstract = "Abstract body " + std::to_string(index) + ".";
  p.meta.categories = {"cs.LG"};
  p.embedding = std::move(embedding);
  return p;
}

// Exhaustive scan oracle: plain double-precision cosine over every record,
// stable ordering by (similarity desc, id asc).
inline std::vector<surveyor::store::SearchHit> brute_force_topk(
    const std::vector<surveyor::StoredPaper>& corpus,
    const surveyor::Embedding& query, std::size_t k,
    std::optional<double> threshold = std::nullopt) {
  auto cosine = [](const surveyor::Embedding& a, const surveyor::Embedding& b) {
    double dot = 0, na = 0, nb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      dot += double(a[i]) * double(b[i]);
      na += double(a[i]) * double(a[i]);
      nb += double(b[i]) * double(b[i]);
    }
    return dot / (std::sqrt(na) * std::sqrt(nb));
  };
  std::vector<surveyor::store::SearchHit> hits;
  for (const auto& p : corpus) {
    double sim = cosine(query, p.embedding);
    if (threshold && sim < *threshold) continue;
    hits.push_back({p.meta.id, sim});
  }
  std::stable_sort(hits.begin(), hits.end(), [](const auto& a, const auto& b) {
    if (a.similarity != b.similarity) return a.similarity > b.similarity;
    return a.paper_id < b.paper_id;
  });
  if (hits.size() > k) hits.resize(k);
  return hits;
}

}  // namespace testutil
