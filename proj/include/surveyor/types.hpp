#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace surveyor {

/// Dimensionality of every embedding in the system.
inline constexpr std::size_t kEmbeddingDim = 768;

using Embedding = std::vector<float>;

/// One version entry from a metadata snapshot record.
struct PaperVersion {
  std::string tag;      // e.g. "v1"
  std::string created;  // timestamp text, kept verbatim
  bool operator==(const PaperVersion&) const = default;
};

/// One bibliographic record as read from a metadata snapshot.
struct PaperMeta {
  std::string id;
  std::string title;
  std::string authors;  // raw author-list text
  std::string abstract;
  std::vector<std::string> categories;
  std::vector<PaperVersion> versions;
  bool operator==(const PaperMeta&) const = default;
};

/// A stored record: metadata plus its embedding.
struct StoredPaper {
  PaperMeta meta;
  Embedding embedding;
  bool operator==(const StoredPaper&) const = default;
};

/// Lightweight reference to a retrieved paper, as kept in pipeline state.
/// Carries everything downstream stages need (prompt context, BibTeX
/// synthesis) but never the embedding itself.
struct PaperRef {
  std::string id;
  std::string title;
  std::string authors;
  std::string abstract;
  std::vector<std::string> categories;
  double similarity = 0.0;
  bool operator==(const PaperRef&) const = default;
};

inline PaperRef to_ref(const StoredPaper& paper, double similarity) {
  return {paper.meta.id,       paper.meta.title,      paper.meta.authors,
          paper.meta.abstract, paper.meta.categories, similarity};
}

}  // namespace surveyor
