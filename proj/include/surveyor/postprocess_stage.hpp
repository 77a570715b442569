#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "surveyor/types.hpp"
#include "surveyor/vector_store.hpp"

namespace surveyor::post {

enum class Provenance { arxiv_preprint, dblp_published };

/// One bibliography record. The key never changes, even when a published
/// version replaces the preprint entry.
struct BibEntry {
  std::string key;
  std::string entry_type = "misc";  // without '@'
  std::vector<std::pair<std::string, std::string>> fields;  // ordered
  Provenance provenance = Provenance::arxiv_preprint;
  std::string comment;  // optional annotation, emitted as a '%' line

  const std::string* field(const std::string& name) const;
  void set_field(const std::string& name, const std::string& value);
};

/// All keys from all \cite commands, split on commas and whitespace,
/// deduplicated preserving first occurrence; empty keys discarded.
std::vector<std::string> extract_citation_keys(const std::string& tex);

/// "Last, First and Last, First" (also ;-separated) -> "First Last and
/// First Last". Names without a comma pass through verbatim.
std::string format_authors(const std::string& raw);

/// Publication year inferred from the ArXiv id prefix:
/// new-style YYMM.NNNNN -> 2000+YY; old-style area/YYMMNNN -> 19YY when
/// YY >= 91, else 20YY. nullopt when the id has no recognizable prefix.
std::optional<int> year_from_arxiv_id(const std::string& id);

/// @misc entry keyed by the ArXiv id, with reordered authors, inferred
/// year, eprint, archivePrefix, and the first category as primaryClass.
BibEntry make_bib_entry(const PaperMeta& meta);

/// First entry per key, order preserved.
std::vector<BibEntry> dedup_entries(const std::vector<BibEntry>& entries);

/// One entry per block, fixed field layout, '%' comment line above
/// annotated entries.
std::string serialize_bib(const std::vector<BibEntry>& entries);
std::string serialize_entry(const BibEntry& entry);

/// Parse the first complete entry from BibTeX text (used on DBLP replies).
std::optional<BibEntry> parse_bib_entry(const std::string& text);

// --- DBLP ---

struct DblpConfig {
  std::string base_url = "https://dblp.org";
  double timeout_s = 10.0;
  int retries = 1;
};

/// Minimal client for the DBLP publication-search API: an exact-title query
/// (first author's last name appended), first hit wins, BibTeX fetched from
/// the hit's record URL.
class DblpClient {
 public:
  explicit DblpClient(DblpConfig config) : config_(std::move(config)) {}
  virtual ~DblpClient() = default;

  /// BibTeX text of the published version, nullopt when DBLP has no match.
  /// Throws NetworkError after exhausting the retry budget.
  virtual std::optional<std::string> fetch_published_bibtex(
      const std::string& title, const std::string& author_last_name);

  const DblpConfig& config() const { return config_; }

 private:
  std::string http_get(const std::string& url);
  DblpConfig config_;
};

/// Eq.-style conditional replacement: a DBLP hit yields the published entry
/// re-keyed to the original key; no hit keeps the entry and annotates it as
/// preprint-only; a network failure keeps the entry untouched with a
/// warning. Always returns an entry.
BibEntry resolve_published(const BibEntry& entry, DblpClient& dblp);

// --- LaTeX enhancement & bundle ---

/// Title derived from a .tex filename: underscores to spaces, title case
/// with acronyms preserved, ": A Comprehensive Survey" appended.
std::string title_from_filename(const std::string& filename);

/// Structural rewrite of a complete document: natbib in place of the cite
/// package, drawing/tree/table/hyperlink packages added, dark-blue link
/// colors, filename-derived title, abstract environment ensured,
/// bibliography commands appended, vertical space before section headers.
/// Idempotent: enhance(enhance(t)) == enhance(t).
std::string enhance_latex(const std::string& tex, const std::string& filename,
                          const std::string& bib_base = "survey",
                          const std::string& bib_style = "apalike");

struct OutputBundle {
  std::filesystem::path tex_path;
  std::filesystem::path bib_path;
  std::filesystem::path figs_dir;
};

/// Write survey.tex, survey.bib, and an empty figs/ under out_dir. Every
/// key cited in the tex ends up with exactly one entry (an UNRESOLVED stub
/// plus a hard warning when no metadata exists); uncited entries are
/// dropped with a warning.
OutputBundle assemble_output(const std::string& tex,
                             const std::vector<BibEntry>& entries,
                             const std::filesystem::path& out_dir);

struct PostprocessConfig {
  std::filesystem::path out_dir = "result";
  std::string bib_style = "apalike";
  bool enable_dblp = false;
  DblpConfig dblp;
  unsigned max_in_flight = 4;
};

struct PostprocessResult {
  OutputBundle bundle;
  std::string enhanced_tex;
  std::vector<BibEntry> entries;
  std::size_t keys_cited = 0;
  std::size_t resolved_published = 0;
  std::size_t preprint_only = 0;
  std::size_t unresolved = 0;
};

/// Full Stage-4 run over an emitted .tex file: extract keys, synthesize
/// entries from store metadata, optionally upgrade via DBLP, enhance the
/// source, and assemble the bundle.
PostprocessResult post_process(const std::filesystem::path& tex_path,
                               const store::VectorStore& store,
                               const PostprocessConfig& config);

}  // namespace surveyor::post
