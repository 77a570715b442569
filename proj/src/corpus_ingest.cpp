#include "surveyor/corpus_ingest.hpp"

#include <fstream>
#include <sstream>
#include <unordered_map>

#include "json.hpp"
#include "surveyor/errors.hpp"
#include "surveyor/log.hpp"
#include "surveyor/util.hpp"

namespace surveyor::ingest {

using nlohmann::json;

bool CategoryFilter::matches(const std::vector<std::string>& categories) const {
  for (const auto& c : categories) {
    if (allowed.contains(c)) return true;
  }
  return false;
}

void CategoryFilter::validate() const {
  if (allowed.empty()) {
    throw ValidationError("category filter must allow at least one category");
  }
}

std::string format_report(const IngestReport& r) {
  std::ostringstream out;
  out << "total_read: " << r.total_read << "\n"
      << "filtered_kept: " << r.filtered_kept << "\n"
      << "dropped: " << r.dropped << "\n"
      << "malformed: " << r.malformed << "\n"
      << "already_present: " << r.already_present << "\n"
      << "newly_embedded: " << r.newly_embedded << "\n"
      << "batches: " << r.batches << "\n"
      << "failed_batches: " << r.failed_batches << "\n";
  return out.str();
}

std::optional<PaperMeta> parse_snapshot_record(const std::string& line,
                                               std::string* error) {
  auto fail = [&](const std::string& msg) -> std::optional<PaperMeta> {
    if (error) *error = msg;
    return std::nullopt;
  };

  json j = json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) return fail("not a JSON object");

  PaperMeta meta;
  if (!j.contains("id") || !j["id"].is_string()) return fail("missing id");
  meta.id = j["id"].get<std::string>();
  if (meta.id.empty()) return fail("empty id");

  if (!j.contains("title") || !j["title"].is_string()) {
    return fail("missing title");
  }
  meta.title = util::trim(j["title"].get<std::string>());

  if (!j.contains("abstract") || !j["abstract"].is_string()) {
    return fail("missing abstract");
  }
  meta.abstract = util::trim(j["abstract"].get<std::string>());
  if (meta.abstract.empty()) return fail("empty abstract");

  if (j.contains("authors") && j["authors"].is_string()) {
    meta.authors = j["authors"].get<std::string>();
  }

  // categories arrive as one space-separated string
  if (!j.contains("categories") || !j["categories"].is_string()) {
    return fail("missing categories");
  }
  meta.categories = util::split_ws(j["categories"].get<std::string>());

  if (j.contains("versions") && j["versions"].is_array()) {
    for (const auto& v : j["versions"]) {
      if (!v.is_object()) continue;
      meta.versions.push_back(
          {v.value("version", ""), v.value("created", "")});
    }
  }
  return meta;
}

std::vector<PaperMeta> filter_papers(const std::vector<PaperMeta>& records,
                                     const CategoryFilter& filter) {
  filter.validate();
  std::vector<PaperMeta> kept;
  for (const auto& r : records) {
    if (filter.matches(r.categories)) kept.push_back(r);
  }
  return kept;
}

std::vector<PaperMeta> diff_new(const std::vector<PaperMeta>& filtered,
                                const std::set<std::string>& existing_ids) {
  std::vector<PaperMeta> fresh;
  for (const auto& r : filtered) {
    if (!existing_ids.contains(r.id)) fresh.push_back(r);
  }
  return fresh;
}

EmbedBatchResult embed_batch(const std::vector<PaperMeta>& records,
                             std::size_t batch_size, llm::Gateway& gateway) {
  if (batch_size < 1) throw ArgumentError("batch_size must be >= 1");
  EmbedBatchResult result;
  if (records.empty()) return result;

  std::size_t total_batches = (records.size() + batch_size - 1) / batch_size;
  for (std::size_t b = 0; b < total_batches; ++b) {
    std::size_t begin = b * batch_size;
    std::size_t end = std::min(begin + batch_size, records.size());
    std::vector<std::string> texts;
    texts.reserve(end - begin);
    for (std::size_t i = begin; i < end; ++i) {
      texts.push_back(records[i].abstract);
    }
    ++result.batches;
    try {
      auto vectors = gateway.embed(texts);
      for (std::size_t i = begin; i < end; ++i) {
        result.embedded.emplace_back(records[i].id,
                                     std::move(vectors[i - begin]));
      }
      log::info("embedded batch " + std::to_string(b + 1) + "/" +
                std::to_string(total_batches) + " (" +
                std::to_string(end - begin) + " records)");
    } catch (const Error& e) {
      ++result.failed_batches;
      log::error("embedding batch " + std::to_string(b + 1) + "/" +
                 std::to_string(total_batches) + " failed: " + e.what());
    }
  }
  return result;
}

IngestReport ingest(const std::filesystem::path& snapshot_path,
                    const CategoryFilter& filter, store::VectorStore& store,
                    llm::Gateway& gateway, std::size_t batch_size) {
  filter.validate();
  if (batch_size < 1) throw ArgumentError("batch_size must be >= 1");

  std::ifstream in(snapshot_path);
  if (!in) {
    throw IoError("cannot read snapshot file: " + snapshot_path.string());
  }

  IngestReport report;
  std::vector<PaperMeta> kept;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (util::trim(line).empty()) continue;
    ++report.total_read;
    std::string error;
    auto meta = parse_snapshot_record(line, &error);
    if (!meta) {
      ++report.malformed;
      log::warn("snapshot line " + std::to_string(line_no) + " skipped: " +
                error);
      continue;
    }
    if (filter.matches(meta->categories)) {
      kept.push_back(std::move(*meta));
    } else {
      ++report.dropped;
    }
  }
  report.filtered_kept = kept.size();

  auto [count, existing_ids] = store.count_and_ids();
  (void)count;
  auto fresh = diff_new(kept, existing_ids);
  report.already_present = kept.size() - fresh.size();

  auto embedded = embed_batch(fresh, batch_size, gateway);
  report.batches = embedded.batches;
  report.failed_batches = embedded.failed_batches;
  report.newly_embedded = embedded.embedded.size();

  // insert per batch so a partial run leaves complete batches behind
  std::unordered_map<std::string, const PaperMeta*> by_id;
  by_id.reserve(fresh.size());
  for (const auto& r : fresh) by_id[r.id] = &r;

  std::vector<StoredPaper> batch;
  batch.reserve(std::min(batch_size, embedded.embedded.size()));
  for (auto& [id, emb] : embedded.embedded) {
    batch.push_back({*by_id.at(id), std::move(emb)});
    if (batch.size() == batch_size) {
      store.upsert_batch(batch);
      batch.clear();
    }
  }
  if (!batch.empty()) store.upsert_batch(batch);

  log::info("ingest complete: " + std::to_string(report.newly_embedded) +
            " new records embedded and stored");
  return report;
}

}  // namespace surveyor::ingest
