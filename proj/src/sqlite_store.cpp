#include <sqlite3.h>

#include <cstring>
#include <mutex>
#include <sstream>

#include "json.hpp"
#include "surveyor/errors.hpp"
#include "surveyor/util.hpp"
#include "surveyor/vector_store.hpp"

namespace surveyor::store {

namespace {

using nlohmann::json;

std::string join_categories(const std::vector<std::string>& cats) {
  std::string out;
  for (const auto& c : cats) {
    if (!out.empty()) out += ' ';
    out += c;
  }
  return out;
}

std::string versions_to_json(const std::vector<PaperVersion>& versions) {
  json arr = json::array();
  for (const auto& v : versions) {
    arr.push_back({{"version", v.tag}, {"created", v.created}});
  }
  return arr.dump();
}

std::vector<PaperVersion> versions_from_json(const std::string& text) {
  std::vector<PaperVersion> out;
  if (text.empty()) return out;
  json arr = json::parse(text, nullptr, false);
  if (!arr.is_array()) return out;
  for (const auto& v : arr) {
    out.push_back({v.value("version", ""), v.value("created", "")});
  }
  return out;
}

/// File-backed relational store: one table holding the bibliographic
/// columns plus the 768-dim embedding serialized as a float32 blob.
/// Similarity is always cosine, computed on the scanned vectors, whatever
/// the storage engine calls its operators.
class SqliteVectorStore : public VectorStore {
 public:
  explicit SqliteVectorStore(const std::string& path) {
    int rc = sqlite3_open(path.c_str(), &db_);
    if (rc != SQLITE_OK) {
      std::string msg = db_ ? sqlite3_errmsg(db_) : "out of memory";
      if (db_) sqlite3_close(db_);
      throw NetworkError("cannot open store at " + path + ": " + msg +
                         " (check the path is writable and retry)");
    }
    exec(
        "CREATE TABLE IF NOT EXISTS papers ("
        "  id TEXT PRIMARY KEY,"
        "  title TEXT NOT NULL,"
        "  authors TEXT,"
        "  abstract TEXT,"
        "  categories TEXT,"
        "  versions TEXT,"
        "  embedding BLOB NOT NULL)");
  }

  ~SqliteVectorStore() override {
    if (db_) sqlite3_close(db_);
  }

  std::size_t upsert_batch(const std::vector<StoredPaper>& papers) override {
    if (papers.empty()) return 0;
    for (const auto& p : papers) validate_embedding(p.embedding);

    std::lock_guard<std::mutex> lock(mutex_);
    exec("BEGIN IMMEDIATE");
    std::size_t inserted = 0;
    try {
      sqlite3_stmt* stmt = prepare(
          "INSERT OR IGNORE INTO papers "
          "(id, title, authors, abstract, categories, versions, embedding) "
          "VALUES (?, ?, ?, ?, ?, ?, ?)");
      for (const auto& p : papers) {
        sqlite3_reset(stmt);
        sqlite3_clear_bindings(stmt);
        bind_text(stmt, 1, p.meta.id);
        bind_text(stmt, 2, p.meta.title);
        bind_text(stmt, 3, p.meta.authors);
        bind_text(stmt, 4, p.meta.abstract);
        bind_text(stmt, 5, join_categories(p.meta.categories));
        bind_text(stmt, 6, versions_to_json(p.meta.versions));
        sqlite3_bind_blob(stmt, 7, p.embedding.data(),
                          static_cast<int>(p.embedding.size() * sizeof(float)),
                          SQLITE_TRANSIENT);
        step_done(stmt);
        inserted += static_cast<std::size_t>(sqlite3_changes(db_));
      }
      sqlite3_finalize(stmt);
      exec("COMMIT");
    } catch (...) {
      exec_quiet("ROLLBACK");
      throw;
    }
    return inserted;
  }

  std::vector<SearchHit> search_topk(
      const Embedding& query, std::size_t k,
      std::optional<double> threshold) const override {
    std::lock_guard<std::mutex> lock(mutex_);
    std::vector<std::pair<std::string, Embedding>> rows;
    sqlite3_stmt* stmt = prepare("SELECT id, embedding FROM papers");
    while (sqlite3_step(stmt) == SQLITE_ROW) {
      rows.emplace_back(column_text(stmt, 0), column_embedding(stmt, 1));
    }
    sqlite3_finalize(stmt);

    std::vector<std::pair<std::string, const Embedding*>> corpus;
    corpus.reserve(rows.size());
    for (const auto& [id, emb] : rows) corpus.emplace_back(id, &emb);
    return rank_topk(corpus, query, k, threshold);
  }

  std::pair<std::size_t, std::set<std::string>> count_and_ids() const override {
    std::lock_guard<std::mutex> lock(mutex_);
    std::set<std::string> ids;
    sqlite3_stmt* stmt = prepare("SELECT id FROM papers");
    while (sqlite3_step(stmt) == SQLITE_ROW) {
      ids.insert(column_text(stmt, 0));
    }
    sqlite3_finalize(stmt);
    return {ids.size(), std::move(ids)};
  }

  std::vector<StoredPaper> fetch(
      const std::vector<std::string>& ids) const override {
    std::lock_guard<std::mutex> lock(mutex_);
    std::vector<StoredPaper> out;
    sqlite3_stmt* stmt = prepare(
        "SELECT id, title, authors, abstract, categories, versions, embedding "
        "FROM papers WHERE id = ?");
    for (const auto& id : ids) {
      sqlite3_reset(stmt);
      bind_text(stmt, 1, id);
      if (sqlite3_step(stmt) == SQLITE_ROW) {
        StoredPaper p;
        p.meta.id = column_text(stmt, 0);
        p.meta.title = column_text(stmt, 1);
        p.meta.authors = column_text(stmt, 2);
        p.meta.abstract = column_text(stmt, 3);
        p.meta.categories = util::split_ws(column_text(stmt, 4));
        p.meta.versions = versions_from_json(column_text(stmt, 5));
        p.embedding = column_embedding(stmt, 6);
        out.push_back(std::move(p));
      }
    }
    sqlite3_finalize(stmt);
    return out;
  }

 private:
  void exec(const std::string& sql) {
    char* err = nullptr;
    if (sqlite3_exec(db_, sql.c_str(), nullptr, nullptr, &err) != SQLITE_OK) {
      std::string msg = err ? err : "unknown sqlite error";
      sqlite3_free(err);
      throw NetworkError("store backend error: " + msg);
    }
  }

  void exec_quiet(const std::string& sql) {
    sqlite3_exec(db_, sql.c_str(), nullptr, nullptr, nullptr);
  }

  sqlite3_stmt* prepare(const std::string& sql) const {
    sqlite3_stmt* stmt = nullptr;
    if (sqlite3_prepare_v2(db_, sql.c_str(), -1, &stmt, nullptr) != SQLITE_OK) {
      throw NetworkError(std::string("store backend error: ") +
                         sqlite3_errmsg(db_));
    }
    return stmt;
  }

  static void bind_text(sqlite3_stmt* stmt, int idx, const std::string& v) {
    sqlite3_bind_text(stmt, idx, v.c_str(), static_cast<int>(v.size()),
                      SQLITE_TRANSIENT);
  }

  void step_done(sqlite3_stmt* stmt) {
    if (sqlite3_step(stmt) != SQLITE_DONE) {
      throw NetworkError(std::string("store backend error: ") +
                         sqlite3_errmsg(db_));
    }
  }

  static std::string column_text(sqlite3_stmt* stmt, int idx) {
    const unsigned char* p = sqlite3_column_text(stmt, idx);
    return p ? reinterpret_cast<const char*>(p) : "";
  }

  static Embedding column_embedding(sqlite3_stmt* stmt, int idx) {
    const void* blob = sqlite3_column_blob(stmt, idx);
    int bytes = sqlite3_column_bytes(stmt, idx);
    Embedding e(static_cast<std::size_t>(bytes) / sizeof(float));
    if (blob && bytes > 0) std::memcpy(e.data(), blob, static_cast<std::size_t>(bytes));
    return e;
  }

  sqlite3* db_ = nullptr;
  mutable std::mutex mutex_;
};

}  // namespace

std::unique_ptr<VectorStore> open_sqlite_store(const std::string& path) {
  return std::make_unique<SqliteVectorStore>(path);
}

}  // namespace surveyor::store
