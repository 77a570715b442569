#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <filesystem>

#include "doctest.h"
#include "helpers.hpp"
#include "surveyor/errors.hpp"
#include "surveyor/vector_store.hpp"

using namespace surveyor;
using namespace surveyor::store;

namespace {

std::vector<StoredPaper> make_corpus(std::size_t n, std::uint64_t seed) {
  std::vector<StoredPaper> corpus;
  corpus.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    corpus.push_back(testutil::synth_paper(i, testutil::random_unit_vector(seed)));
  }
  return corpus;
}

std::filesystem::path temp_db(const char* tag) {
  auto path = std::filesystem::temp_directory_path() /
              (std::string("surveyor_store_") + tag + ".db");
  std::filesystem::remove(path);
  return path;
}

}  // namespace

TEST_CASE("cosine similarity basics") {
  Embedding a(kEmbeddingDim, 0.0f), b(kEmbeddingDim, 0.0f);
  a[0] = 1.0f;
  b[1] = 1.0f;
  CHECK(cosine_similarity(a, a) == doctest::Approx(1.0));
  CHECK(cosine_similarity(a, b) == doctest::Approx(0.0));
  Embedding zero(kEmbeddingDim, 0.0f);
  CHECK_THROWS_AS(cosine_similarity(a, zero), ArgumentError);
}

TEST_CASE("similarity symmetry and range on random pairs") {
  std::uint64_t seed = 7;
  for (int i = 0; i < 50; ++i) {
    auto a = testutil::random_unit_vector(seed);
    auto b = testutil::random_unit_vector(seed);
    double ab = cosine_similarity(a, b);
    double ba = cosine_similarity(b, a);
    CHECK(ab == doctest::Approx(ba).epsilon(1e-12));
    CHECK(ab >= -1.0 - 1e-9);
    CHECK(ab <= 1.0 + 1e-9);
  }
}

TEST_CASE("self query scores 1.0 and ranks first") {
  MemoryVectorStore store;
  auto corpus = make_corpus(10, 42);
  store.upsert_batch(corpus);
  auto hits = store.search_topk(corpus[3].embedding, 5, std::nullopt);
  REQUIRE(!hits.empty());
  CHECK(hits[0].paper_id == corpus[3].meta.id);
  CHECK(hits[0].similarity == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("K larger than corpus truncates to corpus size") {
  MemoryVectorStore store;
  store.upsert_batch(make_corpus(10, 1));
  std::uint64_t seed = 99;
  auto hits = store.search_topk(testutil::random_unit_vector(seed), 50, {});
  CHECK(hits.size() == 10);
}

TEST_CASE("argument errors") {
  MemoryVectorStore store;
  store.upsert_batch(make_corpus(3, 5));
  std::uint64_t seed = 11;
  auto q = testutil::random_unit_vector(seed);
  CHECK_THROWS_AS(store.search_topk(q, 0, {}), ArgumentError);
  Embedding zero(kEmbeddingDim, 0.0f);
  CHECK_THROWS_AS(store.search_topk(zero, 5, {}), ArgumentError);
  Embedding short_vec(16, 1.0f);
  StoredPaper bad = testutil::synth_paper(0, short_vec);
  CHECK_THROWS_AS(store.upsert_batch({bad}), ValidationError);
}

TEST_CASE("upsert is idempotent and empty batches are free") {
  MemoryVectorStore store;
  auto corpus = make_corpus(37, 8);
  CHECK(store.upsert_batch(corpus) == 37);
  CHECK(store.upsert_batch(corpus) == 0);
  CHECK(store.upsert_batch({}) == 0);
  auto [count, ids] = store.count_and_ids();
  CHECK(count == 37);
  CHECK(ids.size() == 37);
  for (const auto& p : corpus) CHECK(ids.contains(p.meta.id));
}

TEST_CASE("count_and_ids on an empty store") {
  MemoryVectorStore store;
  auto [count, ids] = store.count_and_ids();
  CHECK(count == 0);
  CHECK(ids.empty());
}

TEST_CASE("thousand-record batch lands whole") {
  MemoryVectorStore store;
  CHECK(store.upsert_batch(make_corpus(1000, 77)) == 1000);
  CHECK(store.count_and_ids().first == 1000);
}

TEST_CASE("search matches the brute-force oracle") {
  auto corpus = make_corpus(1000, 3);
  MemoryVectorStore store;
  store.upsert_batch(corpus);
  std::uint64_t seed = 1234;
  for (int q = 0; q < 20; ++q) {
    auto query = testutil::random_unit_vector(seed);
    auto expected = testutil::brute_force_topk(corpus, query, 20);
    auto got = store.search_topk(query, 20, {});
    REQUIRE(got.size() == expected.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
      CHECK(got[i].paper_id == expected[i].paper_id);
      CHECK(got[i].similarity ==
            doctest::Approx(expected[i].similarity).epsilon(1e-9));
    }
  }
}

TEST_CASE("threshold filters before truncation") {
  // axis-aligned construction with known cosines against e0
  auto axis_vec = [](std::size_t axis) {
    Embedding v(kEmbeddingDim, 0.0f);
    v[axis] = 1.0f;
    return v;
  };
  auto mix = [&](double w0, std::size_t other) {
    Embedding v(kEmbeddingDim, 0.0f);
    v[0] = static_cast<float>(w0);
    v[other] = static_cast<float>(std::sqrt(1.0 - w0 * w0));
    return v;
  };
  MemoryVectorStore store;
  std::vector<StoredPaper> papers;
  papers.push_back(testutil::synth_paper(0, axis_vec(0)));        // sim 1.0
  papers.push_back(testutil::synth_paper(1, mix(0.9, 1)));        // sim 0.9
  papers.push_back(testutil::synth_paper(2, mix(0.75, 2)));       // sim 0.75
  papers.push_back(testutil::synth_paper(3, mix(0.2, 3)));        // sim 0.2
  store.upsert_batch(papers);

  auto hits = store.search_topk(axis_vec(0), 2, 0.7);
  REQUIRE(hits.size() == 2);
  CHECK(hits[0].paper_id == papers[0].meta.id);
  CHECK(hits[1].paper_id == papers[1].meta.id);

  auto all_above = store.search_topk(axis_vec(0), 10, 0.7);
  CHECK(all_above.size() == 3);  // the 0.2 paper never qualifies
}

TEST_CASE("deterministic ordering with tie-break on id") {
  MemoryVectorStore store;
  Embedding v(kEmbeddingDim, 0.0f);
  v[0] = 1.0f;
  StoredPaper b = testutil::synth_paper(0, v);
  b.meta.id = "b";
  StoredPaper a = testutil::synth_paper(1, v);
  a.meta.id = "a";
  store.upsert_batch({b, a});
  auto hits = store.search_topk(v, 2, {});
  REQUIRE(hits.size() == 2);
  CHECK(hits[0].paper_id == "a");
  CHECK(hits[1].paper_id == "b");
  // identical repeated query, identical result
  auto again = store.search_topk(v, 2, {});
  CHECK(again == hits);
}

TEST_CASE("sqlite backend equals the in-memory backend") {
  auto corpus = make_corpus(200, 55);
  MemoryVectorStore mem;
  mem.upsert_batch(corpus);

  auto path = temp_db("equiv");
  auto sq = open_store("sqlite:" + path.string());
  CHECK(sq->upsert_batch(corpus) == 200);
  CHECK(sq->upsert_batch(corpus) == 0);

  std::uint64_t seed = 2024;
  for (int q = 0; q < 30; ++q) {
    auto query = testutil::random_unit_vector(seed);
    auto expected = mem.search_topk(query, 20, 0.0);
    auto got = sq->search_topk(query, 20, 0.0);
    REQUIRE(got.size() == expected.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
      CHECK(got[i].paper_id == expected[i].paper_id);
      CHECK(got[i].similarity ==
            doctest::Approx(expected[i].similarity).epsilon(1e-5));
    }
  }
  std::filesystem::remove(path);
}

TEST_CASE("sqlite persistence across reopen and fetch round-trip") {
  auto path = temp_db("persist");
  auto corpus = make_corpus(5, 13);
  corpus[2].meta.versions = {{"v1", "Mon, 1 Jan 2024"}, {"v2", "Tue, 2 Jan 2024"}};
  {
    auto sq = open_store("sqlite:" + path.string());
    CHECK(sq->upsert_batch(corpus) == 5);
  }
  auto sq = open_store("sqlite:" + path.string());
  CHECK(sq->count_and_ids().first == 5);
  auto fetched = sq->fetch({corpus[2].meta.id, corpus[0].meta.id});
  REQUIRE(fetched.size() == 2);
  CHECK(fetched[0].meta == corpus[2].meta);
  CHECK(fetched[1].meta == corpus[0].meta);
  CHECK(fetched[0].embedding == corpus[2].embedding);
  std::filesystem::remove(path);
}

TEST_CASE("store URL dispatch") {
  CHECK(open_store("") != nullptr);
  CHECK(open_store("memory:") != nullptr);
  CHECK_THROWS_AS(open_store("postgres://u:p@localhost:5451/research.db"),
                  ConfigError);
  CHECK_THROWS_AS(open_store("bogus://x"), ConfigError);
  CHECK_THROWS_AS(open_store("sqlite:"), ConfigError);
}
