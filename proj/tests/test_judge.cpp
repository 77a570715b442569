#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <fstream>

#include "doctest.h"
#include "surveyor/errors.hpp"
#include "surveyor/judge_eval.hpp"

using namespace surveyor;
using namespace surveyor::judge;

namespace {

llm::Gateway mock_gateway() {
  llm::ProviderConfig cfg;
  cfg.kind = llm::ProviderKind::mock;
  cfg.model_id = "mock-judge";
  return llm::Gateway(cfg);
}

std::string fixture_text(const char* name) {
  std::ifstream in(std::string(SURVEYOR_FIXTURE_DIR) + "/" + name);
  REQUIRE(in);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string render_scores(int c, int s, int r) {
  return "Coverage: " + std::to_string(c) + "\nStructure: " +
         std::to_string(s) + "\nRelevance: " + std::to_string(r) + "\n";
}

}  // namespace

TEST_CASE("parse_scores canonical and case-insensitive forms") {
  auto [c, s, r] = parse_scores("coverage: 3, structure: 3, relevance: 3");
  CHECK(c == 3);
  CHECK(s == 3);
  CHECK(r == 3);

  auto [c2, s2, r2] = parse_scores("Coverage=4\nStructure - 5\nRelevance: 2");
  CHECK(c2 == 4);
  CHECK(s2 == 5);
  CHECK(r2 == 2);
}

TEST_CASE("out-of-range and missing dimensions are distinct errors") {
  CHECK_THROWS_AS(parse_scores("Coverage: 4\nStructure: 4\nRelevance: 6"),
                  ScoreRangeError);
  CHECK_THROWS_AS(parse_scores("Coverage: 0\nStructure: 4\nRelevance: 4"),
                  ScoreRangeError);
  CHECK_THROWS_AS(parse_scores("Coverage: 35\nStructure: 4\nRelevance: 4"),
                  ScoreRangeError);
  try {
    parse_scores("Coverage: 4\nRelevance: 4");
    FAIL("expected ScoreParseError");
  } catch (const ScoreParseError& e) {
    CHECK(e.dimension() == "Structure");
  }
}

TEST_CASE("verbose judge transcript parses to the embedded triple") {
  auto [c, s, r] = parse_scores(fixture_text("judge_response.txt"));
  CHECK(c == 4);
  CHECK(s == 5);
  CHECK(r == 4);
}

TEST_CASE("parse round-trips all 125 canonical triples") {
  for (int c = 1; c <= 5; ++c) {
    for (int s = 1; s <= 5; ++s) {
      for (int r = 1; r <= 5; ++r) {
        auto [pc, ps, pr] = parse_scores(render_scores(c, s, r));
        CHECK(pc == c);
        CHECK(ps == s);
        CHECK(pr == r);
      }
    }
  }
}

TEST_CASE("score averages round half-up to two decimals") {
  auto scores = JudgeScores::make(5, 4, 5);
  CHECK(scores.average == doctest::Approx(4.67));
  CHECK(JudgeScores::make(3, 3, 3).average == doctest::Approx(3.0));
  CHECK(JudgeScores::make(1, 1, 2).average == doctest::Approx(1.33));
  CHECK_THROWS_AS(JudgeScores::make(0, 3, 3), ScoreRangeError);
  CHECK_THROWS_AS(JudgeScores::make(3, 3, 6), ScoreRangeError);
}

TEST_CASE("aggregate reproduces the reference rows") {
  auto table_row = aggregate({ScoreTriple{4.72, 4.68, 4.88}});
  CHECK(table_row.overall == doctest::Approx(4.76));
  CHECK(table_row.coverage == doctest::Approx(4.72));

  auto fives = aggregate({ScoreTriple{5, 5, 5}, ScoreTriple{5, 5, 5}});
  CHECK(fives.coverage == doctest::Approx(5.0));
  CHECK(fives.overall == doctest::Approx(5.0));

  auto symmetric = aggregate({ScoreTriple{3, 3, 3}, ScoreTriple{5, 5, 5}});
  CHECK(symmetric.coverage == doctest::Approx(4.0));
  CHECK(symmetric.structure == doctest::Approx(4.0));
  CHECK(symmetric.relevance == doctest::Approx(4.0));
  CHECK(symmetric.overall == doctest::Approx(4.0));

  CHECK_THROWS_AS(aggregate({}), ArgumentError);
}

TEST_CASE("aggregate is permutation-invariant") {
  std::vector<ScoreTriple> runs = {
      {1, 2, 3}, {5, 4, 3}, {2, 2, 5}, {4, 4, 4}, {3, 5, 1}};
  auto base = aggregate(runs);
  std::vector<std::size_t> order = {4, 2, 0, 3, 1};
  std::vector<ScoreTriple> shuffled;
  for (auto i : order) shuffled.push_back(runs[i]);
  auto permuted = aggregate(shuffled);
  CHECK(base == permuted);
}

TEST_CASE("evaluate_survey parses scripted scores and records metadata") {
  auto gw = mock_gateway();
  gw.mock_script().fifo = {"Coverage: 5\nStructure: 4\nRelevance: 5"};
  auto run = evaluate_survey("survey body", Rubric::standard(), gw,
                             prompts::PromptSet::defaults());
  CHECK(run.scores.coverage == 5);
  CHECK(run.scores.structure == 4);
  CHECK(run.scores.relevance == 5);
  CHECK(run.scores.average == doctest::Approx(4.67));
  CHECK(run.model_id == "mock-judge");
  CHECK_FALSE(run.timestamp.empty());
}

TEST_CASE("empty survey text violates the precondition") {
  auto gw = mock_gateway();
  CHECK_THROWS_AS(evaluate_survey("", Rubric::standard(), gw,
                                  prompts::PromptSet::defaults()),
                  ArgumentError);
}

TEST_CASE("identical inputs score identically across 10 runs") {
  auto gw = mock_gateway();
  auto first = evaluate_survey("a long survey text body", Rubric::standard(),
                               gw, prompts::PromptSet::defaults());
  for (int i = 0; i < 9; ++i) {
    auto again = evaluate_survey("a long survey text body", Rubric::standard(),
                                 gw, prompts::PromptSet::defaults());
    CHECK(again.scores == first.scores);
  }
}

TEST_CASE("judge reprompts once, then raises with the raw response") {
  auto gw = mock_gateway();
  gw.mock_script().fifo = {"gibberish", "Coverage: 3\nStructure: 3\nRelevance: 3"};
  auto run = evaluate_survey("text", Rubric::standard(), gw,
                             prompts::PromptSet::defaults());
  CHECK(run.scores.coverage == 3);
  CHECK(gw.mock_script().fifo.empty());

  gw.mock_script().fifo = {"gibberish", "still gibberish"};
  try {
    evaluate_survey("text", Rubric::standard(), gw,
                    prompts::PromptSet::defaults());
    FAIL("expected EvaluationError");
  } catch (const EvaluationError& e) {
    CHECK(e.raw_response() == "still gibberish");
  }
}

TEST_CASE("rubric shape is validated and rendered with labeled endpoints") {
  auto rubric = Rubric::standard();
  CHECK_NOTHROW(rubric.validate());
  auto text = rubric.render();
  CHECK(text.find("Coverage") != std::string::npos);
  CHECK(text.find("Structure") != std::string::npos);
  CHECK(text.find("Relevance") != std::string::npos);
  CHECK(text.find("(poor)") != std::string::npos);
  CHECK(text.find("(excellent)") != std::string::npos);

  Rubric wrong;
  wrong.dimensions = {{"Coverage", "x", {}}};
  CHECK_THROWS_AS(wrong.validate(), ValidationError);
}
