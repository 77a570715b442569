#pragma once

#include <array>
#include <string>
#include <tuple>
#include <vector>

#include "surveyor/llm_gateway.hpp"
#include "surveyor/prompts.hpp"

namespace surveyor::judge {

struct RubricDimension {
  std::string name;
  std::string description;
  std::array<std::string, 5> levels;  // descriptors for scores 1..5
};

/// Exactly Coverage, Structure, Relevance on a 1 (poor) .. 5 (excellent)
/// scale.
struct Rubric {
  std::vector<RubricDimension> dimensions;

  static Rubric standard();
  std::string render() const;
  void validate() const;
};

/// Half-up rounding to two decimals.
double round2(double value);

struct JudgeScores {
  int coverage = 0;
  int structure = 0;
  int relevance = 0;
  double average = 0.0;  // (c + s + r) / 3, rounded to 2 decimals

  static JudgeScores make(int coverage, int structure, int relevance);
  bool operator==(const JudgeScores&) const = default;
};

/// Per-dimension values as used by cross-run aggregation (fractional
/// dimension means are valid inputs).
struct ScoreTriple {
  double coverage = 0.0;
  double structure = 0.0;
  double relevance = 0.0;

  ScoreTriple() = default;
  ScoreTriple(double c, double s, double r)
      : coverage(c), structure(s), relevance(r) {}
  ScoreTriple(const JudgeScores& s)  // NOLINT: intentional conversion
      : coverage(s.coverage), structure(s.structure), relevance(s.relevance) {}
};

struct AggregateScores {
  double coverage = 0.0;
  double structure = 0.0;
  double relevance = 0.0;
  double overall = 0.0;  // mean of the three dimension means
  bool operator==(const AggregateScores&) const = default;
};

/// Pattern-based extraction: each dimension name, a separator, and an
/// integer; case-insensitive, first match per dimension wins. Throws
/// ScoreParseError naming a missing dimension, ScoreRangeError on values
/// outside 1..5.
std::tuple<int, int, int> parse_scores(const std::string& response);

struct JudgeRun {
  JudgeScores scores;
  std::string model_id;
  std::string timestamp;
};

/// Zero-temperature judge call over the full survey text plus the rubric.
/// A parse failure triggers one format-reminder reprompt; a second failure
/// raises EvaluationError carrying the raw response.
JudgeRun evaluate_survey(const std::string& survey_text, const Rubric& rubric,
                         llm::Gateway& gateway,
                         const prompts::PromptSet& prompt_set);

/// Arithmetic mean per dimension, overall = mean of the three dimension
/// means; everything rounded to 2 decimals. Empty input is an error.
AggregateScores aggregate(const std::vector<ScoreTriple>& runs);

}  // namespace surveyor::judge
