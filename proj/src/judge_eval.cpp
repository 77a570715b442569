#include "surveyor/judge_eval.hpp"

#include <cmath>
#include <regex>
#include <sstream>

#include "surveyor/errors.hpp"
#include "surveyor/log.hpp"
#include "surveyor/util.hpp"

namespace surveyor::judge {

Rubric Rubric::standard() {
  Rubric r;
  r.dimensions = {
      {"Coverage",
       "comprehensiveness of topic inclusion",
       {"major subtopics and foundational work are absent",
        "several important subtopics are missing or barely mentioned",
        "core subtopics are present but depth is uneven",
        "nearly all relevant subtopics are covered with adequate depth",
        "comprehensive inclusion of relevant subtopics, methods, and "
        "literature"}},
      {"Structure",
       "logical organization and narrative coherence",
       {"disorganized; sections do not follow a recognizable progression",
        "ordering is confusing in places and transitions are weak",
        "reasonable organization with occasional abrupt transitions",
        "clear organization; sections build on each other",
        "excellent organization; a coherent narrative throughout"}},
      {"Relevance",
       "topical alignment and citation accuracy",
       {"much of the content or many citations are off-topic or wrong",
        "noticeable off-topic digressions or dubious citations",
        "mostly on-topic; citations are plausible",
        "on-topic throughout; citations support the claims made",
        "tightly aligned with the topic; citations accurate and well used"}},
  };
  return r;
}

void Rubric::validate() const {
  if (dimensions.size() != 3 || dimensions[0].name != "Coverage" ||
      dimensions[1].name != "Structure" || dimensions[2].name != "Relevance") {
    throw ValidationError(
        "rubric must have exactly the Coverage, Structure, Relevance "
        "dimensions, in that order");
  }
}

std::string Rubric::render() const {
  std::ostringstream out;
  for (const auto& d : dimensions) {
    out << d.name << " - " << d.description << ".\n";
    for (std::size_t i = 0; i < d.levels.size(); ++i) {
      out << "  " << (i + 1) << ": " << d.levels[i];
      if (i == 0) out << " (poor)";
      if (i == d.levels.size() - 1) out << " (excellent)";
      out << "\n";
    }
    out << "\n";
  }
  return out.str();
}

double round2(double value) {
  return std::floor(value * 100.0 + 0.5) / 100.0;
}

JudgeScores JudgeScores::make(int coverage, int structure, int relevance) {
  for (int v : {coverage, structure, relevance}) {
    if (v < 1 || v > 5) {
      throw ScoreRangeError("score " + std::to_string(v) +
                            " outside the 1..5 scale");
    }
  }
  JudgeScores s;
  s.coverage = coverage;
  s.structure = structure;
  s.relevance = relevance;
  s.average = round2((coverage + structure + relevance) / 3.0);
  return s;
}

namespace {

int parse_dimension(const std::string& response, const std::string& name) {
  std::regex re("\\b" + name + "\\s*[:=-]\\s*(\\d+)",
                std::regex_constants::icase);
  std::smatch m;
  if (!std::regex_search(response, m, re)) {
    throw ScoreParseError(name, "no '" + name +
                                    ": <integer>' found in the judge response");
  }
  int value = std::stoi(m[1].str());
  if (value < 1 || value > 5) {
    throw ScoreRangeError(name + " score " + std::to_string(value) +
                          " outside the 1..5 scale");
  }
  return value;
}

}  // namespace

std::tuple<int, int, int> parse_scores(const std::string& response) {
  int c = parse_dimension(response, "Coverage");
  int s = parse_dimension(response, "Structure");
  int r = parse_dimension(response, "Relevance");
  return {c, s, r};
}

JudgeRun evaluate_survey(const std::string& survey_text, const Rubric& rubric,
                         llm::Gateway& gateway,
                         const prompts::PromptSet& prompt_set) {
  if (util::trim(survey_text).empty()) {
    throw ArgumentError("survey text must be nonempty");
  }
  rubric.validate();

  std::string prompt = prompt_set.render(
      "judge", {{"rubric", rubric.render()}, {"survey", survey_text}});

  auto ask = [&](const std::string& user) {
    llm::ChatRequest req;
    req.messages = {{"user", user}};
    req.temperature = 0.0;  // deterministic judging
    return gateway.complete(req).text;
  };

  std::string response = ask(prompt);
  std::string first_error;
  try {
    auto [c, s, r] = parse_scores(response);
    JudgeRun run;
    run.scores = JudgeScores::make(c, s, r);
    run.model_id = gateway.config().model_id.empty()
                       ? llm::provider_kind_name(gateway.config().kind)
                       : gateway.config().model_id;
    run.timestamp = util::iso_timestamp_utc();
    return run;
  } catch (const Error& e) {
    first_error = e.what();
  }

  log::warn("judge response unparseable (" + first_error +
            "); reprompting once with a format reminder");
  std::string reminder =
      prompt +
      "\n\nReminder: reply with exactly three lines in the form "
      "'Coverage: <integer>', 'Structure: <integer>', 'Relevance: <integer>' "
      "with integers from 1 to 5.";
  response = ask(reminder);
  try {
    auto [c, s, r] = parse_scores(response);
    JudgeRun run;
    run.scores = JudgeScores::make(c, s, r);
    run.model_id = gateway.config().model_id.empty()
                       ? llm::provider_kind_name(gateway.config().kind)
                       : gateway.config().model_id;
    run.timestamp = util::iso_timestamp_utc();
    return run;
  } catch (const Error& e) {
    throw EvaluationError(std::string("judge response unusable after one "
                                      "reprompt: ") +
                              e.what(),
                          response);
  }
}

AggregateScores aggregate(const std::vector<ScoreTriple>& runs) {
  if (runs.empty()) throw ArgumentError("aggregate needs at least one run");
  double c = 0, s = 0, r = 0;
  for (const auto& run : runs) {
    c += run.coverage;
    s += run.structure;
    r += run.relevance;
  }
  const double n = static_cast<double>(runs.size());
  AggregateScores out;
  out.coverage = round2(c / n);
  out.structure = round2(s / n);
  out.relevance = round2(r / n);
  out.overall = round2((c / n + s / n + r / n) / 3.0);
  return out;
}

}  // namespace surveyor::judge
