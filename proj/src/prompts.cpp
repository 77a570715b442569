#include "surveyor/prompts.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "surveyor/errors.hpp"

namespace surveyor::prompts {

namespace {

const char* kOutline = R"(You are an expert academic editor planning a literature survey.

Topic: {topic}

Reference corpus (title and abstract, most relevant first):

{corpus}

Design the structure of a survey on this topic. Reply with a numbered list of exactly {m} section titles, one per line, in reading order. Do not include subsections, and do not add an Abstract or Conclusion entry; the list items must be plain section titles.
)";

const char* kAnalysis = R"(You are a research analyst preparing notes for one section of a literature survey.

Survey topic: {topic}
Section: {section}

Source papers (title, then abstract):

{papers}

Summarize for this section: the key contributions of these papers, common methodologies, contrasting perspectives, notable technical nuances, and existing limitations. Be concise and structured.
)";

const char* kSynthesis = R"(You are writing one section of an academic literature survey.

Survey topic: {topic}
Section title: {section}

Analyst notes:
{analysis}

Source papers (cite key in brackets, then title and abstract):

{papers}

Write the full text of this section in a formal academic tone with clear logical flow. Cite sources inline with \cite{paper_id} commands, using only the bracketed keys listed above as paper_id. Keep the section cohesive and do not introduce subsections.
)";

const char* kAbstract = R"(You are finalizing an academic literature survey.

Topic: {topic}

Condensed section summaries:

{summary}

Write the survey's abstract as one paragraph of 250 to 300 words covering motivation, scope, the methods surveyed, and principal findings. Reply with the abstract text only.
)";

const char* kConclusion = R"(You are finalizing an academic literature survey.

Topic: {topic}

Condensed section summaries:

{summary}

Write the survey's conclusion in 400 to 500 words, summarizing key insights, the current research landscape, open challenges, and future directions. Reply with the conclusion text only.
)";

const char* kJudge = R"(You are an expert reviewer scoring an academic literature survey.

Scoring rubric:

{rubric}

Survey text:

{survey}

Score each dimension on a scale of 1 (poor) to 5 (excellent). Reply with exactly three lines, one per dimension, in this form:
Coverage: <integer>
Structure: <integer>
Relevance: <integer>
)";

const char* kRubric = R"(Coverage - comprehensiveness of topic inclusion.
  1: Major subtopics and foundational work are absent.
  2: Several important subtopics are missing or barely mentioned.
  3: Core subtopics are present but depth is uneven.
  4: Nearly all relevant subtopics are covered with adequate depth.
  5: Comprehensive inclusion of relevant subtopics, methods, and literature.

Structure - logical organization and narrative coherence.
  1: Disorganized; sections do not follow a recognizable progression.
  2: Ordering is confusing in places and transitions are weak.
  3: Reasonable organization with occasional abrupt transitions.
  4: Clear organization; sections build on each other with minor rough edges.
  5: Excellent organization; a coherent narrative from introduction to conclusion.

Relevance - topical alignment and citation accuracy.
  1: Much of the content or many citations are off-topic or wrong.
  2: Noticeable off-topic digressions or dubious citations.
  3: Mostly on-topic; citations are plausible with some loose matches.
  4: On-topic throughout; citations support the claims made.
  5: Tightly aligned with the topic; citations are accurate and well used.
)";

const std::map<std::string, const char*>& builtin() {
  static const std::map<std::string, const char*> m = {
      {"outline", kOutline},   {"analysis", kAnalysis},
      {"synthesis", kSynthesis}, {"abstract", kAbstract},
      {"conclusion", kConclusion}, {"judge", kJudge},
      {"rubric", kRubric},
  };
  return m;
}

}  // namespace

PromptSet PromptSet::defaults() {
  PromptSet set;
  for (const auto& [name, text] : builtin()) set.templates_[name] = text;
  return set;
}

PromptSet PromptSet::load(const std::filesystem::path& dir) {
  PromptSet set = defaults();
  if (dir.empty() || !std::filesystem::is_directory(dir)) return set;
  for (auto& [name, _] : set.templates_) {
    std::filesystem::path file = dir / (name + ".txt");
    std::ifstream in(file);
    if (!in) continue;
    std::ostringstream buf;
    buf << in.rdbuf();
    set.templates_[name] = buf.str();
  }
  return set;
}

const std::string& PromptSet::raw(std::string_view name) const {
  auto it = templates_.find(std::string(name));
  if (it == templates_.end()) {
    throw ArgumentError("unknown prompt template: " + std::string(name));
  }
  return it->second;
}

std::string PromptSet::render_text(
    const std::string& tmpl, const std::map<std::string, std::string>& vars) {
  std::string out;
  out.reserve(tmpl.size());
  std::size_t i = 0;
  while (i < tmpl.size()) {
    char c = tmpl[i];
    if (c != '{') {
      out.push_back(c);
      ++i;
      continue;
    }
    std::size_t close = tmpl.find('}', i + 1);
    if (close == std::string::npos) {
      out.append(tmpl.substr(i));
      break;
    }
    std::string name = tmpl.substr(i + 1, close - i - 1);
    auto it = vars.find(name);
    if (it != vars.end()) {
      out.append(it->second);
    } else {
      out.append(tmpl.substr(i, close - i + 1));
    }
    i = close + 1;
  }
  return out;
}

std::string PromptSet::render(
    std::string_view name, const std::map<std::string, std::string>& vars) const {
  return render_text(raw(name), vars);
}

}  // namespace surveyor::prompts
