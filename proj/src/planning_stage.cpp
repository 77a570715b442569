#include "surveyor/planning_stage.hpp"

#include <regex>
#include <set>
#include <sstream>

#include "surveyor/errors.hpp"
#include "surveyor/log.hpp"
#include "surveyor/util.hpp"

namespace surveyor::planning {

void Outline::validate() const {
  if (sections.empty()) throw ValidationError("outline has no sections");
  std::set<std::string> seen;
  for (const auto& title : sections) {
    if (util::trim(title).empty()) {
      throw ValidationError("outline contains an empty section title");
    }
    if (!seen.insert(title).second) {
      throw ValidationError("duplicate outline title: " + title);
    }
  }
}

std::vector<PaperRef> retrieve_reference_corpus(const std::string& topic,
                                                std::size_t k_ref,
                                                const store::VectorStore& store,
                                                llm::Gateway& gateway) {
  if (k_ref < 1) throw ArgumentError("K_ref must be >= 1");
  auto [count, ids] = store.count_and_ids();
  (void)ids;
  if (count == 0) {
    throw ConfigError(
        "the vector store is empty; run the ingest command before generating");
  }
  Embedding query = gateway.embed({topic}).at(0);
  auto hits = store.search_topk(query, k_ref, std::nullopt);

  std::vector<std::string> hit_ids;
  hit_ids.reserve(hits.size());
  for (const auto& h : hits) hit_ids.push_back(h.paper_id);
  auto papers = store.fetch(hit_ids);

  std::vector<PaperRef> refs;
  refs.reserve(papers.size());
  for (std::size_t i = 0; i < papers.size(); ++i) {
    refs.push_back(to_ref(papers[i], hits[i].similarity));
  }
  return refs;
}

std::vector<std::string> parse_numbered_list(const std::string& text) {
  static const std::regex line_re(R"(^\s*(\d+)[.)]\s+(.+)$)");
  std::vector<std::string> titles;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::smatch m;
    if (std::regex_match(line, m, line_re)) {
      titles.push_back(util::trim(m[2].str()));
    }
  }
  return titles;
}

std::string pack_corpus_context(const std::vector<PaperRef>& corpus,
                                std::size_t budget_chars) {
  std::string out;
  for (const auto& p : corpus) {
    std::string block = p.title + "\n\n" + p.abstract;
    if (!out.empty()) block = "\n\n" + block;
    if (out.size() + block.size() > budget_chars) {
      std::size_t room = budget_chars > out.size() ? budget_chars - out.size() : 0;
      out += util::truncate_chars(block, room);
      break;
    }
    out += block;
  }
  return out;
}

Outline generate_outline(const std::string& topic,
                         const std::vector<PaperRef>& corpus, std::size_t m,
                         llm::Gateway& gateway,
                         const prompts::PromptSet& prompt_set,
                         std::size_t context_budget_chars) {
  if (m < 1) throw ArgumentError("m must be >= 1");
  if (corpus.empty()) throw ArgumentError("reference corpus is empty");

  std::string context = pack_corpus_context(corpus, context_budget_chars);
  std::string prompt = prompt_set.render(
      "outline",
      {{"topic", topic}, {"corpus", context}, {"m", std::to_string(m)}});

  auto attempt = [&](const std::string& user) {
    llm::ChatRequest req;
    req.messages = {{"user", user}};
    return gateway.complete(req).text;
  };

  auto accept = [&](const std::string& response) -> std::optional<Outline> {
    auto titles = parse_numbered_list(response);
    if (titles.size() != m) return std::nullopt;
    std::set<std::string> unique(titles.begin(), titles.end());
    if (unique.size() != titles.size()) return std::nullopt;
    Outline outline{std::move(titles)};
    outline.validate();
    return outline;
  };

  std::string response = attempt(prompt);
  if (auto outline = accept(response)) return *outline;

  log::warn("outline response did not yield " + std::to_string(m) +
            " unique titles; reprompting once");
  std::string reminder =
      prompt + "\n\nReminder: reply with exactly " + std::to_string(m) +
      " numbered lines (\"1. Title\") and nothing else; titles must be unique.";
  response = attempt(reminder);
  if (auto outline = accept(response)) return *outline;

  throw OutlineParseError("outline response did not contain exactly " +
                              std::to_string(m) + " unique numbered titles",
                          response);
}

state::StateDelta init_placeholders(const state::GlobalState& state,
                                    const Outline& outline) {
  (void)state;
  outline.validate();

  state::StateDelta delta;
  nlohmann::ordered_json order = nlohmann::ordered_json::object();
  for (std::size_t i = 0; i < outline.sections.size(); ++i) {
    const std::string& title = outline.sections[i];
    delta.sections[title] = "";
    order[title] = i;
  }
  delta.stage_results["planning"] = {
      {"section_order", order},
      {"section_count", outline.sections.size()},
  };
  return delta;
}

}  // namespace surveyor::planning
