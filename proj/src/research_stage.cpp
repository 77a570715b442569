#include "surveyor/research_stage.hpp"

#include <regex>

#include "surveyor/errors.hpp"
#include "surveyor/log.hpp"
#include "surveyor/util.hpp"

namespace surveyor::research {

bool is_meta_section(const std::string& title) {
  std::string t = util::trim(title);
  return util::iequals(t, "Abstract") || util::iequals(t, "Conclusion");
}

std::vector<PaperRef> search_section_papers(const std::string& topic,
                                            const std::string& section_title,
                                            const RetrievalParams& params,
                                            const store::VectorStore& store,
                                            llm::Gateway& gateway) {
  if (params.k_sec < 1) throw ArgumentError("K_sec must be >= 1");
  if (params.candidate_topk < 1) throw ArgumentError("candidate_topk must be >= 1");
  auto [count, ids] = store.count_and_ids();
  (void)ids;
  if (count == 0) {
    throw ConfigError(
        "the vector store is empty; run the ingest command before generating");
  }

  std::string query = topic + " " + section_title;
  Embedding embedded = gateway.embed({query}).at(0);
  std::size_t pool = std::max(params.candidate_topk, params.k_sec);
  auto hits = store.search_topk(embedded, pool, params.similarity_threshold);
  if (hits.size() > params.k_sec) hits.resize(params.k_sec);

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

std::string build_analysis_context(const std::vector<PaperRef>& papers,
                                   std::size_t k) {
  std::string out;
  std::size_t n = std::min(k, papers.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (!out.empty()) out += "\n\n";
    out += papers[i].title + "\n\n" + papers[i].abstract;
  }
  return out;
}

std::string analyze_section(const std::string& topic,
                            const std::string& section_title,
                            const std::vector<PaperRef>& papers, std::size_t k,
                            llm::Gateway& gateway,
                            const prompts::PromptSet& prompt_set) {
  if (k < 1) throw ArgumentError("analysis depth k must be >= 1");
  if (papers.empty()) {
    throw ArgumentError("no papers retrieved for section '" + section_title +
                        "'; cannot analyze");
  }
  std::string context = build_analysis_context(papers, k);
  std::string prompt = prompt_set.render("analysis", {{"topic", topic},
                                                      {"section", section_title},
                                                      {"papers", context}});
  llm::ChatRequest req;
  req.messages = {{"user", prompt}};
  return gateway.complete(req).text;
}

std::string pack_cited_papers(const std::vector<PaperRef>& papers) {
  std::string out;
  for (const auto& p : papers) {
    if (!out.empty()) out += "\n\n";
    out += "[" + p.id + "] " + p.title + "\n" + p.abstract;
  }
  return out;
}

CiteValidation validate_citations(const std::string& draft,
                                  const std::set<std::string>& allowed) {
  static const std::regex cite_re(R"(\\cite\s*\{([^}]*)\})");
  CiteValidation result;
  result.text.reserve(draft.size());

  auto begin = std::sregex_iterator(draft.begin(), draft.end(), cite_re);
  auto end = std::sregex_iterator();
  std::size_t cursor = 0;
  for (auto it = begin; it != end; ++it) {
    const std::smatch& m = *it;
    result.text.append(draft, cursor, static_cast<std::size_t>(m.position()) - cursor);
    cursor = static_cast<std::size_t>(m.position() + m.length());

    std::vector<std::string> kept;
    for (const auto& raw : util::split_ws(m[1].str())) {
      // keys may be comma-separated with or without spaces
      std::string token = raw;
      std::string current;
      for (char c : token + ",") {
        if (c == ',') {
          if (!current.empty()) {
            if (allowed.contains(current)) {
              kept.push_back(current);
            } else {
              result.removed_keys.push_back(current);
            }
            current.clear();
          }
        } else {
          current.push_back(c);
        }
      }
    }
    if (!kept.empty()) {
      std::string joined;
      for (const auto& k : kept) {
        if (!joined.empty()) joined += ",";
        joined += k;
      }
      result.text += "\\cite{" + joined + "}";
    }
    // a command with no surviving keys disappears entirely
  }
  result.text.append(draft, cursor, draft.size() - cursor);
  return result;
}

std::string synthesize_section(const std::string& topic,
                               const std::string& section_title,
                               const std::vector<PaperRef>& papers,
                               const std::string& analysis,
                               llm::Gateway& gateway,
                               const prompts::PromptSet& prompt_set) {
  if (is_meta_section(section_title)) {
    throw ArgumentError("section '" + section_title +
                        "' is deferred to the generation stage");
  }

  std::string prompt = prompt_set.render(
      "synthesis", {{"topic", topic},
                    {"section", section_title},
                    {"analysis", analysis},
                    {"papers", pack_cited_papers(papers)}});
  llm::ChatRequest req;
  req.messages = {{"user", prompt}};
  std::string draft = gateway.complete(req).text;

  std::set<std::string> allowed;
  for (const auto& p : papers) allowed.insert(p.id);
  CiteValidation validated = validate_citations(draft, allowed);
  for (const auto& key : validated.removed_keys) {
    log::warn("section '" + section_title +
              "': removed citation of unknown key '" + key + "'");
  }
  if (util::trim(validated.text).empty()) {
    throw SynthesisError("draft for section '" + section_title +
                         "' is empty after citation validation");
  }
  return validated.text;
}

}  // namespace surveyor::research
