#pragma once

#include <set>
#include <string>
#include <vector>

#include "surveyor/llm_gateway.hpp"
#include "surveyor/prompts.hpp"
#include "surveyor/types.hpp"
#include "surveyor/vector_store.hpp"

namespace surveyor::research {

struct RetrievalParams {
  std::size_t k_sec = 20;          // papers kept per section
  std::size_t candidate_topk = 100;  // widened candidate pool
  double similarity_threshold = 0.7;
};

/// Meta-sections (Abstract, Conclusion) are deferred to the generation
/// stage and skipped here.
bool is_meta_section(const std::string& title);

/// Query = topic + " " + section title, embedded with the ingestion encoder.
/// Fetches the top candidate_topk hits above the threshold, then truncates
/// to k_sec (fewer survivors are kept as-is).
std::vector<PaperRef> search_section_papers(const std::string& topic,
                                            const std::string& section_title,
                                            const RetrievalParams& params,
                                            const store::VectorStore& store,
                                            llm::Gateway& gateway);

/// "title\n\nabstract" blocks of the first min(k, |papers|) papers, joined
/// by blank lines. Pure function of (papers, k).
std::string build_analysis_context(const std::vector<PaperRef>& papers,
                                   std::size_t k);

std::string analyze_section(const std::string& topic,
                            const std::string& section_title,
                            const std::vector<PaperRef>& papers, std::size_t k,
                            llm::Gateway& gateway,
                            const prompts::PromptSet& prompt_set);

struct CiteValidation {
  std::string text;
  std::vector<std::string> removed_keys;
};

/// Drop \cite keys not present in `allowed`; a command left with no keys is
/// removed entirely. Each removed key is reported.
CiteValidation validate_citations(const std::string& draft,
                                  const std::set<std::string>& allowed);

/// Draft text for one section, with every citation validated against the
/// retrieved papers. Unknown keys are removed with a logged warning; an
/// empty draft after validation raises SynthesisError. Meta-sections raise
/// ArgumentError (callers skip them without a provider call).
std::string synthesize_section(const std::string& topic,
                               const std::string& section_title,
                               const std::vector<PaperRef>& papers,
                               const std::string& analysis,
                               llm::Gateway& gateway,
                               const prompts::PromptSet& prompt_set);

/// Cite-key-in-brackets context block shared by the synthesis prompt.
std::string pack_cited_papers(const std::vector<PaperRef>& papers);

}  // namespace surveyor::research
