#pragma once

#include <string>
#include <vector>

#include "surveyor/llm_gateway.hpp"
#include "surveyor/pipeline_state.hpp"
#include "surveyor/prompts.hpp"
#include "surveyor/types.hpp"
#include "surveyor/vector_store.hpp"

namespace surveyor::planning {

struct Outline {
  std::vector<std::string> sections;

  /// Titles must be nonempty and unique.
  void validate() const;
};

/// Top-K_ref papers by cosine similarity to the embedded topic, most
/// similar first. Throws ConfigError (advising ingestion) on an empty store.
std::vector<PaperRef> retrieve_reference_corpus(const std::string& topic,
                                                std::size_t k_ref,
                                                const store::VectorStore& store,
                                                llm::Gateway& gateway);

/// Lines matching "<number><. or )> <title>", in line order, trimmed.
std::vector<std::string> parse_numbered_list(const std::string& text);

/// "title\n\nabstract" blocks joined by blank lines, truncated to at most
/// `budget_chars` Unicode characters.
std::string pack_corpus_context(const std::vector<PaperRef>& corpus,
                                std::size_t budget_chars);

/// One provider call (plus at most one format-reminder reprompt). Throws
/// OutlineParseError carrying the raw response when the reply still does
/// not yield exactly m unique titles.
Outline generate_outline(const std::string& topic,
                         const std::vector<PaperRef>& corpus, std::size_t m,
                         llm::Gateway& gateway,
                         const prompts::PromptSet& prompt_set,
                         std::size_t context_budget_chars = 60000);

/// Empty-draft placeholder per outline title plus per-section order
/// metadata. Throws ValidationError on duplicate titles.
state::StateDelta init_placeholders(const state::GlobalState& state,
                                    const Outline& outline);

}  // namespace surveyor::planning
