#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "surveyor/llm_gateway.hpp"
#include "surveyor/pipeline_state.hpp"
#include "surveyor/prompts.hpp"

namespace surveyor::generation {

/// Ordered document fragments (Preamble, Title, Abstract, sections,
/// Conclusion; post-processing may append Bibliography).
struct FormattedPaper {
  std::vector<std::pair<std::string, std::string>> fragments;

  const std::string* find(const std::string& name) const;

  /// The complete .tex document: fragments joined by blank lines plus the
  /// closing \end{document}.
  std::string render() const;
};

/// Section titles joined with the first 500 characters of their drafts, in
/// outline order. Meta-sections (Abstract/Conclusion) are skipped; an empty
/// non-meta draft raises StageOrderError. Truncation counts Unicode
/// characters, never splitting a multi-byte sequence.
std::string build_summary(const std::vector<std::string>& outline,
                          const std::map<std::string, std::string>& sections);

struct WordBounds {
  std::size_t lo = 0;
  std::size_t hi = 0;
};

inline constexpr WordBounds kAbstractBounds{250, 300};
inline constexpr WordBounds kConclusionBounds{400, 500};

/// One provider call; an out-of-range word count triggers exactly one
/// reprompt, after which the text is accepted with a warning.
std::string generate_abstract(const std::string& topic,
                              const std::string& summary,
                              llm::Gateway& gateway,
                              const prompts::PromptSet& prompt_set);

std::string generate_conclusion(const std::string& topic,
                                const std::string& summary,
                                llm::Gateway& gateway,
                                const prompts::PromptSet& prompt_set);

/// Rewrite [cite:<id>] and (cite: <id>) placeholders to \cite{<id>}.
std::string normalize_citations(const std::string& text);

/// Escape LaTeX special characters in model prose, leaving \cite arguments
/// and $...$ math segments untouched.
std::string escape_latex_prose(const std::string& text);

/// Assemble the fragment map from a state holding the abstract, conclusion,
/// and every section draft. Throws AssemblyError naming any missing piece.
FormattedPaper format_paper(const state::GlobalState& state);

}  // namespace surveyor::generation
