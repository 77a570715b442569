#include "surveyor/generation_stage.hpp"

#include <regex>
#include <sstream>

#include "surveyor/errors.hpp"
#include "surveyor/log.hpp"
#include "surveyor/research_stage.hpp"
#include "surveyor/util.hpp"

namespace surveyor::generation {

const std::string* FormattedPaper::find(const std::string& name) const {
  for (const auto& [frag_name, text] : fragments) {
    if (frag_name == name) return &text;
  }
  return nullptr;
}

std::string FormattedPaper::render() const {
  std::string out;
  for (const auto& [name, text] : fragments) {
    if (!out.empty()) out += "\n\n";
    out += text;
  }
  out += "\n\n\\end{document}\n";
  return out;
}

std::string build_summary(const std::vector<std::string>& outline,
                          const std::map<std::string, std::string>& sections) {
  std::string out;
  for (const auto& title : outline) {
    if (research::is_meta_section(title)) continue;
    auto it = sections.find(title);
    if (it == sections.end() || util::trim(it->second).empty()) {
      throw StageOrderError("section '" + title +
                            "' has no draft yet; run the research stage first");
    }
    if (!out.empty()) out += "\n\n";
    out += title + "\n" + util::truncate_chars(it->second, 500);
  }
  return out;
}

namespace {

std::string generate_bounded(const char* template_name, const char* label,
                             const std::string& topic,
                             const std::string& summary, WordBounds bounds,
                             llm::Gateway& gateway,
                             const prompts::PromptSet& prompt_set) {
  if (util::trim(summary).empty()) {
    throw ArgumentError(std::string(label) + " generation needs a nonempty summary");
  }
  std::string prompt = prompt_set.render(
      template_name, {{"topic", topic}, {"summary", summary}});

  auto ask = [&](const std::string& user) {
    llm::ChatRequest req;
    req.messages = {{"user", user}};
    return gateway.complete(req).text;
  };

  std::string text = ask(prompt);
  std::size_t words = util::word_count(text);
  if (words >= bounds.lo && words <= bounds.hi) return text;

  log::warn(std::string(label) + " is " + std::to_string(words) +
            " words, outside [" + std::to_string(bounds.lo) + ", " +
            std::to_string(bounds.hi) + "]; reprompting once");
  std::string reminder = prompt + "\n\nReminder: the previous attempt had " +
                         std::to_string(words) + " words; the text must be " +
                         std::to_string(bounds.lo) + " to " +
                         std::to_string(bounds.hi) + " words long.";
  text = ask(reminder);
  words = util::word_count(text);
  if (words < bounds.lo || words > bounds.hi) {
    log::warn(std::string(label) + " still out of range after reprompt (" +
              std::to_string(words) + " words); accepting as-is");
  }
  return text;
}

}  // namespace

std::string generate_abstract(const std::string& topic,
                              const std::string& summary,
                              llm::Gateway& gateway,
                              const prompts::PromptSet& prompt_set) {
  return generate_bounded("abstract", "abstract", topic, summary,
                          kAbstractBounds, gateway, prompt_set);
}

std::string generate_conclusion(const std::string& topic,
                                const std::string& summary,
                                llm::Gateway& gateway,
                                const prompts::PromptSet& prompt_set) {
  return generate_bounded("conclusion", "conclusion", topic, summary,
                          kConclusionBounds, gateway, prompt_set);
}

std::string normalize_citations(const std::string& text) {
  static const std::regex bracket_re(R"(\[cite:\s*([^\]]*?)\s*\])");
  static const std::regex paren_re(R"(\(cite:\s*([^)]*?)\s*\))");
  std::string out = std::regex_replace(text, bracket_re, R"(\cite{$1})");
  out = std::regex_replace(out, paren_re, R"(\cite{$1})");
  return out;
}

std::string escape_latex_prose(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    // \cite{...} passes through untouched
    if (text.compare(i, 5, "\\cite") == 0) {
      std::size_t j = i + 5;
      if (j < text.size() && text[j] == '{') {
        std::size_t close = text.find('}', j);
        if (close != std::string::npos) {
          out.append(text, i, close - i + 1);
          i = close + 1;
          continue;
        }
      }
    }
    char c = text[i];
    if (c == '$') {
      std::size_t close = text.find('$', i + 1);
      if (close != std::string::npos) {
        out.append(text, i, close - i + 1);  // inline math survives
        i = close + 1;
        continue;
      }
      out += "\\$";
      ++i;
      continue;
    }
    switch (c) {
      case '&':
      case '%':
      case '#':
      case '_':
      case '{':
      case '}':
        out += '\\';
        out += c;
        break;
      case '~':
        out += "\\textasciitilde{}";
        break;
      case '^':
        out += "\\textasciicircum{}";
        break;
      case '\\':
        out += "\\textbackslash{}";
        break;
      default:
        out += c;
    }
    ++i;
  }
  return out;
}

namespace {

std::string prepare_prose(const std::string& text) {
  return escape_latex_prose(normalize_citations(text));
}

std::string keywords_from_topic(const std::string& topic) {
  auto words = util::split_ws(topic);
  std::string out;
  for (const auto& w : words) {
    if (!out.empty()) out += ", ";
    out += util::to_lower(w);
  }
  return out;
}

}  // namespace

FormattedPaper format_paper(const state::GlobalState& state) {
  auto fetch = [&](const std::string& name) -> const std::string& {
    auto it = state.generated_sections.find(name);
    if (it == state.generated_sections.end() || util::trim(it->second).empty()) {
      throw AssemblyError("cannot assemble paper: missing content for '" +
                          name + "'");
    }
    return it->second;
  };

  const std::string& abstract = fetch("Abstract");
  const std::string& conclusion = fetch("Conclusion");
  for (const auto& title : state.outline) {
    if (research::is_meta_section(title)) continue;
    fetch(title);
  }

  FormattedPaper paper;
  paper.fragments.emplace_back("Preamble",
                               "\\documentclass{article}\n"
                               "\\usepackage{cite}\n"
                               "\\usepackage{amsmath}\n"
                               "\\usepackage{graphicx}");

  std::string title_block =
      "\\begin{document}\n\n"
      "\\title{" + escape_latex_prose(state.topic) + "}\n"
      "\\author{Author Placeholder\\thanks{Affiliation placeholder; "
      "funding acknowledgment placeholder.}}\n"
      "\\maketitle";
  paper.fragments.emplace_back("Title", title_block);

  std::string abstract_block =
      "\\begin{abstract}\n" + prepare_prose(abstract) +
      "\n\\end{abstract}\n\n"
      "\\noindent\\textbf{Keywords:} " +
      escape_latex_prose(keywords_from_topic(state.topic));
  paper.fragments.emplace_back("Abstract", abstract_block);

  for (const auto& title : state.outline) {
    if (research::is_meta_section(title)) continue;
    std::string body = prepare_prose(state.generated_sections.at(title));
    paper.fragments.emplace_back(
        title, "\\section{" + escape_latex_prose(title) + "}\n\n" + body);
  }

  paper.fragments.emplace_back(
      "Conclusion", "\\section{Conclusion}\n\n" + prepare_prose(conclusion));
  return paper;
}

}  // namespace surveyor::generation
