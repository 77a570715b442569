#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

namespace surveyor::prompts {

/// Stage prompt templates: plain text with {name} placeholders. Built-in
/// defaults can be overridden per template by files in a templates
/// directory (outline.txt, analysis.txt, synthesis.txt, abstract.txt,
/// conclusion.txt, judge.txt, rubric.txt).
class PromptSet {
 public:
  static PromptSet defaults();

  /// Defaults overlaid with any template files found under `dir`. A missing
  /// directory yields the defaults.
  static PromptSet load(const std::filesystem::path& dir);

  const std::string& raw(std::string_view name) const;

  /// Replace {placeholder} occurrences for the variables given; unknown
  /// placeholders (and literal braces such as \cite{...}) pass through.
  std::string render(std::string_view name,
                     const std::map<std::string, std::string>& vars) const;

  static std::string render_text(const std::string& tmpl,
                                 const std::map<std::string, std::string>& vars);

 private:
  std::map<std::string, std::string> templates_;
};

}  // namespace surveyor::prompts
