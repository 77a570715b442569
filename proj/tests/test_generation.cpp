#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"
#include "surveyor/errors.hpp"
#include "surveyor/generation_stage.hpp"
#include "surveyor/log.hpp"
#include "surveyor/util.hpp"

using namespace surveyor;
using namespace surveyor::generation;

namespace {

llm::Gateway mock_gateway() {
  llm::ProviderConfig cfg;
  cfg.kind = llm::ProviderKind::mock;
  return llm::Gateway(cfg);
}

std::string words(std::size_t n) {
  std::string out;
  for (std::size_t i = 0; i < n; ++i) {
    if (!out.empty()) out += ' ';
    out += "w" + std::to_string(i);
  }
  return out;
}

state::GlobalState fixture_state(std::size_t sections = 8) {
  state::GlobalState st;
  st.topic = "test topic";
  for (std::size_t i = 0; i < sections; ++i) {
    std::string title = "Section " + std::to_string(i);
    st.outline.push_back(title);
    st.generated_sections[title] =
        "Body of section " + std::to_string(i) + " citing \\cite{p" +
        std::to_string(i) + "}.";
    st.related_papers.push_back("p" + std::to_string(i));
  }
  st.generated_sections["Abstract"] = words(275);
  st.generated_sections["Conclusion"] = words(450);
  return st;
}

std::size_t count_occurrences(const std::string& text, const std::string& sub) {
  std::size_t count = 0, pos = 0;
  while ((pos = text.find(sub, pos)) != std::string::npos) {
    ++count;
    pos += sub.size();
  }
  return count;
}

}  // namespace

TEST_CASE("summary keeps short drafts whole and truncates long ones at 500") {
  std::map<std::string, std::string> sections;
  sections["Short"] = words(20);  // 120ish chars
  std::string long_draft(2000, 'x');
  sections["Long"] = long_draft;

  auto summary = build_summary({"Short", "Long"}, sections);
  CHECK(summary.find(sections["Short"]) != std::string::npos);
  CHECK(summary.find(std::string(500, 'x')) != std::string::npos);
  CHECK(summary.find(std::string(501, 'x')) == std::string::npos);
}

TEST_CASE("truncation counts characters, not bytes") {
  std::string draft;
  for (int i = 0; i < 600; ++i) draft += "é";  // 2 bytes per char
  auto t = util::truncate_chars(draft, 500);
  CHECK(t.size() == 1000);
  CHECK(t == draft.substr(0, 1000));

  std::map<std::string, std::string> sections = {{"U", draft}};
  auto summary = build_summary({"U"}, sections);
  CHECK(summary == "U\n" + draft.substr(0, 1000));
}

TEST_CASE("summary preserves outline order and rejects missing drafts") {
  auto st = fixture_state(8);
  auto summary = build_summary(st.outline, st.generated_sections);
  std::size_t last = 0;
  for (const auto& title : st.outline) {
    auto pos = summary.find(title);
    REQUIRE(pos != std::string::npos);
    CHECK(pos >= last);
    last = pos;
  }

  std::map<std::string, std::string> missing = {{"A", "text"}};
  CHECK_THROWS_AS(build_summary({"A", "B"}, missing), StageOrderError);
  std::map<std::string, std::string> blank = {{"A", "  "}};
  CHECK_THROWS_AS(build_summary({"A"}, blank), StageOrderError);

  // deferred meta titles in the outline are not summarized
  std::map<std::string, std::string> with_meta = {{"A", "text"}};
  auto ok = build_summary({"A", "Conclusion"}, with_meta);
  CHECK(ok.find("Conclusion") == std::string::npos);
}

TEST_CASE("abstract accepted first pass when in range") {
  auto gw = mock_gateway();
  gw.mock_script().fifo = {words(275)};
  log::Capture capture;
  auto text = generate_abstract("topic", "summary text", gw,
                                prompts::PromptSet::defaults());
  CHECK(util::word_count(text) == 275);
  CHECK(capture.entries().empty());
}

TEST_CASE("abstract out of range triggers exactly one reprompt") {
  auto gw = mock_gateway();
  gw.mock_script().fifo = {words(150), words(260)};
  log::Capture capture;
  auto text = generate_abstract("topic", "summary text", gw,
                                prompts::PromptSet::defaults());
  CHECK(util::word_count(text) == 260);
  CHECK(gw.mock_script().fifo.empty());  // both scripted replies consumed
  int warnings = 0;
  for (const auto& e : capture.entries()) {
    if (e.level == log::Level::warn) ++warnings;
  }
  CHECK(warnings == 1);
}

TEST_CASE("persistently long conclusion is accepted with a warning") {
  auto gw = mock_gateway();
  gw.mock_script().fifo = {words(800), words(800)};
  log::Capture capture;
  auto text = generate_conclusion("topic", "summary text", gw,
                                  prompts::PromptSet::defaults());
  CHECK(util::word_count(text) == 800);
  CHECK(capture.contains(log::Level::warn, "accepting as-is"));
  CHECK(gw.mock_script().fifo.empty());

  gw.mock_script().fifo = {words(450)};
  log::Capture quiet;
  auto fine = generate_conclusion("topic", "summary", gw,
                                  prompts::PromptSet::defaults());
  CHECK(util::word_count(fine) == 450);
  CHECK(quiet.entries().empty());
}

TEST_CASE("citation placeholders normalize to cite commands") {
  CHECK(normalize_citations("See [cite:2402.01613] please.") ==
        "See \\cite{2402.01613} please.");
  CHECK(normalize_citations("Also (cite: 1802.06466) here.") ==
        "Also \\cite{1802.06466} here.");
  CHECK(normalize_citations("Mixed [cite: a.b ] and (cite:c.d).") ==
        "Mixed \\cite{a.b} and \\cite{c.d}.");
  CHECK(normalize_citations("No placeholders.") == "No placeholders.");
}

TEST_CASE("prose escaping spares cite arguments and inline math") {
  CHECK(escape_latex_prose("a & b") == "a \\& b");
  CHECK(escape_latex_prose("100% sure #1") == "100\\% sure \\#1");
  CHECK(escape_latex_prose("under_score {brace}") ==
        "under\\_score \\{brace\\}");
  CHECK(escape_latex_prose("tilde ~ caret ^") ==
        "tilde \\textasciitilde{} caret \\textasciicircum{}");
  CHECK(escape_latex_prose("back \\ slash") ==
        "back \\textbackslash{} slash");
  CHECK(escape_latex_prose("keep \\cite{a_b.c} intact & escaped") ==
        "keep \\cite{a_b.c} intact \\& escaped");
  CHECK(escape_latex_prose("math $x_i^2$ stays & prose _ escapes") ==
        "math $x_i^2$ stays \\& prose \\_ escapes");
  CHECK(escape_latex_prose("lonely $ sign") == "lonely \\$ sign");
}

TEST_CASE("format_paper assembles the documented fragment sequence") {
  auto st = fixture_state(8);
  auto paper = format_paper(st);

  std::vector<std::string> names;
  for (const auto& [name, _] : paper.fragments) names.push_back(name);
  std::vector<std::string> expected = {"Preamble", "Title", "Abstract"};
  for (const auto& t : st.outline) expected.push_back(t);
  expected.push_back("Conclusion");
  CHECK(names == expected);  // 3 + 8 + 1 fragments

  CHECK(paper.find("Preamble") != nullptr);
  CHECK(paper.find("Preamble")->find("\\documentclass{article}") !=
        std::string::npos);
  CHECK(paper.find("Preamble")->find("\\usepackage{cite}") != std::string::npos);
  CHECK(paper.find("Preamble")->find("\\usepackage{amsmath}") !=
        std::string::npos);
  CHECK(paper.find("Preamble")->find("\\usepackage{graphicx}") !=
        std::string::npos);
  CHECK(paper.find("Title")->find("\\maketitle") != std::string::npos);
  CHECK(paper.find("Abstract")->find("\\begin{abstract}") != std::string::npos);
  CHECK(paper.find("Abstract")->find("Keywords") != std::string::npos);
}

TEST_CASE("format_paper escapes prose and normalizes cite placeholders") {
  auto st = fixture_state(2);
  st.generated_sections["Section 0"] =
      "Uses A & B [cite:p0] with 50% coverage.";
  auto paper = format_paper(st);
  const std::string* body = paper.find("Section 0");
  REQUIRE(body != nullptr);
  CHECK(body->find("A \\& B") != std::string::npos);
  CHECK(body->find("\\cite{p0}") != std::string::npos);
  CHECK(body->find("50\\%") != std::string::npos);
}

TEST_CASE("format_paper names the missing piece") {
  auto st = fixture_state(3);
  st.generated_sections.erase("Abstract");
  try {
    format_paper(st);
    FAIL("expected AssemblyError");
  } catch (const AssemblyError& e) {
    CHECK(std::string(e.what()).find("Abstract") != std::string::npos);
  }

  auto st2 = fixture_state(3);
  st2.generated_sections["Section 1"] = "";
  try {
    format_paper(st2);
    FAIL("expected AssemblyError");
  } catch (const AssemblyError& e) {
    CHECK(std::string(e.what()).find("Section 1") != std::string::npos);
  }
}

TEST_CASE("rendered document is balanced with one abstract environment") {
  auto st = fixture_state(8);
  auto tex = format_paper(st).render();
  CHECK(count_occurrences(tex, "\\begin{document}") == 1);
  CHECK(count_occurrences(tex, "\\end{document}") == 1);
  CHECK(count_occurrences(tex, "\\begin{abstract}") == 1);
  CHECK(count_occurrences(tex, "\\end{abstract}") == 1);
  CHECK(count_occurrences(tex, "\\begin{") == count_occurrences(tex, "\\end{"));
  CHECK(count_occurrences(tex, "\\section{") == 9);  // 8 sections + Conclusion

  // every cite key in the document is a related paper
  auto keys_ok = [&] {
    std::size_t pos = 0;
    while ((pos = tex.find("\\cite{", pos)) != std::string::npos) {
      auto end = tex.find('}', pos);
      std::string key = tex.substr(pos + 6, end - pos - 6);
      bool found = false;
      for (const auto& id : st.related_papers) found = found || id == key;
      if (!found) return false;
      pos = end;
    }
    return true;
  }();
  CHECK(keys_ok);
}
