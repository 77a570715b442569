#include "surveyor/postprocess_stage.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <regex>
#include <semaphore>
#include <set>
#include <sstream>
#include <thread>
#include <unordered_map>

#include "httplib.h"
#include "json.hpp"
#include "surveyor/errors.hpp"
#include "surveyor/log.hpp"
#include "surveyor/util.hpp"

namespace surveyor::post {

using nlohmann::json;

const std::string* BibEntry::field(const std::string& name) const {
  for (const auto& [k, v] : fields) {
    if (util::iequals(k, name)) return &v;
  }
  return nullptr;
}

void BibEntry::set_field(const std::string& name, const std::string& value) {
  for (auto& [k, v] : fields) {
    if (util::iequals(k, name)) {
      v = value;
      return;
    }
  }
  fields.emplace_back(name, value);
}

// ---------------------------------------------------------------------------
// citation extraction
// ---------------------------------------------------------------------------

std::vector<std::string> extract_citation_keys(const std::string& tex) {
  static const std::regex cite_re(R"(\\cite\s*\{([^}]*)\})");
  std::vector<std::string> keys;
  std::set<std::string> seen;
  auto begin = std::sregex_iterator(tex.begin(), tex.end(), cite_re);
  for (auto it = begin; it != std::sregex_iterator(); ++it) {
    std::string content = (*it)[1].str();
    for (auto& ch : content) {
      if (ch == ',') ch = ' ';
    }
    for (const auto& key : util::split_ws(content)) {
      if (seen.insert(key).second) keys.push_back(key);
    }
  }
  return keys;
}

// ---------------------------------------------------------------------------
// BibTeX synthesis
// ---------------------------------------------------------------------------

std::string format_authors(const std::string& raw) {
  std::string text = util::trim(raw);
  if (text.empty()) {
    log::warn("author list is empty; passing through verbatim");
    return text;
  }

  // split on " and " and semicolons
  std::vector<std::string> names;
  std::string current;
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] == ';') {
      names.push_back(current);
      current.clear();
      ++i;
      continue;
    }
    if (text.compare(i, 5, " and ") == 0) {
      names.push_back(current);
      current.clear();
      i += 5;
      continue;
    }
    current.push_back(text[i]);
    ++i;
  }
  names.push_back(current);

  std::string out;
  for (auto& name : names) {
    name = util::trim(name);
    if (name.empty()) continue;
    std::string formatted = name;
    auto comma = name.find(',');
    if (comma != std::string::npos) {
      std::string last = util::trim(name.substr(0, comma));
      std::string first = util::trim(name.substr(comma + 1));
      if (first.find(',') != std::string::npos) {
        log::warn("author name '" + name + "' not parseable; kept verbatim");
      } else if (!last.empty() && !first.empty()) {
        formatted = first + " " + last;
      }
    }
    if (!out.empty()) out += " and ";
    out += formatted;
  }
  return out;
}

std::optional<int> year_from_arxiv_id(const std::string& id) {
  static const std::regex new_style(R"(^(\d{2})(\d{2})\.\d{4,5}(v\d+)?$)");
  static const std::regex old_style(R"(^[a-z-]+(\.[A-Z]{2})?/(\d{2})\d{5}(v\d+)?$)");
  std::smatch m;
  if (std::regex_match(id, m, new_style)) {
    return 2000 + std::stoi(m[1].str());
  }
  if (std::regex_match(id, m, old_style)) {
    int yy = std::stoi(m[2].str());
    return yy >= 91 ? 1900 + yy : 2000 + yy;
  }
  return std::nullopt;
}

BibEntry make_bib_entry(const PaperMeta& meta) {
  BibEntry entry;
  entry.key = meta.id;
  entry.entry_type = "misc";
  entry.provenance = Provenance::arxiv_preprint;

  entry.fields.emplace_back("author", format_authors(meta.authors));
  entry.fields.emplace_back("title", meta.title);
  if (auto year = year_from_arxiv_id(meta.id)) {
    entry.fields.emplace_back("year", std::to_string(*year));
  } else {
    log::warn("id '" + meta.id + "' has no recognizable year prefix; "
              "year omitted");
  }
  entry.fields.emplace_back("eprint", meta.id);
  entry.fields.emplace_back("archivePrefix", "arXiv");
  if (!meta.categories.empty()) {
    entry.fields.emplace_back("primaryClass", meta.categories.front());
  }
  return entry;
}

std::vector<BibEntry> dedup_entries(const std::vector<BibEntry>& entries) {
  std::vector<BibEntry> out;
  std::set<std::string> seen;
  for (const auto& e : entries) {
    if (seen.insert(e.key).second) out.push_back(e);
  }
  return out;
}

namespace {

bool braces_balanced(const std::string& value) {
  int depth = 0;
  for (char c : value) {
    if (c == '{') ++depth;
    if (c == '}') {
      if (--depth < 0) return false;
    }
  }
  return depth == 0;
}

std::string sanitize_value(const std::string& key, const std::string& name,
                           const std::string& value) {
  if (braces_balanced(value)) return value;
  log::warn("entry '" + key + "' field '" + name +
            "' has unbalanced braces; stripping them");
  std::string out;
  for (char c : value) {
    if (c != '{' && c != '}') out.push_back(c);
  }
  return out;
}

}  // namespace

std::string serialize_entry(const BibEntry& entry) {
  std::ostringstream out;
  if (!entry.comment.empty()) out << "% " << entry.comment << "\n";
  out << "@" << entry.entry_type << "{" << entry.key;
  for (const auto& [name, value] : entry.fields) {
    out << ",\n  " << name << " = {"
        << sanitize_value(entry.key, name, value) << "}";
  }
  out << "\n}\n";
  return out.str();
}

std::string serialize_bib(const std::vector<BibEntry>& entries) {
  std::string out;
  for (const auto& e : entries) {
    if (!out.empty()) out += "\n";
    out += serialize_entry(e);
  }
  return out;
}

std::optional<BibEntry> parse_bib_entry(const std::string& text) {
  std::size_t at = text.find('@');
  if (at == std::string::npos) return std::nullopt;

  std::size_t open = text.find('{', at);
  if (open == std::string::npos) return std::nullopt;
  BibEntry entry;
  entry.entry_type = util::to_lower(util::trim(text.substr(at + 1, open - at - 1)));

  std::size_t comma = text.find(',', open);
  if (comma == std::string::npos) return std::nullopt;
  entry.key = util::trim(text.substr(open + 1, comma - open - 1));
  if (entry.key.empty()) return std::nullopt;

  std::size_t i = comma + 1;
  while (i < text.size()) {
    while (i < text.size() &&
           (std::isspace(static_cast<unsigned char>(text[i])) || text[i] == ',')) {
      ++i;
    }
    if (i >= text.size() || text[i] == '}') break;

    std::size_t eq = text.find('=', i);
    if (eq == std::string::npos) break;
    std::string name = util::trim(text.substr(i, eq - i));
    i = eq + 1;
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i >= text.size()) break;

    std::string value;
    if (text[i] == '{') {
      int depth = 1;
      std::size_t j = i + 1;
      while (j < text.size() && depth > 0) {
        if (text[j] == '{') ++depth;
        if (text[j] == '}') --depth;
        ++j;
      }
      value = text.substr(i + 1, j - i - 2);
      i = j;
    } else if (text[i] == '"') {
      std::size_t j = text.find('"', i + 1);
      if (j == std::string::npos) break;
      value = text.substr(i + 1, j - i - 1);
      i = j + 1;
    } else {
      std::size_t j = i;
      while (j < text.size() && text[j] != ',' && text[j] != '}' &&
             text[j] != '\n') {
        ++j;
      }
      value = util::trim(text.substr(i, j - i));
      i = j;
    }
    if (!name.empty()) entry.fields.emplace_back(name, value);
  }
  if (entry.fields.empty()) return std::nullopt;
  return entry;
}

// ---------------------------------------------------------------------------
// DBLP
// ---------------------------------------------------------------------------

namespace {

std::string url_encode(const std::string& value) {
  static const char* hex = "0123456789ABCDEF";
  std::string out;
  for (unsigned char c : value) {
    if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
      out.push_back(static_cast<char>(c));
    } else {
      out.push_back('%');
      out.push_back(hex[c >> 4]);
      out.push_back(hex[c & 0xF]);
    }
  }
  return out;
}

}  // namespace

std::string DblpClient::http_get(const std::string& url) {
  util::UrlParts parts = util::parse_url(url);
  for (int attempt = 0;; ++attempt) {
    httplib::Client client(parts.origin);
    client.set_connection_timeout(std::chrono::duration<double>(config_.timeout_s));
    client.set_read_timeout(std::chrono::duration<double>(config_.timeout_s));
    auto res = client.Get(parts.path.empty() ? "/" : parts.path);
    if (res && res->status == 200) return res->body;
    std::string why = res ? "HTTP " + std::to_string(res->status)
                          : "connection failure or timeout";
    if (attempt >= config_.retries) {
      throw NetworkError("DBLP request failed (" + why + "): " + url);
    }
    log::warn("DBLP request failed (" + why + "); retrying");
  }
}

std::optional<std::string> DblpClient::fetch_published_bibtex(
    const std::string& title, const std::string& author_last_name) {
  std::string query = title;
  if (!author_last_name.empty()) query += " " + author_last_name;
  std::string url = config_.base_url + "/search/publ/api?q=" +
                    url_encode(query) + "&format=json&h=1";
  std::string body = http_get(url);

  json doc = json::parse(body, nullptr, false);
  if (doc.is_discarded()) {
    throw NetworkError("DBLP returned an unparseable search payload");
  }
  const json* hits = nullptr;
  if (doc.contains("result") && doc["result"].contains("hits") &&
      doc["result"]["hits"].contains("hit")) {
    hits = &doc["result"]["hits"]["hit"];
  }
  if (!hits || !hits->is_array() || hits->empty()) return std::nullopt;

  const json& info = (*hits)[0].value("info", json::object());
  std::string record_url = info.value("url", "");
  if (record_url.empty()) return std::nullopt;
  return http_get(record_url + ".bib");
}

namespace {

std::string first_author_last_name(const std::string& authors) {
  std::string first = authors;
  auto pos = first.find(" and ");
  if (pos != std::string::npos) first = first.substr(0, pos);
  auto words = util::split_ws(first);
  return words.empty() ? "" : words.back();
}

}  // namespace

BibEntry resolve_published(const BibEntry& entry, DblpClient& dblp) {
  const std::string* title = entry.field("title");
  const std::string* author = entry.field("author");
  if (!title || title->empty() || !author || author->empty()) {
    log::warn("entry '" + entry.key +
              "' lacks title or author; skipping DBLP lookup");
    return entry;
  }

  std::optional<std::string> bibtex;
  try {
    bibtex = dblp.fetch_published_bibtex(*title, first_author_last_name(*author));
  } catch (const NetworkError& e) {
    log::warn("DBLP lookup for '" + entry.key + "' failed: " + e.what());
    return entry;
  }

  if (!bibtex) {
    BibEntry annotated = entry;
    annotated.comment = "no formally published version found; "
                        "only a pre-print is available";
    return annotated;
  }

  auto published = parse_bib_entry(*bibtex);
  if (!published) {
    log::warn("DBLP BibTeX for '" + entry.key + "' did not parse; "
              "keeping the preprint entry");
    return entry;
  }
  published->key = entry.key;  // cite key preserved across replacement
  published->provenance = Provenance::dblp_published;
  published->comment.clear();
  return *published;
}

// ---------------------------------------------------------------------------
// LaTeX enhancement
// ---------------------------------------------------------------------------

namespace {

const std::set<std::string>& small_words() {
  static const std::set<std::string> words = {"a",  "an", "the", "of", "in",
                                              "on", "for", "and", "or"};
  return words;
}

const std::set<std::string>& acronym_lexicon() {
  static const std::set<std::string> words = {
      "llm", "mllm", "ai", "ml", "nlp", "cv", "rag", "gan",
      "gpt", "vae", "rl",  "dag"};
  return words;
}

std::size_t count_upper(const std::string& token) {
  std::size_t n = 0;
  for (unsigned char c : token) {
    if (std::isupper(c)) ++n;
  }
  return n;
}

std::string title_case_token(const std::string& token, bool first) {
  if (count_upper(token) >= 2) return token;  // acronym, keep verbatim
  std::string lower = util::to_lower(token);
  if (acronym_lexicon().contains(lower)) {
    std::string upper = lower;
    std::transform(upper.begin(), upper.end(), upper.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    return upper;
  }
  if (!first && small_words().contains(lower)) return lower;
  if (!lower.empty()) {
    lower[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(lower[0])));
  }
  return lower;
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::string current;
  for (char c : text) {
    if (c == '\n') {
      lines.push_back(current);
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  if (!current.empty()) lines.push_back(current);
  return lines;
}

std::string join_lines(const std::vector<std::string>& lines) {
  std::string out;
  for (const auto& l : lines) {
    out += l;
    out += '\n';
  }
  return out;
}

bool line_has(const std::string& line, const std::string& needle) {
  return line.find(needle) != std::string::npos;
}

}  // namespace

std::string title_from_filename(const std::string& filename) {
  std::string base = std::filesystem::path(filename).filename().string();
  auto dot = base.rfind('.');
  if (dot != std::string::npos && dot > 0) base = base.substr(0, dot);
  for (auto& c : base) {
    if (c == '_') c = ' ';
  }
  auto tokens = util::split_ws(base);
  std::string title;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (!title.empty()) title += ' ';
    title += title_case_token(tokens[i], i == 0);
  }
  if (title.empty()) title = "Untitled";
  return title + ": A Comprehensive Survey";
}

std::string enhance_latex(const std::string& tex, const std::string& filename,
                          const std::string& bib_base,
                          const std::string& bib_style) {
  if (tex.find("\\documentclass") == std::string::npos ||
      tex.find("\\begin{document}") == std::string::npos) {
    throw AssemblyError(
        "enhancement requires a complete document "
        "(\\documentclass and \\begin{document})");
  }

  std::vector<std::string> lines = split_lines(tex);

  // cite -> natbib
  bool has_natbib = false;
  for (const auto& l : lines) {
    if (line_has(l, "\\usepackage{natbib}")) has_natbib = true;
  }
  std::vector<std::string> next;
  next.reserve(lines.size());
  for (auto& l : lines) {
    if (util::trim(l) == "\\usepackage{cite}") {
      if (!has_natbib) {
        next.push_back("\\usepackage{natbib}");
        has_natbib = true;
      }
      continue;  // extra cite lines vanish
    }
    next.push_back(std::move(l));
  }
  lines = std::move(next);

  // required packages, inserted after the last package line
  auto package_present = [&](const std::string& pkg) {
    for (const auto& l : lines) {
      if (line_has(l, "\\usepackage{" + pkg + "}")) return true;
    }
    return false;
  };
  auto insertion_point = [&]() -> std::size_t {
    std::size_t at = 0;
    for (std::size_t i = 0; i < lines.size(); ++i) {
      if (line_has(lines[i], "\\usepackage") ||
          line_has(lines[i], "\\documentclass")) {
        at = i + 1;
      }
      if (line_has(lines[i], "\\begin{document}")) break;
    }
    return at;
  };
  for (const std::string& pkg : {"natbib", "tikz", "forest", "booktabs",
                                 "hyperref"}) {
    if (!package_present(pkg)) {
      lines.insert(lines.begin() + static_cast<std::ptrdiff_t>(insertion_point()),
                   "\\usepackage{" + pkg + "}");
    }
  }

  // dark-blue hyperlinks
  bool has_color = false, has_setup = false;
  std::size_t hyperref_line = 0;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (line_has(lines[i], "\\definecolor{darkblue}")) has_color = true;
    if (line_has(lines[i], "\\hypersetup")) has_setup = true;
    if (line_has(lines[i], "\\usepackage{hyperref}")) hyperref_line = i;
  }
  if (!has_color) {
    lines.insert(lines.begin() + static_cast<std::ptrdiff_t>(hyperref_line) + 1,
                 "\\definecolor{darkblue}{RGB}{0,0,139}");
  }
  if (!has_setup) {
    std::size_t at = 0;
    for (std::size_t i = 0; i < lines.size(); ++i) {
      if (line_has(lines[i], "\\definecolor{darkblue}")) at = i;
    }
    lines.insert(lines.begin() + static_cast<std::ptrdiff_t>(at) + 1,
                 "\\hypersetup{colorlinks=true,linkcolor=darkblue,"
                 "citecolor=darkblue,urlcolor=darkblue}");
  }

  // filename-derived title
  std::string title = title_from_filename(filename);
  bool titled = false;
  for (auto& l : lines) {
    auto pos = l.find("\\title{");
    if (pos == std::string::npos) continue;
    std::size_t open = pos + 6;
    int depth = 0;
    std::size_t close = std::string::npos;
    for (std::size_t i = open; i < l.size(); ++i) {
      if (l[i] == '{') ++depth;
      if (l[i] == '}') {
        if (--depth == 0) {
          close = i;
          break;
        }
      }
    }
    if (close != std::string::npos) {
      l = l.substr(0, open + 1) + title + l.substr(close);
      titled = true;
    }
    break;
  }
  if (!titled) {
    for (std::size_t i = 0; i < lines.size(); ++i) {
      if (line_has(lines[i], "\\begin{document}")) {
        lines.insert(lines.begin() + static_cast<std::ptrdiff_t>(i) + 1,
                     "\\title{" + title + "}");
        break;
      }
    }
  }

  // abstract environment
  bool has_abstract = false;
  for (const auto& l : lines) {
    if (line_has(l, "\\begin{abstract}")) has_abstract = true;
  }
  if (!has_abstract) {
    for (std::size_t i = 0; i < lines.size(); ++i) {
      if (line_has(lines[i], "\\maketitle")) {
        lines.insert(lines.begin() + static_cast<std::ptrdiff_t>(i) + 1,
                     {"", "\\begin{abstract}", "\\end{abstract}"});
        break;
      }
    }
  }

  // bibliography commands before \end{document}
  bool has_style = false;
  for (const auto& l : lines) {
    if (line_has(l, "\\bibliographystyle{")) has_style = true;
  }
  if (!has_style) {
    std::size_t at = lines.size();
    for (std::size_t i = 0; i < lines.size(); ++i) {
      if (line_has(lines[i], "\\end{document}")) {
        at = i;
        break;
      }
    }
    std::vector<std::string> bib = {"\\bibliographystyle{" + bib_style + "}",
                                    "\\bibliography{" + bib_base + "}", ""};
    lines.insert(lines.begin() + static_cast<std::ptrdiff_t>(at), bib.begin(),
                 bib.end());
  }

  // vertical spacing before section headers
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (util::trim(lines[i]).rfind("\\section", 0) == 0) {
      if (i == 0 || lines[i - 1] != "\\vspace{1em}") {
        lines.insert(lines.begin() + static_cast<std::ptrdiff_t>(i),
                     "\\vspace{1em}");
        ++i;
      }
    }
  }

  return join_lines(lines);
}

// ---------------------------------------------------------------------------
// bundle assembly
// ---------------------------------------------------------------------------

OutputBundle assemble_output(const std::string& tex,
                             const std::vector<BibEntry>& entries,
                             const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create output directory: " + out_dir.string());

  auto cited = extract_citation_keys(tex);
  std::set<std::string> cited_set(cited.begin(), cited.end());

  std::unordered_map<std::string, const BibEntry*> by_key;
  for (const auto& e : entries) by_key.emplace(e.key, &e);

  std::vector<BibEntry> final_entries;
  for (const auto& key : cited) {
    auto it = by_key.find(key);
    if (it != by_key.end()) {
      final_entries.push_back(*it->second);
    } else {
      log::error("cited key '" + key +
                 "' has no resolvable metadata; emitting UNRESOLVED stub");
      BibEntry stub;
      stub.key = key;
      stub.entry_type = "misc";
      stub.fields = {{"author", "Unknown"},
                     {"title", "UNRESOLVED"},
                     {"eprint", key}};
      stub.comment = "no metadata was found for this cited key";
      final_entries.push_back(std::move(stub));
    }
  }
  for (const auto& e : entries) {
    if (!cited_set.contains(e.key)) {
      log::warn("entry '" + e.key + "' is not cited; dropped from the bundle");
    }
  }

  OutputBundle bundle;
  bundle.tex_path = out_dir / "survey.tex";
  bundle.bib_path = out_dir / "survey.bib";
  bundle.figs_dir = out_dir / "figs";
  std::filesystem::create_directories(bundle.figs_dir, ec);
  if (ec) throw IoError("cannot create figs directory");

  std::ofstream tex_out(bundle.tex_path);
  if (!tex_out) throw IoError("cannot write " + bundle.tex_path.string());
  tex_out << tex;
  tex_out.close();
  if (!tex_out) throw IoError("write failed: " + bundle.tex_path.string());

  std::ofstream bib_out(bundle.bib_path);
  if (!bib_out) throw IoError("cannot write " + bundle.bib_path.string());
  bib_out << serialize_bib(final_entries);
  bib_out.close();
  if (!bib_out) throw IoError("write failed: " + bundle.bib_path.string());

  return bundle;
}

PostprocessResult post_process(const std::filesystem::path& tex_path,
                               const store::VectorStore& store,
                               const PostprocessConfig& config) {
  std::ifstream in(tex_path);
  if (!in) throw IoError("cannot read tex file: " + tex_path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  std::string tex = buf.str();

  PostprocessResult result;
  auto keys = extract_citation_keys(tex);
  result.keys_cited = keys.size();

  auto metas = store.fetch(keys);
  std::unordered_map<std::string, const PaperMeta*> meta_by_id;
  for (const auto& p : metas) meta_by_id.emplace(p.meta.id, &p.meta);

  std::vector<BibEntry> entries;
  entries.reserve(keys.size());
  for (const auto& key : keys) {
    auto it = meta_by_id.find(key);
    if (it == meta_by_id.end()) {
      log::error("cited key '" + key + "' not found in the paper store");
      BibEntry stub;
      stub.key = key;
      stub.fields = {{"author", "Unknown"},
                     {"title", "UNRESOLVED"},
                     {"eprint", key}};
      stub.comment = "no metadata was found for this cited key";
      entries.push_back(std::move(stub));
      ++result.unresolved;
      continue;
    }
    entries.push_back(make_bib_entry(*it->second));
  }

  if (config.enable_dblp) {
    DblpClient dblp(config.dblp);
    std::counting_semaphore<> sem(
        static_cast<std::ptrdiff_t>(std::max(1u, config.max_in_flight)));
    std::vector<std::thread> workers;
    workers.reserve(entries.size());
    for (auto& entry : entries) {
      if (*entry.field("title") == "UNRESOLVED") continue;
      workers.emplace_back([&entry, &dblp, &sem] {
        sem.acquire();
        entry = resolve_published(entry, dblp);
        sem.release();
      });
    }
    for (auto& w : workers) w.join();
  }
  for (const auto& e : entries) {
    if (e.provenance == Provenance::dblp_published) ++result.resolved_published;
    if (!e.comment.empty() && e.provenance == Provenance::arxiv_preprint &&
        *e.field("title") != "UNRESOLVED") {
      ++result.preprint_only;
    }
  }

  result.entries = dedup_entries(entries);
  result.enhanced_tex = enhance_latex(tex, tex_path.filename().string(),
                                      "survey", config.bib_style);
  result.bundle =
      assemble_output(result.enhanced_tex, result.entries, config.out_dir);
  return result;
}

}  // namespace surveyor::post
