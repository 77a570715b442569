#include "surveyor/driver.hpp"

#include <fstream>
#include <semaphore>
#include <sstream>
#include <thread>

#include "surveyor/errors.hpp"
#include "surveyor/generation_stage.hpp"
#include "surveyor/log.hpp"
#include "surveyor/planning_stage.hpp"
#include "surveyor/research_stage.hpp"
#include "surveyor/util.hpp"

namespace surveyor::driver {

using nlohmann::ordered_json;
using state::GlobalState;
using state::Phase;
using state::StateDelta;

void parallel_for(std::size_t n, unsigned max_in_flight,
                  const std::function<void(std::size_t)>& fn) {
  if (n == 0) return;
  if (max_in_flight <= 1 || n == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(n);
  std::counting_semaphore<> sem(static_cast<std::ptrdiff_t>(max_in_flight));
  std::vector<std::thread> workers;
  workers.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    workers.emplace_back([&, i] {
      sem.acquire();
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
      sem.release();
    });
  }
  for (auto& w : workers) w.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

namespace {

std::vector<std::string> content_sections(const GlobalState& s) {
  std::vector<std::string> titles;
  for (const auto& t : s.outline) {
    if (!research::is_meta_section(t)) titles.push_back(t);
  }
  return titles;
}

}  // namespace

state::PipelineGraph build_canonical_graph(PipelineDeps& deps) {
  state::PipelineGraph graph;
  const config::RunConfig& cfg = deps.cfg;

  graph.add({"PlanningPhase", 1, {}, [](const GlobalState&) {
               StateDelta delta;
               delta.phase = Phase::planning;
               delta.stage_results["planning_phase"] = {{"initialized", true}};
               return delta;
             }});

  graph.add({"OutlineGeneration",
             1,
             {"PlanningPhase"},
             [&deps, &cfg](const GlobalState& s) {
               auto corpus = planning::retrieve_reference_corpus(
                   s.topic, cfg.k_ref, deps.store, deps.gateway);
               auto outline = planning::generate_outline(
                   s.topic, corpus, cfg.m, deps.gateway, deps.prompts);
               StateDelta delta;
               delta.outline = outline.sections;
               delta.stage_results["outline_generation"] = {
                   {"reference_corpus_size", corpus.size()},
                   {"m", cfg.m},
               };
               return delta;
             }});

  graph.add({"SectionPlanning",
             1,
             {"OutlineGeneration"},
             [](const GlobalState& s) {
               planning::Outline outline{s.outline};
               return planning::init_placeholders(s, outline);
             }});

  graph.add({"PaperSearch",
             2,
             {"SectionPlanning"},
             [&deps, &cfg](const GlobalState& s) {
               auto titles = content_sections(s);
               research::RetrievalParams params{cfg.k_sec, cfg.candidate_topk,
                                                cfg.similarity_threshold};
               std::vector<std::vector<PaperRef>> found(titles.size());
               parallel_for(titles.size(), cfg.max_in_flight, [&](std::size_t i) {
                 found[i] = research::search_section_papers(
                     s.topic, titles[i], params, deps.store, deps.gateway);
               });
               StateDelta delta;
               delta.phase = Phase::research;
               ordered_json counts = ordered_json::object();
               for (std::size_t i = 0; i < titles.size(); ++i) {
                 delta.papers[titles[i]] = found[i];
                 std::vector<std::string> ids;
                 ids.reserve(found[i].size());
                 for (const auto& r : found[i]) ids.push_back(r.id);
                 state::append_related(delta.related_append, ids);
                 counts[titles[i]] = found[i].size();
               }
               delta.stage_results["paper_search"] = {
                   {"per_section_hits", counts}};
               return delta;
             }});

  graph.add({"ContentAnalysis",
             2,
             {"PaperSearch"},
             [&deps, &cfg](const GlobalState& s) {
               auto titles = content_sections(s);
               std::vector<std::string> analyses(titles.size());
               parallel_for(titles.size(), cfg.max_in_flight, [&](std::size_t i) {
                 analyses[i] = research::analyze_section(
                     s.topic, titles[i], s.section_papers.at(titles[i]),
                     cfg.k_analyze, deps.gateway, deps.prompts);
               });
               StateDelta delta;
               for (std::size_t i = 0; i < titles.size(); ++i) {
                 delta.analyses[titles[i]] = analyses[i];
               }
               return delta;
             }});

  graph.add({"ContentSynthesis",
             2,
             {"ContentAnalysis"},
             [&deps, &cfg](const GlobalState& s) {
               auto titles = content_sections(s);
               std::vector<std::string> drafts(titles.size());
               parallel_for(titles.size(), cfg.max_in_flight, [&](std::size_t i) {
                 drafts[i] = research::synthesize_section(
                     s.topic, titles[i], s.section_papers.at(titles[i]),
                     s.section_analysis.at(titles[i]), deps.gateway,
                     deps.prompts);
               });
               StateDelta delta;
               for (std::size_t i = 0; i < titles.size(); ++i) {
                 delta.sections[titles[i]] = drafts[i];
               }
               return delta;
             }});

  graph.add({"PaperGeneration",
             3,
             {"ContentSynthesis"},
             [&deps, &cfg](const GlobalState& s) {
               std::string summary =
                   generation::build_summary(s.outline, s.generated_sections);
               std::string abstract = generation::generate_abstract(
                   s.topic, summary, deps.gateway, deps.prompts);
               std::string conclusion = generation::generate_conclusion(
                   s.topic, summary, deps.gateway, deps.prompts);

               StateDelta delta;
               delta.phase = Phase::generation;
               delta.sections["Abstract"] = abstract;
               delta.sections["Conclusion"] = conclusion;

               // assemble against the post-delta view of the state
               GlobalState assembled = s;
               state::apply_delta(assembled, delta);
               generation::FormattedPaper paper =
                   generation::format_paper(assembled);
               delta.final_paper = paper.fragments;

               std::filesystem::create_directories(cfg.output_dir);
               std::filesystem::path tex_path =
                   cfg.output_dir / (util::slugify(s.topic) + ".tex");
               {
                 std::ofstream out(tex_path);
                 if (!out) {
                   throw IoError("cannot write " + tex_path.string());
                 }
                 out << paper.render();
               }

               delta.stage_results["generation"] = {
                   {"tex_path", tex_path.string()},
                   {"abstract_words", util::word_count(abstract)},
                   {"conclusion_words", util::word_count(conclusion)},
               };

               // checkpoint the fully generated state for later editing
               state::apply_delta(assembled, delta);
               auto saved = state::save_state(assembled, cfg.output_dir);
               log::info("generation checkpoint saved to " + saved.string());
               return delta;
             }});

  graph.add({"PostProcessing",
             4,
             {"PaperGeneration"},
             [&deps, &cfg](const GlobalState& s) {
               auto it = s.stage_results.find("generation");
               if (it == s.stage_results.end() ||
                   !it->second.contains("tex_path")) {
                 throw StageOrderError(
                     "post-processing needs the generation stage's tex output");
               }
               std::filesystem::path tex_path =
                   it->second["tex_path"].get<std::string>();

               post::PostprocessConfig pcfg;
               pcfg.out_dir = cfg.output_dir;
               pcfg.bib_style = cfg.bib_style;
               pcfg.enable_dblp = !cfg.dblp_url.empty();
               if (pcfg.enable_dblp) pcfg.dblp.base_url = cfg.dblp_url;
               pcfg.dblp.timeout_s = cfg.dblp_timeout_s;
               pcfg.max_in_flight = cfg.max_in_flight;

               auto result = post::post_process(tex_path, deps.store, pcfg);

               StateDelta delta;
               delta.phase = Phase::postprocess;
               auto fragments = s.final_paper;
               fragments.emplace_back(
                   "Bibliography", "\\bibliographystyle{" + cfg.bib_style +
                                       "}\n\\bibliography{survey}");
               delta.final_paper = fragments;
               delta.stage_results["postprocess"] = {
                   {"tex", result.bundle.tex_path.string()},
                   {"bib", result.bundle.bib_path.string()},
                   {"figs", result.bundle.figs_dir.string()},
                   {"keys_cited", result.keys_cited},
                   {"resolved_published", result.resolved_published},
                   {"preprint_only", result.preprint_only},
                   {"unresolved", result.unresolved},
               };
               return delta;
             }});

  return graph;
}

GenerateResult run_generate(const std::string& topic, PipelineDeps& deps) {
  GlobalState initial = state::init_state(topic, deps.cfg.state_json());
  state::PipelineGraph graph = build_canonical_graph(deps);

  state::ExecOptions options;
  options.max_in_flight = 1;  // stage nodes are sequential; sections fan out inside
  options.dump_dir = deps.cfg.output_dir;
  GlobalState final_state = execute(graph, std::move(initial), options);
  state::validate_state(final_state);

  GenerateResult result;
  result.state_path = state::save_state(final_state, deps.cfg.output_dir);
  result.tex_path =
      final_state.stage_results.at("generation")["tex_path"].get<std::string>();
  const auto& ppost = final_state.stage_results.at("postprocess");
  result.bundle.tex_path = ppost["tex"].get<std::string>();
  result.bundle.bib_path = ppost["bib"].get<std::string>();
  result.bundle.figs_dir = ppost["figs"].get<std::string>();
  result.final_state = std::move(final_state);
  return result;
}

EvaluateResult run_evaluate(const std::filesystem::path& survey_path,
                            std::size_t repeat, PipelineDeps& deps) {
  if (repeat < 1) throw ArgumentError("repeat must be >= 1");
  std::ifstream in(survey_path);
  if (!in) throw IoError("cannot read survey file: " + survey_path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  std::string survey = buf.str();

  judge::Rubric rubric = judge::Rubric::standard();
  EvaluateResult result;
  for (std::size_t i = 0; i < repeat; ++i) {
    result.runs.push_back(
        judge::evaluate_survey(survey, rubric, deps.gateway, deps.prompts));
  }
  std::vector<judge::ScoreTriple> triples(result.runs.size());
  for (std::size_t i = 0; i < result.runs.size(); ++i) {
    triples[i] = result.runs[i].scores;
  }
  result.aggregate = judge::aggregate(triples);

  ordered_json report;
  report["survey"] = survey_path.string();
  report["runs"] = ordered_json::array();
  for (const auto& run : result.runs) {
    report["runs"].push_back({{"coverage", run.scores.coverage},
                              {"structure", run.scores.structure},
                              {"relevance", run.scores.relevance},
                              {"average", run.scores.average},
                              {"model_id", run.model_id},
                              {"timestamp", run.timestamp}});
  }
  report["aggregate"] = {{"coverage", result.aggregate.coverage},
                         {"structure", result.aggregate.structure},
                         {"relevance", result.aggregate.relevance},
                         {"overall", result.aggregate.overall}};

  std::filesystem::create_directories(deps.cfg.output_dir);
  result.report_path = deps.cfg.output_dir / "evaluation.json";
  std::ofstream out(result.report_path);
  if (!out) throw IoError("cannot write " + result.report_path.string());
  out << report.dump(2) << "\n";
  return result;
}

}  // namespace surveyor::driver
