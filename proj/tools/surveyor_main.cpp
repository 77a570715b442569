#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "surveyor/corpus_ingest.hpp"
#include "surveyor/driver.hpp"
#include "surveyor/errors.hpp"
#include "surveyor/log.hpp"
#include "surveyor/pipeline_state.hpp"
#include "surveyor/run_config.hpp"
#include "surveyor/util.hpp"

namespace {

using namespace surveyor;

struct CliArgs {
  std::optional<std::filesystem::path> config_file;
  config::Overrides overrides;
  bool verbose = false;

  // per-command inputs
  std::string snapshot;
  std::vector<std::string> categories;
  std::string topic;
  std::string tex;
  std::size_t repeat = 1;
  std::string state_file;
  std::string show_field;
};

int cmd_ingest(const config::RunConfig& cfg, const CliArgs& args) {
  auto store = store::open_store(cfg.store_url);
  llm::Gateway gateway(cfg.provider, cfg.max_in_flight);

  ingest::CategoryFilter filter;
  if (!args.categories.empty()) {
    filter.allowed = {args.categories.begin(), args.categories.end()};
  }
  auto report = ingest::ingest(args.snapshot, filter, *store, gateway,
                               cfg.batch_size);
  std::cout << ingest::format_report(report);
  return report.failed_batches == 0 ? 0 : 1;
}

int cmd_generate(const config::RunConfig& cfg, const CliArgs& args) {
  auto store = store::open_store(cfg.store_url);
  llm::Gateway gateway(cfg.provider, cfg.max_in_flight);
  driver::PipelineDeps deps{*store, gateway, cfg,
                            prompts::PromptSet::load(cfg.templates_dir)};

  auto result = driver::run_generate(args.topic, deps);
  std::cout << "state: " << result.state_path.string() << "\n"
            << "tex: " << result.tex_path.string() << "\n"
            << "bundle: " << result.bundle.tex_path.string() << ", "
            << result.bundle.bib_path.string() << ", "
            << result.bundle.figs_dir.string() << "/\n";
  return 0;
}

int cmd_postprocess(const config::RunConfig& cfg, const CliArgs& args) {
  auto store = store::open_store(cfg.store_url);

  post::PostprocessConfig pcfg;
  pcfg.out_dir = cfg.output_dir;
  pcfg.bib_style = cfg.bib_style;
  pcfg.enable_dblp = !cfg.dblp_url.empty();
  if (pcfg.enable_dblp) pcfg.dblp.base_url = cfg.dblp_url;
  pcfg.dblp.timeout_s = cfg.dblp_timeout_s;
  pcfg.max_in_flight = cfg.max_in_flight;

  auto result = post::post_process(args.tex, *store, pcfg);
  std::cout << "bundle: " << result.bundle.tex_path.string() << ", "
            << result.bundle.bib_path.string() << ", "
            << result.bundle.figs_dir.string() << "/\n"
            << "keys cited: " << result.keys_cited << "\n"
            << "published replacements: " << result.resolved_published << "\n"
            << "preprint only: " << result.preprint_only << "\n"
            << "unresolved: " << result.unresolved << "\n";
  return 0;
}

int cmd_evaluate(const config::RunConfig& cfg, const CliArgs& args) {
  auto store = store::open_store("memory:");  // the judge needs no corpus
  llm::Gateway gateway(cfg.provider, cfg.max_in_flight);
  driver::PipelineDeps deps{*store, gateway, cfg,
                            prompts::PromptSet::load(cfg.templates_dir)};

  auto result = driver::run_evaluate(args.tex, args.repeat, deps);
  for (const auto& run : result.runs) {
    std::cout << "coverage " << run.scores.coverage << "  structure "
              << run.scores.structure << "  relevance " << run.scores.relevance
              << "  avg " << run.scores.average << "  (" << run.model_id
              << ")\n";
  }
  std::cout << "aggregate: coverage " << result.aggregate.coverage
            << "  structure " << result.aggregate.structure << "  relevance "
            << result.aggregate.relevance << "  overall "
            << result.aggregate.overall << "\n"
            << "report: " << result.report_path.string() << "\n";
  return 0;
}

int cmd_state(const CliArgs& args) {
  std::ifstream in(args.state_file);
  if (!in) throw IoError("cannot read state document: " + args.state_file);
  std::ostringstream buf;
  buf << in.rdbuf();
  auto st = state::restore_state(buf.str());

  if (!args.show_field.empty()) {
    if (args.show_field == "topic") {
      std::cout << st.topic << "\n";
    } else if (args.show_field == "phase") {
      std::cout << state::phase_name(st.current_phase) << "\n";
    } else if (args.show_field == "outline") {
      for (const auto& t : st.outline) std::cout << t << "\n";
    } else if (args.show_field == "related") {
      for (const auto& id : st.related_papers) std::cout << id << "\n";
    } else if (args.show_field == "document") {
      std::cout << state::serialize_state(st);
    } else {
      throw ArgumentError("unknown field: " + args.show_field +
                          " (topic, phase, outline, related, document)");
    }
    return 0;
  }

  std::cout << "topic: " << st.topic << "\n"
            << "phase: " << state::phase_name(st.current_phase) << "\n"
            << "outline sections: " << st.outline.size() << "\n"
            << "generated sections: " << st.generated_sections.size() << "\n"
            << "related papers: " << st.related_papers.size() << "\n"
            << "fragments: " << st.final_paper.size() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Automated literature-survey pipeline: corpus ingestion, "
               "retrieval-augmented drafting, LaTeX/BibTeX post-processing, "
               "and rubric-based scoring."};
  app.require_subcommand(1);
  app.fallthrough();

  CliArgs args;
  app.add_option("--config", args.config_file, "JSON config file");
  app.add_flag("--mock", args.overrides.mock,
               "use the deterministic offline mock provider");
  app.add_flag("-v,--verbose", args.verbose, "debug logging");
  app.add_option("--store", args.overrides.store_url,
                 "store URL (memory: or sqlite:<path>)");
  app.add_option("--provider", args.overrides.provider_kind,
                 "provider kind: mock, ollama, openai, openrouter");
  app.add_option("--base-url", args.overrides.base_url, "provider base URL");
  app.add_option("--model", args.overrides.model_id, "model identifier");
  app.add_option("--timeout", args.overrides.timeout_s, "provider timeout (s)");
  app.add_option("--max-retries", args.overrides.max_retries,
                 "transient-failure retry budget");
  app.add_option("--seed", args.overrides.mock_seed, "mock provider seed");
  app.add_option("--k-ref", args.overrides.k_ref,
                 "reference corpus size (default 1500)");
  app.add_option("--m", args.overrides.m, "outline section count (default 8)");
  app.add_option("--k-sec", args.overrides.k_sec,
                 "papers kept per section (default 20)");
  app.add_option("--k-analyze", args.overrides.k_analyze,
                 "papers analyzed per section (default 5)");
  app.add_option("--candidate-topk", args.overrides.candidate_topk,
                 "retrieval candidate pool (default 100)");
  app.add_option("--threshold", args.overrides.similarity_threshold,
                 "similarity threshold (default 0.7)");
  app.add_option("--batch-size", args.overrides.batch_size,
                 "embedding batch size (default 10000)");
  app.add_option("--output", args.overrides.output_dir,
                 "output directory (default result)");
  app.add_option("--templates", args.overrides.templates_dir,
                 "prompt templates directory");
  app.add_option("--max-in-flight", args.overrides.max_in_flight,
                 "concurrent provider/DBLP calls (default 4)");
  app.add_option("--dblp-url", args.overrides.dblp_url,
                 "DBLP base URL (empty disables resolution)");
  app.add_option("--dblp-timeout", args.overrides.dblp_timeout_s,
                 "DBLP request timeout (s)");
  app.add_option("--bib-style", args.overrides.bib_style,
                 "bibliography style (default apalike)");

  auto* ingest_cmd =
      app.add_subcommand("ingest", "load a metadata snapshot into the store");
  ingest_cmd->add_option("--snapshot", args.snapshot, "snapshot file (JSONL)")
      ->required();
  ingest_cmd->add_option("--categories", args.categories,
                         "allowed categories (default cs.AI cs.CL cs.CV "
                         "cs.LG stat.ML)");

  auto* generate_cmd = app.add_subcommand(
      "generate", "run the full survey pipeline for a topic");
  generate_cmd->add_option("--topic", args.topic, "survey topic")->required();

  auto* post_cmd = app.add_subcommand(
      "postprocess", "run citation/BibTeX/LaTeX post-processing on a .tex");
  post_cmd->add_option("--tex", args.tex, "input .tex file")->required();

  auto* eval_cmd =
      app.add_subcommand("evaluate", "score a survey with the rubric judge");
  eval_cmd->add_option("--tex", args.tex, "survey file")->required();
  eval_cmd->add_option("--repeat", args.repeat, "number of judge runs");

  auto* state_cmd =
      app.add_subcommand("state", "inspect or restore a state document");
  state_cmd->add_option("file", args.state_file, "state document path")
      ->required();
  state_cmd->add_option("--show", args.show_field,
                        "print one field: topic, phase, outline, related, "
                        "document");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (!args.verbose) {
    surveyor::log::set_sink([](surveyor::log::Level level, const std::string& msg) {
      if (level == surveyor::log::Level::debug) return;
      std::cerr << "[" << surveyor::log::level_tag(level) << "] " << msg << "\n";
    });
  }

  try {
    if (state_cmd->parsed()) return cmd_state(args);

    config::RunConfig cfg = config::resolve_config(args.config_file,
                                                   args.overrides);
    if (ingest_cmd->parsed()) return cmd_ingest(cfg, args);
    if (generate_cmd->parsed()) return cmd_generate(cfg, args);
    if (post_cmd->parsed()) return cmd_postprocess(cfg, args);
    if (eval_cmd->parsed()) return cmd_evaluate(cfg, args);
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
