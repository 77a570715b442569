#pragma once

#include <filesystem>
#include <string>

#include "surveyor/judge_eval.hpp"
#include "surveyor/llm_gateway.hpp"
#include "surveyor/pipeline_state.hpp"
#include "surveyor/postprocess_stage.hpp"
#include "surveyor/prompts.hpp"
#include "surveyor/run_config.hpp"
#include "surveyor/vector_store.hpp"

namespace surveyor::driver {

struct PipelineDeps {
  store::VectorStore& store;
  llm::Gateway& gateway;
  const config::RunConfig& cfg;
  prompts::PromptSet prompts;
};

/// The canonical stage graph: PlanningPhase -> OutlineGeneration ->
/// SectionPlanning -> PaperSearch -> ContentAnalysis -> ContentSynthesis ->
/// PaperGeneration -> PostProcessing. Per-section work runs inside the
/// research-stage nodes, bounded by cfg.max_in_flight.
state::PipelineGraph build_canonical_graph(PipelineDeps& deps);

struct GenerateResult {
  state::GlobalState final_state;
  std::filesystem::path state_path;
  std::filesystem::path tex_path;
  post::OutputBundle bundle;
};

/// Full pipeline for one topic: all four stages plus the final state save.
GenerateResult run_generate(const std::string& topic, PipelineDeps& deps);

struct EvaluateResult {
  std::vector<judge::JudgeRun> runs;
  judge::AggregateScores aggregate;
  std::filesystem::path report_path;
};

/// Judge a .tex (or any text) file `repeat` times and write a score report
/// beside the output bundle.
EvaluateResult run_evaluate(const std::filesystem::path& survey_path,
                            std::size_t repeat, PipelineDeps& deps);

/// Run indexes 0..n-1 with at most max_in_flight running at once; the
/// lowest-index exception is rethrown after all tasks finish.
void parallel_for(std::size_t n, unsigned max_in_flight,
                  const std::function<void(std::size_t)>& fn);

}  // namespace surveyor::driver
