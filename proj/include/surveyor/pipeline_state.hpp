#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "surveyor/types.hpp"

namespace surveyor::state {

enum class Phase { planning, research, generation, postprocess, done };

const char* phase_name(Phase phase);
Phase phase_from_name(const std::string& name);

/// The shared pipeline state threaded through every graph node. Serialized
/// as a single JSON document with stable key order.
struct GlobalState {
  std::string topic;
  Phase current_phase = Phase::planning;
  std::vector<std::string> outline;
  std::map<std::string, std::string> generated_sections;
  std::map<std::string, std::vector<PaperRef>> section_papers;
  std::map<std::string, std::string> section_analysis;
  std::vector<std::string> related_papers;  // ordered, deduplicated
  std::map<std::string, nlohmann::ordered_json> stage_results;
  std::vector<std::pair<std::string, std::string>> final_paper;  // doc order
  nlohmann::ordered_json metadata = nlohmann::ordered_json::object();

  bool operator==(const GlobalState&) const = default;
};

/// A node's result: the set of field mutations the executor applies.
/// Map entries are upserts; related_papers entries are appended with
/// order-preserving deduplication; the phase only ever advances.
struct StateDelta {
  std::optional<Phase> phase;
  std::optional<std::vector<std::string>> outline;
  std::map<std::string, std::string> sections;   // generated_sections
  std::map<std::string, std::string> analyses;   // section_analysis
  std::map<std::string, std::vector<PaperRef>> papers;  // section_papers
  std::vector<std::string> related_append;
  std::map<std::string, nlohmann::ordered_json> stage_results;
  std::optional<std::vector<std::pair<std::string, std::string>>> final_paper;

  /// Keys used for the disjointness check between parallel nodes.
  std::vector<std::string> touched_keys() const;
  bool empty() const;
};

void apply_delta(GlobalState& state, const StateDelta& delta);

/// Append ids to related_papers, keeping first occurrences only.
void append_related(std::vector<std::string>& related,
                    const std::vector<std::string>& ids);

using NodeHandler = std::function<StateDelta(const GlobalState&)>;

struct NodeSpec {
  std::string name;
  int stage = 1;  // 1..4
  std::set<std::string> dependencies;
  NodeHandler handler;
};

/// A DAG of named nodes. Valid graphs are acyclic, reference only known
/// dependencies, and have exactly one entry node.
class PipelineGraph {
 public:
  void add(NodeSpec spec);
  const std::vector<NodeSpec>& nodes() const { return nodes_; }

  /// Throws ConfigError on duplicate names, unknown dependencies, cycles,
  /// or an entry-node count other than one.
  void validate() const;

  /// Topological layers: every node's dependencies live in earlier layers.
  /// Within a layer, insertion order is kept (this makes execution and
  /// delta application deterministic).
  std::vector<std::vector<std::size_t>> levels() const;

 private:
  std::vector<NodeSpec> nodes_;
};

struct ExecutionTrace {
  struct Event {
    std::string node;
    std::size_t level = 0;
  };
  std::vector<Event> started;               // handler start order
  std::map<std::string, int> invocations;   // node -> handler call count
};

struct ExecOptions {
  unsigned max_in_flight = 1;          // nodes of one layer may run in parallel
  std::filesystem::path dump_dir;      // partial-state dump on failure ("" = off)
  ExecutionTrace* trace = nullptr;
};

/// Run every node exactly once in dependency order. Node deltas are applied
/// in node-insertion order after each layer, so parallel and sequential
/// execution produce identical final states. On a handler failure the state
/// reached so far is dumped (when dump_dir is set) and an ExecutionError
/// naming the node is thrown. The final state's phase is `done`.
GlobalState execute(const PipelineGraph& graph, GlobalState state,
                    const ExecOptions& options = {});

// --- serialization ---

/// Deterministic JSON document containing every state field.
std::string serialize_state(const GlobalState& state);

/// Inverse of serialize_state. Throws SchemaError naming the first missing
/// required field, FormatError when the document does not parse.
GlobalState restore_state(const std::string& document);

/// Write the state under `dir` as <topic-slug>_<timestamp>.json and return
/// the path.
std::filesystem::path save_state(const GlobalState& state,
                                 const std::filesystem::path& dir,
                                 const std::string& suffix = "");

/// Check the documented state invariants; throws ValidationError.
void validate_state(const GlobalState& state);

GlobalState init_state(const std::string& topic,
                       const nlohmann::ordered_json& config);

}  // namespace surveyor::state
