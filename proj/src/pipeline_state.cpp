#include "surveyor/pipeline_state.hpp"

#include <algorithm>
#include <fstream>
#include <mutex>
#include <semaphore>
#include <sstream>
#include <thread>
#include <unordered_map>
#include <unordered_set>

#include "surveyor/errors.hpp"
#include "surveyor/log.hpp"
#include "surveyor/util.hpp"

namespace surveyor::state {

using nlohmann::ordered_json;

const char* phase_name(Phase phase) {
  switch (phase) {
    case Phase::planning:
      return "planning";
    case Phase::research:
      return "research";
    case Phase::generation:
      return "generation";
    case Phase::postprocess:
      return "postprocess";
    case Phase::done:
      return "done";
  }
  return "?";
}

Phase phase_from_name(const std::string& name) {
  if (name == "planning") return Phase::planning;
  if (name == "research") return Phase::research;
  if (name == "generation") return Phase::generation;
  if (name == "postprocess") return Phase::postprocess;
  if (name == "done") return Phase::done;
  throw FormatError("unknown phase: " + name);
}

// ---------------------------------------------------------------------------
// deltas
// ---------------------------------------------------------------------------

std::vector<std::string> StateDelta::touched_keys() const {
  std::vector<std::string> keys;
  if (outline) keys.push_back("outline");
  if (final_paper) keys.push_back("final_paper");
  for (const auto& [k, _] : sections) keys.push_back("sections/" + k);
  for (const auto& [k, _] : analyses) keys.push_back("analyses/" + k);
  for (const auto& [k, _] : papers) keys.push_back("papers/" + k);
  for (const auto& [k, _] : stage_results) keys.push_back("stage_results/" + k);
  return keys;
}

bool StateDelta::empty() const {
  return !phase && !outline && sections.empty() && analyses.empty() &&
         papers.empty() && related_append.empty() && stage_results.empty() &&
         !final_paper;
}

void append_related(std::vector<std::string>& related,
                    const std::vector<std::string>& ids) {
  std::unordered_set<std::string> seen(related.begin(), related.end());
  for (const auto& id : ids) {
    if (seen.insert(id).second) related.push_back(id);
  }
}

void apply_delta(GlobalState& state, const StateDelta& delta) {
  if (delta.phase && *delta.phase > state.current_phase) {
    state.current_phase = *delta.phase;
  }
  if (delta.outline) state.outline = *delta.outline;
  for (const auto& [k, v] : delta.sections) state.generated_sections[k] = v;
  for (const auto& [k, v] : delta.analyses) state.section_analysis[k] = v;
  for (const auto& [k, v] : delta.papers) state.section_papers[k] = v;
  append_related(state.related_papers, delta.related_append);
  for (const auto& [k, v] : delta.stage_results) state.stage_results[k] = v;
  if (delta.final_paper) state.final_paper = *delta.final_paper;
}

// ---------------------------------------------------------------------------
// graph
// ---------------------------------------------------------------------------

void PipelineGraph::add(NodeSpec spec) { nodes_.push_back(std::move(spec)); }

void PipelineGraph::validate() const {
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (!index.emplace(nodes_[i].name, i).second) {
      throw ConfigError("duplicate node name: " + nodes_[i].name);
    }
  }
  for (const auto& n : nodes_) {
    for (const auto& dep : n.dependencies) {
      if (!index.contains(dep)) {
        throw ConfigError("node '" + n.name + "' depends on unknown node '" +
                          dep + "'");
      }
      if (dep == n.name) {
        throw ConfigError("node '" + n.name + "' depends on itself");
      }
    }
  }
  levels();  // throws on cycles
  std::size_t entries = 0;
  for (const auto& n : nodes_) {
    if (n.dependencies.empty()) ++entries;
  }
  if (!nodes_.empty() && entries != 1) {
    throw ConfigError("graph must have exactly one entry node, found " +
                      std::to_string(entries));
  }
}

std::vector<std::vector<std::size_t>> PipelineGraph::levels() const {
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < nodes_.size(); ++i) index[nodes_[i].name] = i;

  std::vector<std::size_t> indegree(nodes_.size(), 0);
  std::vector<std::vector<std::size_t>> children(nodes_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    for (const auto& dep : nodes_[i].dependencies) {
      auto it = index.find(dep);
      if (it == index.end()) {
        throw ConfigError("node '" + nodes_[i].name +
                          "' depends on unknown node '" + dep + "'");
      }
      children[it->second].push_back(i);
      ++indegree[i];
    }
  }

  std::vector<std::vector<std::size_t>> layers;
  std::vector<std::size_t> current;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (indegree[i] == 0) current.push_back(i);
  }
  std::size_t processed = 0;
  while (!current.empty()) {
    layers.push_back(current);
    processed += current.size();
    std::vector<std::size_t> next;
    for (std::size_t i : current) {
      for (std::size_t child : children[i]) {
        if (--indegree[child] == 0) next.push_back(child);
      }
    }
    std::sort(next.begin(), next.end());
    current = std::move(next);
  }
  if (processed != nodes_.size()) {
    std::string stuck;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      if (indegree[i] > 0) {
        if (!stuck.empty()) stuck += ", ";
        stuck += nodes_[i].name;
      }
    }
    throw ConfigError("dependency cycle involving: " + stuck);
  }
  return layers;
}

// ---------------------------------------------------------------------------
// executor
// ---------------------------------------------------------------------------

namespace {

struct NodeOutcome {
  bool ran = false;
  StateDelta delta;
  std::exception_ptr error;
};

void dump_partial_state(const GlobalState& state,
                        const std::filesystem::path& dir) {
  if (dir.empty()) return;
  try {
    save_state(state, dir, ".failed");
  } catch (const std::exception& e) {
    log::error(std::string("could not dump partial state: ") + e.what());
  }
}

}  // namespace

GlobalState execute(const PipelineGraph& graph, GlobalState state,
                    const ExecOptions& options) {
  graph.validate();
  const auto layers = graph.levels();
  const auto& nodes = graph.nodes();
  std::mutex trace_mutex;

  for (std::size_t level = 0; level < layers.size(); ++level) {
    const auto& layer = layers[level];
    std::vector<NodeOutcome> outcomes(layer.size());

    auto run_one = [&](std::size_t slot) {
      const NodeSpec& node = nodes[layer[slot]];
      if (options.trace) {
        std::lock_guard<std::mutex> lock(trace_mutex);
        options.trace->started.push_back({node.name, level});
        options.trace->invocations[node.name] += 1;
      }
      try {
        outcomes[slot].delta = node.handler(state);
        outcomes[slot].ran = true;
      } catch (...) {
        outcomes[slot].error = std::current_exception();
      }
    };

    if (options.max_in_flight <= 1 || layer.size() == 1) {
      bool failed = false;
      for (std::size_t slot = 0; slot < layer.size() && !failed; ++slot) {
        run_one(slot);
        failed = outcomes[slot].error != nullptr;
      }
    } else {
      std::counting_semaphore<> sem(
          static_cast<std::ptrdiff_t>(options.max_in_flight));
      std::vector<std::thread> workers;
      workers.reserve(layer.size());
      for (std::size_t slot = 0; slot < layer.size(); ++slot) {
        workers.emplace_back([&, slot] {
          sem.acquire();
          run_one(slot);
          sem.release();
        });
      }
      for (auto& w : workers) w.join();
    }

    // disjointness between the layer's deltas
    std::unordered_map<std::string, std::string> owner;
    for (std::size_t slot = 0; slot < layer.size(); ++slot) {
      if (!outcomes[slot].ran) continue;
      for (const auto& key : outcomes[slot].delta.touched_keys()) {
        auto [it, fresh] = owner.emplace(key, nodes[layer[slot]].name);
        if (!fresh) {
          throw ValidationError("parallel nodes '" + it->second + "' and '" +
                                nodes[layer[slot]].name +
                                "' both mutate state key '" + key + "'");
        }
      }
    }

    // apply in node-index order; halt at the first failed node
    for (std::size_t slot = 0; slot < layer.size(); ++slot) {
      if (outcomes[slot].error) {
        const std::string& name = nodes[layer[slot]].name;
        dump_partial_state(state, options.dump_dir);
        try {
          std::rethrow_exception(outcomes[slot].error);
        } catch (const std::exception& e) {
          throw ExecutionError(name, "node '" + name + "' failed: " + e.what());
        }
      }
      if (outcomes[slot].ran) apply_delta(state, outcomes[slot].delta);
    }
  }

  StateDelta finish;
  finish.phase = Phase::done;
  apply_delta(state, finish);
  return state;
}

// ---------------------------------------------------------------------------
// serialization
// ---------------------------------------------------------------------------

namespace {

ordered_json ref_to_json(const PaperRef& ref) {
  ordered_json j;
  j["id"] = ref.id;
  j["title"] = ref.title;
  j["authors"] = ref.authors;
  j["abstract"] = ref.abstract;
  j["categories"] = ref.categories;
  j["similarity"] = ref.similarity;
  return j;
}

PaperRef ref_from_json(const ordered_json& j) {
  PaperRef ref;
  ref.id = j.value("id", "");
  ref.title = j.value("title", "");
  ref.authors = j.value("authors", "");
  ref.abstract = j.value("abstract", "");
  if (j.contains("categories")) {
    ref.categories = j["categories"].get<std::vector<std::string>>();
  }
  ref.similarity = j.value("similarity", 0.0);
  return ref;
}

const ordered_json& require_field(const ordered_json& doc,
                                  const std::string& field) {
  auto it = doc.find(field);
  if (it == doc.end()) {
    throw SchemaError(field, "state document missing field '" + field + "'");
  }
  return *it;
}

}  // namespace

std::string serialize_state(const GlobalState& state) {
  ordered_json doc;
  doc["schema_version"] = 1;
  doc["metadata"] = state.metadata;
  doc["topic"] = state.topic;
  doc["current_phase"] = phase_name(state.current_phase);
  doc["outline"] = state.outline;
  doc["related_papers"] = state.related_papers;

  ordered_json papers = ordered_json::object();
  for (const auto& [title, refs] : state.section_papers) {
    ordered_json arr = ordered_json::array();
    for (const auto& r : refs) arr.push_back(ref_to_json(r));
    papers[title] = std::move(arr);
  }
  doc["section_papers"] = std::move(papers);

  ordered_json analysis = ordered_json::object();
  for (const auto& [title, text] : state.section_analysis) analysis[title] = text;
  doc["section_analysis"] = std::move(analysis);

  ordered_json sections = ordered_json::object();
  for (const auto& [title, text] : state.generated_sections) sections[title] = text;
  doc["generated_sections"] = std::move(sections);

  ordered_json stages = ordered_json::object();
  for (const auto& [name, value] : state.stage_results) stages[name] = value;
  doc["stage_results"] = std::move(stages);

  ordered_json fragments = ordered_json::object();
  for (const auto& [name, text] : state.final_paper) fragments[name] = text;
  doc["final_paper"] = std::move(fragments);

  return doc.dump(2) + "\n";
}

GlobalState restore_state(const std::string& document) {
  ordered_json doc = ordered_json::parse(document, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    throw FormatError("state document is not valid JSON");
  }

  GlobalState state;
  try {
    require_field(doc, "schema_version");
    state.metadata = require_field(doc, "metadata");
    state.topic = require_field(doc, "topic").get<std::string>();
    state.current_phase =
        phase_from_name(require_field(doc, "current_phase").get<std::string>());
    state.outline =
        require_field(doc, "outline").get<std::vector<std::string>>();
    state.related_papers =
        require_field(doc, "related_papers").get<std::vector<std::string>>();

    for (const auto& [title, arr] : require_field(doc, "section_papers").items()) {
      std::vector<PaperRef> refs;
      for (const auto& r : arr) refs.push_back(ref_from_json(r));
      state.section_papers[title] = std::move(refs);
    }
    for (const auto& [title, text] :
         require_field(doc, "section_analysis").items()) {
      state.section_analysis[title] = text.get<std::string>();
    }
    for (const auto& [title, text] :
         require_field(doc, "generated_sections").items()) {
      state.generated_sections[title] = text.get<std::string>();
    }
    for (const auto& [name, value] :
         require_field(doc, "stage_results").items()) {
      state.stage_results[name] = value;
    }
    for (const auto& [name, text] : require_field(doc, "final_paper").items()) {
      state.final_paper.emplace_back(name, text.get<std::string>());
    }
  } catch (const SchemaError&) {
    throw;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("state document field has wrong type: ") +
                      e.what());
  }
  return state;
}

std::filesystem::path save_state(const GlobalState& state,
                                 const std::filesystem::path& dir,
                                 const std::string& suffix) {
  std::filesystem::create_directories(dir);
  std::string name = util::slugify(state.topic) + "_" +
                     util::filename_timestamp_utc() + suffix + ".json";
  std::filesystem::path path = dir / name;
  std::ofstream out(path);
  if (!out) throw IoError("cannot write state document: " + path.string());
  out << serialize_state(state);
  if (!out) throw IoError("write failed: " + path.string());
  return path;
}

void validate_state(const GlobalState& state) {
  if (state.current_phase >= Phase::research && !state.outline.empty()) {
    for (const auto& title : state.outline) {
      if (!state.generated_sections.contains(title)) {
        throw ValidationError("outline section '" + title +
                              "' missing from generated_sections");
      }
    }
  }
  std::vector<std::string> expected;
  for (const auto& title : state.outline) {
    auto it = state.section_papers.find(title);
    if (it == state.section_papers.end()) continue;
    std::vector<std::string> ids;
    ids.reserve(it->second.size());
    for (const auto& r : it->second) ids.push_back(r.id);
    append_related(expected, ids);
  }
  // any non-outline entries, in map order, for completeness
  for (const auto& [title, refs] : state.section_papers) {
    if (std::find(state.outline.begin(), state.outline.end(), title) !=
        state.outline.end()) {
      continue;
    }
    std::vector<std::string> ids;
    for (const auto& r : refs) ids.push_back(r.id);
    append_related(expected, ids);
  }
  if (!state.section_papers.empty() && expected != state.related_papers) {
    throw ValidationError(
        "related_papers is not the ordered deduplicated union of "
        "section_papers ids");
  }
}

GlobalState init_state(const std::string& topic,
                       const ordered_json& config) {
  if (util::trim(topic).empty()) {
    throw ArgumentError("topic must be nonempty");
  }
  GlobalState state;
  state.topic = topic;
  state.current_phase = Phase::planning;
  state.stage_results["config"] = config;
  state.metadata["created_at"] = util::iso_timestamp_utc();
  state.metadata["schema_version"] = 1;
  if (config.contains("provider") && config["provider"].contains("model_id")) {
    state.metadata["model_id"] = config["provider"]["model_id"];
  }
  if (config.contains("provider") && config["provider"].contains("kind")) {
    state.metadata["provider_kind"] = config["provider"]["kind"];
  }
  return state;
}

}  // namespace surveyor::state
