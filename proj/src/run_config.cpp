#include "surveyor/run_config.hpp"

#include <cstdlib>
#include <fstream>

#include "surveyor/errors.hpp"

namespace surveyor::config {

using nlohmann::json;
using nlohmann::ordered_json;

void RunConfig::validate() const {
  provider.validate();
  auto positive = [](std::size_t v, const char* name) {
    if (v < 1) throw ConfigError(std::string(name) + " must be >= 1");
  };
  positive(k_ref, "k_ref");
  positive(m, "m");
  positive(k_sec, "k_sec");
  positive(k_analyze, "k_analyze");
  positive(candidate_topk, "candidate_topk");
  positive(batch_size, "batch_size");
  if (max_in_flight < 1) throw ConfigError("max_in_flight must be >= 1");
  if (similarity_threshold < 0.0 || similarity_threshold > 1.0) {
    throw ConfigError("similarity_threshold must lie in [0, 1]");
  }
}

std::string redact_url(const std::string& url) {
  auto scheme = url.find("://");
  if (scheme == std::string::npos) return url;
  auto at = url.find('@', scheme + 3);
  if (at == std::string::npos) return url;
  auto path = url.find('/', scheme + 3);
  if (path != std::string::npos && path < at) return url;  // '@' in the path
  return url.substr(0, scheme + 3) + "***" + url.substr(at);
}

ordered_json RunConfig::state_json() const {
  ordered_json j;
  j["provider"] = {
      {"kind", llm::provider_kind_name(provider.kind)},
      {"base_url", provider.base_url},
      {"model_id", provider.model_id},
      {"timeout_s", provider.timeout_s},
      {"max_retries", provider.max_retries},
      {"mock_seed", provider.mock_seed},
  };
  j["store_url"] = redact_url(store_url);
  j["k_ref"] = k_ref;
  j["m"] = m;
  j["k_sec"] = k_sec;
  j["k_analyze"] = k_analyze;
  j["candidate_topk"] = candidate_topk;
  j["similarity_threshold"] = similarity_threshold;
  j["batch_size"] = batch_size;
  j["output_dir"] = output_dir.string();
  j["templates_dir"] = templates_dir.string();
  j["max_in_flight"] = max_in_flight;
  j["dblp_url"] = dblp_url;
  j["bib_style"] = bib_style;
  return j;
}

RunConfig apply_file(RunConfig base, const json& doc) {
  if (!doc.is_object()) throw ConfigError("config file must hold a JSON object");

  if (doc.contains("provider")) {
    const auto& p = doc["provider"];
    if (p.contains("kind")) {
      base.provider.kind = llm::provider_kind_from_name(p["kind"]);
    }
    if (p.contains("base_url")) base.provider.base_url = p["base_url"];
    if (p.contains("model_id")) base.provider.model_id = p["model_id"];
    if (p.contains("timeout_s")) base.provider.timeout_s = p["timeout_s"];
    if (p.contains("max_retries")) base.provider.max_retries = p["max_retries"];
    if (p.contains("mock_seed")) base.provider.mock_seed = p["mock_seed"];
  }
  if (doc.contains("store_url")) base.store_url = doc["store_url"];
  if (doc.contains("k_ref")) base.k_ref = doc["k_ref"];
  if (doc.contains("m")) base.m = doc["m"];
  if (doc.contains("k_sec")) base.k_sec = doc["k_sec"];
  if (doc.contains("k_analyze")) base.k_analyze = doc["k_analyze"];
  if (doc.contains("candidate_topk")) base.candidate_topk = doc["candidate_topk"];
  if (doc.contains("similarity_threshold")) {
    base.similarity_threshold = doc["similarity_threshold"];
  }
  if (doc.contains("batch_size")) base.batch_size = doc["batch_size"];
  if (doc.contains("output_dir")) {
    base.output_dir = doc["output_dir"].get<std::string>();
  }
  if (doc.contains("templates_dir")) {
    base.templates_dir = doc["templates_dir"].get<std::string>();
  }
  if (doc.contains("max_in_flight")) base.max_in_flight = doc["max_in_flight"];
  if (doc.contains("dblp_url")) base.dblp_url = doc["dblp_url"];
  if (doc.contains("dblp_timeout_s")) base.dblp_timeout_s = doc["dblp_timeout_s"];
  if (doc.contains("bib_style")) base.bib_style = doc["bib_style"];
  return base;
}

RunConfig apply_overrides(RunConfig base, const Overrides& o) {
  if (o.provider_kind) {
    base.provider.kind = llm::provider_kind_from_name(*o.provider_kind);
  }
  if (o.base_url) base.provider.base_url = *o.base_url;
  if (o.model_id) base.provider.model_id = *o.model_id;
  if (o.timeout_s) base.provider.timeout_s = *o.timeout_s;
  if (o.max_retries) base.provider.max_retries = *o.max_retries;
  if (o.mock_seed) base.provider.mock_seed = *o.mock_seed;
  if (o.store_url) base.store_url = *o.store_url;
  if (o.k_ref) base.k_ref = *o.k_ref;
  if (o.m) base.m = *o.m;
  if (o.k_sec) base.k_sec = *o.k_sec;
  if (o.k_analyze) base.k_analyze = *o.k_analyze;
  if (o.candidate_topk) base.candidate_topk = *o.candidate_topk;
  if (o.similarity_threshold) base.similarity_threshold = *o.similarity_threshold;
  if (o.batch_size) base.batch_size = *o.batch_size;
  if (o.output_dir) base.output_dir = *o.output_dir;
  if (o.templates_dir) base.templates_dir = *o.templates_dir;
  if (o.max_in_flight) base.max_in_flight = *o.max_in_flight;
  if (o.dblp_url) base.dblp_url = *o.dblp_url;
  if (o.dblp_timeout_s) base.dblp_timeout_s = *o.dblp_timeout_s;
  if (o.bib_style) base.bib_style = *o.bib_style;
  if (o.mock) {
    base.provider.kind = llm::ProviderKind::mock;
    // keep mock runs offline unless a DBLP endpoint was named explicitly
    if (!o.dblp_url) base.dblp_url.clear();
  }
  return base;
}

RunConfig resolve_config(const std::optional<std::filesystem::path>& file,
                         const Overrides& overrides) {
  RunConfig cfg;
  if (file) {
    std::ifstream in(*file);
    if (!in) throw ConfigError("cannot read config file: " + file->string());
    json doc = json::parse(in, nullptr, false);
    if (doc.is_discarded()) {
      throw ConfigError("config file is not valid JSON: " + file->string());
    }
    cfg = apply_file(std::move(cfg), doc);
  }
  cfg = apply_overrides(std::move(cfg), overrides);

  // env vars carry only secrets
  if (const char* key = std::getenv("SURVEYOR_API_KEY")) {
    cfg.provider.api_key = key;
  }
  if (cfg.store_url.empty()) {
    if (const char* url = std::getenv("SURVEYOR_STORE_URL")) {
      cfg.store_url = url;
    }
  }
  cfg.validate();
  return cfg;
}

}  // namespace surveyor::config
