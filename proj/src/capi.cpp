#include "ktnlab/ktnlab.h"

#include <cstdlib>
#include <cstring>
#include <string>

#include "experiments.hpp"

using nlohmann::json;

struct ktnlab_graph {
  ktn::HeteroGraph graph;
};

namespace {

thread_local std::string g_last_error;

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out) std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

ktnlab_status fail(ktnlab_status code, const std::string& message) {
  g_last_error = message;
  return code;
}

ktnlab_status classify_error(const std::exception& e) {
  const std::string what = e.what();
  if (what.find("malformed") != std::string::npos || what.find("JSON") != std::string::npos ||
      what.find("not a number") != std::string::npos ||
      what.find("not an integer") != std::string::npos)
    return fail(KTNLAB_ERR_PARSE, what);
  if (what.find("cannot open") != std::string::npos || what.find("missing") != std::string::npos ||
      what.find("failed") != std::string::npos)
    return fail(KTNLAB_ERR_IO, what);
  if (what.find("non-finite") != std::string::npos || what.find("diverged") != std::string::npos)
    return fail(KTNLAB_ERR_NUMERIC, what);
  return fail(KTNLAB_ERR_INVALID_ARGUMENT, what);
}

template <typename Fn>
ktnlab_status guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const std::exception& e) {
    return classify_error(e);
  } catch (...) {
    return fail(KTNLAB_ERR_INTERNAL, "unknown error");
  }
}

ktnlab_status require_arg(const void* p, const char* name) {
  if (p) return KTNLAB_OK;
  return fail(KTNLAB_ERR_INVALID_ARGUMENT, std::string(name) + " must not be null");
}

std::string text_or_empty(const char* s) { return s ? std::string(s) : std::string(); }

}  // namespace

extern "C" {

const char* ktnlab_version(void) { return "0.1.0"; }

const char* ktnlab_status_name(ktnlab_status status) {
  switch (status) {
    case KTNLAB_OK: return "ok";
    case KTNLAB_ERR_INVALID_ARGUMENT: return "invalid_argument";
    case KTNLAB_ERR_IO: return "io_error";
    case KTNLAB_ERR_PARSE: return "parse_error";
    case KTNLAB_ERR_NUMERIC: return "numeric_error";
    case KTNLAB_ERR_INTERNAL: return "internal_error";
  }
  return "unknown";
}

const char* ktnlab_last_error(void) { return g_last_error.c_str(); }

void ktnlab_string_free(char* s) { std::free(s); }

ktnlab_status ktnlab_graph_generate(const char* config_json, ktnlab_graph** out) {
  if (auto rc = require_arg(config_json, "config_json"); rc != KTNLAB_OK) return rc;
  if (auto rc = require_arg(out, "out"); rc != KTNLAB_OK) return rc;
  return guarded([&]() {
    json j = json::parse(std::string(config_json), nullptr, false);
    if (j.is_discarded()) return fail(KTNLAB_ERR_PARSE, "generator config: malformed JSON");
    ktn::SynthResult result = ktn::generate(ktn::SynthConfig::from_json(j));
    *out = new ktnlab_graph{std::move(result.graph)};
    return KTNLAB_OK;
  });
}

ktnlab_status ktnlab_graph_load(const char* dir, ktnlab_graph** out) {
  if (auto rc = require_arg(dir, "dir"); rc != KTNLAB_OK) return rc;
  if (auto rc = require_arg(out, "out"); rc != KTNLAB_OK) return rc;
  return guarded([&]() {
    *out = new ktnlab_graph{ktn::load_graph(dir)};
    return KTNLAB_OK;
  });
}

ktnlab_status ktnlab_graph_save(const ktnlab_graph* graph, const char* dir) {
  if (auto rc = require_arg(graph, "graph"); rc != KTNLAB_OK) return rc;
  if (auto rc = require_arg(dir, "dir"); rc != KTNLAB_OK) return rc;
  return guarded([&]() {
    ktn::save_graph(graph->graph, dir);
    return KTNLAB_OK;
  });
}

ktnlab_status ktnlab_graph_validate(const ktnlab_graph* graph, char** violations_json) {
  if (auto rc = require_arg(graph, "graph"); rc != KTNLAB_OK) return rc;
  if (auto rc = require_arg(violations_json, "violations_json"); rc != KTNLAB_OK) return rc;
  return guarded([&]() {
    json arr = json::array();
    for (const auto& v : ktn::validate(graph->graph))
      arr.push_back({{"where", v.where}, {"what", v.what}});
    *violations_json = dup_string(arr.dump());
    return KTNLAB_OK;
  });
}

ktnlab_status ktnlab_graph_info(const ktnlab_graph* graph, char** info_json) {
  if (auto rc = require_arg(graph, "graph"); rc != KTNLAB_OK) return rc;
  if (auto rc = require_arg(info_json, "info_json"); rc != KTNLAB_OK) return rc;
  return guarded([&]() {
    const ktn::HeteroGraph& g = graph->graph;
    json j;
    j["node_counts"] = json::object();
    for (int t = 0; t < g.schema.num_types(); ++t)
      j["node_counts"][g.schema.type(t).name] = g.counts[t];
    j["edge_counts"] = json::object();
    for (int r = 0; r < g.schema.num_relations(); ++r)
      j["edge_counts"][g.schema.relation(r).name] = g.edges[r].nnz();
    *info_json = dup_string(j.dump());
    return KTNLAB_OK;
  });
}

void ktnlab_graph_free(ktnlab_graph* graph) { delete graph; }

ktnlab_status ktnlab_toy_config(char** config_json) {
  if (auto rc = require_arg(config_json, "config_json"); rc != KTNLAB_OK) return rc;
  *config_json = dup_string(ktn::toy_config().to_json().dump(2));
  return KTNLAB_OK;
}

ktnlab_status ktnlab_indirect_config(char** config_json) {
  if (auto rc = require_arg(config_json, "config_json"); rc != KTNLAB_OK) return rc;
  *config_json = dup_string(ktn::indirect_config().to_json().dump(2));
  return KTNLAB_OK;
}

ktnlab_status ktnlab_cmd_generate(const char* config_json, const char* out_dir) {
  if (auto rc = require_arg(config_json, "config_json"); rc != KTNLAB_OK) return rc;
  if (auto rc = require_arg(out_dir, "out_dir"); rc != KTNLAB_OK) return rc;
  return guarded([&]() {
    ktn::cmd_generate(config_json, out_dir);
    return KTNLAB_OK;
  });
}

ktnlab_status ktnlab_cmd_train(const char* graph_dir, const char* config_json,
                               const char* out_dir) {
  if (auto rc = require_arg(graph_dir, "graph_dir"); rc != KTNLAB_OK) return rc;
  if (auto rc = require_arg(out_dir, "out_dir"); rc != KTNLAB_OK) return rc;
  return guarded([&]() {
    ktn::cmd_train(graph_dir, text_or_empty(config_json), out_dir);
    return KTNLAB_OK;
  });
}

ktnlab_status ktnlab_cmd_eval(const char* checkpoint_path, const char* graph_dir,
                              char** metrics_json) {
  if (auto rc = require_arg(checkpoint_path, "checkpoint_path"); rc != KTNLAB_OK) return rc;
  if (auto rc = require_arg(graph_dir, "graph_dir"); rc != KTNLAB_OK) return rc;
  if (auto rc = require_arg(metrics_json, "metrics_json"); rc != KTNLAB_OK) return rc;
  return guarded([&]() {
    *metrics_json = dup_string(ktn::cmd_eval(checkpoint_path, graph_dir).dump(2));
    return KTNLAB_OK;
  });
}

ktnlab_status ktnlab_cmd_toy(const char* out_dir, const char* overrides_json) {
  if (auto rc = require_arg(out_dir, "out_dir"); rc != KTNLAB_OK) return rc;
  return guarded([&]() {
    ktn::cmd_toy(out_dir, text_or_empty(overrides_json));
    return KTNLAB_OK;
  });
}

ktnlab_status ktnlab_cmd_sweep(const char* scenario, const char* pair, const char* out_dir,
                               const char* overrides_json) {
  if (auto rc = require_arg(scenario, "scenario"); rc != KTNLAB_OK) return rc;
  if (auto rc = require_arg(pair, "pair"); rc != KTNLAB_OK) return rc;
  if (auto rc = require_arg(out_dir, "out_dir"); rc != KTNLAB_OK) return rc;
  return guarded([&]() {
    ktn::cmd_sweep(scenario, pair, out_dir, text_or_empty(overrides_json));
    return KTNLAB_OK;
  });
}

ktnlab_status ktnlab_cmd_baseline(const char* method, const char* graph_dir,
                                  const char* config_json, const char* out_dir) {
  if (auto rc = require_arg(method, "method"); rc != KTNLAB_OK) return rc;
  if (auto rc = require_arg(graph_dir, "graph_dir"); rc != KTNLAB_OK) return rc;
  if (auto rc = require_arg(out_dir, "out_dir"); rc != KTNLAB_OK) return rc;
  return guarded([&]() {
    ktn::cmd_baseline(method, graph_dir, text_or_empty(config_json), out_dir);
    return KTNLAB_OK;
  });
}

}  // extern "C"
