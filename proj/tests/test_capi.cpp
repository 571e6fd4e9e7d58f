// Exercises the shared library strictly through the C header.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <string>

#include "ktnlab/ktnlab.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path temp_dir(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / "ktnlab_capi" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string grab(char* s) {
  std::string out = s ? s : "";
  ktnlab_string_free(s);
  return out;
}

std::string tiny_config() {
  char* builtin = nullptr;
  REQUIRE(ktnlab_toy_config(&builtin) == KTNLAB_OK);
  json j = json::parse(grab(builtin));
  j["types"][0]["nodes_per_cluster"] = 10;
  j["types"][1]["nodes_per_cluster"] = 10;
  j["q"] = 0.08;
  j["seed"] = 5;
  return j.dump();
}

}  // namespace

TEST_CASE("version and status names") {
  CHECK(std::string(ktnlab_version()).find('.') != std::string::npos);
  CHECK(std::string(ktnlab_status_name(KTNLAB_OK)) == "ok");
  CHECK(std::string(ktnlab_status_name(KTNLAB_ERR_PARSE)) == "parse_error");
}

TEST_CASE("null arguments are rejected with messages") {
  CHECK(ktnlab_graph_load(nullptr, nullptr) == KTNLAB_ERR_INVALID_ARGUMENT);
  CHECK(std::string(ktnlab_last_error()).find("null") != std::string::npos);
  ktnlab_graph* g = nullptr;
  CHECK(ktnlab_graph_generate("{ not json", &g) == KTNLAB_ERR_PARSE);
  CHECK(ktnlab_graph_load("/nonexistent/ktnlab", &g) == KTNLAB_ERR_IO);
}

TEST_CASE("generate, save, load, validate, info through handles") {
  ktnlab_graph* g = nullptr;
  REQUIRE(ktnlab_graph_generate(tiny_config().c_str(), &g) == KTNLAB_OK);
  REQUIRE(g != nullptr);

  char* info = nullptr;
  REQUIRE(ktnlab_graph_info(g, &info) == KTNLAB_OK);
  json j = json::parse(grab(info));
  CHECK(j["node_counts"]["s"] == 40);
  CHECK(j["node_counts"]["t"] == 40);

  char* violations = nullptr;
  REQUIRE(ktnlab_graph_validate(g, &violations) == KTNLAB_OK);
  CHECK(json::parse(grab(violations)).empty());

  fs::path dir = temp_dir("roundtrip");
  REQUIRE(ktnlab_graph_save(g, dir.string().c_str()) == KTNLAB_OK);
  ktnlab_graph_free(g);

  ktnlab_graph* back = nullptr;
  REQUIRE(ktnlab_graph_load(dir.string().c_str(), &back) == KTNLAB_OK);
  char* info2 = nullptr;
  REQUIRE(ktnlab_graph_info(back, &info2) == KTNLAB_OK);
  CHECK(json::parse(grab(info2))["node_counts"]["s"] == 40);
  ktnlab_graph_free(back);
}

TEST_CASE("command pipeline: generate, train, eval") {
  fs::path graph_dir = temp_dir("pipeline_graph");
  fs::path run_dir = temp_dir("pipeline_run");
  REQUIRE(ktnlab_cmd_generate(tiny_config().c_str(), graph_dir.string().c_str()) == KTNLAB_OK);

  json cfg{{"layers", 1}, {"hidden_dim", 4}, {"epochs", 3}, {"eval_every", 0}, {"seed", 2}};
  REQUIRE(ktnlab_cmd_train(graph_dir.string().c_str(), cfg.dump().c_str(),
                           run_dir.string().c_str()) == KTNLAB_OK);
  CHECK(fs::exists(run_dir / "checkpoint.json"));

  char* metrics = nullptr;
  REQUIRE(ktnlab_cmd_eval((run_dir / "checkpoint.json").string().c_str(),
                          graph_dir.string().c_str(), &metrics) == KTNLAB_OK);
  json m = json::parse(grab(metrics));
  CHECK(m["source"]["accuracy"].is_number());

  CHECK(ktnlab_cmd_eval("/nonexistent/checkpoint.json", graph_dir.string().c_str(), &metrics) ==
        KTNLAB_ERR_IO);
  CHECK(ktnlab_cmd_baseline("dan", graph_dir.string().c_str(), "{}",
                            run_dir.string().c_str()) == KTNLAB_ERR_INVALID_ARGUMENT);
}

TEST_CASE("unknown config fields surface as invalid arguments") {
  fs::path graph_dir = temp_dir("badcfg_graph");
  REQUIRE(ktnlab_cmd_generate(tiny_config().c_str(), graph_dir.string().c_str()) == KTNLAB_OK);
  json cfg{{"epoks", 3}};
  CHECK(ktnlab_cmd_train(graph_dir.string().c_str(), cfg.dump().c_str(),
                         temp_dir("badcfg_run").string().c_str()) ==
        KTNLAB_ERR_INVALID_ARGUMENT);
  CHECK(std::string(ktnlab_last_error()).find("epoks") != std::string::npos);
}
