// ktnlab command line. Wraps the shared-library C API: every subcommand
// resolves its flags into a JSON config and hands it to the corresponding
// ktnlab_cmd_* entry point.

#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ktnlab/ktnlab.h"

using nlohmann::json;

namespace {

int report(ktnlab_status rc) {
  if (rc == KTNLAB_OK) return 0;
  std::cerr << "error (" << ktnlab_status_name(rc) << "): " << ktnlab_last_error() << "\n";
  return 1;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    std::cerr << "error: cannot open '" << path << "'\n";
    std::exit(1);
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Flags shared by the training-style subcommands; only values the user
// actually passed end up in the overrides JSON.
struct CommonFlags {
  std::optional<std::uint64_t> seed;
  std::optional<bool> deterministic;
  std::optional<double> lambda;
  std::optional<int> metapath_max_len;
  std::optional<std::string> loss_ktn;
  std::optional<std::string> sharing;
  std::optional<int> epochs;
  std::optional<int> jobs;
  std::optional<int> sweep_seeds;
  std::optional<std::vector<double>> sweep_values;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--seed", seed, "Random seed");
    cmd->add_flag("--deterministic,!--no-deterministic", deterministic,
                  "Pin deterministic mode (zeroes wall-clock columns)");
    cmd->add_option("--lambda", lambda, "Transfer-loss weight");
    cmd->add_option("--metapath-max-len", metapath_max_len,
                    "Use all meta-paths up to this length (default: minimum-length only)");
    cmd->add_option("--loss-ktn", loss_ktn, "Transfer loss form: mse | frobenius")
        ->check(CLI::IsMember({"mse", "frobenius"}));
    cmd->add_option("--sharing", sharing, "Parameter sharing: full | v1 | v2")
        ->check(CLI::IsMember({"full", "v1", "v2"}));
    cmd->add_option("--epochs", epochs, "Training epochs");
    cmd->add_option("--jobs", jobs, "Parallel sweep points");
    cmd->add_option("--seeds", sweep_seeds, "Seeds per sweep point");
    cmd->add_option("--values", sweep_values, "Swept sigma values")->delimiter(',');
  }

  json overrides(const json& base = json::object()) const {
    json j = base;
    if (seed) j["seed"] = *seed;
    if (deterministic) j["deterministic"] = *deterministic;
    if (lambda) j["lambda"] = *lambda;
    if (metapath_max_len) j["metapath_max_len"] = *metapath_max_len;
    if (loss_ktn) j["loss_ktn"] = *loss_ktn;
    if (sharing) j["sharing"] = *sharing;
    if (epochs) j["epochs"] = *epochs;
    if (jobs) j["jobs"] = *jobs;
    if (sweep_seeds) j["sweep_seeds"] = *sweep_seeds;
    if (sweep_values) j["sweep_values"] = *sweep_values;
    return j;
  }
};

json load_config_json(const std::string& path) {
  if (path.empty()) return json::object();
  json j = json::parse(read_file(path), nullptr, false);
  if (j.is_discarded()) {
    std::cerr << "error: '" << path << "' is not valid JSON\n";
    std::exit(1);
  }
  return j;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Heterogeneous-graph transfer-learning workbench"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(ktnlab_version()));

  // generate
  auto* gen = app.add_subcommand("generate", "Generate a synthetic graph from a config");
  std::string gen_config, gen_out, gen_preset;
  std::optional<std::uint64_t> gen_seed;
  gen->add_option("--config", gen_config, "Generator config JSON file");
  gen->add_option("--preset", gen_preset, "Built-in config: toy | indirect")
      ->check(CLI::IsMember({"toy", "indirect"}));
  gen->add_option("--out", gen_out, "Output directory")->required();
  gen->add_option("--seed", gen_seed, "Random seed");

  // train
  auto* train = app.add_subcommand("train", "Train HGNN + KTN on a graph directory");
  std::string train_graph, train_config, train_out;
  CommonFlags train_flags;
  train->add_option("--graph", train_graph, "Graph directory")->required();
  train->add_option("--config", train_config, "Experiment config JSON file");
  train->add_option("--out", train_out, "Output directory")->required();
  train_flags.add_to(train);

  // eval
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on a graph directory");
  std::string eval_checkpoint, eval_graph, eval_out;
  eval->add_option("--checkpoint", eval_checkpoint, "checkpoint.json path")->required();
  eval->add_option("--graph", eval_graph, "Graph directory")->required();
  eval->add_option("--out", eval_out, "Optional file for the metrics JSON");

  // toy
  auto* toy = app.add_subcommand("toy", "Run the toy transfer-gap experiment");
  std::string toy_out;
  CommonFlags toy_flags;
  toy->add_option("--out", toy_out, "Output directory")->required();
  toy_flags.add_to(toy);

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Sensitivity sweep over one signal-to-noise pair");
  std::string sweep_scenario = "easy", sweep_pair, sweep_out;
  CommonFlags sweep_flags;
  sweep->add_option("--scenario", sweep_scenario, "easy | hard")
      ->check(CLI::IsMember({"easy", "hard"}));
  sweep->add_option("--pair", sweep_pair, "e_ss | e_tt | e_st | f_ss | f_tt | f_st")->required();
  sweep->add_option("--out", sweep_out, "Output directory")->required();
  sweep_flags.add_to(sweep);

  // baseline
  auto* baseline = app.add_subcommand("baseline", "Run the LP or EP baseline");
  std::string bl_method, bl_graph, bl_config, bl_out;
  CommonFlags bl_flags;
  baseline->add_option("--method", bl_method, "lp | ep")
      ->required()
      ->check(CLI::IsMember({"lp", "ep"}));
  baseline->add_option("--graph", bl_graph, "Graph directory")->required();
  baseline->add_option("--config", bl_config, "Experiment config JSON file");
  baseline->add_option("--out", bl_out, "Output directory")->required();
  bl_flags.add_to(baseline);

  // validate
  auto* val = app.add_subcommand("validate", "Check a graph directory against the invariants");
  std::string val_graph;
  val->add_option("--graph", val_graph, "Graph directory")->required();

  CLI11_PARSE(app, argc, argv);

  if (gen->parsed()) {
    std::string config_text;
    if (!gen_preset.empty()) {
      char* builtin = nullptr;
      ktnlab_status rc = gen_preset == "toy" ? ktnlab_toy_config(&builtin)
                                             : ktnlab_indirect_config(&builtin);
      if (rc != KTNLAB_OK) return report(rc);
      config_text = builtin;
      ktnlab_string_free(builtin);
    } else if (!gen_config.empty()) {
      config_text = read_file(gen_config);
    } else {
      std::cerr << "error: generate needs --config or --preset\n";
      return 1;
    }
    if (gen_seed) {
      json j = json::parse(config_text);
      j["seed"] = *gen_seed;
      config_text = j.dump();
    }
    return report(ktnlab_cmd_generate(config_text.c_str(), gen_out.c_str()));
  }

  if (train->parsed()) {
    json config = train_flags.overrides(load_config_json(train_config));
    return report(
        ktnlab_cmd_train(train_graph.c_str(), config.dump().c_str(), train_out.c_str()));
  }

  if (eval->parsed()) {
    char* metrics = nullptr;
    ktnlab_status rc = ktnlab_cmd_eval(eval_checkpoint.c_str(), eval_graph.c_str(), &metrics);
    if (rc != KTNLAB_OK) return report(rc);
    std::cout << metrics << "\n";
    if (!eval_out.empty()) {
      std::ofstream out(eval_out, std::ios::binary);
      out << metrics << "\n";
    }
    ktnlab_string_free(metrics);
    return 0;
  }

  if (toy->parsed()) {
    json overrides = toy_flags.overrides();
    return report(ktnlab_cmd_toy(toy_out.c_str(), overrides.dump().c_str()));
  }

  if (sweep->parsed()) {
    json overrides = sweep_flags.overrides();
    return report(ktnlab_cmd_sweep(sweep_scenario.c_str(), sweep_pair.c_str(), sweep_out.c_str(),
                                   overrides.dump().c_str()));
  }

  if (baseline->parsed()) {
    json config = bl_flags.overrides(load_config_json(bl_config));
    return report(ktnlab_cmd_baseline(bl_method.c_str(), bl_graph.c_str(), config.dump().c_str(),
                                      bl_out.c_str()));
  }

  if (val->parsed()) {
    ktnlab_graph* graph = nullptr;
    ktnlab_status rc = ktnlab_graph_load(val_graph.c_str(), &graph);
    if (rc != KTNLAB_OK) return report(rc);
    char* violations = nullptr;
    rc = ktnlab_graph_validate(graph, &violations);
    ktnlab_graph_free(graph);
    if (rc != KTNLAB_OK) return report(rc);
    json v = json::parse(violations);
    ktnlab_string_free(violations);
    if (v.empty()) {
      std::cout << "ok\n";
      return 0;
    }
    for (const auto& item : v)
      std::cout << item["where"].get<std::string>() << ": " << item["what"].get<std::string>()
                << "\n";
    return 2;
  }

  return 0;
}
