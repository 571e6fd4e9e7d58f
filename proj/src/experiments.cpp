#include "experiments.hpp"

#include <atomic>
#include <chrono>
#include <filesystem>
#include <mutex>
#include <sstream>
#include <thread>

#include "baselines.hpp"
#include "csvio.hpp"
#include "metrics.hpp"
#include "theory.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace ktn {

namespace {

json parse_json_text(const std::string& text, const std::string& what) {
  if (text.empty()) return json::object();
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw Error(what + ": malformed JSON");
  return j;
}

Eigen::MatrixXd take_rows(const Eigen::MatrixXd& m, const std::vector<int>& rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) out.row(k) = m.row(rows[k]);
  return out;
}

long elapsed_ms(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() -
                                                               start)
      .count();
}

}  // namespace

json ExperimentConfig::to_json() const {
  return json{{"source_type", source_type},
              {"target_type", target_type},
              {"layers", layers},
              {"hidden_dim", hidden_dim},
              {"message_mode", message_mode},
              {"activation", activation},
              {"sharing", sharing},
              {"lr", lr},
              {"epochs", epochs},
              {"lambda", lambda},
              {"loss_ktn", loss_ktn},
              {"loss_cl", loss_cl},
              {"metapath_max_len", metapath_max_len},
              {"seed", seed},
              {"deterministic", deterministic},
              {"eval_every", eval_every},
              {"grad_norms_every", grad_norms_every},
              {"train_frac", train_frac},
              {"label_source", label_source},
              {"ktn_normalize_adjacency", ktn_normalize_adjacency},
              {"ep_seed_source", ep_seed_source},
              {"batch_nodes", batch_nodes},
              {"sweep_seeds", sweep_seeds},
              {"sweep_values", sweep_values},
              {"jobs", jobs}};
}

void ExperimentConfig::apply(const json& overrides) {
  for (const auto& [key, value] : overrides.items()) {
    if (key == "source_type") source_type = value.get<std::string>();
    else if (key == "target_type") target_type = value.get<std::string>();
    else if (key == "layers") layers = value.get<int>();
    else if (key == "hidden_dim") hidden_dim = value.get<int>();
    else if (key == "message_mode") message_mode = value.get<std::string>();
    else if (key == "activation") activation = value.get<std::string>();
    else if (key == "sharing") sharing = value.get<std::string>();
    else if (key == "lr") lr = value.get<double>();
    else if (key == "epochs") epochs = value.get<int>();
    else if (key == "lambda") lambda = value.get<double>();
    else if (key == "loss_ktn") loss_ktn = value.get<std::string>();
    else if (key == "loss_cl") loss_cl = value.get<std::string>();
    else if (key == "metapath_max_len") metapath_max_len = value.get<int>();
    else if (key == "seed") seed = value.get<std::uint64_t>();
    else if (key == "deterministic") deterministic = value.get<bool>();
    else if (key == "eval_every") eval_every = value.get<int>();
    else if (key == "grad_norms_every") grad_norms_every = value.get<int>();
    else if (key == "train_frac") train_frac = value.get<double>();
    else if (key == "label_source") label_source = value.get<std::string>();
    else if (key == "ktn_normalize_adjacency") ktn_normalize_adjacency = value.get<bool>();
    else if (key == "ep_seed_source") ep_seed_source = value.get<std::string>();
    else if (key == "batch_nodes") batch_nodes = value.get<int>();
    else if (key == "sweep_seeds") sweep_seeds = value.get<int>();
    else if (key == "sweep_values") sweep_values = value.get<std::vector<double>>();
    else if (key == "jobs") jobs = value.get<int>();
    else throw Error("experiment config: unknown field '" + key + "'");
  }
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  ExperimentConfig cfg;
  cfg.apply(j);
  return cfg;
}

HgnnConfig ExperimentConfig::hgnn_config(int num_classes) const {
  HgnnConfig c;
  c.layers = layers;
  c.hidden_dim = hidden_dim;
  c.message_mode = message_mode_from_string(message_mode);
  c.activation = activation_from_string(activation);
  c.sharing = sharing_from_string(sharing);
  c.num_classes = num_classes;
  return c;
}

TrainOptions ExperimentConfig::train_options(const Eigen::MatrixXd& y_source) const {
  TrainOptions o;
  o.epochs = epochs;
  o.lr = lr;
  o.eval_every = eval_every;
  o.grad_norms_every = grad_norms_every;
  o.batch_nodes = batch_nodes;
  o.seed = seed;
  if (loss_ktn == "mse") o.ktn_loss = KtnLossForm::mse;
  else if (loss_ktn == "frobenius") o.ktn_loss = KtnLossForm::frobenius;
  else throw Error("experiment config: loss_ktn must be 'mse' or 'frobenius'");
  if (loss_cl == "softmax") {
    o.cl_loss = ClassLossForm::softmax;
  } else if (loss_cl == "sigmoid") {
    o.cl_loss = ClassLossForm::sigmoid;
  } else if (loss_cl == "auto") {
    // single-label rows -> softmax; anything multi-hot -> sigmoid
    o.cl_loss = ClassLossForm::softmax;
    for (Eigen::Index i = 0; i < y_source.rows(); ++i) {
      double s = y_source.row(i).sum();
      if (s > 0.0 && std::abs(s - 1.0) > 1e-9) {
        o.cl_loss = ClassLossForm::sigmoid;
        break;
      }
    }
  } else {
    throw Error("experiment config: loss_cl must be 'auto', 'softmax' or 'sigmoid'");
  }
  return o;
}

ResolvedTask resolve_task(const HeteroGraph& graph, const std::string& graph_dir,
                          const ExperimentConfig& cfg) {
  ResolvedTask task;
  task.source_type = graph.schema.type_id(cfg.source_type);
  task.target_type = graph.schema.type_id(cfg.target_type);

  std::vector<std::vector<std::pair<int, int>>> truth;
  if (cfg.label_source != "labels" && !graph_dir.empty())
    truth = load_truth(graph.schema, graph_dir);
  if (cfg.label_source == "groups" && truth.empty())
    throw Error("label_source=groups but no truth_<type>.csv files in '" + graph_dir + "'");

  if (!truth.empty()) {
    int num_groups = 0;
    for (const auto& rows : truth)
      for (const auto& [cluster, group] : rows) num_groups = std::max(num_groups, group + 1);
    task.num_classes = num_groups;
    auto onehot = [&](int t) {
      Eigen::MatrixXd y = Eigen::MatrixXd::Zero(graph.counts[t], num_groups);
      if (static_cast<int>(truth[t].size()) != graph.counts[t])
        throw Error("truth file for type '" + graph.schema.type(t).name +
                    "' does not match the node count");
      for (int i = 0; i < graph.counts[t]; ++i) y(i, truth[t][i].second) = 1.0;
      return y;
    };
    task.y_source = onehot(task.source_type);
    task.y_target = onehot(task.target_type);
    return task;
  }

  if (!graph.has_labels(task.source_type))
    throw Error("type '" + cfg.source_type + "' has no labels to train on");
  task.y_source = graph.labels[task.source_type];
  task.num_classes = static_cast<int>(task.y_source.cols());
  if (graph.has_labels(task.target_type) &&
      graph.labels[task.target_type].cols() == task.y_source.cols())
    task.y_target = graph.labels[task.target_type];
  return task;
}

std::vector<MetaPath> select_metapaths(const Schema& schema, int target_type, int source_type,
                                       int metapath_max_len) {
  if (metapath_max_len > 0)
    return enumerate_metapaths(schema, target_type, source_type, metapath_max_len);
  int dist = schema_distance(schema, target_type, source_type);
  if (dist < 1) return {};
  return enumerate_metapaths(schema, target_type, source_type, dist);
}

namespace {

void write_training_log(const std::string& path, const TrainLog& log) {
  std::ostringstream out;
  out << "epoch,loss_cl,loss_ktn,loss_total,src_metric,tgt_metric\n";
  for (const auto& r : log.rows)
    out << r.epoch << ',' << format_double(r.loss_cl) << ',' << format_double(r.loss_ktn) << ','
        << format_double(r.loss_total) << ',' << format_double(r.src_metric) << ','
        << format_double(r.tgt_metric) << '\n';
  write_text_file(path, out.str());
}

void write_grad_norms(const std::string& path, const TrainLog& log) {
  std::ostringstream out;
  out << "epoch";
  if (!log.grad_norms.empty())
    for (const auto& [name, norm] : log.grad_norms.front().second) out << ',' << name;
  out << '\n';
  for (const auto& [epoch, norms] : log.grad_norms) {
    out << epoch;
    for (const auto& [name, norm] : norms) out << ',' << format_double(norm);
    out << '\n';
  }
  write_text_file(path, out.str());
}

void write_run_json(const std::string& out_dir, const std::string& command, const json& extra,
                    const ExperimentConfig* cfg) {
  json j;
  j["command"] = command;
  if (cfg) j["config"] = cfg->to_json();
  for (const auto& [k, v] : extra.items()) j[k] = v;
  write_text_file((fs::path(out_dir) / "run.json").string(), j.dump(2) + "\n");
}

void require_valid(const HeteroGraph& graph, const std::string& where) {
  std::vector<Violation> v = validate(graph);
  if (v.empty()) return;
  std::string msg = where + ": graph fails validation:";
  for (std::size_t i = 0; i < v.size() && i < 5; ++i) msg += "\n  " + v[i].str();
  if (v.size() > 5) msg += "\n  ... (" + std::to_string(v.size() - 5) + " more)";
  throw Error(msg);
}

json metric_block(const Eigen::MatrixXd& scores, const Eigen::MatrixXd& labels) {
  json j;
  j["accuracy"] = accuracy(scores, labels);
  MetricValue n = ndcg(scores, labels);
  MetricValue m = mrr(scores, labels);
  j["ndcg"] = n.value;
  j["mrr"] = m.value;
  j["rows_evaluated"] = n.evaluated;
  j["rows_skipped"] = n.skipped;
  return j;
}

json final_metrics(const HgnnModel& model, const KtnMapper& mapper, const HeteroGraph& graph,
                   const GraphOperators& ops, const TransferTask& task) {
  ad::Tape tape;
  ForwardResult fwd = hgnn_forward(tape, model, graph, ops);
  ad::Tensor src_logits = hgnn_classify(tape, model, fwd.final()[mapper.source_type()]);
  const std::vector<int>& rows = task.test_rows.empty() ? task.train_rows : task.test_rows;

  json j;
  j["source"] = metric_block(take_rows(src_logits.value(), rows), take_rows(task.y_source, rows));
  if (task.y_target.size() > 0) {
    ad::Tensor tgt_logits = predict_target(tape, model, mapper, graph, ops);
    j["target"] = metric_block(tgt_logits.value(), task.y_target);
  } else {
    j["target"] = nullptr;
  }
  return j;
}

}  // namespace

ToyOutcome run_toy_experiment(const SynthResult& synth, const ExperimentConfig& cfg) {
  const HeteroGraph& graph = synth.graph;
  GraphOperators ops = build_operators(graph);
  const int s = graph.schema.type_id(cfg.source_type);
  const int t = graph.schema.type_id(cfg.target_type);

  ResolvedTask rt;
  rt.source_type = s;
  rt.target_type = t;
  rt.num_classes = synth.num_groups;
  rt.y_source = synth.group_onehot(s);
  rt.y_target = synth.group_onehot(t);
  TransferTask task = make_task(rt.y_source, rt.y_target, cfg.train_frac, cfg.seed);

  std::vector<MetaPath> paths = select_metapaths(graph.schema, t, s, cfg.metapath_max_len);
  TrainOptions opts = cfg.train_options(rt.y_source);

  ToyOutcome out;

  // Source-only phase: lambda = 0 keeps the transfer path untrained.
  HgnnModel model = HgnnModel::init(graph.schema, cfg.hgnn_config(rt.num_classes), cfg.seed);
  KtnMapper mapper = KtnMapper::init(graph.schema, s, t, paths, cfg.hidden_dim, cfg.seed, 0.0);
  mapper.set_normalize_adjacency(cfg.ktn_normalize_adjacency);
  out.source_only_log = train(model, mapper, graph, ops, task, opts);
  out.src_acc = out.source_only_log.final_src_metric;

  {
    ad::Tape tape;
    ForwardResult fwd = hgnn_forward(tape, model, graph, ops);
    ad::Tensor tgt_logits = hgnn_classify(tape, model, fwd.final()[t]);
    out.tgt_org_path_acc = accuracy(tgt_logits.value(), rt.y_target);

    ad::Tensor cross = hgnn_forward_as(tape, model, graph, ops, t, s);
    ad::Tensor cross_logits = hgnn_classify(tape, model, cross);
    out.tgt_src_path_acc = accuracy(cross_logits.value(), rt.y_target);

    TheoryOperators theory = build_theory_map_feature_only(model, s, t, cfg.layers);
    Eigen::MatrixXd mapped = theoretical_transfer(fwd.final()[t].value(), theory);
    ad::Tensor mapped_logits = hgnn_classify(tape, model, tape.constant(mapped));
    out.theory_acc = accuracy(mapped_logits.value(), rt.y_target);
  }

  // Joint phase: fresh model from the same seed, trainable mapper.
  HgnnModel joint_model = HgnnModel::init(graph.schema, cfg.hgnn_config(rt.num_classes), cfg.seed);
  KtnMapper joint_mapper =
      KtnMapper::init(graph.schema, s, t, paths, cfg.hidden_dim, cfg.seed, cfg.lambda);
  joint_mapper.set_normalize_adjacency(cfg.ktn_normalize_adjacency);
  out.joint_log = train(joint_model, joint_mapper, graph, ops, task, opts);
  out.trained_ktn_acc = out.joint_log.final_tgt_metric;
  out.trained_ktn_src_acc = out.joint_log.final_src_metric;
  return out;
}

namespace {

struct PointResult {
  double ktn_src = 0.0, ktn_tgt = 0.0;
  double ep_src = 0.0, ep_tgt = 0.0;
  double lp_src = 0.0, lp_tgt = 0.0;
  long ktn_ms = 0, ep_ms = 0, lp_ms = 0;
};

Eigen::MatrixXd linear_classifier_logits(const Eigen::MatrixXd& x_train,
                                         const Eigen::MatrixXd& y_train,
                                         const Eigen::MatrixXd& x_eval, const TrainOptions& opts,
                                         std::uint64_t seed) {
  Rng rng(seed);
  ad::Param w("w", glorot_uniform(static_cast<int>(x_train.cols()),
                                  static_cast<int>(y_train.cols()), rng));
  ad::Param b("b", Eigen::MatrixXd::Zero(1, y_train.cols()));
  std::vector<ad::Param*> params = {&w, &b};
  for (int epoch = 0; epoch < opts.epochs; ++epoch) {
    ad::Tape tape;
    ad::Tensor logits =
        tape.bias_add(tape.matmul(tape.constant(x_train), tape.leaf(w)), tape.leaf(b));
    ad::Tensor loss = opts.cl_loss == ClassLossForm::softmax
                          ? tape.softmax_xent(logits, y_train)
                          : tape.sigmoid_bce(logits, y_train);
    ad::zero_grads(params);
    tape.backward(loss);
    ad::adam_step(params, opts.lr, opts.adam_beta1, opts.adam_beta2, opts.adam_eps, epoch + 1);
  }
  return ((x_eval * w.value).rowwise() + b.value.row(0)).eval();
}

PointResult run_point(const SynthResult& synth, const ExperimentConfig& cfg) {
  const HeteroGraph& graph = synth.graph;
  GraphOperators ops = build_operators(graph);
  const int s = graph.schema.type_id(cfg.source_type);
  const int t = graph.schema.type_id(cfg.target_type);

  Eigen::MatrixXd y_source = synth.group_onehot(s);
  Eigen::MatrixXd y_target = synth.group_onehot(t);
  TransferTask task = make_task(y_source, y_target, cfg.train_frac, cfg.seed);
  const std::vector<int>& test_rows = task.test_rows.empty() ? task.train_rows : task.test_rows;
  std::vector<MetaPath> paths =
      select_metapaths(graph.schema, t, s, cfg.metapath_max_len);
  TrainOptions opts = cfg.train_options(y_source);
  opts.eval_every = 0;       // final metrics only
  opts.grad_norms_every = 0;

  PointResult out;

  {  // jointly trained KTN
    auto start = std::chrono::steady_clock::now();
    HgnnModel model =
        HgnnModel::init(graph.schema, cfg.hgnn_config(synth.num_groups), cfg.seed);
    KtnMapper mapper =
        KtnMapper::init(graph.schema, s, t, paths, cfg.hidden_dim, cfg.seed, cfg.lambda);
    mapper.set_normalize_adjacency(cfg.ktn_normalize_adjacency);
    TrainLog log = train(model, mapper, graph, ops, task, opts);
    out.ktn_src = log.final_src_metric;
    out.ktn_tgt = log.final_tgt_metric;
    out.ktn_ms = elapsed_ms(start);
  }

  {  // EP on a source-only model
    auto start = std::chrono::steady_clock::now();
    HgnnModel model =
        HgnnModel::init(graph.schema, cfg.hgnn_config(synth.num_groups), cfg.seed);
    KtnMapper mapper = KtnMapper::init(graph.schema, s, t, paths, cfg.hidden_dim, cfg.seed, 0.0);
    TrainLog log = train(model, mapper, graph, ops, task, opts);
    out.ep_src = log.final_src_metric;

    int iters = std::max(schema_distance(graph.schema, s, t), 0) + 1;
    ad::Tape tape;
    ForwardResult fwd = hgnn_forward(tape, model, graph, ops);
    if (cfg.ep_seed_source == "embeddings") {
      Eigen::MatrixXd z_t =
          embedding_propagation(graph, ops, s, t, fwd.final()[s].value(), iters);
      ad::Tensor logits = hgnn_classify(tape, model, tape.constant(z_t));
      out.ep_tgt = accuracy(logits.value(), y_target);
    } else if (cfg.ep_seed_source == "features") {
      Eigen::MatrixXd z_t = embedding_propagation(graph, ops, s, t, graph.features[s], iters);
      Eigen::MatrixXd logits = linear_classifier_logits(
          take_rows(graph.features[s], task.train_rows), take_rows(y_source, task.train_rows),
          z_t, opts, cfg.seed);
      out.ep_tgt = accuracy(logits, y_target);
    } else {
      throw Error("experiment config: ep_seed_source must be 'embeddings' or 'features'");
    }
    out.ep_ms = elapsed_ms(start);
  }

  {  // LP
    auto start = std::chrono::steady_clock::now();
    int iters = std::max(schema_distance(graph.schema, s, t), 0) + 1;
    LpResult lp = label_propagation(graph, ops, s, y_source, task.train_rows, iters, true);
    out.lp_src = accuracy(take_rows(lp.dist[s], test_rows), take_rows(y_source, test_rows));
    out.lp_tgt = accuracy(lp.dist[t], y_target);
    out.lp_ms = elapsed_ms(start);
  }
  return out;
}

}  // namespace

std::vector<SweepRow> run_sweep(const std::string& scenario, const std::string& pair,
                                const ExperimentConfig& cfg) {
  std::vector<SynthConfig> grid = sensitivity_grid(scenario, pair, cfg.sweep_values);

  struct Point {
    double sigma;
    std::uint64_t seed;
    SynthConfig synth;
  };
  std::vector<Point> points;
  for (std::size_t v = 0; v < grid.size(); ++v) {
    for (int k = 0; k < cfg.sweep_seeds; ++k) {
      Point p{cfg.sweep_values[v], cfg.seed + static_cast<std::uint64_t>(k), grid[v]};
      p.synth.seed = p.seed;
      points.push_back(std::move(p));
    }
  }

  // Points run in parallel; each one is internally single-threaded and
  // seeded, so the sorted rows do not depend on the job count.
  int jobs = cfg.jobs > 0 ? cfg.jobs
                          : static_cast<int>(std::min<std::size_t>(
                                std::max(1u, std::thread::hardware_concurrency()), points.size()));

  std::vector<SweepRow> rows(points.size() * 3);
  std::atomic<std::size_t> next{0};
  std::mutex err_mutex;
  std::string first_error;

  auto worker = [&]() {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= points.size()) return;
      try {
        ExperimentConfig point_cfg = cfg;
        point_cfg.seed = points[i].seed;
        SynthResult synth = generate(points[i].synth);
        PointResult r = run_point(synth, point_cfg);
        auto row = [&](const std::string& method, double src, double tgt, long ms) {
          return SweepRow{scenario, pair, points[i].sigma, points[i].seed, method, src, tgt, ms};
        };
        rows[i * 3 + 0] = row("KTN", r.ktn_src, r.ktn_tgt, r.ktn_ms);
        rows[i * 3 + 1] = row("EP", r.ep_src, r.ep_tgt, r.ep_ms);
        rows[i * 3 + 2] = row("LP", r.lp_src, r.lp_tgt, r.lp_ms);
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (first_error.empty()) first_error = e.what();
      }
    }
  };

  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    for (int i = 0; i < jobs; ++i) threads.emplace_back(worker);
    for (auto& th : threads) th.join();
  }
  if (!first_error.empty()) throw Error("sweep point failed: " + first_error);

  std::stable_sort(rows.begin(), rows.end(), [](const SweepRow& a, const SweepRow& b) {
    if (a.sigma != b.sigma) return a.sigma < b.sigma;
    if (a.seed != b.seed) return a.seed < b.seed;
    return a.method < b.method;
  });
  return rows;
}

void cmd_generate(const std::string& config_json, const std::string& out_dir) {
  SynthConfig config = SynthConfig::from_json(parse_json_text(config_json, "generator config"));
  SynthResult result = generate(config);
  fs::create_directories(out_dir);
  save_synth(result, out_dir);
  json extra;
  extra["generator"] = config.to_json();
  write_run_json(out_dir, "generate", extra, nullptr);
}

void cmd_train(const std::string& graph_dir, const std::string& config_json,
               const std::string& out_dir) {
  ExperimentConfig cfg =
      ExperimentConfig::from_json(parse_json_text(config_json, "experiment config"));
  HeteroGraph graph = load_graph(graph_dir);
  require_valid(graph, graph_dir);
  GraphOperators ops = build_operators(graph);

  ResolvedTask rt = resolve_task(graph, graph_dir, cfg);
  TransferTask task = make_task(rt.y_source, rt.y_target, cfg.train_frac, cfg.seed);
  std::vector<MetaPath> paths =
      select_metapaths(graph.schema, rt.target_type, rt.source_type, cfg.metapath_max_len);

  HgnnModel model = HgnnModel::init(graph.schema, cfg.hgnn_config(rt.num_classes), cfg.seed);
  KtnMapper mapper = KtnMapper::init(graph.schema, rt.source_type, rt.target_type, paths,
                                     cfg.hidden_dim, cfg.seed, cfg.lambda);
  mapper.set_normalize_adjacency(cfg.ktn_normalize_adjacency);

  TrainLog log = train(model, mapper, graph, ops, task, cfg.train_options(rt.y_source));

  fs::create_directories(out_dir);
  write_training_log((fs::path(out_dir) / "training_log.csv").string(), log);
  write_grad_norms((fs::path(out_dir) / "grad_norms.csv").string(), log);

  json checkpoint;
  checkpoint["format"] = "ktnlab-checkpoint-v1";
  checkpoint["experiment"] = cfg.to_json();
  checkpoint["model"] = model.to_json();
  checkpoint["mapper"] = mapper.to_json(graph.schema);
  write_text_file((fs::path(out_dir) / "checkpoint.json").string(), checkpoint.dump() + "\n");

  json metrics = final_metrics(model, mapper, graph, ops, task);
  write_text_file((fs::path(out_dir) / "metrics.json").string(), metrics.dump(2) + "\n");

  json extra;
  extra["graph_dir"] = graph_dir;
  write_run_json(out_dir, "train", extra, &cfg);
}

json cmd_eval(const std::string& checkpoint_path, const std::string& graph_dir) {
  json checkpoint = parse_json_text(read_text_file(checkpoint_path), checkpoint_path);
  if (checkpoint.value("format", "") != "ktnlab-checkpoint-v1")
    throw Error(checkpoint_path + ": not a ktnlab checkpoint");
  ExperimentConfig cfg = ExperimentConfig::from_json(checkpoint.at("experiment"));
  HgnnModel model = HgnnModel::from_json(checkpoint.at("model"));
  KtnMapper mapper = KtnMapper::from_json(checkpoint.at("mapper"), model.schema());

  HeteroGraph graph = load_graph(graph_dir);
  require_valid(graph, graph_dir);
  if (!(graph.schema == model.schema()))
    throw Error("checkpoint schema does not match the graph schema");
  GraphOperators ops = build_operators(graph);

  ResolvedTask rt = resolve_task(graph, graph_dir, cfg);
  TransferTask task = make_task(rt.y_source, rt.y_target, cfg.train_frac, cfg.seed);

  json metrics = final_metrics(model, mapper, graph, ops, task);
  if (mapper.paths().empty())
    metrics["warnings"] = json::array({"mapper has no meta-paths; target logits are bias-only"});
  return metrics;
}

void cmd_toy(const std::string& out_dir, const std::string& overrides_json) {
  ExperimentConfig cfg;
  cfg.message_mode = "no_skip";
  cfg.activation = "identity";
  cfg.apply(parse_json_text(overrides_json, "toy overrides"));

  SynthConfig synth_cfg = toy_config();
  synth_cfg.seed = cfg.seed;
  SynthResult synth = generate(synth_cfg);

  fs::create_directories(out_dir);
  save_synth(synth, (fs::path(out_dir) / "graph").string());

  ToyOutcome outcome = run_toy_experiment(synth, cfg);

  write_training_log((fs::path(out_dir) / "training_log.csv").string(), outcome.source_only_log);
  write_grad_norms((fs::path(out_dir) / "grad_norms.csv").string(), outcome.source_only_log);
  write_training_log((fs::path(out_dir) / "training_log_joint.csv").string(), outcome.joint_log);

  std::ostringstream results;
  results << "condition,accuracy\n";
  results << "source," << format_double(outcome.src_acc) << '\n';
  results << "target-src-path," << format_double(outcome.tgt_src_path_acc) << '\n';
  results << "target-org-path," << format_double(outcome.tgt_org_path_acc) << '\n';
  results << "theoretical-ktn," << format_double(outcome.theory_acc) << '\n';
  results << "trained-ktn," << format_double(outcome.trained_ktn_acc) << '\n';
  results << "trained-ktn-source," << format_double(outcome.trained_ktn_src_acc) << '\n';
  write_text_file((fs::path(out_dir) / "results.csv").string(), results.str());

  json extra;
  extra["generator"] = synth_cfg.to_json();
  write_run_json(out_dir, "toy", extra, &cfg);
}

void cmd_sweep(const std::string& scenario, const std::string& pair, const std::string& out_dir,
               const std::string& overrides_json) {
  ExperimentConfig cfg;
  cfg.apply(parse_json_text(overrides_json, "sweep overrides"));
  std::vector<SweepRow> rows = run_sweep(scenario, pair, cfg);

  fs::create_directories(out_dir);
  std::ostringstream out;
  out << "scenario,pair,sigma,seed,method,src_acc,tgt_acc,wall_ms\n";
  for (const auto& r : rows)
    out << r.scenario << ',' << r.pair << ',' << format_double(r.sigma) << ',' << r.seed << ','
        << r.method << ',' << format_double(r.src_acc) << ',' << format_double(r.tgt_acc) << ','
        << (cfg.deterministic ? 0 : r.wall_ms) << '\n';  // timings break byte-identity
  write_text_file((fs::path(out_dir) / "summary.csv").string(), out.str());

  json extra;
  extra["scenario"] = scenario;
  extra["pair"] = pair;
  write_run_json(out_dir, "sweep", extra, &cfg);
}

void cmd_baseline(const std::string& method, const std::string& graph_dir,
                  const std::string& config_json, const std::string& out_dir) {
  if (method != "lp" && method != "ep")
    throw Error("unknown baseline method '" + method + "' (expected 'lp' or 'ep')");
  ExperimentConfig cfg =
      ExperimentConfig::from_json(parse_json_text(config_json, "experiment config"));
  HeteroGraph graph = load_graph(graph_dir);
  require_valid(graph, graph_dir);
  GraphOperators ops = build_operators(graph);

  ResolvedTask rt = resolve_task(graph, graph_dir, cfg);
  TransferTask task = make_task(rt.y_source, rt.y_target, cfg.train_frac, cfg.seed);
  const std::vector<int>& test_rows = task.test_rows.empty() ? task.train_rows : task.test_rows;
  const int iters =
      std::max(schema_distance(graph.schema, rt.source_type, rt.target_type), 0) + 1;

  auto start = std::chrono::steady_clock::now();
  json metrics;
  if (method == "lp") {
    LpResult lp =
        label_propagation(graph, ops, rt.source_type, rt.y_source, task.train_rows, iters, true);
    metrics["source"] = metric_block(take_rows(lp.dist[rt.source_type], test_rows),
                                     take_rows(rt.y_source, test_rows));
    metrics["target"] = rt.y_target.size() > 0
                            ? metric_block(lp.dist[rt.target_type], rt.y_target)
                            : json(nullptr);
  } else {
    TrainOptions opts = cfg.train_options(rt.y_source);
    opts.eval_every = 0;
    opts.grad_norms_every = 0;
    HgnnModel model = HgnnModel::init(graph.schema, cfg.hgnn_config(rt.num_classes), cfg.seed);
    KtnMapper mapper = KtnMapper::init(graph.schema, rt.source_type, rt.target_type, {},
                                       cfg.hidden_dim, cfg.seed, 0.0);
    TrainLog log = train(model, mapper, graph, ops, task, opts);

    ad::Tape tape;
    ForwardResult fwd = hgnn_forward(tape, model, graph, ops);
    ad::Tensor src_logits = hgnn_classify(tape, model, fwd.final()[rt.source_type]);
    metrics["source"] = metric_block(take_rows(src_logits.value(), test_rows),
                                     take_rows(rt.y_source, test_rows));
    Eigen::MatrixXd z_t = embedding_propagation(
        graph, ops, rt.source_type, rt.target_type,
        cfg.ep_seed_source == "features" ? graph.features[rt.source_type]
                                         : fwd.final()[rt.source_type].value(),
        iters);
    if (cfg.ep_seed_source == "features") {
      Eigen::MatrixXd logits = linear_classifier_logits(
          take_rows(graph.features[rt.source_type], task.train_rows),
          take_rows(rt.y_source, task.train_rows), z_t, opts, cfg.seed);
      metrics["target"] =
          rt.y_target.size() > 0 ? metric_block(logits, rt.y_target) : json(nullptr);
    } else {
      ad::Tensor logits = hgnn_classify(tape, model, tape.constant(z_t));
      metrics["target"] =
          rt.y_target.size() > 0 ? metric_block(logits.value(), rt.y_target) : json(nullptr);
    }
  }
  metrics["method"] = method;
  metrics["wall_ms"] = elapsed_ms(start);

  fs::create_directories(out_dir);
  write_text_file((fs::path(out_dir) / "metrics.json").string(), metrics.dump(2) + "\n");
  json extra;
  extra["graph_dir"] = graph_dir;
  extra["method"] = method;
  write_run_json(out_dir, "baseline", extra, &cfg);
}

}  // namespace ktn
