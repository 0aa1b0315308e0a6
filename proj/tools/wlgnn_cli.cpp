// wlgnn command-line tool: tuple inspection, WL comparison, training,
// evaluation and prediction.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "wlgnn/wlgnn.hpp"

namespace fs = std::filesystem;
using namespace wlgnn;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 2;
constexpr int kExitDiverged = 3;

std::ifstream open_input(const std::string& path, const std::string& what) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + what + " '" + path + "'");
  return in;
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  return out;
}

/// Wraps errors from a file so the message names it.
template <typename Fn>
auto with_path(const std::string& path, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const ParseError& e) {
    throw ConfigError(path + ": " + e.what());
  } catch (const ValidationError& e) {
    throw ValidationError(e.kind(), path + ": " + e.what());
  }
}

DirectedGraph read_graph(const std::string& path) {
  auto in = open_input(path, "edge list");
  return with_path(path, [&] { return load_edge_list(in); });
}

FeatureMatrix read_embeddings(const std::string& path, const DirectedGraph& g) {
  auto in = open_input(path, "embedding file");
  return with_path(path, [&] { return load_embeddings(in, g); });
}

std::vector<PairRecord> read_pairs(const std::string& path, const DirectedGraph& g) {
  auto in = open_input(path, "pair file");
  return with_path(path, [&] { return load_pairs(in, g); });
}

Model read_checkpoint(const std::string& path) {
  auto in = open_input(path, "checkpoint");
  try {
    return load_checkpoint(in);
  } catch (const ParseError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

void require_input_width(const Model& model, const FeatureMatrix& features) {
  const auto expected = model.config.gnn.input_dim;
  if (features.cols() != expected) {
    throw ShapeError("dimension mismatch: embeddings have width " +
                     std::to_string(features.cols()) + " but the checkpoint expects " +
                     std::to_string(expected));
  }
}

// ---------------------------------------------------------------------------
// `key = value` config files. Values become option defaults, so flags on the
// command line still win.

struct ConfigFile {
  std::string path;
  std::map<std::string, std::string> values;
};

std::optional<ConfigFile> find_config(const std::vector<std::string>& args) {
  for (std::size_t i = 0; i < args.size(); ++i) {
    std::string path;
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[i + 1];
    } else if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
    } else {
      continue;
    }
    auto in = open_input(path, "config file");
    ConfigFile cfg{path, {}};
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
      ++line_no;
      const auto line = detail::strip_cr(raw);
      if (detail::is_blank_or_comment(line)) continue;
      const auto eq = line.find('=');
      auto trim = [](std::string_view s) {
        const auto b = s.find_first_not_of(" \t");
        const auto e = s.find_last_not_of(" \t");
        return b == std::string_view::npos ? std::string() : std::string(s.substr(b, e - b + 1));
      };
      if (eq == std::string_view::npos) {
        throw ConfigError(path + ": line " + std::to_string(line_no) + ": expected 'key = value'");
      }
      auto key = trim(line.substr(0, eq));
      std::replace(key.begin(), key.end(), '_', '-');
      cfg.values[key] = trim(line.substr(eq + 1));
    }
    return cfg;
  }
  return std::nullopt;
}

void apply_config(CLI::App& sub, const ConfigFile& cfg) {
  for (const auto& [key, value] : cfg.values) {
    CLI::Option* opt = nullptr;
    try {
      opt = sub.get_option("--" + key);
    } catch (const CLI::OptionNotFound&) {
      throw ConfigError(cfg.path + ": unknown key '" + key + "' for '" + sub.get_name() + "'");
    }
    try {
      opt->default_val(value);
    } catch (const CLI::Error& e) {
      throw ConfigError(cfg.path + ": bad value for '" + key + "': " + e.what());
    }
  }
}

// ---------------------------------------------------------------------------
// Subcommands.

struct TuplesArgs {
  std::string edges;
  std::size_t k = 2;
  std::string out_dir;
};

int cmd_tuples(const TuplesArgs& a) {
  const auto g = read_graph(a.edges);
  const auto tuples = enumerate_tuples(g, a.k);
  const auto pgs = build_position_graphs(g, tuples);
  std::cout << "tuples=" << tuples.size() << '\n';
  for (const auto& pg : pgs) std::cout << 'G' << pg.position << " arcs=" << pg.arcs.size() << '\n';
  if (!a.out_dir.empty()) {
    fs::create_directories(a.out_dir);
    auto out = open_output(fs::path(a.out_dir) / "tuples.tsv");
    write_tuple_dump(out, tuples, g);
    for (const auto& pg : pgs) {
      auto arcs = open_output(fs::path(a.out_dir) / ("G" + std::to_string(pg.position) + ".tsv"));
      write_position_graph_dump(arcs, pg);
    }
  }
  return kExitOk;
}

struct WlArgs {
  std::string graph1;
  std::string graph2;
  std::size_t k = 2;
  std::size_t max_iters = 100;
  std::string mode = "full";
  std::string color_dump;
};

int cmd_wl(const WlArgs& a) {
  const auto g1 = read_graph(a.graph1);
  const auto g2 = read_graph(a.graph2);
  const auto mode = a.mode == "restricted" ? WlMode::restricted : WlMode::full;
  const auto verdict = compare_graphs(g1, g2, a.k, a.max_iters, mode);
  std::cout << (verdict.distinguished ? "DISTINGUISHED" : "NOT-DISTINGUISHED")
            << " rounds=" << verdict.rounds << '\n';
  if (!a.color_dump.empty()) {
    auto out = open_output(a.color_dump);
    write_color_dump(out, wl_refine(g1, a.k, a.max_iters, mode));
  }
  return kExitOk;
}

struct TrainArgs {
  std::string edges;
  std::string embeddings;
  std::string out_dir = "wlgnn-out";
  std::string preset;
  ModelConfig model;
  TrainConfig train;
  double train_ratio = 0.8;
};

int cmd_train(const TrainArgs& a) {
  const auto g = read_graph(a.edges);
  const auto features = read_embeddings(a.embeddings, g);
  if (g.edge_count() == 0) throw ConfigError("edge list has no edges to learn from");

  ModelConfig mc = a.model;
  mc.gnn.input_dim = features.cols();
  const auto pairs = build_pair_set(g, g.edges(), a.train_ratio, a.train.negative_ratio,
                                    a.train.seed, a.train.reverse_share);
  const auto bundle = make_bundle(g, mc.gnn.k);
  std::cerr << "nodes=" << g.node_count() << " edges=" << g.edge_count()
            << " tuples=" << bundle.tuples.size() << " train_pairs=" << pairs.count(Split::train)
            << " test_pairs=" << pairs.count(Split::test) << " batch=" << a.train.batch_size << '\n';

  const std::size_t report_every = std::max<std::size_t>(1, a.train.epochs / 10);
  const auto result = train(bundle, features, pairs, mc, a.train, [&](std::size_t e, double loss) {
    if ((e + 1) % report_every == 0) {
      std::fprintf(stderr, "epoch %zu loss %.6f\n", e + 1, loss);
    }
  });

  fs::create_directories(a.out_dir);
  const fs::path dir(a.out_dir);
  {
    auto out = open_output(dir / "model.ckpt");
    save_checkpoint(out, result.model);
  }
  {
    auto out = open_output(dir / "loss.csv");
    write_loss_history(out, result.epoch_loss);
  }
  {
    auto out = open_output(dir / "split.tsv");
    for (const auto& p : pairs.pairs) {
      out << g.node_ids()[p.source] << '\t' << g.node_ids()[p.target] << '\t' << p.label << '\t'
          << (p.split == Split::train ? "train" : "test") << '\n';
    }
  }
  auto out = open_output(dir / "metrics.tsv");
  write_metrics_header(out);
  for (auto split : {Split::train, Split::test}) {
    const auto subset = pairs.select(split);
    if (subset.empty()) continue;
    const auto m = evaluate(result.model, bundle, features, subset, a.train.threshold,
                            a.train.threads);
    const char* name = split == Split::train ? "train" : "test";
    write_metrics_row(out, name, m);
    std::printf("%s precision=%.6f recall=%.6f f1=%.6f\n", name, m.precision, m.recall, m.f1);
  }
  return kExitOk;
}

struct ModelInputArgs {
  std::string edges;
  std::string embeddings;
  std::string checkpoint;
  std::string pairs;
  std::size_t threads = 1;
};

struct Loaded {
  DirectedGraph graph;
  FeatureMatrix features;
  Model model;
  std::vector<PairRecord> pairs;
};

Loaded load_inputs(const ModelInputArgs& a) {
  Loaded l;
  l.model = read_checkpoint(a.checkpoint);
  l.graph = read_graph(a.edges);
  l.features = read_embeddings(a.embeddings, l.graph);
  require_input_width(l.model, l.features);
  l.pairs = read_pairs(a.pairs, l.graph);
  return l;
}

struct PredictArgs : ModelInputArgs {
  std::string output;
};

int cmd_predict(const PredictArgs& a) {
  const auto in = load_inputs(a);
  std::vector<ScoredPair> scored;
  for (const auto& p : in.pairs) scored.push_back({p.source, p.target});
  std::vector<double> probs;
  if (!scored.empty()) {
    const auto bundle = make_bundle(in.graph, in.model.config.gnn.k);
    probs = predict(in.model, bundle, in.features, scored, a.threads);
  }
  std::ofstream file;
  if (!a.output.empty()) file = open_output(a.output);
  std::ostream& out = a.output.empty() ? std::cout : file;
  char buf[32];
  for (std::size_t i = 0; i < scored.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.6f", probs[i]);
    out << in.graph.node_ids()[scored[i].source] << '\t' << in.graph.node_ids()[scored[i].target]
        << '\t' << buf << '\n';
  }
  return kExitOk;
}

struct EvaluateArgs : ModelInputArgs {
  std::vector<double> thresholds{0.5};
  std::string name = "eval";
};

int cmd_evaluate(const EvaluateArgs& a) {
  const auto in = load_inputs(a);
  std::vector<LabeledPair> labeled;
  for (const auto& p : in.pairs) {
    if (!p.label) throw ValidationError(ValidationKind::bad_pair, a.pairs + ": evaluation needs labels");
    labeled.push_back({p.source, p.target, *p.label, Split::test});
  }
  const auto bundle = make_bundle(in.graph, in.model.config.gnn.k);
  const auto sweep = evaluate_sweep(in.model, bundle, in.features, labeled, a.thresholds, a.threads);
  write_metrics_header(std::cout);
  for (const auto& m : sweep) write_metrics_row(std::cout, a.name, m);
  return kExitOk;
}

void add_model_inputs(CLI::App* sub, ModelInputArgs& a) {
  sub->add_option("--edges", a.edges, "Edge list (source<TAB>target)")->required();
  sub->add_option("--embeddings", a.embeddings, "Embedding file ('N d' header)")->required();
  sub->add_option("--checkpoint", a.checkpoint, "Checkpoint written by 'train'")->required();
  sub->add_option("--pairs", a.pairs, "Pair file (source<TAB>target[<TAB>label])")->required();
  sub->add_option("--threads", a.threads, "Worker threads")->check(CLI::PositiveNumber);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Weisfeiler-Leman guided tuple GNN for directed link prediction"};
  app.require_subcommand(1);
  std::string config_path;

  TuplesArgs tuples_args;
  auto* tuples = app.add_subcommand("tuples", "Enumerate restricted k-tuples and position graphs");
  tuples->add_option("--edges", tuples_args.edges, "Edge list")->required();
  tuples->add_option("--k", tuples_args.k, "Tuple order (1-3)")->capture_default_str();
  tuples->add_option("--out", tuples_args.out_dir, "Directory for tuples.tsv and G<j>.tsv dumps");

  WlArgs wl_args;
  auto* wl = app.add_subcommand("wl", "Compare two graphs with k-WL refinement");
  wl->add_option("graph1", wl_args.graph1, "First edge list")->required();
  wl->add_option("graph2", wl_args.graph2, "Second edge list")->required();
  wl->add_option("--k", wl_args.k, "Tuple order (1-3)")->capture_default_str();
  wl->add_option("--max-iters", wl_args.max_iters, "Refinement round limit")->capture_default_str();
  wl->add_option("--mode", wl_args.mode, "Tuple space: full (all of V^k) or restricted")
      ->check(CLI::IsMember({"full", "restricted"}))
      ->capture_default_str();
  wl->add_option("--color-dump", wl_args.color_dump, "Write the first graph's tuple colors here");

  TrainArgs train_args;
  auto& tc = train_args.train;
  auto& mc = train_args.model;
  auto* train_cmd = app.add_subcommand("train", "Split, sample negatives, train and evaluate");
  train_cmd->add_option("--edges", train_args.edges, "Edge list of prerequisite relations")->required();
  train_cmd->add_option("--embeddings", train_args.embeddings, "Node embedding file")->required();
  train_cmd->add_option("--out", train_args.out_dir, "Output directory")->capture_default_str();
  train_cmd->add_option("--k", mc.gnn.k, "Tuple order (1-3)")->capture_default_str();
  train_cmd->add_option("--layers", mc.gnn.layers, "GNN layers")->capture_default_str();
  train_cmd->add_option("--hidden-dim", mc.gnn.hidden_dim, "Hidden width")->capture_default_str();
  train_cmd->add_option("--output-dim", mc.gnn.output_dim, "Node representation width")->capture_default_str();
  train_cmd->add_option("--encoder-layers", mc.encoder_layers, "Siamese encoder depth")->capture_default_str();
  train_cmd->add_option("--learning-rate,--lr", tc.learning_rate, "Adam learning rate")->capture_default_str();
  train_cmd->add_option("--epochs", tc.epochs, "Training epochs")->capture_default_str();
  auto* batch_opt = train_cmd->add_option("--batch-size", tc.batch_size, "Pairs per step")->capture_default_str();
  train_cmd->add_option("--adam-beta1", tc.adam_beta1)->capture_default_str();
  train_cmd->add_option("--adam-beta2", tc.adam_beta2)->capture_default_str();
  train_cmd->add_option("--adam-eps", tc.adam_eps)->capture_default_str();
  train_cmd->add_option("--seed", tc.seed, "Seed for splits, sampling and initialization")->capture_default_str();
  train_cmd->add_option("--threshold", tc.threshold, "Decision threshold")->capture_default_str();
  train_cmd->add_option("--train-ratio", train_args.train_ratio, "Share of pairs used for training")->capture_default_str();
  train_cmd->add_option("--negative-ratio", tc.negative_ratio, "Negatives per positive")->capture_default_str();
  train_cmd->add_option("--reverse-share", tc.reverse_share, "Share of negatives that are reversed positives")->capture_default_str();
  train_cmd->add_flag("--resample-negatives", tc.resample_negatives, "Redraw train negatives every epoch");
  train_cmd->add_option("--threads", tc.threads, "Worker threads")->check(CLI::PositiveNumber);
  train_cmd->add_option("--dataset-preset", train_args.preset, "Dataset preset (university-courses: batch 512)")
      ->check(CLI::IsMember({"university-courses"}));

  PredictArgs predict_args;
  auto* predict_cmd = app.add_subcommand("predict", "Score pairs with a trained checkpoint");
  add_model_inputs(predict_cmd, predict_args);
  predict_cmd->add_option("--output", predict_args.output, "Output file (default stdout)");

  EvaluateArgs evaluate_args;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Precision/recall/F1 on a labelled pair file");
  add_model_inputs(evaluate_cmd, evaluate_args);
  evaluate_cmd->add_option("--threshold", evaluate_args.thresholds, "Decision threshold(s)");
  evaluate_cmd->add_option("--name", evaluate_args.name, "Dataset column value");

  for (auto* sub : {tuples, wl, train_cmd, predict_cmd, evaluate_cmd}) {
    sub->add_option("--config", config_path, "File of 'key = value' lines; flags override it");
  }

  try {
    std::vector<std::string> args(argv + 1, argv + argc);
    std::set<std::string> config_keys;
    if (auto cfg = find_config(args)) {
      CLI::App* sub = nullptr;
      for (const auto& arg : args) {
        for (auto* candidate : app.get_subcommands({})) {
          if (candidate->get_name() == arg) sub = candidate;
        }
        if (sub) break;
      }
      if (sub) apply_config(*sub, *cfg);
      for (const auto& [key, value] : cfg->values) config_keys.insert(key);
    }

    try {
      app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
      const int code = app.exit(e);
      return code == 0 ? kExitOk : kExitInvalid;
    }

    if (*tuples) return cmd_tuples(tuples_args);
    if (*wl) return cmd_wl(wl_args);
    if (*train_cmd) {
      if (train_args.preset == "university-courses" && batch_opt->count() == 0 &&
          !config_keys.contains("batch-size")) {
        tc.batch_size = 512;
      }
      return cmd_train(train_args);
    }
    if (*predict_cmd) return cmd_predict(predict_args);
    if (*evaluate_cmd) return cmd_evaluate(evaluate_args);
  } catch (const DivergenceError& e) {
    std::cerr << "error: training diverged: " << e.what() << '\n';
    return kExitDiverged;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvalid;
  }
  return kExitInvalid;
}
