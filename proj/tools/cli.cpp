#include "cli.hpp"

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <stdexcept>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "dane/error.hpp"
#include "dane/evaluation.hpp"
#include "dane/graph.hpp"
#include "dane/model.hpp"
#include "dane/run_config.hpp"
#include "dane/synthetic.hpp"
#include "dane/text_format.hpp"
#include "dane/training.hpp"

#ifndef DANE_VERSION
#define DANE_VERSION "0.0.0"
#endif

namespace dane::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::shared_ptr<spdlog::logger> logger() {
  static std::shared_ptr<spdlog::logger> log = [] {
    auto l = spdlog::stderr_color_mt("dane");
    l->set_pattern("[%l] %v");
    const char* level = std::getenv("DANE_LOG_LEVEL");
    l->set_level(level != nullptr ? spdlog::level::from_str(level) : spdlog::level::info);
    return l;
  }();
  return log;
}

// Training hyperparameters as flags; only flags given on the command line
// override the config file.
struct TrainFlags {
  std::map<std::string, std::string> values;
  bool no_activeness = false;
  bool no_temporal = false;
  std::string config_file;

  void attach(CLI::App& app) {
    const std::pair<const char*, const char*> options[] = {
        {"dim", "embedding dimension d"},
        {"layers", "number of aggregation layers L"},
        {"lookback", "lookback window K"},
        {"negatives", "negative samples per positive R"},
        {"batch", "mini-batch size"},
        {"lr", "Adam learning rate"},
        {"epochs", "training epochs"},
        {"seed", "master random seed"},
        {"edge-scope", "training positives: all | new"},
        {"max-neighbors", "cap on neighbors per node (0 = all)"},
        {"fine-tune-steps", "fine-tuning steps on revealed links"},
        {"fine-tune-lr", "fine-tuning learning rate"},
    };
    for (const auto& [name, help] : options) {
      app.add_option(std::string("--") + name, values[name], help);
    }
    app.add_flag("--no-activeness", no_activeness, "disable the activeness gate (w/o-P)");
    app.add_flag("--no-temporal", no_temporal, "disable temporal prediction (w/o-D)");
    app.add_option("--config", config_file, "key=value config file")->check(CLI::ExistingFile);
  }

  TrainConfig resolve(const CLI::App& app) const {
    KeyValues flags;
    for (const auto& [name, value] : values) {
      if (app.count("--" + name) == 0) continue;
      std::string key = name;
      std::replace(key.begin(), key.end(), '-', '_');
      flags[key] = value;
    }
    if (no_activeness) flags["no_activeness"] = "true";
    if (no_temporal) flags["no_temporal"] = "true";
    return config_file.empty() ? resolve_config(KeyValues{}, flags)
                               : resolve_config(fs::path(config_file), flags);
  }
};

struct Context {
  std::vector<std::string> args;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

  RunManifest manifest(const std::string& command, std::uint64_t seed) const {
    RunManifest m;
    m.command = command;
    m.argv = args;
    m.seed = seed;
    m.tool_version = DANE_VERSION;
    return m;
  }

  void finish(RunManifest& m, const fs::path& file) const {
    m.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
                    .count();
    write_manifest(m, file);
    logger()->debug("manifest written to {}", file.string());
  }
};

DynamicGraph load_data(const std::string& dir, bool cumulative) {
  if (!fs::is_directory(dir)) throw UsageError("dataset directory not found: " + dir);
  LoadOptions options;
  options.cumulative = cumulative;
  DynamicGraph g = load_dynamic_graph(dir, options);
  logger()->info("loaded {}: {} nodes, {} snapshots, attr_dim {}", dir, g.num_nodes(),
                 g.num_snapshots(), g.attr_dim());
  return g;
}

fs::path checkpoint_path(const std::string& model) {
  const fs::path p = fs::is_directory(model) ? fs::path(model) / "checkpoint.json" : fs::path(model);
  if (!fs::exists(p)) throw UsageError("checkpoint not found: " + p.string());
  return p;
}

Model load_model(const std::string& model, const DynamicGraph& g) {
  Model m = load_checkpoint(checkpoint_path(model));
  if (m.num_nodes != g.num_nodes() || m.attr_dim != g.attr_dim()) {
    throw Error("checkpoint was trained on " + std::to_string(m.num_nodes) + " nodes / attr_dim " +
                std::to_string(m.attr_dim) + ", dataset has " + std::to_string(g.num_nodes()) +
                " / " + std::to_string(g.attr_dim()));
  }
  return m;
}

// Writes `body` to `out` (or stdout when empty) and returns the path used.
std::optional<fs::path> emit(const std::string& out, const std::string& body) {
  if (out.empty()) {
    std::cout << body;
    return std::nullopt;
  }
  text::write_file(out, body);
  return fs::path(out);
}

std::string render(const MetricsReport& report, const std::string& format) {
  return format == "json" ? report.to_json().dump(2) + "\n" : report.to_csv();
}

fs::path manifest_next_to(const fs::path& output) {
  return output.parent_path() / (output.filename().string() + ".manifest.json");
}

std::string join_ints(const std::vector<std::size_t>& values) {
  std::string s;
  for (std::size_t i = 0; i < values.size(); ++i) s += (i ? "," : "") + std::to_string(values[i]);
  return s;
}

int dispatch(const std::vector<std::string>& args);

}  // namespace

int run(const std::vector<std::string>& args) {
  try {
    return dispatch(args);
  } catch (const UsageError& e) {
    std::cerr << "dane: " << e.what() << "\n";
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "dane: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "dane: " << e.what() << "\n";
    return 1;
  }
}

namespace {

int dispatch(const std::vector<std::string>& args) {
  Context ctx{args};
  CLI::App app{"Dynamic attributed network embedding"};
  app.require_subcommand(1);
  app.set_version_flag("--version", DANE_VERSION);
  std::size_t workers = 1;
  app.add_option("--workers", workers, "worker threads (advisory; runs are single-threaded)")
      ->check(CLI::PositiveNumber);
  std::string format = "csv";
  auto add_format = [&](CLI::App* cmd) {
    cmd->add_option("--format", format, "report format")->check(CLI::IsMember({"csv", "json"}));
  };

  std::function<int()> action;

  // generate
  {
    auto* cmd = app.add_subcommand("generate", "write a synthetic dynamic graph");
    auto p = std::make_shared<SyntheticParams>();
    auto seed = std::make_shared<std::uint64_t>(1);
    auto out = std::make_shared<std::string>();
    cmd->add_option("--nodes", p->num_nodes, "number of nodes");
    cmd->add_option("--communities", p->num_communities, "number of planted communities");
    cmd->add_option("--snapshots", p->num_snapshots, "number of snapshots");
    cmd->add_option("--attr-dim", p->attr_dim, "attribute dimension");
    cmd->add_option("--hub-fraction", p->hub_fraction, "fraction of hub nodes");
    cmd->add_option("--noise-sigma", p->noise_sigma, "attribute noise std");
    cmd->add_option("--seed", *seed, "random seed");
    cmd->add_option("--out", *out, "output dataset directory")->required();
    cmd->callback([&, p, seed, out] {
      action = [&, p, seed, out] {
        try {
          p->validate();
        } catch (const ConfigError& e) {
          throw UsageError(e.what());
        }
        const SyntheticGraph sg = generate_synthetic(*p, *seed);
        save_dynamic_graph(sg.graph, *out);
        RunManifest m = ctx.manifest("generate", *seed);
        m.config = {{"nodes", p->num_nodes},        {"communities", p->num_communities},
                    {"snapshots", p->num_snapshots}, {"attr_dim", p->attr_dim},
                    {"hub_fraction", p->hub_fraction}, {"noise_sigma", p->noise_sigma}};
        m.outputs["dataset"] = *out;
        ctx.finish(m, fs::path(*out) / "manifest.json");
        logger()->info("wrote {} snapshots to {}", p->num_snapshots, *out);
        return 0;
      };
    });
  }

  // train
  {
    auto* cmd = app.add_subcommand("train", "train a model on snapshots 1..n-1");
    auto flags = std::make_shared<TrainFlags>();
    auto data = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    auto cumulative = std::make_shared<bool>(false);
    cmd->add_option("--data", *data, "dataset directory")->required();
    cmd->add_option("--out", *out, "output directory")->required();
    cmd->add_flag("--cumulative", *cumulative, "union each snapshot with all earlier ones");
    flags->attach(*cmd);
    cmd->callback([&, cmd, flags, data, out, cumulative] {
      action = [&, cmd, flags, data, out, cumulative] {
        const TrainConfig config = flags->resolve(*cmd);
        const DynamicGraph g = load_data(*data, *cumulative);
        TrainReport report;
        const Model model = train(g, config, &report);
        const fs::path dir(*out);
        save_checkpoint(model, dir / "checkpoint.json");
        std::string log = "epoch,mean_loss,wall_ms\n";
        for (std::size_t e = 0; e < report.epoch_losses.size(); ++e) {
          log += std::to_string(e + 1) + "," + text::format_double(report.epoch_losses[e]) + "," +
                 text::format_double(report.epoch_wall_ms[e]) + "\n";
        }
        text::write_file(dir / "train_log.csv", log);
        RunManifest m = ctx.manifest("train", config.seed);
        m.config = config.to_json();
        m.inputs["data"] = *data;
        m.outputs["checkpoint"] = (dir / "checkpoint.json").string();
        m.outputs["train_log"] = (dir / "train_log.csv").string();
        ctx.finish(m, dir / "manifest.json");
        logger()->info("trained {} epochs, final loss {}", config.epochs,
                       report.epoch_losses.back());
        return 0;
      };
    });
  }

  // fine-tune
  {
    auto* cmd = app.add_subcommand("fine-tune", "fine-tune on revealed links of the last snapshot");
    auto data = std::make_shared<std::string>();
    auto model = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    auto seed = std::make_shared<std::uint64_t>(1);
    auto steps = std::make_shared<std::optional<std::size_t>>();
    auto fraction = std::make_shared<double>(0.2);
    auto cumulative = std::make_shared<bool>(false);
    cmd->add_option("--data", *data, "dataset directory")->required();
    cmd->add_option("--model", *model, "checkpoint file or training output directory")->required();
    cmd->add_option("--out", *out, "output directory")->required();
    cmd->add_option("--seed", *seed, "split and sampling seed");
    cmd->add_option("--steps", *steps, "fine-tuning steps (default from the checkpoint config)");
    cmd->add_option("--fraction", *fraction, "share of new links revealed")
        ->check(CLI::Range(0.0, 0.99));
    cmd->add_flag("--cumulative", *cumulative, "union each snapshot with all earlier ones");
    cmd->callback([&, data, model, out, seed, steps, fraction, cumulative] {
      action = [&, data, model, out, seed, steps, fraction, cumulative] {
        const DynamicGraph g = load_data(*data, *cumulative);
        const Model m = load_model(*model, g);
        const LinkEvalSplit split = draw_link_split(g, derive_seed(*seed, 0), *fraction);
        const std::size_t n_steps = steps->value_or(m.config.fine_tune_steps);
        const FineTuneResult result =
            fine_tune(m, g, split.fine_tune_edges, n_steps, derive_seed(*seed, 1));
        if (result.skipped_empty) logger()->warn("no links revealed; model left unchanged");
        const fs::path dir(*out);
        save_checkpoint(result.model, dir / "checkpoint.json");
        auto edges_json = [](const std::vector<Edge>& edges) {
          json a = json::array();
          for (const Edge& e : edges) a.push_back({e.u, e.v});
          return a;
        };
        const json split_json = {{"fine_tune", edges_json(split.fine_tune_edges)},
                                 {"test_positives", edges_json(split.test_positives)},
                                 {"test_negatives", edges_json(split.test_negatives)},
                                 {"seed", split.seed}};
        text::write_file(dir / "split.json", split_json.dump(1) + "\n");
        RunManifest man = ctx.manifest("fine-tune", *seed);
        man.config = m.config.to_json();
        man.config["fine_tune_steps"] = n_steps;
        man.inputs["data"] = *data;
        man.inputs["model"] = checkpoint_path(*model).string();
        man.outputs["checkpoint"] = (dir / "checkpoint.json").string();
        man.outputs["split"] = (dir / "split.json").string();
        ctx.finish(man, dir / "manifest.json");
        return 0;
      };
    });
  }

  // eval-link / eval-node
  auto add_eval = [&](const char* name, const char* help, bool link) {
    auto* cmd = app.add_subcommand(name, help);
    auto data = std::make_shared<std::string>();
    auto model = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    auto seed = std::make_shared<std::uint64_t>(1);
    auto repeats = std::make_shared<std::size_t>(10);
    auto steps = std::make_shared<std::optional<std::size_t>>();
    auto cumulative = std::make_shared<bool>(false);
    cmd->add_option("--data", *data, "dataset directory")->required();
    cmd->add_option("--model", *model, "checkpoint file or training output directory")->required();
    cmd->add_option("--out", *out, "report file (stdout when omitted)");
    cmd->add_option("--seed", *seed, "evaluation seed");
    cmd->add_option("--repeats", *repeats, "number of repeats")->check(CLI::PositiveNumber);
    if (link) cmd->add_option("--steps", *steps, "fine-tuning steps per repeat");
    cmd->add_flag("--cumulative", *cumulative, "union each snapshot with all earlier ones");
    add_format(cmd);
    cmd->callback([&, name, link, data, model, out, seed, repeats, steps, cumulative] {
      action = [&, name, link, data, model, out, seed, repeats, steps, cumulative] {
        const DynamicGraph g = load_data(*data, *cumulative);
        const Model m = load_model(*model, g);
        MetricsReport report;
        if (link) {
          LinkEvalOptions o;
          o.repeats = *repeats;
          o.seed = *seed;
          o.fine_tune_steps = steps->value_or(m.config.fine_tune_steps);
          report = eval_link_prediction(g, m, o);
        } else {
          NodeEvalOptions o;
          o.repeats = *repeats;
          o.seed = *seed;
          report = eval_node_classification(g, m, o);
        }
        for (const std::string& w : report.warnings) logger()->warn("{}", w);
        const auto written = emit(*out, render(report, format));
        if (written) {
          RunManifest man = ctx.manifest(name, *seed);
          man.config = m.config.to_json();
          man.config["repeats"] = *repeats;
          man.config["format"] = format;
          man.inputs["data"] = *data;
          man.inputs["model"] = checkpoint_path(*model).string();
          man.outputs["report"] = written->string();
          ctx.finish(man, manifest_next_to(*written));
        }
        return 0;
      };
    });
  };
  add_eval("eval-link", "dynamic link prediction on new links of the last snapshot", true);
  add_eval("eval-node", "classification of nodes whose label changes at the last snapshot", false);

  // sweep
  {
    auto* cmd = app.add_subcommand("sweep", "train and evaluate over a range of L or K");
    auto flags = std::make_shared<TrainFlags>();
    auto data = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    auto param = std::make_shared<std::string>();
    auto values = std::make_shared<std::vector<std::size_t>>();
    auto metric = std::make_shared<std::string>("roc_auc");
    auto repeats = std::make_shared<std::size_t>(10);
    auto cumulative = std::make_shared<bool>(false);
    cmd->add_option("--data", *data, "dataset directory")->required();
    cmd->add_option("--param", *param, "swept parameter")
        ->required()
        ->check(CLI::IsMember({"L", "K"}));
    cmd->add_option("--values", *values, "comma-separated values")->required()->delimiter(',');
    cmd->add_option("--metric", *metric, "reported metric")
        ->check(CLI::IsMember({"roc_auc", "pr_auc", "f1"}));
    cmd->add_option("--repeats", *repeats, "evaluation repeats per value")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--out", *out, "result file (stdout when omitted)");
    cmd->add_flag("--cumulative", *cumulative, "union each snapshot with all earlier ones");
    flags->attach(*cmd);
    add_format(cmd);
    cmd->callback([&, cmd, flags, data, out, param, values, metric, repeats, cumulative] {
      action = [&, cmd, flags, data, out, param, values, metric, repeats, cumulative] {
        const TrainConfig base = flags->resolve(*cmd);
        const DynamicGraph g = load_data(*data, *cumulative);
        std::string csv = "param,value,metric,mean,std,repeats\n";
        json rows = json::array();
        for (std::size_t v : *values) {
          TrainConfig config = base;
          (*param == "L" ? config.layers : config.lookback) = v;
          try {
            config.validate();
          } catch (const ConfigError& e) {
            throw UsageError(e.what());
          }
          const Model m = train(g, config);
          LinkEvalOptions o;
          o.repeats = *repeats;
          o.seed = config.seed;
          o.fine_tune_steps = config.fine_tune_steps;
          const MetricSeries s = eval_link_prediction(g, m, o).metric(*metric);
          logger()->info("{}={}: {} {}", *param, v, *metric, s.mean());
          csv += *param + "," + std::to_string(v) + "," + *metric + "," +
                 text::format_double(s.mean()) + "," + text::format_double(s.stddev()) + "," +
                 std::to_string(s.values.size()) + "\n";
          rows.push_back({{"value", v}, {"mean", s.mean()}, {"std", s.stddev()},
                          {"values", s.values}});
        }
        const std::string body =
            format == "json"
                ? json{{"param", *param}, {"metric", *metric}, {"results", rows}}.dump(2) + "\n"
                : csv;
        const auto written = emit(*out, body);
        if (written) {
          RunManifest man = ctx.manifest("sweep", base.seed);
          man.config = base.to_json();
          man.config["param"] = *param;
          man.config["values"] = join_ints(*values);
          man.config["metric"] = *metric;
          man.config["repeats"] = *repeats;
          man.inputs["data"] = *data;
          man.outputs["results"] = written->string();
          ctx.finish(man, manifest_next_to(*written));
        }
        return 0;
      };
    });
  }

  // dump-embeddings
  {
    auto* cmd = app.add_subcommand("dump-embeddings", "write layer or predicted embeddings as CSV");
    auto data = std::make_shared<std::string>();
    auto model = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    auto timestamp = std::make_shared<std::optional<int>>();
    auto predicted = std::make_shared<bool>(false);
    auto cumulative = std::make_shared<bool>(false);
    cmd->add_option("--data", *data, "dataset directory")->required();
    cmd->add_option("--model", *model, "checkpoint file or training output directory")->required();
    cmd->add_option("--out", *out, "CSV file")->required();
    cmd->add_option("--timestamp", *timestamp,
                    "snapshot to embed; with --predicted, the window end t (predicts t+1)");
    cmd->add_flag("--predicted", *predicted, "write the merged prediction for t+1");
    cmd->add_flag("--cumulative", *cumulative, "union each snapshot with all earlier ones");
    cmd->callback([&, data, model, out, timestamp, predicted, cumulative] {
      action = [&, data, model, out, timestamp, predicted, cumulative] {
        const DynamicGraph g = load_data(*data, *cumulative);
        const Model m = load_model(*model, g);
        const int n = g.num_snapshots();
        if (*timestamp && (**timestamp < 1 || **timestamp > n)) {
          throw UsageError("--timestamp must lie in 1.." + std::to_string(n));
        }
        std::string header = "node,timestamp,layer";
        for (std::size_t j = 0; j < m.config.dim; ++j) header += ",dim" + std::to_string(j);
        std::string body;
        auto append_row = [&](NodeId v, int t, const std::string& layer,
                              std::span<const double> row, bool pred) {
          body += std::to_string(v) + "," + std::to_string(t) + "," + layer;
          for (double x : row) body += "," + text::format_double(x);
          body += pred ? ",1\n" : "\n";
        };
        if (*predicted) {
          const int t = timestamp->value_or(n - 1);
          const Tensor x = predict_embeddings(g.prefix(t), m, t);
          body = header + ",predicted\n";
          for (NodeId v = 0; v < g.num_nodes(); ++v) append_row(v, t + 1, "merged", x.row(v), true);
        } else {
          body = header + "\n";
          const std::vector<Adjacency> nbrs = model_neighborhoods(g, m.config);
          const int first = timestamp->value_or(1);
          const int last = timestamp->value_or(n);
          for (int t = first; t <= last; ++t) {
            const LayerEmbeddings e = embed_snapshot(nbrs[static_cast<std::size_t>(t - 1)],
                                                     g.snapshot(t).attributes(), m.spatial);
            for (std::size_t l = 0; l < e.x.size(); ++l) {
              for (NodeId v = 0; v < g.num_nodes(); ++v) {
                append_row(v, t, std::to_string(l), e.x[l].row(v), false);
              }
            }
          }
        }
        text::write_file(*out, body);
        RunManifest man = ctx.manifest("dump-embeddings", m.config.seed);
        man.config = m.config.to_json();
        man.config["predicted"] = *predicted;
        if (*timestamp) man.config["timestamp"] = **timestamp;
        man.inputs["data"] = *data;
        man.inputs["model"] = checkpoint_path(*model).string();
        man.outputs["embeddings"] = *out;
        ctx.finish(man, manifest_next_to(*out));
        return 0;
      };
    });
  }

  // rerun
  {
    auto* cmd = app.add_subcommand("rerun", "repeat the command recorded in a run manifest");
    auto file = std::make_shared<std::string>();
    cmd->add_option("manifest", *file, "manifest.json")->required()->check(CLI::ExistingFile);
    cmd->callback([&, file] {
      action = [file] {
        const RunManifest m = read_manifest(*file);
        if (!m.argv.empty() && m.argv.front() == "rerun") {
          throw UsageError("manifest records a rerun; refusing to recurse");
        }
        return run(m.argv);
      };
    });
  }

  std::vector<const char*> argv{"dane"};
  for (const std::string& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what());
  }
  if (workers > 1) logger()->info("--workers {} requested; running single-threaded", workers);
  return action();
}

}  // namespace

}  // namespace dane::cli
