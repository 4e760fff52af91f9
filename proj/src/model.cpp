#include "dane/model.hpp"

#include <cmath>

#include "dane/error.hpp"
#include "dane/text_format.hpp"

namespace dane {

using diff::Parameter;
using diff::Tape;
using diff::Var;
using nlohmann::json;

namespace {

constexpr int kFormatVersion = 1;

template <typename P, typename ModelRef>
std::vector<P*> collect(ModelRef& m) {
  std::vector<P*> out = m.spatial.parameters();
  for (P* p : m.temporal.parameters()) out.push_back(p);
  return out;
}

}  // namespace

std::string to_string(EdgeScope scope) { return scope == EdgeScope::all ? "all" : "new"; }

EdgeScope parse_edge_scope(const std::string& text) {
  if (text == "all") return EdgeScope::all;
  if (text == "new") return EdgeScope::fresh;
  throw ConfigError("edge scope must be \"all\" or \"new\", got \"" + text + "\"");
}

void TrainConfig::validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
  };
  require(dim > 0, "dim must be positive");
  require(layers > 0, "layers must be positive");
  require(lookback > 0, "lookback must be positive");
  require(negatives > 0, "negatives must be positive");
  require(batch > 0, "batch must be positive");
  require(epochs > 0, "epochs must be positive");
  require(lr > 0.0 && std::isfinite(lr), "lr must be a positive finite number");
  require(fine_tune_lr > 0.0 && std::isfinite(fine_tune_lr),
          "fine_tune_lr must be a positive finite number");
}

json TrainConfig::to_json() const {
  return json{{"dim", dim},
              {"layers", layers},
              {"lookback", lookback},
              {"negatives", negatives},
              {"batch", batch},
              {"lr", lr},
              {"epochs", epochs},
              {"seed", seed},
              {"no_activeness", no_activeness},
              {"no_temporal", no_temporal},
              {"edge_scope", to_string(edge_scope)},
              {"max_neighbors", max_neighbors},
              {"fine_tune_steps", fine_tune_steps},
              {"fine_tune_lr", fine_tune_lr}};
}

TrainConfig TrainConfig::from_json(const json& j) {
  TrainConfig c;
  try {
    c.dim = j.at("dim").get<std::size_t>();
    c.layers = j.at("layers").get<std::size_t>();
    c.lookback = j.at("lookback").get<std::size_t>();
    c.negatives = j.at("negatives").get<std::size_t>();
    c.batch = j.at("batch").get<std::size_t>();
    c.lr = j.at("lr").get<double>();
    c.epochs = j.at("epochs").get<std::size_t>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.no_activeness = j.at("no_activeness").get<bool>();
    c.no_temporal = j.at("no_temporal").get<bool>();
    c.edge_scope = parse_edge_scope(j.at("edge_scope").get<std::string>());
    c.max_neighbors = j.at("max_neighbors").get<std::size_t>();
    c.fine_tune_steps = j.at("fine_tune_steps").get<std::size_t>();
    c.fine_tune_lr = j.at("fine_tune_lr").get<double>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config in checkpoint: ") + e.what());
  }
  c.validate();
  return c;
}

Model Model::init(std::size_t num_nodes, std::size_t attr_dim, const TrainConfig& config) {
  config.validate();
  Model m;
  m.config = config;
  m.num_nodes = num_nodes;
  m.attr_dim = attr_dim;
  Rng rng(derive_seed(config.seed, 0));
  m.spatial = SpatialParams::init(num_nodes, attr_dim, config.dim, config.layers,
                                  !config.no_activeness, rng);
  m.temporal = TemporalParams::init(config.dim, config.layers, !config.no_temporal, rng);
  return m;
}

std::vector<Parameter*> Model::parameters() { return collect<Parameter>(*this); }

std::vector<const Parameter*> Model::parameters() const {
  return collect<const Parameter>(*this);
}

std::vector<std::string> Model::parameter_names() const {
  std::vector<std::string> names;
  for (const Parameter* p : parameters()) names.push_back(p->name);
  return names;
}

void Model::zero_grad() {
  for (Parameter* p : parameters()) p->zero_grad();
}

std::vector<Adjacency> model_neighborhoods(const DynamicGraph& g, const TrainConfig& config) {
  std::vector<Adjacency> out;
  Rng rng(derive_seed(config.seed, 1));
  for (const Snapshot& s : g.snapshots()) {
    out.push_back(config.max_neighbors > 0 ? s.adjacency().capped(config.max_neighbors, rng)
                                           : s.adjacency());
  }
  return out;
}

std::size_t effective_lookback(std::size_t lookback, int t) {
  return std::min<std::size_t>(lookback, static_cast<std::size_t>(std::max(0, t - 1)));
}

namespace {

Var forward_with(Tape& tape, const DynamicGraph& g, std::span<const Adjacency> neighborhoods,
                 const SpatialVars& sv, const TemporalVars& tv, const TrainConfig& config, int t,
                 std::span<const NodeId> nodes) {
  if (t < 1 || t > g.num_snapshots()) {
    throw Error("forward: window end " + std::to_string(t) + " outside 1.." +
                std::to_string(g.num_snapshots()));
  }
  if (neighborhoods.size() < static_cast<std::size_t>(t)) {
    throw Error("forward: missing neighborhoods for timestamp " + std::to_string(t));
  }
  const bool temporal = !config.no_temporal;
  const std::size_t k = temporal ? effective_lookback(config.lookback, t) : 0;
  if (temporal && k == 0) {
    throw Error("forward: temporal prediction from timestamp " + std::to_string(t) +
                " has no history");
  }
  std::vector<std::vector<Var>> window;
  for (int ts = t - static_cast<int>(k); ts <= t; ++ts) {
    const Snapshot& s = g.snapshot(ts);
    const LayerVars layers = embed_snapshot(
        tape, sv, neighborhoods[static_cast<std::size_t>(ts - 1)].view(),
        tape.constant(s.attributes()));
    std::vector<Var> rows;
    for (std::size_t l = 1; l < layers.x.size(); ++l) {
      rows.push_back(diff::gather_rows(layers.x[l], nodes));
    }
    window.push_back(std::move(rows));
  }
  return predict_next(window, tv, temporal);
}

}  // namespace

Var forward_prediction(Tape& tape, const DynamicGraph& g, std::span<const Adjacency> neighborhoods,
                       Model& model, int t, std::span<const NodeId> nodes, bool trainable) {
  if (trainable) {
    const SpatialVars sv = bind(tape, model.spatial);
    const TemporalVars tv = bind(tape, model.temporal);
    return forward_with(tape, g, neighborhoods, sv, tv, model.config, t, nodes);
  }
  const SpatialVars sv = bind_constant(tape, model.spatial);
  const TemporalVars tv = bind_constant(tape, model.temporal);
  return forward_with(tape, g, neighborhoods, sv, tv, model.config, t, nodes);
}

Tensor predict_embeddings(const DynamicGraph& g, const Model& model, int t) {
  const std::vector<Adjacency> nbrs = model_neighborhoods(g, model.config);
  std::vector<NodeId> all(g.num_nodes());
  for (std::size_t v = 0; v < all.size(); ++v) all[v] = static_cast<NodeId>(v);
  Tape tape;
  const SpatialVars sv = bind_constant(tape, model.spatial);
  const TemporalVars tv = bind_constant(tape, model.temporal);
  return forward_with(tape, g, nbrs, sv, tv, model.config, t, all).value();
}

json tensors_to_json(std::span<const Parameter* const> params) {
  json out = json::object();
  for (const Parameter* p : params) {
    json rows = json::array();
    for (std::size_t r = 0; r < p->value.rows(); ++r) {
      const auto row = p->value.row(r);
      rows.push_back(json(std::vector<double>(row.begin(), row.end())));
    }
    out[p->name] = std::move(rows);
  }
  return out;
}

void tensors_from_json(const json& doc, std::span<Parameter* const> params) {
  for (Parameter* p : params) {
    if (!doc.contains(p->name)) throw LoadError("checkpoint is missing tensor " + p->name);
    const json& rows = doc.at(p->name);
    if (!rows.is_array() || rows.size() != p->value.rows()) {
      throw LoadError("checkpoint tensor " + p->name + " has the wrong row count");
    }
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const auto values = rows[r].get<std::vector<double>>();
      if (values.size() != p->value.cols()) {
        throw LoadError("checkpoint tensor " + p->name + " has the wrong column count");
      }
      std::copy(values.begin(), values.end(), p->value.row(r).begin());
    }
    p->zero_grad();
  }
  if (doc.size() != params.size()) {
    throw LoadError("checkpoint holds " + std::to_string(doc.size()) + " tensors, model expects " +
                    std::to_string(params.size()));
  }
}

json checkpoint_json(const Model& model) {
  const std::vector<const Parameter*> params = model.parameters();
  return json{{"format_version", kFormatVersion},
              {"dims",
               {{"num_nodes", model.num_nodes},
                {"attr_dim", model.attr_dim},
                {"dim", model.config.dim},
                {"layers", model.config.layers}}},
              {"tensors", tensors_to_json(params)},
              {"config", model.config.to_json()},
              {"seed", model.config.seed},
              {"epoch_losses", model.epoch_losses}};
}

Model model_from_checkpoint(const json& doc) {
  try {
    if (doc.at("format_version").get<int>() != kFormatVersion) {
      throw LoadError("unsupported checkpoint format_version");
    }
    const TrainConfig config = TrainConfig::from_json(doc.at("config"));
    Model m = Model::init(doc.at("dims").at("num_nodes").get<std::size_t>(),
                          doc.at("dims").at("attr_dim").get<std::size_t>(), config);
    tensors_from_json(doc.at("tensors"), m.parameters());
    m.epoch_losses = doc.at("epoch_losses").get<std::vector<double>>();
    return m;
  } catch (const json::exception& e) {
    throw LoadError(std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const Model& model, const std::filesystem::path& file) {
  text::write_file(file, checkpoint_json(model).dump(1) + "\n");
}

Model load_checkpoint(const std::filesystem::path& file) {
  json doc;
  try {
    doc = json::parse(text::read_file(file));
  } catch (const json::parse_error& e) {
    throw LoadError(file.string() + ": " + e.what());
  }
  return model_from_checkpoint(doc);
}

}  // namespace dane
