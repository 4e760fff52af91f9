#include "dane/spatial.hpp"

#include <cmath>

#include "dane/error.hpp"
#include "dane/random.hpp"

namespace dane {

using diff::Parameter;
using diff::Tape;
using diff::Var;

SpatialParams SpatialParams::init(std::size_t num_nodes, std::size_t attr_dim, std::size_t dim,
                                  std::size_t layers, bool use_activeness, Rng& rng) {
  if (dim == 0 || layers == 0 || attr_dim == 0) {
    throw ConfigError("spatial: dim, layers and attr_dim must be positive");
  }
  SpatialParams p;
  p.input_proj = Parameter("W_in", glorot_uniform(dim, attr_dim, rng));
  for (std::size_t l = 0; l < layers; ++l) {
    p.aggregate.emplace_back("W_x." + std::to_string(l), glorot_uniform(dim, 2 * dim, rng));
  }
  if (use_activeness) {
    for (std::size_t l = 0; l < layers; ++l) {
      p.activeness_weights.emplace_back("W_p." + std::to_string(l),
                                        glorot_uniform(dim, 2 * dim, rng));
    }
    std::normal_distribution<double> normal(0.0, 0.1);
    Tensor P(num_nodes, dim);
    for (double& x : P.data()) x = normal(rng);
    p.activeness = Parameter("P", std::move(P));
  }
  return p;
}

std::vector<Parameter*> SpatialParams::parameters() {
  std::vector<Parameter*> out{&input_proj};
  for (auto& w : aggregate) out.push_back(&w);
  for (auto& w : activeness_weights) out.push_back(&w);
  if (use_activeness()) out.push_back(&activeness);
  return out;
}

std::vector<const Parameter*> SpatialParams::parameters() const {
  const auto mutable_view = const_cast<SpatialParams*>(this)->parameters();
  return {mutable_view.begin(), mutable_view.end()};
}

SpatialVars bind(Tape& tape, SpatialParams& params) {
  SpatialVars v{tape.parameter(params.input_proj), {}, {}, std::nullopt};
  for (auto& w : params.aggregate) v.aggregate.push_back(tape.parameter(w));
  for (auto& w : params.activeness_weights) v.activeness_weights.push_back(tape.parameter(w));
  if (params.use_activeness()) v.activeness = tape.parameter(params.activeness);
  return v;
}

SpatialVars bind_constant(Tape& tape, const SpatialParams& params) {
  SpatialVars v{tape.constant(params.input_proj.value), {}, {}, std::nullopt};
  for (const auto& w : params.aggregate) v.aggregate.push_back(tape.constant(w.value));
  for (const auto& w : params.activeness_weights) {
    v.activeness_weights.push_back(tape.constant(w.value));
  }
  if (params.use_activeness()) v.activeness = tape.constant(params.activeness.value);
  return v;
}

std::vector<Var> propagate_activeness(const SpatialVars& params, diff::Neighborhood neighbors,
                                      std::size_t layers) {
  if (!params.activeness) throw Error("propagate_activeness: activeness is disabled");
  if (layers > params.activeness_weights.size()) {
    throw ShapeError("propagate_activeness: requested " + std::to_string(layers) +
                     " layers but only " + std::to_string(params.activeness_weights.size()) +
                     " weight matrices exist");
  }
  std::vector<Var> p{*params.activeness};
  for (std::size_t l = 0; l < layers; ++l) {
    const Var mean = diff::neighbor_mean(p.back(), neighbors);
    p.push_back(diff::sigmoid(
        diff::matmul_nt(diff::concat(mean, p.back()), params.activeness_weights[l])));
  }
  return p;
}

LayerVars embed_snapshot(Tape& tape, const SpatialVars& params, diff::Neighborhood neighbors,
                         Var attributes, const SpatialOptions& options) {
  const std::size_t L = params.aggregate.size();
  LayerVars out;
  if (options.unit_gates) {
    const Tensor ones(neighbors.num_rows(), params.input_proj.value().rows(), 1.0);
    out.p.assign(L, tape.constant(ones));
  } else if (params.activeness) {
    out.p = propagate_activeness(params, neighbors, options.full_activeness ? L : L - 1);
  }
  out.x.push_back(diff::matmul_nt(attributes, params.input_proj));
  for (std::size_t l = 0; l < L; ++l) {
    const Var& x = out.x.back();
    const Var message = out.p.empty() ? x : diff::mul(out.p[l], x);
    const Var mean = diff::neighbor_mean(message, neighbors);
    out.x.push_back(diff::tanh(diff::matmul_nt(diff::concat(mean, x), params.aggregate[l])));
  }
  return out;
}

std::vector<Tensor> propagate_activeness(const Snapshot& snapshot, const SpatialParams& params) {
  Tape tape;
  const SpatialVars vars = bind_constant(tape, params);
  std::vector<Tensor> out;
  for (const Var& v : propagate_activeness(vars, snapshot.adjacency().view(),
                                           params.layers())) {
    out.push_back(v.value());
  }
  return out;
}

LayerEmbeddings embed_snapshot(const Snapshot& snapshot, const SpatialParams& params,
                               const SpatialOptions& options) {
  return embed_snapshot(snapshot.adjacency(), snapshot.attributes(), params, options);
}

LayerEmbeddings embed_snapshot(const Adjacency& neighbors, const Tensor& attributes,
                               const SpatialParams& params, const SpatialOptions& options) {
  Tape tape;
  const SpatialVars vars = bind_constant(tape, params);
  SpatialOptions opts = options;
  opts.full_activeness = !options.unit_gates;
  const LayerVars layers =
      embed_snapshot(tape, vars, neighbors.view(), tape.constant(attributes), opts);
  LayerEmbeddings out;
  for (const Var& v : layers.x) out.x.push_back(v.value());
  for (const Var& v : layers.p) out.p.push_back(v.value());
  return out;
}

const LayerEmbeddings& EmbeddingHistory::at(int t) const {
  if (t < first_timestamp || t > last_timestamp()) {
    throw Error("embedding history has no timestamp " + std::to_string(t));
  }
  return steps[static_cast<std::size_t>(t - first_timestamp)];
}

EmbeddingHistory embed_window(const DynamicGraph& g, const SpatialParams& params, int t,
                              std::size_t lookback) {
  if (t < 1 || t > g.num_snapshots()) {
    throw Error("embed_window: timestamp " + std::to_string(t) + " outside 1.." +
                std::to_string(g.num_snapshots()));
  }
  const int first = std::max(1, t - static_cast<int>(lookback));
  EmbeddingHistory history{first, {}};
  for (int i = first; i <= t; ++i) history.steps.push_back(embed_snapshot(g.snapshot(i), params));
  return history;
}

}  // namespace dane
