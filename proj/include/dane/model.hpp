#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "dane/diffnum.hpp"
#include "dane/graph.hpp"
#include "dane/spatial.hpp"
#include "dane/temporal.hpp"

namespace dane {

enum class EdgeScope { all, fresh };

std::string to_string(EdgeScope scope);
EdgeScope parse_edge_scope(const std::string& text);

struct TrainConfig {
  std::size_t dim = 100;
  std::size_t layers = 3;
  std::size_t lookback = 3;
  std::size_t negatives = 1;
  std::size_t batch = 50;
  double lr = 1e-4;
  std::size_t epochs = 30;
  std::uint64_t seed = 1;
  bool no_activeness = false;
  bool no_temporal = false;
  EdgeScope edge_scope = EdgeScope::all;
  std::size_t max_neighbors = 0;  // 0 keeps full neighborhoods
  std::size_t fine_tune_steps = 20;
  double fine_tune_lr = 1e-4;

  void validate() const;
  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

struct Model {
  TrainConfig config;
  std::size_t num_nodes = 0;
  std::size_t attr_dim = 0;
  SpatialParams spatial;
  TemporalParams temporal;
  std::vector<double> epoch_losses;

  static Model init(std::size_t num_nodes, std::size_t attr_dim, const TrainConfig& config);

  // Parameters in a fixed order: spatial first, then temporal.
  std::vector<diff::Parameter*> parameters();
  std::vector<const diff::Parameter*> parameters() const;
  std::vector<std::string> parameter_names() const;
  void zero_grad();
};

// Neighbor lists used for aggregation on each snapshot, capped when
// max_neighbors > 0 (sampled once with the run seed).
std::vector<Adjacency> model_neighborhoods(const DynamicGraph& g, const TrainConfig& config);

// Lookback actually available when the window ends at t: min(K, t - 1).
std::size_t effective_lookback(std::size_t lookback, int t);

// Records the embedding pipeline on `tape` and returns the predicted
// embeddings for timestamp t+1 of `nodes` (one row per node), computed from
// the window ending at t. `trainable` binds parameters as gradient leaves.
diff::Var forward_prediction(diff::Tape& tape, const DynamicGraph& g,
                             std::span<const Adjacency> neighborhoods, Model& model, int t,
                             std::span<const NodeId> nodes, bool trainable = true);

// Predicted embeddings for t+1 for every node (no gradients).
Tensor predict_embeddings(const DynamicGraph& g, const Model& model, int t);

// Checkpoint document: format_version, dims, tensors (name -> nested
// arrays), config, seed, epoch_losses. Keys are sorted.
nlohmann::json checkpoint_json(const Model& model);
Model model_from_checkpoint(const nlohmann::json& doc);
void save_checkpoint(const Model& model, const std::filesystem::path& file);
Model load_checkpoint(const std::filesystem::path& file);

// Named tensors as {name: [[row], ...]}.
nlohmann::json tensors_to_json(std::span<const diff::Parameter* const> params);
void tensors_from_json(const nlohmann::json& doc, std::span<diff::Parameter* const> params);

}  // namespace dane
