#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string_view>

#include <json.hpp>

#include "dane/error.hpp"
#include "dane/graph.hpp"
#include "dane/text_format.hpp"

namespace dane {

namespace fs = std::filesystem;
using nlohmann::json;

std::string snapshot_file_stem(int t) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "t%03d", t);
  return buf;
}

namespace {

[[noreturn]] void fail(const fs::path& file, std::size_t line, const std::string& what) {
  throw LoadError(file.string() + ":" + std::to_string(line) + ": " + what);
}

std::vector<Edge> read_edges(const fs::path& file, std::size_t num_nodes) {
  std::ifstream in(file);
  if (!in) throw LoadError("cannot open " + file.string());
  std::vector<Edge> edges;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view trimmed = text::trim(line);
    if (trimmed.empty()) continue;
    const auto fields = text::split_whitespace(trimmed);
    if (fields.size() != 2) fail(file, line_no, "expected \"u v\", got \"" + line + "\"");
    const auto u = text::parse_index(fields[0]);
    const auto v = text::parse_index(fields[1]);
    if (!u || !v) fail(file, line_no, "malformed node id in \"" + line + "\"");
    if (*u >= num_nodes || *v >= num_nodes) {
      fail(file, line_no, "node id " + std::to_string(std::max(*u, *v)) +
                              " out of range (num_nodes = " + std::to_string(num_nodes) + ")");
    }
    if (*u == *v) fail(file, line_no, "self-loop on node " + std::to_string(*u));
    edges.push_back({static_cast<NodeId>(*u), static_cast<NodeId>(*v)});
  }
  return edges;
}

Tensor read_attributes(const fs::path& file, std::size_t num_nodes, std::size_t attr_dim) {
  std::ifstream in(file);
  if (!in) throw LoadError("cannot open " + file.string());
  Tensor attrs(num_nodes, attr_dim);
  std::string line;
  std::size_t line_no = 0;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view trimmed = text::trim(line);
    if (trimmed.empty()) continue;
    if (row >= num_nodes) fail(file, line_no, "more than " + std::to_string(num_nodes) + " rows");
    const auto fields = text::split(trimmed, ',');
    if (fields.size() != attr_dim) {
      fail(file, line_no, "expected " + std::to_string(attr_dim) + " values, got " +
                              std::to_string(fields.size()) + " (inconsistent attr_dim)");
    }
    for (std::size_t j = 0; j < attr_dim; ++j) {
      const auto value = text::parse_double(fields[j]);
      if (!value) fail(file, line_no, "malformed number \"" + std::string(fields[j]) + "\"");
      attrs(row, j) = *value;
    }
    ++row;
  }
  if (row != num_nodes) {
    fail(file, line_no, "expected " + std::to_string(num_nodes) + " rows, got " +
                            std::to_string(row));
  }
  return attrs;
}

std::map<NodeId, int> read_labels(const fs::path& file, std::size_t num_nodes) {
  std::ifstream in(file);
  if (!in) throw LoadError("cannot open " + file.string());
  std::map<NodeId, int> labels;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view trimmed = text::trim(line);
    if (trimmed.empty()) continue;
    if (line_no == 1 && trimmed == "node,label") continue;
    const auto fields = text::split(trimmed, ',');
    if (fields.size() != 2) fail(file, line_no, "expected \"node,label\", got \"" + line + "\"");
    const auto node = text::parse_index(fields[0]);
    const auto label = text::parse_index(fields[1]);
    if (!node || !label) fail(file, line_no, "malformed label line \"" + line + "\"");
    if (*node >= num_nodes) fail(file, line_no, "node id " + std::to_string(*node) + " out of range");
    labels[static_cast<NodeId>(*node)] = static_cast<int>(*label);
  }
  return labels;
}

template <typename T>
T meta_field(const json& meta, const char* key, const fs::path& file) {
  if (!meta.contains(key)) throw LoadError(file.string() + ": missing field \"" + key + "\"");
  try {
    return meta.at(key).get<T>();
  } catch (const json::exception& e) {
    throw LoadError(file.string() + ": field \"" + key + "\" has the wrong type");
  }
}

}  // namespace

DynamicGraph load_dynamic_graph(const fs::path& dir, LoadOptions options) {
  const fs::path meta_path = dir / "meta.json";
  std::ifstream meta_in(meta_path);
  if (!meta_in) throw LoadError("missing meta file " + meta_path.string());
  json meta;
  try {
    meta = json::parse(meta_in);
  } catch (const json::parse_error& e) {
    throw LoadError(meta_path.string() + ": " + e.what());
  }
  const auto num_nodes = meta_field<std::size_t>(meta, "num_nodes", meta_path);
  const auto num_timestamps = meta_field<int>(meta, "num_timestamps", meta_path);
  const auto attr_dim = meta_field<std::size_t>(meta, "attr_dim", meta_path);
  const bool directed = meta.value("directed", false);
  const bool cumulative = options.cumulative || meta.value("cumulative", false);
  if (num_timestamps < 1) throw LoadError(meta_path.string() + ": num_timestamps must be >= 1");

  std::vector<Snapshot> snapshots;
  Tensor previous_attrs;
  for (int t = 1; t <= num_timestamps; ++t) {
    const std::string stem = snapshot_file_stem(t);
    const fs::path edge_path = dir / (stem + ".edges");
    const fs::path attr_path = dir / (stem + ".attrs");
    const fs::path label_path = dir / (stem + ".labels");
    if (!fs::exists(edge_path)) throw LoadError("missing edge file " + edge_path.string());
    std::vector<Edge> edges = read_edges(edge_path, num_nodes);
    Tensor attrs;
    if (fs::exists(attr_path)) {
      attrs = read_attributes(attr_path, num_nodes, attr_dim);
    } else if (t > 1) {
      attrs = previous_attrs;
    } else {
      throw LoadError("missing attribute file " + attr_path.string() +
                      " for the first timestamp");
    }
    std::map<NodeId, int> labels;
    if (fs::exists(label_path)) labels = read_labels(label_path, num_nodes);
    previous_attrs = attrs;
    snapshots.emplace_back(t, num_nodes, std::move(edges), std::move(attrs), directed,
                           std::move(labels));
  }
  DynamicGraph g(num_nodes, attr_dim, directed, std::move(snapshots));
  return cumulative ? g.cumulative() : g;
}

void save_dynamic_graph(const DynamicGraph& g, const fs::path& dir) {
  fs::create_directories(dir);
  json meta = {{"num_nodes", g.num_nodes()},
               {"num_timestamps", g.num_snapshots()},
               {"attr_dim", g.attr_dim()},
               {"directed", g.directed()},
               {"cumulative", false}};
  text::write_file(dir / "meta.json", meta.dump(2) + "\n");
  for (const Snapshot& s : g.snapshots()) {
    const std::string stem = snapshot_file_stem(s.timestamp());
    std::string edges;
    for (const Edge& e : s.edges()) edges += std::to_string(e.u) + " " + std::to_string(e.v) + "\n";
    text::write_file(dir / (stem + ".edges"), edges);

    std::string attrs;
    for (std::size_t r = 0; r < s.attributes().rows(); ++r) {
      const auto row = s.attributes().row(r);
      for (std::size_t j = 0; j < row.size(); ++j) {
        if (j > 0) attrs += ',';
        attrs += text::format_double(row[j]);
      }
      attrs += '\n';
    }
    text::write_file(dir / (stem + ".attrs"), attrs);

    if (!s.labels().empty()) {
      std::string labels = "node,label\n";
      for (const auto& [node, label] : s.labels()) {
        labels += std::to_string(node) + "," + std::to_string(label) + "\n";
      }
      text::write_file(dir / (stem + ".labels"), labels);
    }
  }
}

}  // namespace dane
