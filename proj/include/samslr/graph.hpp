#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "samslr/tensor.hpp"

namespace samslr::graph {

struct Edge {
  int a = 0;
  int b = 0;  // stored with a < b
};

struct Bone {
  int src = 0;
  int dst = 0;
};

/// Undirected skeleton with a directed bone tree on top.
/// Immutable after construction; safe to share across threads.
class SkeletonGraph {
 public:
  SkeletonGraph(int num_nodes, std::vector<Edge> edges, std::vector<Bone> bones,
                int root, std::vector<std::string> node_labels);

  int num_nodes() const { return num_nodes_; }
  int root() const { return root_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::vector<Bone>& bones() const { return bones_; }
  const std::vector<std::string>& node_labels() const { return labels_; }
  const std::vector<std::vector<int>>& neighbors() const { return adj_; }
  bool has_edge(int i, int j) const;

  /// Parent node in the bone tree; -1 for the root.
  int bone_source(int node) const { return parent_[static_cast<size_t>(node)]; }

  /// Bones ordered so every source precedes its targets (root first).
  const std::vector<int>& topological_order() const { return topo_; }

  /// Index pairs (i, j) with labels left_*/right_* matching; used by mirroring.
  std::vector<std::pair<int, int>> left_right_pairs() const;

 private:
  int num_nodes_;
  int root_;
  std::vector<Edge> edges_;
  std::vector<Bone> bones_;
  std::vector<std::string> labels_;
  std::vector<std::vector<int>> adj_;
  std::vector<int> parent_;
  std::vector<int> topo_;
};

/// Raw node/edge/bone/root description, the on-disk layout representation.
struct GraphLayout {
  int num_nodes = 0;
  std::vector<std::string> node_labels;
  std::vector<Edge> edges;
  std::vector<Bone> bones;
  int root = 0;
};

struct NodeSelection {
  std::vector<int> kept_indices;          // indices into the source graph, ascending
  std::vector<Edge> edge_overrides;       // extra edges, in source-graph indices
};

enum class PartitionStrategy { kUniform, kSpatial };

struct NormalizedAdjacency {
  PartitionStrategy strategy = PartitionStrategy::kUniform;
  std::vector<Tensor> partitions;  // each N x N
};

SkeletonGraph build_full_graph(const GraphLayout& layout);

/// Shortest hop count between i and j; throws if unreachable.
int node_distance(const SkeletonGraph& g, int i, int j);

/// BFS distances from a start node; -1 marks unreachable nodes.
std::vector<int> bfs_distances(const SkeletonGraph& g, int start);

SkeletonGraph reduce_graph(const SkeletonGraph& g, const NodeSelection& sel);

NormalizedAdjacency normalize_adjacency(const SkeletonGraph& g, PartitionStrategy strategy);

/// The 133-node whole-body layout: COCO body + feet + face + two hands,
/// with bridge edges attaching face, feet and hands to the body skeleton.
GraphLayout whole_body_layout();

/// Default 27-node reduction: 7 upper-body nodes and 10 per hand
/// (hand root, first knuckles, four fingertips).
NodeSelection default_slr_selection();

SkeletonGraph default_slr_graph();

GraphLayout parse_layout(const std::string& text);
GraphLayout load_layout(const std::string& path);
std::string format_layout(const GraphLayout& layout);

NodeSelection parse_selection(const std::string& text);
NodeSelection load_selection(const std::string& path);
std::string format_selection(const NodeSelection& sel);

}  // namespace samslr::graph
