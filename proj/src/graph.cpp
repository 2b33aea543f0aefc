#include "samslr/graph.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

namespace samslr::graph {

namespace {

Edge make_edge(int a, int b) {
  if (a > b) std::swap(a, b);
  return Edge{a, b};
}

bool edge_less(const Edge& x, const Edge& y) {
  return x.a != y.a ? x.a < y.a : x.b < y.b;
}

void check_node(int idx, int n, const char* what) {
  if (idx < 0 || idx >= n)
    throw std::invalid_argument(std::string(what) + ": node index " + std::to_string(idx) +
                                " out of range [0," + std::to_string(n) + ")");
}

// Union-find, used for the reduced-graph connectivity check.
struct DisjointSet {
  std::vector<int> parent;
  explicit DisjointSet(int n) : parent(static_cast<size_t>(n)) {
    std::iota(parent.begin(), parent.end(), 0);
  }
  int find(int x) {
    while (parent[static_cast<size_t>(x)] != x) {
      parent[static_cast<size_t>(x)] = parent[static_cast<size_t>(parent[static_cast<size_t>(x)])];
      x = parent[static_cast<size_t>(x)];
    }
    return x;
  }
  void unite(int a, int b) { parent[static_cast<size_t>(find(a))] = find(b); }
};

}  // namespace

SkeletonGraph::SkeletonGraph(int num_nodes, std::vector<Edge> edges, std::vector<Bone> bones,
                             int root, std::vector<std::string> node_labels)
    : num_nodes_(num_nodes), root_(root), labels_(std::move(node_labels)) {
  if (num_nodes <= 0) throw std::invalid_argument("graph: need at least one node");
  check_node(root, num_nodes, "graph root");
  if (labels_.empty()) {
    labels_.resize(static_cast<size_t>(num_nodes));
    for (int i = 0; i < num_nodes; ++i) labels_[static_cast<size_t>(i)] = "node_" + std::to_string(i);
  }
  if (static_cast<int>(labels_.size()) != num_nodes)
    throw std::invalid_argument("graph: label count does not match node count");

  for (auto& e : edges) {
    check_node(e.a, num_nodes, "edge");
    check_node(e.b, num_nodes, "edge");
    if (e.a == e.b) throw std::invalid_argument("graph: self-loop on node " + std::to_string(e.a));
    e = make_edge(e.a, e.b);
  }
  std::sort(edges.begin(), edges.end(), edge_less);
  for (size_t i = 1; i < edges.size(); ++i)
    if (edges[i].a == edges[i - 1].a && edges[i].b == edges[i - 1].b)
      throw std::invalid_argument("graph: duplicate edge " + std::to_string(edges[i].a) + "-" +
                                  std::to_string(edges[i].b));
  edges_ = std::move(edges);

  adj_.assign(static_cast<size_t>(num_nodes), {});
  for (const auto& e : edges_) {
    adj_[static_cast<size_t>(e.a)].push_back(e.b);
    adj_[static_cast<size_t>(e.b)].push_back(e.a);
  }
  for (auto& nb : adj_) std::sort(nb.begin(), nb.end());

  // Bone topology must be a tree rooted at `root` and a subset of the edges.
  parent_.assign(static_cast<size_t>(num_nodes), -1);
  for (const auto& b : bones) {
    check_node(b.src, num_nodes, "bone");
    check_node(b.dst, num_nodes, "bone");
    if (b.dst == root) throw std::invalid_argument("graph: root cannot be a bone target");
    if (!has_edge(b.src, b.dst))
      throw std::invalid_argument("graph: bone " + std::to_string(b.src) + "->" +
                                  std::to_string(b.dst) + " has no matching edge");
    if (parent_[static_cast<size_t>(b.dst)] != -1)
      throw std::invalid_argument("graph: node " + std::to_string(b.dst) + " has two bone sources");
    parent_[static_cast<size_t>(b.dst)] = b.src;
  }
  if (static_cast<int>(bones.size()) != num_nodes - 1)
    throw std::invalid_argument("graph: bone topology must have exactly N-1 bones, got " +
                                std::to_string(bones.size()));
  bones_ = std::move(bones);

  // Root-first order; also detects cycles/unreachable nodes.
  topo_.clear();
  topo_.reserve(static_cast<size_t>(num_nodes));
  std::vector<std::vector<int>> children(static_cast<size_t>(num_nodes));
  for (int v = 0; v < num_nodes; ++v)
    if (v != root) {
      if (parent_[static_cast<size_t>(v)] == -1)
        throw std::invalid_argument("graph: node " + std::to_string(v) + " has no bone source");
      children[static_cast<size_t>(parent_[static_cast<size_t>(v)])].push_back(v);
    }
  std::deque<int> queue{root};
  while (!queue.empty()) {
    int v = queue.front();
    queue.pop_front();
    topo_.push_back(v);
    for (int c : children[static_cast<size_t>(v)]) queue.push_back(c);
  }
  if (static_cast<int>(topo_.size()) != num_nodes)
    throw std::invalid_argument("graph: bone topology contains a cycle");
}

bool SkeletonGraph::has_edge(int i, int j) const {
  const auto& nb = adj_[static_cast<size_t>(i)];
  return std::binary_search(nb.begin(), nb.end(), j);
}

std::vector<std::pair<int, int>> SkeletonGraph::left_right_pairs() const {
  std::vector<std::pair<int, int>> pairs;
  for (int i = 0; i < num_nodes_; ++i) {
    const std::string& name = labels_[static_cast<size_t>(i)];
    if (name.rfind("left_", 0) != 0) continue;
    std::string mirror = "right_" + name.substr(5);
    for (int j = 0; j < num_nodes_; ++j)
      if (labels_[static_cast<size_t>(j)] == mirror) {
        pairs.emplace_back(i, j);
        break;
      }
  }
  return pairs;
}

SkeletonGraph build_full_graph(const GraphLayout& layout) {
  return SkeletonGraph(layout.num_nodes, layout.edges, layout.bones, layout.root,
                       layout.node_labels);
}

std::vector<int> bfs_distances(const SkeletonGraph& g, int start) {
  check_node(start, g.num_nodes(), "bfs");
  std::vector<int> dist(static_cast<size_t>(g.num_nodes()), -1);
  std::deque<int> queue{start};
  dist[static_cast<size_t>(start)] = 0;
  while (!queue.empty()) {
    int v = queue.front();
    queue.pop_front();
    for (int w : g.neighbors()[static_cast<size_t>(v)])
      if (dist[static_cast<size_t>(w)] == -1) {
        dist[static_cast<size_t>(w)] = dist[static_cast<size_t>(v)] + 1;
        queue.push_back(w);
      }
  }
  return dist;
}

int node_distance(const SkeletonGraph& g, int i, int j) {
  check_node(i, g.num_nodes(), "node_distance");
  check_node(j, g.num_nodes(), "node_distance");
  if (i == j) return 0;
  int d = bfs_distances(g, i)[static_cast<size_t>(j)];
  if (d < 0)
    throw std::runtime_error("node_distance: nodes " + std::to_string(i) + " and " +
                             std::to_string(j) + " are disconnected");
  return d;
}

SkeletonGraph reduce_graph(const SkeletonGraph& g, const NodeSelection& sel) {
  const int n = g.num_nodes();
  if (sel.kept_indices.empty()) throw std::invalid_argument("reduce_graph: empty selection");
  std::vector<int> kept = sel.kept_indices;
  std::sort(kept.begin(), kept.end());
  if (std::adjacent_find(kept.begin(), kept.end()) != kept.end())
    throw std::invalid_argument("reduce_graph: duplicate index in selection");
  std::vector<int> old_to_new(static_cast<size_t>(n), -1);
  for (size_t k = 0; k < kept.size(); ++k) {
    check_node(kept[k], n, "reduce_graph selection");
    old_to_new[static_cast<size_t>(kept[k])] = static_cast<int>(k);
  }
  if (old_to_new[static_cast<size_t>(g.root())] == -1)
    throw std::invalid_argument("reduce_graph: selection must keep the root node");

  const int m = static_cast<int>(kept.size());
  std::set<std::pair<int, int>> edge_set;
  for (const auto& e : g.edges()) {
    int a = old_to_new[static_cast<size_t>(e.a)], b = old_to_new[static_cast<size_t>(e.b)];
    if (a >= 0 && b >= 0) edge_set.insert({std::min(a, b), std::max(a, b)});
  }
  for (const auto& e : sel.edge_overrides) {
    check_node(e.a, n, "reduce_graph override");
    check_node(e.b, n, "reduce_graph override");
    int a = old_to_new[static_cast<size_t>(e.a)], b = old_to_new[static_cast<size_t>(e.b)];
    if (a < 0 || b < 0)
      throw std::invalid_argument("reduce_graph: override references a removed node");
    if (a == b) throw std::invalid_argument("reduce_graph: override self-loop");
    edge_set.insert({std::min(a, b), std::max(a, b)});
  }

  // Each kept node's bone source is its nearest kept ancestor in the
  // original tree; the identity selection therefore reproduces the input.
  // Bones whose edge collapsed in the reduction contribute a new edge so
  // the bone tree stays embedded in the graph.
  std::vector<Bone> bones;
  for (int v : kept) {
    if (v == g.root()) continue;
    int a = g.bone_source(v);
    while (a != -1 && old_to_new[static_cast<size_t>(a)] == -1) a = g.bone_source(a);
    if (a == -1)
      throw std::invalid_argument("reduce_graph: no kept ancestor for node " + std::to_string(v));
    int nv = old_to_new[static_cast<size_t>(v)], na = old_to_new[static_cast<size_t>(a)];
    edge_set.insert({std::min(nv, na), std::max(nv, na)});
    bones.push_back(Bone{na, nv});
  }

  DisjointSet ds(m);
  for (const auto& e : edge_set) ds.unite(e.first, e.second);
  for (int v = 1; v < m; ++v)
    if (ds.find(v) != ds.find(0))
      throw std::invalid_argument("reduce_graph: reduced graph is disconnected");

  std::vector<Edge> edges;
  edges.reserve(edge_set.size());
  for (const auto& e : edge_set) edges.push_back(Edge{e.first, e.second});
  std::vector<std::string> labels(static_cast<size_t>(m));
  for (int k = 0; k < m; ++k)
    labels[static_cast<size_t>(k)] = g.node_labels()[static_cast<size_t>(kept[static_cast<size_t>(k)])];
  return SkeletonGraph(m, std::move(edges), std::move(bones),
                       old_to_new[static_cast<size_t>(g.root())], std::move(labels));
}

NormalizedAdjacency normalize_adjacency(const SkeletonGraph& g, PartitionStrategy strategy) {
  const int n = g.num_nodes();
  NormalizedAdjacency out;
  out.strategy = strategy;

  // A + I and its degree, shared by both strategies.
  Tensor a_hat({n, n});
  for (int i = 0; i < n; ++i) a_hat.at2(i, i) = 1.0;
  for (const auto& e : g.edges()) {
    a_hat.at2(e.a, e.b) = 1.0;
    a_hat.at2(e.b, e.a) = 1.0;
  }
  std::vector<double> deg(static_cast<size_t>(n), 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) deg[static_cast<size_t>(i)] += a_hat.at2(i, j);

  if (strategy == PartitionStrategy::kUniform) {
    Tensor norm({n, n});
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        norm.at2(i, j) = a_hat.at2(i, j) / std::sqrt(deg[static_cast<size_t>(i)] * deg[static_cast<size_t>(j)]);
    out.partitions.push_back(std::move(norm));
    return out;
  }

  // Spatial strategy: self (equal hop distance to root), centripetal
  // (neighbor closer to the root), centrifugal (neighbor farther).
  std::vector<int> hops = bfs_distances(g, g.root());
  for (int h : hops)
    if (h < 0) throw std::runtime_error("normalize_adjacency: graph is disconnected");
  std::vector<Tensor> parts(3, Tensor({n, n}));
  for (int i = 0; i < n; ++i) parts[0].at2(i, i) = 1.0;
  for (const auto& e : g.edges()) {
    auto place = [&](int dst, int src) {
      int rd = hops[static_cast<size_t>(src)] - hops[static_cast<size_t>(dst)];
      int p = rd == 0 ? 0 : (rd < 0 ? 1 : 2);
      parts[static_cast<size_t>(p)].at2(dst, src) = 1.0;
    };
    place(e.a, e.b);
    place(e.b, e.a);
  }
  // Columns are normalized jointly: the partitions are a mask split of the
  // column-stochastic (A+I) D^{-1}, so their sum keeps unit column sums.
  for (auto& part : parts) {
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) part.at2(i, j) /= deg[static_cast<size_t>(j)];
    for (size_t k = 0; k < part.size(); ++k)
      if (!std::isfinite(part[k])) throw std::runtime_error("normalize_adjacency: NaN in partition");
  }
  out.partitions = std::move(parts);
  return out;
}

namespace {

void add_chain(GraphLayout& l, std::initializer_list<int> nodes) {
  const int* prev = nullptr;
  for (const int& v : nodes) {
    if (prev) {
      l.edges.push_back(Edge{*prev, v});
      l.bones.push_back(Bone{*prev, v});
    }
    prev = &v;
  }
}

void add_hand(GraphLayout& l, int wrist, int base, const std::string& side) {
  const char* fingers[5] = {"thumb", "index", "middle", "ring", "pinky"};
  l.node_labels[static_cast<size_t>(base)] = side + "_hand_root";
  l.edges.push_back(Edge{wrist, base});
  l.bones.push_back(Bone{wrist, base});
  for (int f = 0; f < 5; ++f) {
    int start = base + 1 + 4 * f;
    for (int k = 0; k < 4; ++k)
      l.node_labels[static_cast<size_t>(start + k)] =
          side + "_" + fingers[f] + "_" + std::to_string(k + 1);
    add_chain(l, {base, start, start + 1, start + 2, start + 3});
  }
}

}  // namespace

GraphLayout whole_body_layout() {
  GraphLayout l;
  l.num_nodes = 133;
  l.root = 0;
  l.node_labels.assign(133, "");
  const char* body[17] = {"nose",          "left_eye",      "right_eye",  "left_ear",
                          "right_ear",     "left_shoulder", "right_shoulder",
                          "left_elbow",    "right_elbow",   "left_wrist", "right_wrist",
                          "left_hip",      "right_hip",     "left_knee",  "right_knee",
                          "left_ankle",    "right_ankle"};
  for (int i = 0; i < 17; ++i) l.node_labels[static_cast<size_t>(i)] = body[i];
  const char* feet[6] = {"left_big_toe",  "left_small_toe",  "left_heel",
                         "right_big_toe", "right_small_toe", "right_heel"};
  for (int i = 0; i < 6; ++i) l.node_labels[static_cast<size_t>(17 + i)] = feet[i];
  for (int i = 0; i < 68; ++i) l.node_labels[static_cast<size_t>(23 + i)] = "face_" + std::to_string(i);

  // COCO body skeleton (tree part).
  add_chain(l, {0, 1, 3});
  add_chain(l, {0, 2, 4});
  add_chain(l, {3, 5, 7, 9});
  add_chain(l, {4, 6, 8, 10});
  add_chain(l, {5, 11, 13, 15});
  add_chain(l, {6, 12, 14, 16});
  // Closure edges without bones.
  l.edges.push_back(Edge{1, 2});
  l.edges.push_back(Edge{5, 6});
  l.edges.push_back(Edge{11, 12});
  // Feet hang off the ankles.
  for (int i = 0; i < 3; ++i) {
    l.edges.push_back(Edge{15, 17 + i});
    l.bones.push_back(Bone{15, 17 + i});
    l.edges.push_back(Edge{16, 20 + i});
    l.bones.push_back(Bone{16, 20 + i});
  }

  // Face (68-landmark convention, offset 23): jaw, brows, nose bridge,
  // nostrils, eyes, lips. The bridge top anchors the face to the body nose.
  const int F = 23;
  add_chain(l, {0, F + 27, F + 28, F + 29, F + 30});                       // bridge
  add_chain(l, {F + 30, F + 33, F + 32, F + 31});                          // nostril left half
  add_chain(l, {F + 33, F + 34, F + 35});                                  // nostril right half
  add_chain(l, {F + 27, F + 21, F + 20, F + 19, F + 18, F + 17});          // right brow
  add_chain(l, {F + 27, F + 22, F + 23, F + 24, F + 25, F + 26});          // left brow
  add_chain(l, {F + 27, F + 36, F + 37, F + 38, F + 39, F + 40, F + 41});  // right eye
  add_chain(l, {F + 27, F + 42, F + 43, F + 44, F + 45, F + 46, F + 47});  // left eye
  l.edges.push_back(Edge{F + 36, F + 41});
  l.edges.push_back(Edge{F + 42, F + 47});
  add_chain(l, {F + 33, F + 51, F + 50, F + 49, F + 48});                  // outer lip right
  add_chain(l, {F + 51, F + 52, F + 53, F + 54, F + 55, F + 56, F + 57, F + 58, F + 59});
  l.edges.push_back(Edge{F + 48, F + 59});
  add_chain(l, {F + 48, F + 60, F + 61, F + 62, F + 63, F + 64, F + 65, F + 66, F + 67});
  l.edges.push_back(Edge{F + 60, F + 67});
  add_chain(l, {4, F + 0, F + 1, F + 2, F + 3, F + 4, F + 5, F + 6, F + 7, F + 8});  // jaw right
  add_chain(l, {3, F + 16, F + 15, F + 14, F + 13, F + 12, F + 11, F + 10, F + 9});  // jaw left
  l.edges.push_back(Edge{F + 8, F + 9});

  add_hand(l, 9, 91, "left");
  add_hand(l, 10, 112, "right");
  return l;
}

NodeSelection default_slr_selection() {
  NodeSelection sel;
  sel.kept_indices = {0, 5, 6, 7, 8, 9, 10};
  for (int base : {91, 112}) {
    sel.kept_indices.push_back(base);                        // hand root
    for (int f = 0; f < 5; ++f) sel.kept_indices.push_back(base + 1 + 4 * f);  // knuckles
    for (int f : {0, 1, 2, 4}) sel.kept_indices.push_back(base + 4 + 4 * f);   // fingertips
  }
  std::sort(sel.kept_indices.begin(), sel.kept_indices.end());
  sel.edge_overrides = {Edge{0, 5}, Edge{0, 6}};
  for (int base : {91, 112})
    for (int f : {0, 1, 2, 4})
      sel.edge_overrides.push_back(Edge{base + 1 + 4 * f, base + 4 + 4 * f});
  return sel;
}

SkeletonGraph default_slr_graph() {
  return reduce_graph(build_full_graph(whole_body_layout()), default_slr_selection());
}

namespace {

std::vector<std::string> tokenize_line(const std::string& line) {
  std::istringstream ss(line);
  std::vector<std::string> tok;
  std::string t;
  while (ss >> t) {
    if (t[0] == '#') break;
    tok.push_back(t);
  }
  return tok;
}

int parse_index(const std::string& s, const char* what) {
  try {
    size_t pos = 0;
    int v = std::stoi(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument(std::string(what) + ": bad index '" + s + "'");
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

GraphLayout parse_layout(const std::string& text) {
  GraphLayout l;
  std::map<int, std::string> names;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    auto tok = tokenize_line(line);
    if (tok.empty()) continue;
    if (tok[0] == "node" && tok.size() >= 3) {
      names[parse_index(tok[1], "layout node")] = tok[2];
    } else if (tok[0] == "edge" && tok.size() == 3) {
      l.edges.push_back(Edge{parse_index(tok[1], "layout edge"), parse_index(tok[2], "layout edge")});
    } else if (tok[0] == "bone" && tok.size() == 3) {
      l.bones.push_back(Bone{parse_index(tok[1], "layout bone"), parse_index(tok[2], "layout bone")});
    } else if (tok[0] == "root" && tok.size() == 2) {
      l.root = parse_index(tok[1], "layout root");
    } else {
      throw std::invalid_argument("layout: unrecognized line '" + line + "'");
    }
  }
  if (names.empty()) throw std::invalid_argument("layout: no nodes declared");
  l.num_nodes = names.rbegin()->first + 1;
  l.node_labels.assign(static_cast<size_t>(l.num_nodes), "");
  for (auto& [idx, name] : names) l.node_labels[static_cast<size_t>(idx)] = name;
  for (int i = 0; i < l.num_nodes; ++i)
    if (l.node_labels[static_cast<size_t>(i)].empty())
      throw std::invalid_argument("layout: missing node " + std::to_string(i));
  return l;
}

GraphLayout load_layout(const std::string& path) { return parse_layout(read_file(path)); }

std::string format_layout(const GraphLayout& l) {
  std::ostringstream out;
  for (int i = 0; i < l.num_nodes; ++i)
    out << "node " << i << ' ' << l.node_labels[static_cast<size_t>(i)] << '\n';
  out << "root " << l.root << '\n';
  for (const auto& e : l.edges) out << "edge " << e.a << ' ' << e.b << '\n';
  for (const auto& b : l.bones) out << "bone " << b.src << ' ' << b.dst << '\n';
  return out.str();
}

NodeSelection parse_selection(const std::string& text) {
  NodeSelection sel;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    auto tok = tokenize_line(line);
    if (tok.empty()) continue;
    if (tok[0] == "keep" && tok.size() == 2) {
      sel.kept_indices.push_back(parse_index(tok[1], "selection keep"));
    } else if (tok[0] == "override" && tok.size() == 3) {
      sel.edge_overrides.push_back(
          Edge{parse_index(tok[1], "selection override"), parse_index(tok[2], "selection override")});
    } else {
      throw std::invalid_argument("selection: unrecognized line '" + line + "'");
    }
  }
  std::sort(sel.kept_indices.begin(), sel.kept_indices.end());
  return sel;
}

NodeSelection load_selection(const std::string& path) { return parse_selection(read_file(path)); }

std::string format_selection(const NodeSelection& sel) {
  std::ostringstream out;
  for (int k : sel.kept_indices) out << "keep " << k << '\n';
  for (const auto& e : sel.edge_overrides) out << "override " << e.a << ' ' << e.b << '\n';
  return out.str();
}

}  // namespace samslr::graph
