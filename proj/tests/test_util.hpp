#pragma once

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "samslr/graph.hpp"
#include "samslr/nn.hpp"
#include "samslr/tensor.hpp"

namespace samslr::testutil {

struct FDResult {
  double max_rel_err = 0.0;
  std::string worst_param;
  long long checked = 0;
};

/// Central finite differences over every element of every parameter.
/// `loss` must be deterministic between calls (freeze any drop masks).
inline FDResult fd_check(const std::vector<nn::Param*>& params,
                         const std::function<double()>& loss, double h_scale = 1e-5) {
  FDResult res;
  for (nn::Param* p : params) {
    for (size_t i = 0; i < p->value.size(); ++i) {
      double saved = p->value[i];
      double h = h_scale * std::max(1.0, std::abs(saved));
      p->value[i] = saved + h;
      double lp = loss();
      p->value[i] = saved - h;
      double lm = loss();
      p->value[i] = saved;
      double fd = (lp - lm) / (2.0 * h);
      double an = p->grad[i];
      double denom = std::max({std::abs(fd), std::abs(an), 1e-3});
      double rel = std::abs(fd - an) / denom;
      if (rel > res.max_rel_err) {
        res.max_rel_err = rel;
        res.worst_param = p->name;
      }
      ++res.checked;
    }
  }
  return res;
}

inline void randomize(Tensor& t, std::mt19937_64& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> d(-scale, scale);
  for (size_t i = 0; i < t.size(); ++i) t[i] = d(rng);
}

/// Random labelled tree plus a few extra edges; always connected.
inline graph::SkeletonGraph random_graph(int n, std::mt19937_64& rng, int extra_edges = 0) {
  std::vector<graph::Edge> edges;
  std::vector<graph::Bone> bones;
  std::vector<std::string> labels;
  labels.push_back("root");
  for (int v = 1; v < n; ++v) {
    std::uniform_int_distribution<int> pick(0, v - 1);
    int parent = pick(rng);
    edges.push_back(graph::Edge{std::min(parent, v), std::max(parent, v)});
    bones.push_back(graph::Bone{parent, v});
    labels.push_back("node" + std::to_string(v));
  }
  for (int k = 0; k < extra_edges && n > 2; ++k) {
    std::uniform_int_distribution<int> pick(0, n - 1);
    int a = pick(rng), b = pick(rng);
    if (a == b) continue;
    graph::Edge e{std::min(a, b), std::max(a, b)};
    bool dup = false;
    for (const auto& have : edges) dup = dup || (have.a == e.a && have.b == e.b);
    if (!dup) edges.push_back(e);
  }
  return graph::SkeletonGraph(n, edges, bones, 0, labels);
}

}  // namespace samslr::testutil
