#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "samslr/ensemble.hpp"
#include "samslr/graph.hpp"
#include "samslr/losses.hpp"
#include "samslr/nn.hpp"
#include "samslr/streams.hpp"

namespace py = pybind11;
using namespace samslr;

namespace {

std::vector<std::vector<std::vector<double>>> py_normalized_adjacency(const std::string& strategy) {
  graph::PartitionStrategy s;
  if (strategy == "uniform") s = graph::PartitionStrategy::kUniform;
  else if (strategy == "spatial") s = graph::PartitionStrategy::kSpatial;
  else throw std::invalid_argument("strategy must be 'uniform' or 'spatial'");
  graph::SkeletonGraph g = graph::default_slr_graph();
  auto adj = graph::normalize_adjacency(g, s);
  std::vector<std::vector<std::vector<double>>> out;
  for (const Tensor& part : adj.partitions) {
    std::vector<std::vector<double>> mat;
    for (int i = 0; i < part.dim(0); ++i) {
      std::vector<double> row;
      for (int j = 0; j < part.dim(1); ++j) row.push_back(part.at2(i, j));
      mat.push_back(std::move(row));
    }
    out.push_back(std::move(mat));
  }
  return out;
}

std::vector<double> py_fuse(const std::vector<std::vector<double>>& scores,
                            const std::vector<double>& weights) {
  if (scores.size() != weights.size())
    throw std::invalid_argument("one weight per modality required");
  ensemble::EnsembleWeights w;
  std::vector<ensemble::ScoreVector> sv;
  for (size_t m = 0; m < scores.size(); ++m) {
    std::string tag = "m" + std::to_string(m);
    w.entries.emplace_back(tag, weights[m]);
    sv.push_back(ensemble::ScoreVector{"sample", tag, scores[m]});
  }
  return ensemble::fuse(sv, w).values;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "skeleton sign language recognition core";

  m.def("default_graph_nodes", [] { return graph::default_slr_graph().num_nodes(); });
  m.def("default_graph_edges", [] {
    std::vector<std::pair<int, int>> out;
    for (const auto& e : graph::default_slr_graph().edges()) out.emplace_back(e.a, e.b);
    return out;
  });
  m.def("default_graph_bones", [] {
    std::vector<std::pair<int, int>> out;
    for (const auto& b : graph::default_slr_graph().bones()) out.emplace_back(b.src, b.dst);
    return out;
  });
  m.def("whole_body_nodes", [] { return graph::whole_body_layout().num_nodes; });
  m.def("normalized_adjacency", &py_normalized_adjacency, py::arg("strategy") = "uniform");

  m.def("swish", [](double x) { return losses::swish(x); });
  m.def("smooth_labels", [](int label, int num_classes, double eps) {
    return losses::smooth_labels(label, num_classes, eps).values;
  });
  m.def("smoothed_cross_entropy", [](const std::vector<double>& logits, int label, double eps) {
    return losses::smoothed_cross_entropy(logits, label, eps);
  });
  m.def("softmax", [](const std::vector<double>& logits) { return losses::softmax(logits); });

  m.def("shuffle_permutation", &nn::shuffle_permutation, py::arg("channels"), py::arg("groups"));
  m.def("derive_seed", &streams::derive_seed, py::arg("base_seed"), py::arg("sample_id"));

  m.def("fuse", &py_fuse, py::arg("scores"), py::arg("weights"));
  m.def("predict", [](const std::vector<double>& values) { return ensemble::predict(values); });
}
