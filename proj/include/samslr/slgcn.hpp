#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "samslr/graph.hpp"
#include "samslr/nn.hpp"
#include "samslr/streams.hpp"

namespace samslr::slgcn {

struct BlockSpec {
  int in_channels = 0;
  int out_channels = 0;
  int temporal_stride = 1;
};

struct SLGCNConfig {
  std::vector<BlockSpec> blocks;  // empty -> default_plan()
  int input_channels = 3;
  int num_classes = 0;
  int decouple_groups = 8;
  int temporal_kernel = 9;
  bool attention = true;
  bool dropgraph = true;
  nn::DropGraphConfig dropgraph_cfg;
  int dropgraph_from_block = 5;  // 0-based index of first block with DropGraph
  graph::PartitionStrategy partition = graph::PartitionStrategy::kSpatial;
  uint64_t init_seed = 1;

  /// 64,64,64,64,128,128,128,256,256,256 with stride 2 at blocks 5 and 8.
  static std::vector<BlockSpec> default_plan(int input_channels = 3);
};

/// One SL-GCN block: decoupled spatial graph convolution, STC attention,
/// temporal convolution, residual, DropGraph.
class Block {
 public:
  Block(const BlockSpec& spec, const SLGCNConfig& cfg, const graph::SkeletonGraph& g,
        const graph::NormalizedAdjacency& adj, bool use_dropgraph, std::mt19937_64& rng);

  Tensor forward(const Tensor& x, nn::RunContext& ctx);
  Tensor backward(const Tensor& grad_out);
  void collect_params(const std::string& prefix, std::vector<nn::Param*>& out);
  void collect_state(const std::string& prefix, std::vector<nn::Param*>& out);

  nn::GraphPartitionMul& graph_mul() { return *graph_mul_; }
  nn::STCAttention* attention() { return attention_.get(); }
  nn::DropGraph* drop_graph() { return dropgraph_.get(); }

 private:
  bool attention_enabled_;
  std::unique_ptr<nn::Conv2d> scn_conv_;
  std::unique_ptr<nn::GraphPartitionMul> graph_mul_;
  std::unique_ptr<nn::BatchNorm2d> bn1_;
  std::unique_ptr<nn::STCAttention> attention_;
  std::unique_ptr<nn::Swish> act1_;
  std::unique_ptr<nn::Conv2d> tcn_conv_;
  std::unique_ptr<nn::BatchNorm2d> bn2_;
  std::unique_ptr<nn::Conv2d> res_conv_;  // null for identity residual
  std::unique_ptr<nn::BatchNorm2d> res_bn_;
  std::unique_ptr<nn::Swish> act2_;
  std::unique_ptr<nn::DropGraph> dropgraph_;
};

class Model {
 public:
  Model(SLGCNConfig cfg, const graph::SkeletonGraph& g);

  /// x is (B, C, T, N); returns pre-softmax scores (B, num_classes).
  Tensor forward(const Tensor& x, nn::RunContext& ctx);

  /// Mean smoothed cross-entropy over the batch plus parameter gradients.
  /// Drop masks are sampled once per call (or replayed when freeze_masks).
  double loss_and_grad(const Tensor& x, const std::vector<int>& labels, double epsilon,
                       std::mt19937_64& rng, bool freeze_masks = false);

  std::vector<nn::Param*> params();
  std::vector<nn::Param*> state();
  const SLGCNConfig& config() const { return cfg_; }
  int num_blocks() const { return static_cast<int>(blocks_.size()); }
  Block& block(int i) { return *blocks_[static_cast<size_t>(i)]; }

  /// Stack (T, N, 3) stream tensors into a channels-first (B, 3, T, N) batch.
  static Tensor batch_from_streams(const std::vector<streams::StreamTensor>& batch);

 private:
  SLGCNConfig cfg_;
  std::unique_ptr<nn::BatchNorm2d> input_bn_;
  std::vector<std::unique_ptr<Block>> blocks_;
  std::unique_ptr<nn::GlobalAvgPool2d> pool_;
  std::unique_ptr<nn::Linear> fc_;
};

}  // namespace samslr::slgcn
