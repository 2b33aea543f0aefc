#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "samslr/graph.hpp"
#include "samslr/tensor.hpp"

namespace samslr::nn {

enum class Mode { kTrain, kEval };

/// Per-call execution state. `freeze_masks` replays the most recently
/// sampled dropout/drop-graph masks, which keeps the loss a deterministic
/// function of the parameters during finite-difference checks.
struct RunContext {
  Mode mode = Mode::kEval;
  std::mt19937_64* rng = nullptr;
  bool freeze_masks = false;
};

struct Param {
  std::string name;
  Tensor value;
  Tensor grad;

  Param(std::string n, Tensor v) : name(std::move(n)), value(std::move(v)), grad(value.shape()) {}
};

class Layer {
 public:
  virtual ~Layer() = default;
  virtual Tensor forward(const Tensor& x, RunContext& ctx) = 0;
  /// Propagates the output gradient and accumulates parameter gradients.
  virtual Tensor backward(const Tensor& grad_out) = 0;
  /// Trainable parameters, for the optimizer and gradient checks.
  virtual void collect_params(const std::string& prefix, std::vector<Param*>& out) {}
  /// Everything a checkpoint must carry; adds non-trainable state
  /// (batch-norm running statistics) on top of collect_params.
  virtual void collect_state(const std::string& prefix, std::vector<Param*>& out) {
    collect_params(prefix, out);
  }
};

double uniform_init_limit(int fan_in);
void init_uniform(Tensor& t, double limit, std::mt19937_64& rng);

/// Grouped 2-d convolution on (B, C, H, W) tensors, im2col + GEMM.
class Conv2d : public Layer {
 public:
  Conv2d(int in_ch, int out_ch, int kh, int kw, int sh, int sw, int ph, int pw, int groups,
         bool bias, std::mt19937_64& rng);

  Tensor forward(const Tensor& x, RunContext& ctx) override;
  Tensor backward(const Tensor& grad_out) override;
  void collect_params(const std::string& prefix, std::vector<Param*>& out) override;

  Param& weight() { return weight_; }
  Param* bias() { return has_bias_ ? &bias_ : nullptr; }
  long long weight_count() const { return static_cast<long long>(weight_.value.size()); }

 private:
  int in_ch_, out_ch_, kh_, kw_, sh_, sw_, ph_, pw_, groups_;
  bool has_bias_;
  Param weight_;  // (out_ch, in_ch/groups * kh * kw)
  Param bias_;    // (out_ch)
  Tensor cached_input_;
};

class BatchNorm2d : public Layer {
 public:
  explicit BatchNorm2d(int channels, double eps = 1e-5, double momentum = 0.1);

  Tensor forward(const Tensor& x, RunContext& ctx) override;
  Tensor backward(const Tensor& grad_out) override;
  void collect_params(const std::string& prefix, std::vector<Param*>& out) override;
  void collect_state(const std::string& prefix, std::vector<Param*>& out) override;

  Param& running_mean() { return running_mean_; }
  Param& running_var() { return running_var_; }

 private:
  int channels_;
  double eps_, momentum_;
  Param gamma_, beta_;
  Param running_mean_, running_var_;  // state, saved in checkpoints, no gradients
  Tensor xhat_;
  std::vector<double> inv_std_;
  bool train_pass_ = false;
};

class Swish : public Layer {
 public:
  Tensor forward(const Tensor& x, RunContext& ctx) override;
  Tensor backward(const Tensor& grad_out) override;

 private:
  Tensor cached_input_;
};

class Linear : public Layer {
 public:
  Linear(int in_features, int out_features, std::mt19937_64& rng);

  Tensor forward(const Tensor& x, RunContext& ctx) override;
  Tensor backward(const Tensor& grad_out) override;
  void collect_params(const std::string& prefix, std::vector<Param*>& out) override;

  Param& weight() { return weight_; }
  Param& bias() { return bias_; }

 private:
  int in_, out_;
  Param weight_, bias_;
  Tensor cached_input_;
};

class Dropout : public Layer {
 public:
  explicit Dropout(double rate);

  Tensor forward(const Tensor& x, RunContext& ctx) override;
  Tensor backward(const Tensor& grad_out) override;

 private:
  double rate_;
  Tensor mask_;
  bool active_ = false;
};

/// Mean over the trailing two dimensions: (B, C, H, W) -> (B, C).
class GlobalAvgPool2d : public Layer {
 public:
  Tensor forward(const Tensor& x, RunContext& ctx) override;
  Tensor backward(const Tensor& grad_out) override;

 private:
  std::vector<int> in_shape_;
};

/// (groups, C/groups) transpose permutation of the channel axis.
class ChannelShuffle : public Layer {
 public:
  explicit ChannelShuffle(int groups);

  Tensor forward(const Tensor& x, RunContext& ctx) override;
  Tensor backward(const Tensor& grad_out) override;

 private:
  int groups_;
  int channels_ = 0;
};

std::vector<int> shuffle_permutation(int channels, int groups);
Tensor channel_shuffle(const Tensor& x, int groups);

/// Trainable decoupled adjacency product on the node axis.
/// Input (B, out_ch * P, T, N) holds one pointwise-transformed copy per
/// partition; output (B, out_ch, T, N) sums partitions, with the channel
/// groups each applying their own adjacency.
class GraphPartitionMul : public Layer {
 public:
  GraphPartitionMul(const graph::NormalizedAdjacency& adj, int out_ch, int groups);

  Tensor forward(const Tensor& x, RunContext& ctx) override;
  Tensor backward(const Tensor& grad_out) override;
  void collect_params(const std::string& prefix, std::vector<Param*>& out) override;

  int partitions() const { return partitions_; }
  Param& adjacency() { return adjacency_; }

 private:
  int nodes_, partitions_, out_ch_, groups_;
  Param adjacency_;  // (G, P, N, N)
  Tensor cached_input_;
};

/// Cascaded spatial / temporal / channel multiplicative gates.
class STCAttention : public Layer {
 public:
  STCAttention(int channels, int nodes, std::mt19937_64& rng);

  Tensor forward(const Tensor& x, RunContext& ctx) override;
  Tensor backward(const Tensor& grad_out) override;
  void collect_params(const std::string& prefix, std::vector<Param*>& out) override;

  /// Zero the gate weights and saturate the biases so every gate is 1.0.
  void force_identity_gates();

  static constexpr int kTemporalKernel = 9;

 private:
  int channels_, nodes_, reduced_;
  Param spatial_w_, spatial_b_;    // (N, N), (N)
  Param temporal_w_, temporal_b_;  // (kTemporalKernel), (1)
  Param channel_w1_, channel_b1_;  // (Cr, C), (Cr)
  Param channel_w2_, channel_b2_;  // (C, Cr), (C)
  // Forward caches.
  Tensor x_, x1_, x2_;
  Tensor ms_, gs_, mt_, gt_, mc_, z1_, h_, gc_;
};

struct DropGraphConfig {
  double keep_prob = 0.95;
  int block_hops = 1;
};

/// Training-time regularizer: random seed nodes and their <=block_hops
/// neighborhoods are zeroed across all channels and frames, survivors
/// rescaled to preserve the expected activation sum.
class DropGraph : public Layer {
 public:
  DropGraph(const graph::SkeletonGraph& g, DropGraphConfig cfg);

  Tensor forward(const Tensor& x, RunContext& ctx) override;
  Tensor backward(const Tensor& grad_out) override;

  /// Seed-node probability implied by keep_prob and the mean neighborhood size.
  double seed_probability() const { return seed_prob_; }
  const std::vector<std::vector<int>>& neighborhoods() const { return neighborhoods_; }

 private:
  DropGraphConfig cfg_;
  int nodes_;
  double seed_prob_;
  std::vector<std::vector<int>> neighborhoods_;
  Tensor node_scale_;  // (B, N): 0 for dropped nodes, rescale factor otherwise
  bool active_ = false;
};

class SGDMomentum {
 public:
  SGDMomentum(std::vector<Param*> params, double momentum);

  void step(double lr, double weight_decay);
  void zero_grad();

 private:
  std::vector<Param*> params_;
  std::vector<Tensor> velocity_;
  double momentum_;
};

}  // namespace samslr::nn
