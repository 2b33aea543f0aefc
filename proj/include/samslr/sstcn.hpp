#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "samslr/nn.hpp"
#include "samslr/tensor.hpp"

namespace samslr::sstcn {

struct SSTCNConfig {
  int feature_size = 24;  // square side after max pooling, 12 or 24
  int frames = 60;
  int keypoints = 33;
  double dropout_rate = 0.1;
  int num_classes = 0;
  int stage4_channels = 240;  // divisible by `frames`
  int stage4_hidden = 256;
  uint64_t init_seed = 1;
};

/// Validate a (frames, keypoints, h, w) clip against the expected geometry.
void check_clip(const Tensor& clip, int frames = 60, int keypoints = 33);

/// Windowed max pooling down to a square target size; sizes must divide.
Tensor pool_features(const Tensor& raw, int target_size);

/// Four-stage separable network over per-keypoint feature maps:
/// temporal 1x1 mixing, grouped 3x3 per-frame groups, grouped 3x3
/// per-keypoint spatial, then a 3x3-reduced classifier head.
/// Stages 1-3 carry residual additions; Swish and dropout throughout.
class Model {
 public:
  explicit Model(SSTCNConfig cfg);

  /// x is (B, frames*keypoints, h, w); returns (B, num_classes) scores.
  Tensor forward(const Tensor& x, nn::RunContext& ctx);

  double loss_and_grad(const Tensor& x, const std::vector<int>& labels, double epsilon,
                       std::mt19937_64& rng, bool freeze_masks = false);

  std::vector<nn::Param*> params();
  std::vector<nn::Param*> state();
  const SSTCNConfig& config() const { return cfg_; }

  /// Conv weight-parameter counts for the two grouped stages, used to
  /// verify the grouped-vs-standard parameter economy.
  long long stage2_conv_params() const;
  long long stage3_conv_params() const;

  /// Stack per-sample (frames, keypoints, h, w) clips into a batch.
  static Tensor batch_from_clips(const std::vector<Tensor>& clips);

  /// Forward of stage 3 alone on a (B, frames*keypoints, h, w) tensor,
  /// exposed so per-frame locality can be checked directly.
  Tensor stage3_forward(const Tensor& x, nn::RunContext& ctx);

 private:
  struct ConvUnit {
    std::unique_ptr<nn::Conv2d> conv;
    std::unique_ptr<nn::BatchNorm2d> bn;
    std::unique_ptr<nn::Swish> act;
    std::unique_ptr<nn::Dropout> drop;

    Tensor forward(const Tensor& x, nn::RunContext& ctx);
    Tensor backward(const Tensor& g);
    void collect_params(const std::string& prefix, std::vector<nn::Param*>& out);
    void collect_state(const std::string& prefix, std::vector<nn::Param*>& out);
  };

  ConvUnit make_unit(int in_ch, int out_ch, int k, int groups, std::mt19937_64& rng);

  SSTCNConfig cfg_;
  ConvUnit s1a_, s1b_;  // temporal 1x1, on (B, F, K*h, w)
  std::unique_ptr<nn::ChannelShuffle> shuffle1_;
  ConvUnit s2a_, s2b_;  // grouped 3x3, F groups, on (B, F*K, h, w)
  std::unique_ptr<nn::ChannelShuffle> shuffle2_;
  ConvUnit s3a_, s3b_;  // depthwise 3x3 per keypoint, on (B*F, K, h, w)
  ConvUnit s4_;         // grouped 3x3 reduction
  std::unique_ptr<nn::GlobalAvgPool2d> pool_;
  std::unique_ptr<nn::Linear> fc1_;
  std::unique_ptr<nn::Swish> fc_act_;
  std::unique_ptr<nn::Dropout> fc_drop_;
  std::unique_ptr<nn::Linear> fc2_;
};

}  // namespace samslr::sstcn
