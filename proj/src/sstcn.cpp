#include "samslr/sstcn.hpp"

#include <cmath>
#include <stdexcept>

#include "samslr/losses.hpp"

namespace samslr::sstcn {

void check_clip(const Tensor& clip, int frames, int keypoints) {
  if (clip.ndim() != 4) throw std::invalid_argument("feature clip: expected 4-d tensor");
  if (clip.dim(0) != frames || clip.dim(1) != keypoints)
    throw std::invalid_argument("feature clip: expected " + std::to_string(frames) + " frames x " +
                                std::to_string(keypoints) + " keypoints, got " +
                                std::to_string(clip.dim(0)) + " x " + std::to_string(clip.dim(1)));
  if (clip.dim(2) != clip.dim(3))
    throw std::invalid_argument("feature clip: spatial size must be square");
  if (frames == 60 && keypoints == 33 && clip.dim(2) != 12 && clip.dim(2) != 24)
    throw std::invalid_argument("feature clip: spatial size must be 12 or 24");
  for (size_t i = 0; i < clip.size(); ++i)
    if (std::isnan(clip[i])) throw std::invalid_argument("feature clip: NaN entry");
}

Tensor pool_features(const Tensor& raw, int target_size) {
  if (raw.ndim() != 4) throw std::invalid_argument("pool_features: expected 4-d tensor");
  const int F = raw.dim(0), K = raw.dim(1), H = raw.dim(2), W = raw.dim(3);
  if (target_size < 1 || H < target_size || W < target_size)
    throw std::invalid_argument("pool_features: input smaller than target");
  if (H % target_size != 0 || W % target_size != 0)
    throw std::invalid_argument("pool_features: input size must divide into pooling windows");
  const int wh = H / target_size, ww = W / target_size;
  Tensor out({F, K, target_size, target_size});
  for (int f = 0; f < F; ++f)
    for (int k = 0; k < K; ++k)
      for (int i = 0; i < target_size; ++i)
        for (int j = 0; j < target_size; ++j) {
          double m = raw.at4(f, k, i * wh, j * ww);
          for (int a = 0; a < wh; ++a)
            for (int b = 0; b < ww; ++b)
              m = std::max(m, raw.at4(f, k, i * wh + a, j * ww + b));
          out.at4(f, k, i, j) = m;
        }
  return out;
}

Tensor Model::ConvUnit::forward(const Tensor& x, nn::RunContext& ctx) {
  Tensor y = conv->forward(x, ctx);
  y = bn->forward(y, ctx);
  y = act->forward(y, ctx);
  return drop->forward(y, ctx);
}

Tensor Model::ConvUnit::backward(const Tensor& g) {
  Tensor r = drop->backward(g);
  r = act->backward(r);
  r = bn->backward(r);
  return conv->backward(r);
}

void Model::ConvUnit::collect_params(const std::string& prefix, std::vector<nn::Param*>& out) {
  conv->collect_params(prefix + ".conv", out);
  bn->collect_params(prefix + ".bn", out);
}

void Model::ConvUnit::collect_state(const std::string& prefix, std::vector<nn::Param*>& out) {
  conv->collect_state(prefix + ".conv", out);
  bn->collect_state(prefix + ".bn", out);
}

Model::ConvUnit Model::make_unit(int in_ch, int out_ch, int k, int groups, std::mt19937_64& rng) {
  ConvUnit u;
  u.conv = std::make_unique<nn::Conv2d>(in_ch, out_ch, k, k, 1, 1, (k - 1) / 2, (k - 1) / 2,
                                        groups, false, rng);
  u.bn = std::make_unique<nn::BatchNorm2d>(out_ch);
  u.act = std::make_unique<nn::Swish>();
  u.drop = std::make_unique<nn::Dropout>(cfg_.dropout_rate);
  return u;
}

Model::Model(SSTCNConfig cfg) : cfg_(cfg) {
  if (cfg_.num_classes < 2) throw std::invalid_argument("sstcn: need at least 2 classes");
  if (cfg_.frames < 2 || cfg_.keypoints < 2)
    throw std::invalid_argument("sstcn: degenerate frame/keypoint counts");
  if (cfg_.stage4_channels % cfg_.frames != 0)
    throw std::invalid_argument("sstcn: stage4_channels must be divisible by the frame count");
  const int F = cfg_.frames, K = cfg_.keypoints, C = F * K;
  std::mt19937_64 rng(cfg_.init_seed);
  s1a_ = make_unit(F, F, 1, 1, rng);
  s1b_ = make_unit(F, F, 1, 1, rng);
  shuffle1_ = std::make_unique<nn::ChannelShuffle>(F);
  s2a_ = make_unit(C, C, 3, F, rng);
  s2b_ = make_unit(C, C, 3, F, rng);
  shuffle2_ = std::make_unique<nn::ChannelShuffle>(K);
  s3a_ = make_unit(K, K, 3, K, rng);
  s3b_ = make_unit(K, K, 3, K, rng);
  s4_ = make_unit(C, cfg_.stage4_channels, 3, F, rng);
  pool_ = std::make_unique<nn::GlobalAvgPool2d>();
  fc1_ = std::make_unique<nn::Linear>(cfg_.stage4_channels, cfg_.stage4_hidden, rng);
  fc_act_ = std::make_unique<nn::Swish>();
  fc_drop_ = std::make_unique<nn::Dropout>(cfg_.dropout_rate);
  fc2_ = std::make_unique<nn::Linear>(cfg_.stage4_hidden, cfg_.num_classes, rng);
}

Tensor Model::stage3_forward(const Tensor& x, nn::RunContext& ctx) {
  const int B = x.dim(0), h = x.dim(2), w = x.dim(3);
  const int F = cfg_.frames, K = cfg_.keypoints;
  // Frames become batch entries: the 3x3 convolutions see one frame each.
  Tensor y = x.reshaped({B * F, K, h, w});
  Tensor res = y;
  y = s3a_.forward(y, ctx);
  y = s3b_.forward(y, ctx);
  for (size_t i = 0; i < y.size(); ++i) y[i] += res[i];
  return y.reshaped({B, F * K, h, w});
}

Tensor Model::forward(const Tensor& x, nn::RunContext& ctx) {
  const int F = cfg_.frames, K = cfg_.keypoints, C = F * K;
  if (x.ndim() != 4 || x.dim(1) != C)
    throw std::invalid_argument("sstcn: expected (B, " + std::to_string(C) + ", h, w) input");
  const int B = x.dim(0), h = x.dim(2), w = x.dim(3);
  if (h != cfg_.feature_size || w != cfg_.feature_size)
    throw std::invalid_argument("sstcn: feature size mismatch");

  // Stage 1: frames as channels, keypoints folded into the spatial axis;
  // the 1x1 convolutions mix time only.
  Tensor y = x.reshaped({B, F, K * h, w});
  Tensor res = y;
  y = s1a_.forward(y, ctx);
  y = s1b_.forward(y, ctx);
  for (size_t i = 0; i < y.size(); ++i) y[i] += res[i];
  y = y.reshaped({B, C, h, w});

  // Stage 2: shuffle to keypoint-major order, then F-group 3x3 convolutions
  // mix frames of one keypoint plus part of its neighbours in the ordering.
  y = shuffle1_->forward(y, ctx);
  res = y;
  y = s2a_.forward(y, ctx);
  y = s2b_.forward(y, ctx);
  for (size_t i = 0; i < y.size(); ++i) y[i] += res[i];

  // Stage 3: back to frame-major, strictly per-frame spatial processing.
  y = shuffle2_->forward(y, ctx);
  y = stage3_forward(y, ctx);

  // Stage 4: 3x3 reduction, pooled, two dense classifier layers.
  y = s4_.forward(y, ctx);
  y = pool_->forward(y, ctx);
  y = fc1_->forward(y, ctx);
  y = fc_act_->forward(y, ctx);
  y = fc_drop_->forward(y, ctx);
  return fc2_->forward(y, ctx);
}

double Model::loss_and_grad(const Tensor& x, const std::vector<int>& labels, double epsilon,
                            std::mt19937_64& rng, bool freeze_masks) {
  const int B = x.dim(0);
  if (static_cast<int>(labels.size()) != B)
    throw std::invalid_argument("loss_and_grad: label count does not match batch");
  nn::RunContext ctx{nn::Mode::kTrain, &rng, freeze_masks};
  Tensor logits = forward(x, ctx);

  double loss = 0.0;
  Tensor dlogits(logits.shape());
  std::vector<double> row(static_cast<size_t>(cfg_.num_classes));
  std::vector<double> grow;
  for (int b = 0; b < B; ++b) {
    for (int k = 0; k < cfg_.num_classes; ++k) row[static_cast<size_t>(k)] = logits.at2(b, k);
    loss += losses::smoothed_cross_entropy_grad(row, labels[static_cast<size_t>(b)], epsilon, grow);
    for (int k = 0; k < cfg_.num_classes; ++k)
      dlogits.at2(b, k) = grow[static_cast<size_t>(k)] / static_cast<double>(B);
  }
  loss /= static_cast<double>(B);
  if (!std::isfinite(loss)) {
    for (nn::Param* p : params())
      for (size_t i = 0; i < p->value.size(); ++i)
        if (!std::isfinite(p->value[i]))
          throw std::runtime_error("loss_and_grad: non-finite loss, offending parameter " + p->name);
    throw std::runtime_error("loss_and_grad: non-finite loss");
  }

  const int F = cfg_.frames, K = cfg_.keypoints, C = F * K;
  const int h = x.dim(2), w = x.dim(3);
  Tensor g = fc2_->backward(dlogits);
  g = fc_drop_->backward(g);
  g = fc_act_->backward(g);
  g = fc1_->backward(g);
  g = pool_->backward(g);
  g = s4_.backward(g);

  // Stage 3 (residual around the two per-frame units).
  g = g.reshaped({B * F, K, h, w});
  Tensor g_res = g;
  g = s3b_.backward(g);
  g = s3a_.backward(g);
  g.add_scaled(g_res, 1.0);
  g = g.reshaped({B, C, h, w});
  g = shuffle2_->backward(g);

  // Stage 2.
  g_res = g;
  g = s2b_.backward(g);
  g = s2a_.backward(g);
  g.add_scaled(g_res, 1.0);
  g = shuffle1_->backward(g);

  // Stage 1.
  g = g.reshaped({B, F, K * h, w});
  g_res = g;
  g = s1b_.backward(g);
  g = s1a_.backward(g);
  g.add_scaled(g_res, 1.0);
  return loss;
}

std::vector<nn::Param*> Model::params() {
  std::vector<nn::Param*> out;
  s1a_.collect_params("stage1.a", out);
  s1b_.collect_params("stage1.b", out);
  s2a_.collect_params("stage2.a", out);
  s2b_.collect_params("stage2.b", out);
  s3a_.collect_params("stage3.a", out);
  s3b_.collect_params("stage3.b", out);
  s4_.collect_params("stage4", out);
  fc1_->collect_params("classifier.fc1", out);
  fc2_->collect_params("classifier.fc2", out);
  return out;
}

std::vector<nn::Param*> Model::state() {
  std::vector<nn::Param*> out;
  s1a_.collect_state("stage1.a", out);
  s1b_.collect_state("stage1.b", out);
  s2a_.collect_state("stage2.a", out);
  s2b_.collect_state("stage2.b", out);
  s3a_.collect_state("stage3.a", out);
  s3b_.collect_state("stage3.b", out);
  s4_.collect_state("stage4", out);
  fc1_->collect_params("classifier.fc1", out);
  fc2_->collect_params("classifier.fc2", out);
  return out;
}

long long Model::stage2_conv_params() const { return s2a_.conv->weight_count(); }
long long Model::stage3_conv_params() const { return s3a_.conv->weight_count(); }

Tensor Model::batch_from_clips(const std::vector<Tensor>& clips) {
  if (clips.empty()) throw std::invalid_argument("batch_from_clips: empty batch");
  const int F = clips[0].dim(0), K = clips[0].dim(1), h = clips[0].dim(2), w = clips[0].dim(3);
  const int B = static_cast<int>(clips.size());
  Tensor out({B, F * K, h, w});
  size_t per = clips[0].size();
  for (int b = 0; b < B; ++b) {
    if (!clips[static_cast<size_t>(b)].same_shape(clips[0]))
      throw std::invalid_argument("batch_from_clips: inconsistent clip shapes");
    for (size_t i = 0; i < per; ++i) out[static_cast<size_t>(b) * per + i] = clips[static_cast<size_t>(b)][i];
  }
  return out;
}

}  // namespace samslr::sstcn
