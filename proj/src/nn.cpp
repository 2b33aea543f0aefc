#include "samslr/nn.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>

#include "samslr/losses.hpp"

namespace samslr::nn {

using MatrixRM = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapRM = Eigen::Map<MatrixRM>;
using ConstMapRM = Eigen::Map<const MatrixRM>;

double uniform_init_limit(int fan_in) { return std::sqrt(1.0 / std::max(fan_in, 1)); }

void init_uniform(Tensor& t, double limit, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> d(-limit, limit);
  for (size_t i = 0; i < t.size(); ++i) t[i] = d(rng);
}

namespace {

void check_4d(const Tensor& x, const char* who) {
  if (x.ndim() != 4) throw std::invalid_argument(std::string(who) + ": expected 4-d input");
}

int conv_out_dim(int in, int k, int s, int p) { return (in + 2 * p - k) / s + 1; }

// col is (Cg*kh*kw) x (Ho*Wo) for one sample's group slice.
void im2col(const double* x, int channels, int H, int W, int kh, int kw, int sh, int sw, int ph,
            int pw, int Ho, int Wo, double* col) {
  for (int c = 0; c < channels; ++c) {
    const double* xc = x + static_cast<size_t>(c) * H * W;
    for (int ki = 0; ki < kh; ++ki)
      for (int kj = 0; kj < kw; ++kj) {
        double* row = col + (static_cast<size_t>(c) * kh * kw + ki * kw + kj) *
                                static_cast<size_t>(Ho) * Wo;
        for (int ho = 0; ho < Ho; ++ho) {
          int hi = ho * sh - ph + ki;
          if (hi < 0 || hi >= H) {
            for (int wo = 0; wo < Wo; ++wo) row[static_cast<size_t>(ho) * Wo + wo] = 0.0;
            continue;
          }
          for (int wo = 0; wo < Wo; ++wo) {
            int wi = wo * sw - pw + kj;
            row[static_cast<size_t>(ho) * Wo + wo] =
                (wi >= 0 && wi < W) ? xc[static_cast<size_t>(hi) * W + wi] : 0.0;
          }
        }
      }
  }
}

void col2im_add(const double* col, int channels, int H, int W, int kh, int kw, int sh, int sw,
                int ph, int pw, int Ho, int Wo, double* x) {
  for (int c = 0; c < channels; ++c) {
    double* xc = x + static_cast<size_t>(c) * H * W;
    for (int ki = 0; ki < kh; ++ki)
      for (int kj = 0; kj < kw; ++kj) {
        const double* row = col + (static_cast<size_t>(c) * kh * kw + ki * kw + kj) *
                                      static_cast<size_t>(Ho) * Wo;
        for (int ho = 0; ho < Ho; ++ho) {
          int hi = ho * sh - ph + ki;
          if (hi < 0 || hi >= H) continue;
          for (int wo = 0; wo < Wo; ++wo) {
            int wi = wo * sw - pw + kj;
            if (wi >= 0 && wi < W) xc[static_cast<size_t>(hi) * W + wi] += row[static_cast<size_t>(ho) * Wo + wo];
          }
        }
      }
  }
}

}  // namespace

Conv2d::Conv2d(int in_ch, int out_ch, int kh, int kw, int sh, int sw, int ph, int pw, int groups,
               bool bias, std::mt19937_64& rng)
    : in_ch_(in_ch),
      out_ch_(out_ch),
      kh_(kh),
      kw_(kw),
      sh_(sh),
      sw_(sw),
      ph_(ph),
      pw_(pw),
      groups_(groups),
      has_bias_(bias),
      weight_("weight", Tensor({out_ch, in_ch / std::max(groups, 1) * kh * kw})),
      bias_("bias", Tensor({bias ? out_ch : 0})) {
  if (groups < 1 || in_ch % groups != 0 || out_ch % groups != 0)
    throw std::invalid_argument("conv2d: groups must divide both channel counts");
  init_uniform(weight_.value, uniform_init_limit(in_ch / groups * kh * kw), rng);
  if (has_bias_) init_uniform(bias_.value, uniform_init_limit(in_ch / groups * kh * kw), rng);
}

Tensor Conv2d::forward(const Tensor& x, RunContext&) {
  check_4d(x, "conv2d");
  const int B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  if (C != in_ch_)
    throw std::invalid_argument("conv2d: got " + std::to_string(C) + " channels, expected " +
                                std::to_string(in_ch_));
  const int Ho = conv_out_dim(H, kh_, sh_, ph_), Wo = conv_out_dim(W, kw_, sw_, pw_);
  if (Ho < 1 || Wo < 1) throw std::invalid_argument("conv2d: input smaller than kernel");
  cached_input_ = x;

  const int cg_in = in_ch_ / groups_, cg_out = out_ch_ / groups_;
  const int krows = cg_in * kh_ * kw_;
  Tensor out({B, out_ch_, Ho, Wo});
  std::vector<double> col(static_cast<size_t>(krows) * Ho * Wo);
  for (int b = 0; b < B; ++b)
    for (int g = 0; g < groups_; ++g) {
      const double* xg = x.data() + (static_cast<size_t>(b) * C + g * cg_in) * H * W;
      im2col(xg, cg_in, H, W, kh_, kw_, sh_, sw_, ph_, pw_, Ho, Wo, col.data());
      ConstMapRM wg(weight_.value.data() + static_cast<size_t>(g) * cg_out * krows, cg_out, krows);
      ConstMapRM cm(col.data(), krows, Ho * Wo);
      MapRM om(out.data() + (static_cast<size_t>(b) * out_ch_ + g * cg_out) * Ho * Wo, cg_out,
               Ho * Wo);
      om.noalias() = wg * cm;
      if (has_bias_)
        for (int c = 0; c < cg_out; ++c)
          om.row(c).array() += bias_.value[static_cast<size_t>(g * cg_out + c)];
    }
  return out;
}

Tensor Conv2d::backward(const Tensor& grad_out) {
  const Tensor& x = cached_input_;
  const int B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const int Ho = grad_out.dim(2), Wo = grad_out.dim(3);
  const int cg_in = in_ch_ / groups_, cg_out = out_ch_ / groups_;
  const int krows = cg_in * kh_ * kw_;

  Tensor grad_in(x.shape());
  std::vector<double> col(static_cast<size_t>(krows) * Ho * Wo);
  std::vector<double> dcol(col.size());
  for (int b = 0; b < B; ++b)
    for (int g = 0; g < groups_; ++g) {
      const double* xg = x.data() + (static_cast<size_t>(b) * C + g * cg_in) * H * W;
      im2col(xg, cg_in, H, W, kh_, kw_, sh_, sw_, ph_, pw_, Ho, Wo, col.data());
      ConstMapRM cm(col.data(), krows, Ho * Wo);
      ConstMapRM gm(grad_out.data() + (static_cast<size_t>(b) * out_ch_ + g * cg_out) * Ho * Wo,
                    cg_out, Ho * Wo);
      MapRM dwg(weight_.grad.data() + static_cast<size_t>(g) * cg_out * krows, cg_out, krows);
      dwg.noalias() += gm * cm.transpose();
      if (has_bias_)
        for (int c = 0; c < cg_out; ++c)
          bias_.grad[static_cast<size_t>(g * cg_out + c)] += gm.row(c).sum();
      ConstMapRM wg(weight_.value.data() + static_cast<size_t>(g) * cg_out * krows, cg_out, krows);
      MapRM dcm(dcol.data(), krows, Ho * Wo);
      dcm.noalias() = wg.transpose() * gm;
      col2im_add(dcol.data(), cg_in, H, W, kh_, kw_, sh_, sw_, ph_, pw_, Ho, Wo,
                 grad_in.data() + (static_cast<size_t>(b) * C + g * cg_in) * H * W);
    }
  return grad_in;
}

void Conv2d::collect_params(const std::string& prefix, std::vector<Param*>& out) {
  weight_.name = prefix + ".weight";
  out.push_back(&weight_);
  if (has_bias_) {
    bias_.name = prefix + ".bias";
    out.push_back(&bias_);
  }
}

BatchNorm2d::BatchNorm2d(int channels, double eps, double momentum)
    : channels_(channels),
      eps_(eps),
      momentum_(momentum),
      gamma_("gamma", Tensor::full({channels}, 1.0)),
      beta_("beta", Tensor({channels})),
      running_mean_("running_mean", Tensor({channels})),
      running_var_("running_var", Tensor::full({channels}, 1.0)) {}

Tensor BatchNorm2d::forward(const Tensor& x, RunContext& ctx) {
  check_4d(x, "batchnorm2d");
  const int B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  if (C != channels_) throw std::invalid_argument("batchnorm2d: channel mismatch");
  const long long n = static_cast<long long>(B) * H * W;
  train_pass_ = ctx.mode == Mode::kTrain;

  Tensor out(x.shape());
  xhat_ = Tensor(x.shape());
  inv_std_.assign(static_cast<size_t>(C), 0.0);
  for (int c = 0; c < C; ++c) {
    double mean, var;
    if (train_pass_) {
      double s = 0.0, s2 = 0.0;
      for (int b = 0; b < B; ++b) {
        const double* p = x.data() + (static_cast<size_t>(b) * C + c) * H * W;
        for (long long i = 0; i < static_cast<long long>(H) * W; ++i) {
          s += p[i];
          s2 += p[i] * p[i];
        }
      }
      mean = s / static_cast<double>(n);
      var = s2 / static_cast<double>(n) - mean * mean;
      if (var < 0) var = 0;
      running_mean_.value[static_cast<size_t>(c)] =
          (1 - momentum_) * running_mean_.value[static_cast<size_t>(c)] + momentum_ * mean;
      running_var_.value[static_cast<size_t>(c)] =
          (1 - momentum_) * running_var_.value[static_cast<size_t>(c)] + momentum_ * var;
    } else {
      mean = running_mean_.value[static_cast<size_t>(c)];
      var = running_var_.value[static_cast<size_t>(c)];
    }
    const double inv = 1.0 / std::sqrt(var + eps_);
    inv_std_[static_cast<size_t>(c)] = inv;
    const double g = gamma_.value[static_cast<size_t>(c)], bta = beta_.value[static_cast<size_t>(c)];
    for (int b = 0; b < B; ++b) {
      const double* p = x.data() + (static_cast<size_t>(b) * C + c) * H * W;
      double* xh = xhat_.data() + (static_cast<size_t>(b) * C + c) * H * W;
      double* o = out.data() + (static_cast<size_t>(b) * C + c) * H * W;
      for (long long i = 0; i < static_cast<long long>(H) * W; ++i) {
        xh[i] = (p[i] - mean) * inv;
        o[i] = g * xh[i] + bta;
      }
    }
  }
  return out;
}

Tensor BatchNorm2d::backward(const Tensor& grad_out) {
  const int B = grad_out.dim(0), C = grad_out.dim(1), H = grad_out.dim(2), W = grad_out.dim(3);
  const double n = static_cast<double>(static_cast<long long>(B) * H * W);
  Tensor grad_in(grad_out.shape());
  for (int c = 0; c < C; ++c) {
    double sum_dy = 0.0, sum_dy_xhat = 0.0;
    for (int b = 0; b < B; ++b) {
      const double* dy = grad_out.data() + (static_cast<size_t>(b) * C + c) * H * W;
      const double* xh = xhat_.data() + (static_cast<size_t>(b) * C + c) * H * W;
      for (long long i = 0; i < static_cast<long long>(H) * W; ++i) {
        sum_dy += dy[i];
        sum_dy_xhat += dy[i] * xh[i];
      }
    }
    gamma_.grad[static_cast<size_t>(c)] += sum_dy_xhat;
    beta_.grad[static_cast<size_t>(c)] += sum_dy;
    const double g = gamma_.value[static_cast<size_t>(c)], inv = inv_std_[static_cast<size_t>(c)];
    for (int b = 0; b < B; ++b) {
      const double* dy = grad_out.data() + (static_cast<size_t>(b) * C + c) * H * W;
      const double* xh = xhat_.data() + (static_cast<size_t>(b) * C + c) * H * W;
      double* dx = grad_in.data() + (static_cast<size_t>(b) * C + c) * H * W;
      for (long long i = 0; i < static_cast<long long>(H) * W; ++i) {
        if (train_pass_)
          dx[i] = g * inv * (dy[i] - sum_dy / n - xh[i] * sum_dy_xhat / n);
        else
          dx[i] = g * inv * dy[i];
      }
    }
  }
  return grad_in;
}

void BatchNorm2d::collect_params(const std::string& prefix, std::vector<Param*>& out) {
  gamma_.name = prefix + ".gamma";
  beta_.name = prefix + ".beta";
  out.push_back(&gamma_);
  out.push_back(&beta_);
}

void BatchNorm2d::collect_state(const std::string& prefix, std::vector<Param*>& out) {
  collect_params(prefix, out);
  running_mean_.name = prefix + ".running_mean";
  running_var_.name = prefix + ".running_var";
  out.push_back(&running_mean_);
  out.push_back(&running_var_);
}

Tensor Swish::forward(const Tensor& x, RunContext&) {
  cached_input_ = x;
  Tensor out = x;
  for (size_t i = 0; i < out.size(); ++i) out[i] = losses::swish(out[i]);
  return out;
}

Tensor Swish::backward(const Tensor& grad_out) {
  Tensor grad_in = grad_out;
  for (size_t i = 0; i < grad_in.size(); ++i) grad_in[i] *= losses::swish_grad(cached_input_[i]);
  return grad_in;
}

Linear::Linear(int in_features, int out_features, std::mt19937_64& rng)
    : in_(in_features),
      out_(out_features),
      weight_("weight", Tensor({out_features, in_features})),
      bias_("bias", Tensor({out_features})) {
  init_uniform(weight_.value, uniform_init_limit(in_features), rng);
  init_uniform(bias_.value, uniform_init_limit(in_features), rng);
}

Tensor Linear::forward(const Tensor& x, RunContext&) {
  if (x.ndim() != 2 || x.dim(1) != in_) throw std::invalid_argument("linear: bad input shape");
  cached_input_ = x;
  const int B = x.dim(0);
  Tensor out({B, out_});
  ConstMapRM xm(x.data(), B, in_);
  ConstMapRM wm(weight_.value.data(), out_, in_);
  MapRM om(out.data(), B, out_);
  om.noalias() = xm * wm.transpose();
  for (int b = 0; b < B; ++b)
    for (int o = 0; o < out_; ++o) out.at2(b, o) += bias_.value[static_cast<size_t>(o)];
  return out;
}

Tensor Linear::backward(const Tensor& grad_out) {
  const int B = cached_input_.dim(0);
  ConstMapRM xm(cached_input_.data(), B, in_);
  ConstMapRM gm(grad_out.data(), B, out_);
  MapRM dwm(weight_.grad.data(), out_, in_);
  dwm.noalias() += gm.transpose() * xm;
  for (int b = 0; b < B; ++b)
    for (int o = 0; o < out_; ++o) bias_.grad[static_cast<size_t>(o)] += grad_out.at2(b, o);
  Tensor grad_in({B, in_});
  MapRM dxm(grad_in.data(), B, in_);
  ConstMapRM wm(weight_.value.data(), out_, in_);
  dxm.noalias() = gm * wm;
  return grad_in;
}

void Linear::collect_params(const std::string& prefix, std::vector<Param*>& out) {
  weight_.name = prefix + ".weight";
  bias_.name = prefix + ".bias";
  out.push_back(&weight_);
  out.push_back(&bias_);
}

Dropout::Dropout(double rate) : rate_(rate) {
  if (rate < 0.0 || rate >= 1.0) throw std::invalid_argument("dropout: rate must be in [0,1)");
}

Tensor Dropout::forward(const Tensor& x, RunContext& ctx) {
  active_ = ctx.mode == Mode::kTrain && rate_ > 0.0;
  if (!active_) return x;
  if (!ctx.freeze_masks || !mask_.same_shape(x)) {
    if (!ctx.rng) throw std::invalid_argument("dropout: train mode needs an rng");
    mask_ = Tensor(x.shape());
    std::bernoulli_distribution keep(1.0 - rate_);
    const double scale = 1.0 / (1.0 - rate_);
    for (size_t i = 0; i < mask_.size(); ++i) mask_[i] = keep(*ctx.rng) ? scale : 0.0;
  }
  Tensor out = x;
  for (size_t i = 0; i < out.size(); ++i) out[i] *= mask_[i];
  return out;
}

Tensor Dropout::backward(const Tensor& grad_out) {
  if (!active_) return grad_out;
  Tensor grad_in = grad_out;
  for (size_t i = 0; i < grad_in.size(); ++i) grad_in[i] *= mask_[i];
  return grad_in;
}

Tensor GlobalAvgPool2d::forward(const Tensor& x, RunContext&) {
  check_4d(x, "global_avg_pool");
  in_shape_ = x.shape();
  const int B = x.dim(0), C = x.dim(1);
  const long long hw = static_cast<long long>(x.dim(2)) * x.dim(3);
  Tensor out({B, C});
  for (int b = 0; b < B; ++b)
    for (int c = 0; c < C; ++c) {
      const double* p = x.data() + (static_cast<size_t>(b) * C + c) * hw;
      double s = 0.0;
      for (long long i = 0; i < hw; ++i) s += p[i];
      out.at2(b, c) = s / static_cast<double>(hw);
    }
  return out;
}

Tensor GlobalAvgPool2d::backward(const Tensor& grad_out) {
  Tensor grad_in(in_shape_);
  const int B = in_shape_[0], C = in_shape_[1];
  const long long hw = static_cast<long long>(in_shape_[2]) * in_shape_[3];
  for (int b = 0; b < B; ++b)
    for (int c = 0; c < C; ++c) {
      const double g = grad_out.at2(b, c) / static_cast<double>(hw);
      double* p = grad_in.data() + (static_cast<size_t>(b) * C + c) * hw;
      for (long long i = 0; i < hw; ++i) p[i] = g;
    }
  return grad_in;
}

std::vector<int> shuffle_permutation(int channels, int groups) {
  if (groups < 1 || channels % groups != 0)
    throw std::invalid_argument("channel_shuffle: groups must divide channels");
  const int per = channels / groups;
  std::vector<int> perm(static_cast<size_t>(channels));
  for (int c = 0; c < channels; ++c) {
    int i = c % groups, j = c / groups;
    perm[static_cast<size_t>(c)] = i * per + j;  // out channel c reads input i*per+j
  }
  return perm;
}

Tensor channel_shuffle(const Tensor& x, int groups) {
  check_4d(x, "channel_shuffle");
  const int B = x.dim(0), C = x.dim(1);
  const long long hw = static_cast<long long>(x.dim(2)) * x.dim(3);
  auto perm = shuffle_permutation(C, groups);
  Tensor out(x.shape());
  for (int b = 0; b < B; ++b)
    for (int c = 0; c < C; ++c) {
      const double* src = x.data() + (static_cast<size_t>(b) * C + perm[static_cast<size_t>(c)]) * hw;
      double* dst = out.data() + (static_cast<size_t>(b) * C + c) * hw;
      for (long long i = 0; i < hw; ++i) dst[i] = src[i];
    }
  return out;
}

ChannelShuffle::ChannelShuffle(int groups) : groups_(groups) {}

Tensor ChannelShuffle::forward(const Tensor& x, RunContext&) {
  channels_ = x.dim(1);
  return channel_shuffle(x, groups_);
}

Tensor ChannelShuffle::backward(const Tensor& grad_out) {
  // The inverse of the (g, C/g) transpose is the (C/g, g) transpose.
  return channel_shuffle(grad_out, channels_ / groups_);
}

GraphPartitionMul::GraphPartitionMul(const graph::NormalizedAdjacency& adj, int out_ch, int groups)
    : nodes_(adj.partitions.at(0).dim(0)),
      partitions_(static_cast<int>(adj.partitions.size())),
      out_ch_(out_ch),
      groups_(groups),
      adjacency_("adjacency", Tensor({groups, partitions_, nodes_, nodes_})) {
  if (groups < 1 || out_ch % groups != 0)
    throw std::invalid_argument("graph_mul: groups must divide out_channels");
  for (int g = 0; g < groups; ++g)
    for (int p = 0; p < partitions_; ++p)
      for (int i = 0; i < nodes_; ++i)
        for (int j = 0; j < nodes_; ++j)
          adjacency_.value.at4(g, p, i, j) = adj.partitions[static_cast<size_t>(p)].at2(i, j);
}

Tensor GraphPartitionMul::forward(const Tensor& x, RunContext&) {
  check_4d(x, "graph_mul");
  const int B = x.dim(0), T = x.dim(2), N = x.dim(3);
  if (x.dim(1) != out_ch_ * partitions_ || N != nodes_)
    throw std::invalid_argument("graph_mul: input shape mismatch");
  cached_input_ = x;
  const int per_group = out_ch_ / groups_;
  Tensor out({B, out_ch_, T, N});
  for (int b = 0; b < B; ++b)
    for (int c = 0; c < out_ch_; ++c) {
      const int g = c / per_group;
      MapRM om(out.data() + (static_cast<size_t>(b) * out_ch_ + c) * T * N, T, N);
      for (int p = 0; p < partitions_; ++p) {
        ConstMapRM xm(x.data() + (static_cast<size_t>(b) * out_ch_ * partitions_ +
                                  p * out_ch_ + c) * T * N,
                      T, N);
        ConstMapRM am(adjacency_.value.data() +
                          (static_cast<size_t>(g) * partitions_ + p) * nodes_ * nodes_,
                      N, N);
        if (p == 0)
          om.noalias() = xm * am.transpose();
        else
          om.noalias() += xm * am.transpose();
      }
    }
  return out;
}

Tensor GraphPartitionMul::backward(const Tensor& grad_out) {
  const Tensor& x = cached_input_;
  const int B = x.dim(0), T = x.dim(2), N = nodes_;
  const int per_group = out_ch_ / groups_;
  Tensor grad_in(x.shape());
  for (int b = 0; b < B; ++b)
    for (int c = 0; c < out_ch_; ++c) {
      const int g = c / per_group;
      ConstMapRM gm(grad_out.data() + (static_cast<size_t>(b) * out_ch_ + c) * T * N, T, N);
      for (int p = 0; p < partitions_; ++p) {
        ConstMapRM xm(x.data() + (static_cast<size_t>(b) * out_ch_ * partitions_ +
                                  p * out_ch_ + c) * T * N,
                      T, N);
        ConstMapRM am(adjacency_.value.data() +
                          (static_cast<size_t>(g) * partitions_ + p) * nodes_ * nodes_,
                      N, N);
        MapRM dxm(grad_in.data() + (static_cast<size_t>(b) * out_ch_ * partitions_ +
                                    p * out_ch_ + c) * T * N,
                  T, N);
        dxm.noalias() = gm * am;
        MapRM dam(adjacency_.grad.data() +
                      (static_cast<size_t>(g) * partitions_ + p) * nodes_ * nodes_,
                  N, N);
        dam.noalias() += gm.transpose() * xm;
      }
    }
  return grad_in;
}

void GraphPartitionMul::collect_params(const std::string& prefix, std::vector<Param*>& out) {
  adjacency_.name = prefix + ".adjacency";
  out.push_back(&adjacency_);
}

STCAttention::STCAttention(int channels, int nodes, std::mt19937_64& rng)
    : channels_(channels),
      nodes_(nodes),
      reduced_(std::max(channels / 4, 1)),
      spatial_w_("spatial.weight", Tensor({nodes, nodes})),
      spatial_b_("spatial.bias", Tensor({nodes})),
      temporal_w_("temporal.weight", Tensor({kTemporalKernel})),
      temporal_b_("temporal.bias", Tensor({1})),
      channel_w1_("channel.fc1.weight", Tensor({reduced_, channels})),
      channel_b1_("channel.fc1.bias", Tensor({reduced_})),
      channel_w2_("channel.fc2.weight", Tensor({channels, reduced_})),
      channel_b2_("channel.fc2.bias", Tensor({channels})) {
  init_uniform(spatial_w_.value, uniform_init_limit(nodes), rng);
  init_uniform(temporal_w_.value, uniform_init_limit(kTemporalKernel), rng);
  init_uniform(channel_w1_.value, uniform_init_limit(channels), rng);
  init_uniform(channel_w2_.value, uniform_init_limit(reduced_), rng);
  // Gates start at 0.5 everywhere; the following batch norm re-scales.
}

void STCAttention::force_identity_gates() {
  spatial_w_.value.fill(0.0);
  temporal_w_.value.fill(0.0);
  channel_w1_.value.fill(0.0);
  channel_w2_.value.fill(0.0);
  channel_b1_.value.fill(0.0);
  // sigmoid(50) rounds to 1.0 exactly in double precision.
  spatial_b_.value.fill(50.0);
  temporal_b_.value.fill(50.0);
  channel_b2_.value.fill(50.0);
}

Tensor STCAttention::forward(const Tensor& x, RunContext&) {
  check_4d(x, "stc_attention");
  const int B = x.dim(0), C = x.dim(1), T = x.dim(2), N = x.dim(3);
  if (C != channels_ || N != nodes_) throw std::invalid_argument("stc_attention: shape mismatch");
  x_ = x;
  const int half = kTemporalKernel / 2;

  // Spatial gate from per-node means.
  ms_ = Tensor({B, N});
  for (int b = 0; b < B; ++b)
    for (int c = 0; c < C; ++c)
      for (int t = 0; t < T; ++t)
        for (int n = 0; n < N; ++n) ms_.at2(b, n) += x.at4(b, c, t, n);
  ms_.scale(1.0 / (static_cast<double>(C) * T));
  gs_ = Tensor({B, N});
  for (int b = 0; b < B; ++b)
    for (int n = 0; n < N; ++n) {
      double z = spatial_b_.value[static_cast<size_t>(n)];
      for (int m = 0; m < N; ++m) z += spatial_w_.value.at2(n, m) * ms_.at2(b, m);
      gs_.at2(b, n) = losses::sigmoid(z);
    }
  x1_ = Tensor(x.shape());
  for (int b = 0; b < B; ++b)
    for (int c = 0; c < C; ++c)
      for (int t = 0; t < T; ++t)
        for (int n = 0; n < N; ++n) x1_.at4(b, c, t, n) = x.at4(b, c, t, n) * gs_.at2(b, n);

  // Temporal gate from per-frame means of the gated signal.
  mt_ = Tensor({B, T});
  for (int b = 0; b < B; ++b)
    for (int c = 0; c < C; ++c)
      for (int t = 0; t < T; ++t)
        for (int n = 0; n < N; ++n) mt_.at2(b, t) += x1_.at4(b, c, t, n);
  mt_.scale(1.0 / (static_cast<double>(C) * N));
  gt_ = Tensor({B, T});
  for (int b = 0; b < B; ++b)
    for (int t = 0; t < T; ++t) {
      double z = temporal_b_.value[0];
      for (int k = 0; k < kTemporalKernel; ++k) {
        int tau = t + k - half;
        if (tau >= 0 && tau < T) z += temporal_w_.value[static_cast<size_t>(k)] * mt_.at2(b, tau);
      }
      gt_.at2(b, t) = losses::sigmoid(z);
    }
  x2_ = Tensor(x.shape());
  for (int b = 0; b < B; ++b)
    for (int c = 0; c < C; ++c)
      for (int t = 0; t < T; ++t)
        for (int n = 0; n < N; ++n) x2_.at4(b, c, t, n) = x1_.at4(b, c, t, n) * gt_.at2(b, t);

  // Channel gate: squeeze, bottleneck, expand.
  mc_ = Tensor({B, C});
  for (int b = 0; b < B; ++b)
    for (int c = 0; c < C; ++c)
      for (int t = 0; t < T; ++t)
        for (int n = 0; n < N; ++n) mc_.at2(b, c) += x2_.at4(b, c, t, n);
  mc_.scale(1.0 / (static_cast<double>(T) * N));
  z1_ = Tensor({B, reduced_});
  h_ = Tensor({B, reduced_});
  for (int b = 0; b < B; ++b)
    for (int r = 0; r < reduced_; ++r) {
      double z = channel_b1_.value[static_cast<size_t>(r)];
      for (int c = 0; c < C; ++c) z += channel_w1_.value.at2(r, c) * mc_.at2(b, c);
      z1_.at2(b, r) = z;
      h_.at2(b, r) = losses::swish(z);
    }
  gc_ = Tensor({B, C});
  for (int b = 0; b < B; ++b)
    for (int c = 0; c < C; ++c) {
      double z = channel_b2_.value[static_cast<size_t>(c)];
      for (int r = 0; r < reduced_; ++r) z += channel_w2_.value.at2(c, r) * h_.at2(b, r);
      gc_.at2(b, c) = losses::sigmoid(z);
    }
  Tensor out(x.shape());
  for (int b = 0; b < B; ++b)
    for (int c = 0; c < C; ++c)
      for (int t = 0; t < T; ++t)
        for (int n = 0; n < N; ++n) out.at4(b, c, t, n) = x2_.at4(b, c, t, n) * gc_.at2(b, c);
  return out;
}

Tensor STCAttention::backward(const Tensor& grad_out) {
  const int B = x_.dim(0), C = x_.dim(1), T = x_.dim(2), N = x_.dim(3);
  const int half = kTemporalKernel / 2;

  // Channel gate.
  Tensor dgc({B, C});
  Tensor dx2(x_.shape());
  for (int b = 0; b < B; ++b)
    for (int c = 0; c < C; ++c) {
      double s = 0.0;
      for (int t = 0; t < T; ++t)
        for (int n = 0; n < N; ++n) {
          s += grad_out.at4(b, c, t, n) * x2_.at4(b, c, t, n);
          dx2.at4(b, c, t, n) = grad_out.at4(b, c, t, n) * gc_.at2(b, c);
        }
      dgc.at2(b, c) = s;
    }
  Tensor dmc({B, C});
  for (int b = 0; b < B; ++b) {
    std::vector<double> dz2(static_cast<size_t>(C));
    for (int c = 0; c < C; ++c) {
      double g = gc_.at2(b, c);
      dz2[static_cast<size_t>(c)] = dgc.at2(b, c) * g * (1.0 - g);
      channel_b2_.grad[static_cast<size_t>(c)] += dz2[static_cast<size_t>(c)];
    }
    std::vector<double> dh(static_cast<size_t>(reduced_), 0.0);
    for (int c = 0; c < C; ++c)
      for (int r = 0; r < reduced_; ++r) {
        channel_w2_.grad.at2(c, r) += dz2[static_cast<size_t>(c)] * h_.at2(b, r);
        dh[static_cast<size_t>(r)] += dz2[static_cast<size_t>(c)] * channel_w2_.value.at2(c, r);
      }
    for (int r = 0; r < reduced_; ++r) {
      double dz1 = dh[static_cast<size_t>(r)] * losses::swish_grad(z1_.at2(b, r));
      channel_b1_.grad[static_cast<size_t>(r)] += dz1;
      for (int c = 0; c < C; ++c) {
        channel_w1_.grad.at2(r, c) += dz1 * mc_.at2(b, c);
        dmc.at2(b, c) += dz1 * channel_w1_.value.at2(r, c);
      }
    }
  }
  const double inv_tn = 1.0 / (static_cast<double>(T) * N);
  for (int b = 0; b < B; ++b)
    for (int c = 0; c < C; ++c)
      for (int t = 0; t < T; ++t)
        for (int n = 0; n < N; ++n) dx2.at4(b, c, t, n) += dmc.at2(b, c) * inv_tn;

  // Temporal gate.
  Tensor dgt({B, T});
  Tensor dx1(x_.shape());
  for (int b = 0; b < B; ++b)
    for (int t = 0; t < T; ++t) {
      double s = 0.0;
      for (int c = 0; c < C; ++c)
        for (int n = 0; n < N; ++n) {
          s += dx2.at4(b, c, t, n) * x1_.at4(b, c, t, n);
          dx1.at4(b, c, t, n) += dx2.at4(b, c, t, n) * gt_.at2(b, t);
        }
      dgt.at2(b, t) = s;
    }
  Tensor dmt({B, T});
  for (int b = 0; b < B; ++b)
    for (int t = 0; t < T; ++t) {
      double g = gt_.at2(b, t);
      double dzt = dgt.at2(b, t) * g * (1.0 - g);
      temporal_b_.grad[0] += dzt;
      for (int k = 0; k < kTemporalKernel; ++k) {
        int tau = t + k - half;
        if (tau >= 0 && tau < T) {
          temporal_w_.grad[static_cast<size_t>(k)] += dzt * mt_.at2(b, tau);
          dmt.at2(b, tau) += dzt * temporal_w_.value[static_cast<size_t>(k)];
        }
      }
    }
  const double inv_cn = 1.0 / (static_cast<double>(C) * N);
  for (int b = 0; b < B; ++b)
    for (int c = 0; c < C; ++c)
      for (int t = 0; t < T; ++t)
        for (int n = 0; n < N; ++n) dx1.at4(b, c, t, n) += dmt.at2(b, t) * inv_cn;

  // Spatial gate.
  Tensor dgs({B, N});
  Tensor dx(x_.shape());
  for (int b = 0; b < B; ++b)
    for (int n = 0; n < N; ++n) {
      double s = 0.0;
      for (int c = 0; c < C; ++c)
        for (int t = 0; t < T; ++t) {
          s += dx1.at4(b, c, t, n) * x_.at4(b, c, t, n);
          dx.at4(b, c, t, n) += dx1.at4(b, c, t, n) * gs_.at2(b, n);
        }
      dgs.at2(b, n) = s;
    }
  Tensor dms({B, N});
  for (int b = 0; b < B; ++b)
    for (int n = 0; n < N; ++n) {
      double g = gs_.at2(b, n);
      double dzs = dgs.at2(b, n) * g * (1.0 - g);
      spatial_b_.grad[static_cast<size_t>(n)] += dzs;
      for (int m = 0; m < N; ++m) {
        spatial_w_.grad.at2(n, m) += dzs * ms_.at2(b, m);
        dms.at2(b, m) += dzs * spatial_w_.value.at2(n, m);
      }
    }
  const double inv_ct = 1.0 / (static_cast<double>(C) * T);
  for (int b = 0; b < B; ++b)
    for (int c = 0; c < C; ++c)
      for (int t = 0; t < T; ++t)
        for (int n = 0; n < N; ++n) dx.at4(b, c, t, n) += dms.at2(b, n) * inv_ct;
  return dx;
}

void STCAttention::collect_params(const std::string& prefix, std::vector<Param*>& out) {
  Param* all[] = {&spatial_w_, &spatial_b_,  &temporal_w_, &temporal_b_,
                  &channel_w1_, &channel_b1_, &channel_w2_, &channel_b2_};
  const char* names[] = {"spatial.weight",     "spatial.bias",     "temporal.weight",
                         "temporal.bias",      "channel.fc1.weight", "channel.fc1.bias",
                         "channel.fc2.weight", "channel.fc2.bias"};
  for (int i = 0; i < 8; ++i) {
    all[i]->name = prefix + "." + names[i];
    out.push_back(all[i]);
  }
}

DropGraph::DropGraph(const graph::SkeletonGraph& g, DropGraphConfig cfg)
    : cfg_(cfg), nodes_(g.num_nodes()) {
  if (cfg.keep_prob <= 0.0 || cfg.keep_prob > 1.0)
    throw std::invalid_argument("drop_graph: keep_prob must be in (0,1]");
  if (cfg.block_hops < 0) throw std::invalid_argument("drop_graph: negative block_hops");
  neighborhoods_.resize(static_cast<size_t>(nodes_));
  double mean_size = 0.0;
  for (int v = 0; v < nodes_; ++v) {
    auto dist = graph::bfs_distances(g, v);
    for (int w = 0; w < nodes_; ++w)
      if (dist[static_cast<size_t>(w)] >= 0 && dist[static_cast<size_t>(w)] <= cfg.block_hops)
        neighborhoods_[static_cast<size_t>(v)].push_back(w);
    mean_size += static_cast<double>(neighborhoods_[static_cast<size_t>(v)].size());
  }
  mean_size /= static_cast<double>(nodes_);
  seed_prob_ = std::min(1.0, (1.0 - cfg.keep_prob) / mean_size);
}

Tensor DropGraph::forward(const Tensor& x, RunContext& ctx) {
  check_4d(x, "drop_graph");
  const int B = x.dim(0), C = x.dim(1), T = x.dim(2), N = x.dim(3);
  if (N != nodes_) throw std::invalid_argument("drop_graph: node count mismatch");
  active_ = ctx.mode == Mode::kTrain && cfg_.keep_prob < 1.0;
  if (!active_) return x;

  if (!ctx.freeze_masks || node_scale_.empty() || node_scale_.dim(0) != B) {
    if (!ctx.rng) throw std::invalid_argument("drop_graph: train mode needs an rng");
    node_scale_ = Tensor({B, N});
    std::bernoulli_distribution seed(seed_prob_);
    for (int b = 0; b < B; ++b) {
      std::vector<char> dropped(static_cast<size_t>(N), 0);
      for (int v = 0; v < N; ++v)
        if (seed(*ctx.rng))
          for (int w : neighborhoods_[static_cast<size_t>(v)]) dropped[static_cast<size_t>(w)] = 1;
      int kept = 0;
      for (int v = 0; v < N; ++v) kept += dropped[static_cast<size_t>(v)] ? 0 : 1;
      const double scale = kept > 0 ? static_cast<double>(N) / kept : 0.0;
      for (int v = 0; v < N; ++v)
        node_scale_.at2(b, v) = dropped[static_cast<size_t>(v)] ? 0.0 : scale;
    }
  }
  Tensor out = x;
  for (int b = 0; b < B; ++b)
    for (int c = 0; c < C; ++c)
      for (int t = 0; t < T; ++t)
        for (int n = 0; n < N; ++n) out.at4(b, c, t, n) *= node_scale_.at2(b, n);
  return out;
}

Tensor DropGraph::backward(const Tensor& grad_out) {
  if (!active_) return grad_out;
  Tensor grad_in = grad_out;
  const int B = grad_in.dim(0), C = grad_in.dim(1), T = grad_in.dim(2), N = grad_in.dim(3);
  for (int b = 0; b < B; ++b)
    for (int c = 0; c < C; ++c)
      for (int t = 0; t < T; ++t)
        for (int n = 0; n < N; ++n) grad_in.at4(b, c, t, n) *= node_scale_.at2(b, n);
  return grad_in;
}

SGDMomentum::SGDMomentum(std::vector<Param*> params, double momentum)
    : params_(std::move(params)), momentum_(momentum) {
  velocity_.reserve(params_.size());
  for (const Param* p : params_) velocity_.emplace_back(p->value.shape());
}

void SGDMomentum::step(double lr, double weight_decay) {
  for (size_t i = 0; i < params_.size(); ++i) {
    Param& p = *params_[i];
    Tensor& v = velocity_[i];
    for (size_t k = 0; k < p.value.size(); ++k) {
      double g = p.grad[k] + weight_decay * p.value[k];
      v[k] = momentum_ * v[k] + g;
      p.value[k] -= lr * v[k];
    }
  }
}

void SGDMomentum::zero_grad() {
  for (Param* p : params_) p->grad.fill(0.0);
}

}  // namespace samslr::nn
