#include "samslr/slgcn.hpp"

#include <cmath>
#include <stdexcept>

#include "samslr/losses.hpp"

namespace samslr::slgcn {

std::vector<BlockSpec> SLGCNConfig::default_plan(int input_channels) {
  std::vector<BlockSpec> plan;
  const int widths[10] = {64, 64, 64, 64, 128, 128, 128, 256, 256, 256};
  int in = input_channels;
  for (int i = 0; i < 10; ++i) {
    int stride = (i == 4 || i == 7) ? 2 : 1;
    plan.push_back(BlockSpec{in, widths[i], stride});
    in = widths[i];
  }
  return plan;
}

Block::Block(const BlockSpec& spec, const SLGCNConfig& cfg, const graph::SkeletonGraph& g,
             const graph::NormalizedAdjacency& adj, bool use_dropgraph, std::mt19937_64& rng)
    : attention_enabled_(cfg.attention) {
  if (spec.out_channels % cfg.decouple_groups != 0)
    throw std::invalid_argument("slgcn block: decouple groups must divide out_channels");
  const int partitions = static_cast<int>(adj.partitions.size());
  const int kt = cfg.temporal_kernel;
  if (kt < 1 || kt % 2 == 0) throw std::invalid_argument("slgcn block: temporal kernel must be odd");

  // No bias in the spatial operator, so it stays linear in its input.
  scn_conv_ = std::make_unique<nn::Conv2d>(spec.in_channels, spec.out_channels * partitions, 1, 1,
                                           1, 1, 0, 0, 1, false, rng);
  graph_mul_ = std::make_unique<nn::GraphPartitionMul>(adj, spec.out_channels, cfg.decouple_groups);
  bn1_ = std::make_unique<nn::BatchNorm2d>(spec.out_channels);
  // The attention module always exists so its parameters are stable
  // checkpoint content; it is only applied when enabled.
  attention_ = std::make_unique<nn::STCAttention>(spec.out_channels, g.num_nodes(), rng);
  act1_ = std::make_unique<nn::Swish>();
  tcn_conv_ = std::make_unique<nn::Conv2d>(spec.out_channels, spec.out_channels, kt, 1,
                                           spec.temporal_stride, 1, (kt - 1) / 2, 0, 1, false, rng);
  bn2_ = std::make_unique<nn::BatchNorm2d>(spec.out_channels);
  if (spec.in_channels != spec.out_channels || spec.temporal_stride != 1) {
    res_conv_ = std::make_unique<nn::Conv2d>(spec.in_channels, spec.out_channels, 1, 1,
                                             spec.temporal_stride, 1, 0, 0, 1, false, rng);
    res_bn_ = std::make_unique<nn::BatchNorm2d>(spec.out_channels);
  }
  act2_ = std::make_unique<nn::Swish>();
  if (use_dropgraph) dropgraph_ = std::make_unique<nn::DropGraph>(g, cfg.dropgraph_cfg);
}

Tensor Block::forward(const Tensor& x, nn::RunContext& ctx) {
  Tensor y = scn_conv_->forward(x, ctx);
  y = graph_mul_->forward(y, ctx);
  y = bn1_->forward(y, ctx);
  if (attention_enabled_) y = attention_->forward(y, ctx);
  y = act1_->forward(y, ctx);
  y = tcn_conv_->forward(y, ctx);
  y = bn2_->forward(y, ctx);
  Tensor res = res_conv_ ? res_bn_->forward(res_conv_->forward(x, ctx), ctx) : x;
  if (!res.same_shape(y)) throw std::runtime_error("slgcn block: residual shape mismatch");
  for (size_t i = 0; i < y.size(); ++i) y[i] += res[i];
  y = act2_->forward(y, ctx);
  if (dropgraph_) y = dropgraph_->forward(y, ctx);
  return y;
}

Tensor Block::backward(const Tensor& grad_out) {
  Tensor g = grad_out;
  if (dropgraph_) g = dropgraph_->backward(g);
  g = act2_->backward(g);
  Tensor g_res = g;  // gradient into the residual branch
  Tensor g_main = bn2_->backward(g);
  g_main = tcn_conv_->backward(g_main);
  g_main = act1_->backward(g_main);
  if (attention_enabled_) g_main = attention_->backward(g_main);
  g_main = bn1_->backward(g_main);
  g_main = graph_mul_->backward(g_main);
  Tensor grad_in = scn_conv_->backward(g_main);
  if (res_conv_) {
    Tensor r = res_bn_->backward(g_res);
    r = res_conv_->backward(r);
    grad_in.add_scaled(r, 1.0);
  } else {
    grad_in.add_scaled(g_res, 1.0);
  }
  return grad_in;
}

void Block::collect_params(const std::string& prefix, std::vector<nn::Param*>& out) {
  scn_conv_->collect_params(prefix + ".scn", out);
  graph_mul_->collect_params(prefix + ".decouple", out);
  bn1_->collect_params(prefix + ".bn1", out);
  attention_->collect_params(prefix + ".att", out);
  tcn_conv_->collect_params(prefix + ".tcn", out);
  bn2_->collect_params(prefix + ".bn2", out);
  if (res_conv_) {
    res_conv_->collect_params(prefix + ".res", out);
    res_bn_->collect_params(prefix + ".res_bn", out);
  }
}

void Block::collect_state(const std::string& prefix, std::vector<nn::Param*>& out) {
  scn_conv_->collect_state(prefix + ".scn", out);
  graph_mul_->collect_state(prefix + ".decouple", out);
  bn1_->collect_state(prefix + ".bn1", out);
  attention_->collect_state(prefix + ".att", out);
  tcn_conv_->collect_state(prefix + ".tcn", out);
  bn2_->collect_state(prefix + ".bn2", out);
  if (res_conv_) {
    res_conv_->collect_state(prefix + ".res", out);
    res_bn_->collect_state(prefix + ".res_bn", out);
  }
}

Model::Model(SLGCNConfig cfg, const graph::SkeletonGraph& g) : cfg_(std::move(cfg)) {
  if (cfg_.num_classes < 2) throw std::invalid_argument("slgcn: need at least 2 classes");
  if (cfg_.blocks.empty()) cfg_.blocks = SLGCNConfig::default_plan(cfg_.input_channels);
  if (cfg_.blocks.front().in_channels != cfg_.input_channels)
    throw std::invalid_argument("slgcn: first block must accept the input channels");
  for (size_t i = 1; i < cfg_.blocks.size(); ++i)
    if (cfg_.blocks[i].in_channels != cfg_.blocks[i - 1].out_channels)
      throw std::invalid_argument("slgcn: block channel chain is broken at block " +
                                  std::to_string(i));

  auto adj = graph::normalize_adjacency(g, cfg_.partition);
  std::mt19937_64 rng(cfg_.init_seed);
  input_bn_ = std::make_unique<nn::BatchNorm2d>(cfg_.input_channels);
  for (size_t i = 0; i < cfg_.blocks.size(); ++i) {
    bool dg = cfg_.dropgraph && static_cast<int>(i) >= cfg_.dropgraph_from_block;
    blocks_.push_back(std::make_unique<Block>(cfg_.blocks[i], cfg_, g, adj, dg, rng));
  }
  pool_ = std::make_unique<nn::GlobalAvgPool2d>();
  fc_ = std::make_unique<nn::Linear>(cfg_.blocks.back().out_channels, cfg_.num_classes, rng);
}

Tensor Model::forward(const Tensor& x, nn::RunContext& ctx) {
  if (x.ndim() != 4 || x.dim(1) != cfg_.input_channels)
    throw std::invalid_argument("slgcn: expected (B, C, T, N) input with C=" +
                                std::to_string(cfg_.input_channels));
  Tensor y = input_bn_->forward(x, ctx);
  for (auto& b : blocks_) y = b->forward(y, ctx);
  y = pool_->forward(y, ctx);
  return fc_->forward(y, ctx);
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

  Tensor g = fc_->backward(dlogits);
  g = pool_->backward(g);
  for (auto it = blocks_.rbegin(); it != blocks_.rend(); ++it) g = (*it)->backward(g);
  input_bn_->backward(g);
  return loss;
}

std::vector<nn::Param*> Model::params() {
  std::vector<nn::Param*> out;
  input_bn_->collect_params("input_bn", out);
  for (size_t i = 0; i < blocks_.size(); ++i)
    blocks_[i]->collect_params("block" + std::to_string(i), out);
  fc_->collect_params("fc", out);
  return out;
}

std::vector<nn::Param*> Model::state() {
  std::vector<nn::Param*> out;
  input_bn_->collect_state("input_bn", out);
  for (size_t i = 0; i < blocks_.size(); ++i)
    blocks_[i]->collect_state("block" + std::to_string(i), out);
  fc_->collect_state("fc", out);
  return out;
}

Tensor Model::batch_from_streams(const std::vector<streams::StreamTensor>& batch) {
  if (batch.empty()) throw std::invalid_argument("batch_from_streams: empty batch");
  const int B = static_cast<int>(batch.size());
  const int T = batch[0].data.dim(0), N = batch[0].data.dim(1);
  Tensor out({B, 3, T, N});
  for (int b = 0; b < B; ++b) {
    const Tensor& d = batch[static_cast<size_t>(b)].data;
    if (d.dim(0) != T || d.dim(1) != N)
      throw std::invalid_argument("batch_from_streams: inconsistent shapes in batch");
    for (int t = 0; t < T; ++t)
      for (int n = 0; n < N; ++n)
        for (int c = 0; c < 3; ++c) out.at4(b, c, t, n) = d.at3(t, n, c);
  }
  return out;
}

}  // namespace samslr::slgcn
