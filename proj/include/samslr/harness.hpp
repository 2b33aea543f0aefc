#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "samslr/config.hpp"
#include "samslr/graph.hpp"
#include "samslr/io.hpp"
#include "samslr/nn.hpp"
#include "samslr/slgcn.hpp"
#include "samslr/sstcn.hpp"
#include "samslr/streams.hpp"
#include "samslr/tensor.hpp"

namespace samslr::harness {

struct Milestone {
  int epoch = 0;
  double lr = 0.0;
  bool has_weight_decay = false;
  double weight_decay = 0.0;
};

struct TrainSchedule {
  double initial_lr = 1e-3;
  double initial_weight_decay = 1e-4;
  std::vector<Milestone> milestones;  // empty -> default 50/100 plan
  int total_epochs = 200;
  int batch_size = 32;
  uint64_t seed = 1;

  static std::vector<Milestone> default_milestones();
  void validate() const;
  double lr_at(int epoch) const;
  double weight_decay_at(int epoch) const;
};

struct EvalReport {
  double top1 = 0.0;
  double top5 = 0.0;
  std::vector<double> per_class;           // accuracy per class
  std::vector<std::vector<int>> confusion;  // [true][predicted]
};

struct ClassMotionRange {
  double freq_low = 0.0;
  double freq_high = 0.0;
};

struct SyntheticSpec {
  int num_classes = 4;
  int samples_per_class = 50;
  int frames = 40;
  double noise = 0.0;
  uint64_t seed = 1;
  double val_fraction = 0.2;
  double test_fraction = 0.2;
  bool emit_features = true;
  int feat_frames = 60;
  int feat_keypoints = 33;
  int feat_size = 24;
  std::vector<ClassMotionRange> classes;  // empty -> disjoint defaults

  void validate();
};

SyntheticSpec synthetic_spec_from_config(const config::Config& cfg);

/// Writes kp/<id>.skel (and feat/<id>.feat when enabled), manifest.csv and
/// labels.csv under out_dir. Deterministic for a fixed spec.
void generate_synthetic(const SyntheticSpec& spec, const std::string& out_dir);

/// A trainable network together with its data pipeline.
class Network {
 public:
  virtual ~Network() = default;

  /// Assemble an input batch; training mode applies augmentation with
  /// per-sample seeds derived from epoch_seed.
  virtual Tensor load_batch(const std::vector<const io::ManifestEntry*>& items,
                            const std::string& root, bool train_mode, uint64_t epoch_seed) = 0;
  virtual double loss_and_grad(const Tensor& x, const std::vector<int>& labels,
                               std::mt19937_64& rng) = 0;
  virtual Tensor forward_eval(const Tensor& x) = 0;
  virtual std::vector<nn::Param*> params() = 0;
  virtual std::vector<nn::Param*> state() = 0;
  virtual int num_classes() const = 0;
  /// Canonical configuration text, fingerprinted into checkpoints.
  virtual std::string digest_text() const = 0;
};

class SLGCNNetwork : public Network {
 public:
  SLGCNNetwork(slgcn::SLGCNConfig cfg, graph::SkeletonGraph g, streams::StreamKind kind,
               streams::AugmentationParams aug, double label_smoothing);

  Tensor load_batch(const std::vector<const io::ManifestEntry*>& items, const std::string& root,
                    bool train_mode, uint64_t epoch_seed) override;
  double loss_and_grad(const Tensor& x, const std::vector<int>& labels,
                       std::mt19937_64& rng) override;
  Tensor forward_eval(const Tensor& x) override;
  std::vector<nn::Param*> params() override { return model_.params(); }
  std::vector<nn::Param*> state() override { return model_.state(); }
  int num_classes() const override { return model_.config().num_classes; }
  std::string digest_text() const override;

  slgcn::Model& model() { return model_; }

 private:
  streams::StreamTensor derive_stream(const streams::KeypointSequence& seq) const;

  graph::SkeletonGraph graph_;
  slgcn::Model model_;
  streams::StreamKind kind_;
  streams::AugmentationParams aug_;
  double label_smoothing_;
};

class SSTCNNetwork : public Network {
 public:
  SSTCNNetwork(sstcn::SSTCNConfig cfg, double label_smoothing);

  Tensor load_batch(const std::vector<const io::ManifestEntry*>& items, const std::string& root,
                    bool train_mode, uint64_t epoch_seed) override;
  double loss_and_grad(const Tensor& x, const std::vector<int>& labels,
                       std::mt19937_64& rng) override;
  Tensor forward_eval(const Tensor& x) override;
  std::vector<nn::Param*> params() override { return model_.params(); }
  std::vector<nn::Param*> state() override { return model_.state(); }
  int num_classes() const override { return model_.config().num_classes; }
  std::string digest_text() const override;

  sstcn::Model& model() { return model_; }

 private:
  sstcn::Model model_;
  double label_smoothing_;
};

struct EpochLog {
  int epoch = 0;
  double lr = 0.0;
  double weight_decay = 0.0;
  double train_loss = 0.0;
  double val_top1 = 0.0;
};

struct TrainResult {
  std::vector<EpochLog> log;
  int best_epoch = -1;
  double best_val_top1 = 0.0;
  /// Train loss at the best-validation epoch, the finetune stop threshold.
  double stop_loss = 0.0;
  bool diverged = false;
};

struct TrainOptions {
  TrainSchedule schedule;
  double momentum = 0.9;
  double label_smoothing = 0.1;
  /// Stop early after this many epochs without a new best validation
  /// Top-1; 0 disables the cutoff (the best checkpoint is kept either way).
  int patience = 0;
  std::string out_dir;
};

/// Runs the schedule over the train split, evaluates the val split each
/// epoch, and writes log.csv, best.ckpt, last.ckpt, val_scores.csv and
/// train_meta.cfg under out_dir. On divergence the last finite state goes
/// to diverged.ckpt and the result is marked accordingly.
TrainResult train(Network& net, const std::vector<io::ManifestEntry>& manifest,
                  const std::string& root, const TrainOptions& opts);

/// Deterministic eval-mode inference over one split, in manifest order.
EvalReport evaluate(Network& net, const std::vector<io::ManifestEntry>& items,
                    const std::string& root, std::vector<io::ScoreRow>* scores_out = nullptr,
                    int batch_size = 32);

struct FinetuneOptions {
  double lr = 1e-5;
  double weight_decay = 0.0;
  double momentum = 0.9;
  double label_smoothing = 0.1;
  int batch_size = 32;
  int epoch_cap = 50;
  uint64_t seed = 1;
};

struct FinetuneResult {
  int epochs_run = 0;
  double final_loss = 0.0;
  bool stopped_by_threshold = false;
};

/// Continues training on the merged items until the running-average train
/// loss drops to stop_loss or the epoch cap is reached.
FinetuneResult finetune(Network& net, const std::vector<io::ManifestEntry>& items,
                        const std::string& root, double stop_loss, const FinetuneOptions& opts);

/// Filter a manifest by split tag; entries must carry labels for training.
std::vector<io::ManifestEntry> split_entries(const std::vector<io::ManifestEntry>& manifest,
                                             const std::string& split);

/// Build a network plus schedule from a `key = value` training config.
struct TrainSetup {
  std::unique_ptr<Network> network;
  TrainOptions options;
  std::string manifest_path;
  std::string data_root;
};
TrainSetup setup_from_config(const config::Config& cfg, const std::string& net_kind,
                             const std::string& stream_name);

}  // namespace samslr::harness
