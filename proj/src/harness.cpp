#include "samslr/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "samslr/checkpoint.hpp"
#include "samslr/ensemble.hpp"

namespace fs = std::filesystem;

namespace samslr::harness {

std::vector<Milestone> TrainSchedule::default_milestones() {
  return {Milestone{50, 1e-4, true, 0.0}, Milestone{100, 1e-5, false, 0.0}};
}

void TrainSchedule::validate() const {
  if (total_epochs < 0) throw std::invalid_argument("schedule: negative epoch count");
  if (batch_size < 1) throw std::invalid_argument("schedule: batch size must be positive");
  if (initial_lr <= 0) throw std::invalid_argument("schedule: learning rate must be positive");
  for (size_t i = 1; i < milestones.size(); ++i)
    if (milestones[i].epoch <= milestones[i - 1].epoch)
      throw std::invalid_argument("schedule: milestones must be strictly increasing");
  if (!milestones.empty() && total_epochs > 0 && milestones.back().epoch > total_epochs)
    throw std::invalid_argument("schedule: total epochs below last milestone");
}

double TrainSchedule::lr_at(int epoch) const {
  double lr = initial_lr;
  for (const Milestone& m : milestones)
    if (epoch >= m.epoch) lr = m.lr;
  return lr;
}

double TrainSchedule::weight_decay_at(int epoch) const {
  double wd = initial_weight_decay;
  for (const Milestone& m : milestones)
    if (epoch >= m.epoch && m.has_weight_decay) wd = m.weight_decay;
  return wd;
}

void SyntheticSpec::validate() {
  if (num_classes < 2) throw std::invalid_argument("synthetic: need at least 2 classes");
  if (samples_per_class < 1) throw std::invalid_argument("synthetic: need samples per class");
  if (frames < 4) throw std::invalid_argument("synthetic: need at least 4 frames");
  if (noise < 0) throw std::invalid_argument("synthetic: negative noise");
  if (val_fraction < 0 || test_fraction < 0 || val_fraction + test_fraction >= 1.0)
    throw std::invalid_argument("synthetic: split fractions must leave a train share");
  if (classes.empty()) {
    for (int c = 0; c < num_classes; ++c)
      classes.push_back(ClassMotionRange{0.5 + 1.0 * c, 1.1 + 1.0 * c});
  }
  if (static_cast<int>(classes.size()) != num_classes)
    throw std::invalid_argument("synthetic: one motion range per class required");
  for (const auto& r : classes)
    if (!(r.freq_low < r.freq_high))
      throw std::invalid_argument("synthetic: empty class frequency range");
  for (size_t a = 0; a < classes.size(); ++a)
    for (size_t b = a + 1; b < classes.size(); ++b) {
      bool disjoint =
          classes[a].freq_high <= classes[b].freq_low || classes[b].freq_high <= classes[a].freq_low;
      if (!disjoint)
        throw std::invalid_argument("synthetic: overlapping class parameter ranges (" +
                                    std::to_string(a) + ", " + std::to_string(b) + ")");
    }
  if (emit_features) {
    if (feat_frames < 1 || feat_keypoints < 1 || feat_size < 4)
      throw std::invalid_argument("synthetic: bad feature clip geometry");
  }
}

SyntheticSpec synthetic_spec_from_config(const config::Config& cfg) {
  SyntheticSpec spec;
  spec.num_classes = static_cast<int>(cfg.get_int("num_classes", spec.num_classes));
  spec.samples_per_class = static_cast<int>(cfg.get_int("samples_per_class", spec.samples_per_class));
  spec.frames = static_cast<int>(cfg.get_int("frames", spec.frames));
  spec.noise = cfg.get_double("noise", spec.noise);
  spec.seed = static_cast<uint64_t>(cfg.get_int("seed", 1));
  spec.val_fraction = cfg.get_double("val_fraction", spec.val_fraction);
  spec.test_fraction = cfg.get_double("test_fraction", spec.test_fraction);
  spec.emit_features = cfg.get_bool("emit_features", spec.emit_features);
  spec.feat_frames = static_cast<int>(cfg.get_int("feat_frames", spec.feat_frames));
  spec.feat_keypoints = static_cast<int>(cfg.get_int("feat_keypoints", spec.feat_keypoints));
  spec.feat_size = static_cast<int>(cfg.get_int("feat_size", spec.feat_size));
  for (int c = 0;; ++c) {
    std::string lo = "class" + std::to_string(c) + "_freq_low";
    std::string hi = "class" + std::to_string(c) + "_freq_high";
    if (!cfg.has(lo) && !cfg.has(hi)) break;
    spec.classes.push_back(ClassMotionRange{cfg.get_double(lo), cfg.get_double(hi)});
  }
  spec.validate();
  return spec;
}

namespace {

std::string sample_name(int c, int i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "c%d_s%03d", c, i);
  return buf;
}

/// Deterministic rest pose for the 27-node graph, centered in a 512x512
/// frame with the nodes spread on two rings.
void base_pose(int nodes, std::vector<double>& bx, std::vector<double>& by) {
  bx.resize(static_cast<size_t>(nodes));
  by.resize(static_cast<size_t>(nodes));
  for (int n = 0; n < nodes; ++n) {
    double ring = (n % 2 == 0) ? 90.0 : 160.0;
    double ang = 2.0 * M_PI * n / nodes;
    bx[static_cast<size_t>(n)] = 256.0 + ring * std::cos(ang);
    by[static_cast<size_t>(n)] = 256.0 + ring * std::sin(ang);
  }
}

Tensor synthesize_keypoints(const SyntheticSpec& spec, int nodes, double freq, double phase,
                            std::mt19937_64& rng) {
  std::vector<double> bx, by;
  base_pose(nodes, bx, by);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Tensor out({spec.frames, nodes, 3});
  for (int t = 0; t < spec.frames; ++t) {
    double phi = 2.0 * M_PI * freq * t / spec.frames + phase;
    for (int n = 0; n < nodes; ++n) {
      double amp = 30.0 + 2.0 * (n % 5);
      double node_phase = 0.35 * n;
      double x = bx[static_cast<size_t>(n)] + amp * std::sin(phi + node_phase);
      double y = by[static_cast<size_t>(n)] + amp * std::cos(phi + node_phase);
      if (spec.noise > 0) {
        x += spec.noise * gauss(rng);
        y += spec.noise * gauss(rng);
      }
      out.at3(t, n, 0) = std::clamp(x, 0.0, 511.0);
      out.at3(t, n, 1) = std::clamp(y, 0.0, 511.0);
      out.at3(t, n, 2) = 1.0;
    }
  }
  return out;
}

Tensor synthesize_features(const SyntheticSpec& spec, const Tensor& keypoints,
                           std::mt19937_64& rng) {
  const int F = spec.feat_frames, K = spec.feat_keypoints, S = spec.feat_size;
  const int T = keypoints.dim(0), N = keypoints.dim(1);
  const double sigma = std::max(1.0, S / 8.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Tensor out({F, K, S, S});
  for (int f = 0; f < F; ++f) {
    int t = static_cast<int>(static_cast<long long>(f) * T / F);
    for (int k = 0; k < K; ++k) {
      int n = k % N;
      double cx = keypoints.at3(t, n, 0) / 512.0 * S;
      double cy = keypoints.at3(t, n, 1) / 512.0 * S;
      for (int y = 0; y < S; ++y)
        for (int x = 0; x < S; ++x) {
          double d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
          double v = std::exp(-d2 / (2.0 * sigma * sigma));
          if (spec.noise > 0) v += 0.01 * spec.noise * gauss(rng);
          out.at4(f, k, y, x) = v;
        }
    }
  }
  return out;
}

std::string split_for(const SyntheticSpec& spec, int i) {
  int n_test = static_cast<int>(spec.test_fraction * spec.samples_per_class);
  int n_val = static_cast<int>(spec.val_fraction * spec.samples_per_class);
  int n_train = spec.samples_per_class - n_val - n_test;
  if (i < n_train) return "train";
  if (i < n_train + n_val) return "val";
  return "test";
}

}  // namespace

void generate_synthetic(const SyntheticSpec& spec_in, const std::string& out_dir) {
  SyntheticSpec spec = spec_in;
  spec.validate();
  const graph::SkeletonGraph g = graph::default_slr_graph();
  const int nodes = g.num_nodes();

  fs::create_directories(fs::path(out_dir) / "kp");
  if (spec.emit_features) fs::create_directories(fs::path(out_dir) / "feat");

  std::vector<io::ManifestEntry> manifest, feat_manifest;
  std::vector<std::pair<std::string, int>> labels;
  for (int c = 0; c < spec.num_classes; ++c) {
    const ClassMotionRange& range = spec.classes[static_cast<size_t>(c)];
    for (int i = 0; i < spec.samples_per_class; ++i) {
      const std::string id = sample_name(c, i);
      std::mt19937_64 rng(streams::derive_seed(spec.seed, id));
      std::uniform_real_distribution<double> freq_dist(range.freq_low, range.freq_high);
      // A mild phase jitter keeps samples distinct without washing out the
      // per-class frequency signal in the raw trajectories.
      std::uniform_real_distribution<double> phase_dist(0.0, 0.4);
      double freq = freq_dist(rng);
      double phase = phase_dist(rng);

      Tensor kp = synthesize_keypoints(spec, nodes, freq, phase, rng);
      std::string kp_rel = "kp/" + id + ".skel";
      io::save_keypoints((fs::path(out_dir) / kp_rel).string(), kp);
      std::string split = split_for(spec, i);
      manifest.push_back(io::ManifestEntry{id, kp_rel, c, split});
      labels.emplace_back(id, c);

      if (spec.emit_features) {
        Tensor feat = synthesize_features(spec, kp, rng);
        std::string feat_rel = "feat/" + id + ".feat";
        io::save_feature_clip((fs::path(out_dir) / feat_rel).string(), feat);
        feat_manifest.push_back(io::ManifestEntry{id, feat_rel, c, split});
      }
    }
  }
  io::save_manifest((fs::path(out_dir) / "manifest.csv").string(), manifest);
  if (spec.emit_features)
    io::save_manifest((fs::path(out_dir) / "manifest_feat.csv").string(), feat_manifest);
  io::save_labels((fs::path(out_dir) / "labels.csv").string(), labels);
}

SLGCNNetwork::SLGCNNetwork(slgcn::SLGCNConfig cfg, graph::SkeletonGraph g,
                           streams::StreamKind kind, streams::AugmentationParams aug,
                           double label_smoothing)
    : graph_(std::move(g)),
      model_(std::move(cfg), graph_),
      kind_(kind),
      aug_(aug),
      label_smoothing_(label_smoothing) {}

streams::StreamTensor SLGCNNetwork::derive_stream(const streams::KeypointSequence& seq) const {
  streams::StreamTensor joint = streams::to_joint_stream(seq);
  switch (kind_) {
    case streams::StreamKind::kJoint:
      return joint;
    case streams::StreamKind::kBone:
      return streams::compute_bones(joint, graph_);
    case streams::StreamKind::kJointMotion:
      return streams::compute_motion(joint);
    case streams::StreamKind::kBoneMotion:
      return streams::compute_motion(streams::compute_bones(joint, graph_));
  }
  throw std::logic_error("unknown stream kind");
}

Tensor SLGCNNetwork::load_batch(const std::vector<const io::ManifestEntry*>& items,
                                const std::string& root, bool train_mode, uint64_t epoch_seed) {
  std::vector<streams::StreamTensor> batch;
  batch.reserve(items.size());
  for (const io::ManifestEntry* e : items) {
    streams::KeypointSequence seq;
    seq.data = io::load_keypoints((fs::path(root) / e->relative_path).string());
    seq.sample_id = e->sample_id;
    if (e->label) seq.label = *e->label;
    seq = streams::normalize_coords(seq);
    if (train_mode) {
      streams::AugmentationParams p = aug_;
      p.rng_seed = epoch_seed;
      seq = streams::augment(seq, p, graph_);
    } else {
      seq = streams::sample_frames(seq, aug_.target_len, streams::SampleMode::kUniform, 0);
    }
    batch.push_back(derive_stream(seq));
  }
  return slgcn::Model::batch_from_streams(batch);
}

double SLGCNNetwork::loss_and_grad(const Tensor& x, const std::vector<int>& labels,
                                   std::mt19937_64& rng) {
  return model_.loss_and_grad(x, labels, label_smoothing_, rng);
}

Tensor SLGCNNetwork::forward_eval(const Tensor& x) {
  nn::RunContext ctx{nn::Mode::kEval, nullptr, false};
  return model_.forward(x, ctx);
}

std::string SLGCNNetwork::digest_text() const {
  const slgcn::SLGCNConfig& c = model_.config();
  std::ostringstream out;
  out << "slgcn stream=" << streams::stream_kind_name(kind_) << " classes=" << c.num_classes
      << " groups=" << c.decouple_groups << " kt=" << c.temporal_kernel
      << " att=" << c.attention << " dg=" << c.dropgraph << " nodes=" << graph_.num_nodes()
      << " len=" << aug_.target_len << " blocks=";
  for (const auto& b : c.blocks) out << b.in_channels << ":" << b.out_channels << ":"
                                     << b.temporal_stride << ",";
  return out.str();
}

SSTCNNetwork::SSTCNNetwork(sstcn::SSTCNConfig cfg, double label_smoothing)
    : model_(std::move(cfg)), label_smoothing_(label_smoothing) {}

Tensor SSTCNNetwork::load_batch(const std::vector<const io::ManifestEntry*>& items,
                                const std::string& root, bool, uint64_t) {
  const sstcn::SSTCNConfig& c = model_.config();
  std::vector<Tensor> clips;
  clips.reserve(items.size());
  for (const io::ManifestEntry* e : items) {
    Tensor raw = io::load_feature_clip((fs::path(root) / e->relative_path).string());
    if (raw.dim(0) != c.frames || raw.dim(1) != c.keypoints)
      throw std::invalid_argument("feature clip geometry mismatch for " + e->sample_id);
    Tensor clip = raw.dim(2) == c.feature_size ? raw : sstcn::pool_features(raw, c.feature_size);
    clips.push_back(std::move(clip));
  }
  return sstcn::Model::batch_from_clips(clips);
}

double SSTCNNetwork::loss_and_grad(const Tensor& x, const std::vector<int>& labels,
                                   std::mt19937_64& rng) {
  return model_.loss_and_grad(x, labels, label_smoothing_, rng);
}

Tensor SSTCNNetwork::forward_eval(const Tensor& x) {
  nn::RunContext ctx{nn::Mode::kEval, nullptr, false};
  return model_.forward(x, ctx);
}

std::string SSTCNNetwork::digest_text() const {
  const sstcn::SSTCNConfig& c = model_.config();
  std::ostringstream out;
  out << "sstcn classes=" << c.num_classes << " frames=" << c.frames << " kp=" << c.keypoints
      << " size=" << c.feature_size << " s4=" << c.stage4_channels << " hidden="
      << c.stage4_hidden;
  return out.str();
}

std::vector<io::ManifestEntry> split_entries(const std::vector<io::ManifestEntry>& manifest,
                                             const std::string& split) {
  std::vector<io::ManifestEntry> out;
  for (const auto& e : manifest)
    if (e.split == split) out.push_back(e);
  return out;
}

namespace {

void check_files(const std::vector<io::ManifestEntry>& items, const std::string& root) {
  bool missing = false;
  for (const auto& e : items) {
    fs::path p = fs::path(root) / e.relative_path;
    if (!fs::exists(p)) {
      std::cerr << "missing sample file: " << e.sample_id << " -> " << p.string() << "\n";
      missing = true;
    }
  }
  if (missing) throw std::runtime_error("manifest references missing files");
}

std::vector<int> labels_of(const std::vector<const io::ManifestEntry*>& items) {
  std::vector<int> labels;
  labels.reserve(items.size());
  for (const io::ManifestEntry* e : items) {
    if (!e->label) throw std::invalid_argument("sample " + e->sample_id + " carries no label");
    labels.push_back(*e->label);
  }
  return labels;
}

std::vector<double> snapshot(const std::vector<nn::Param*>& state) {
  std::vector<double> flat;
  for (const nn::Param* p : state)
    for (size_t i = 0; i < p->value.size(); ++i) flat.push_back(p->value[i]);
  return flat;
}

void restore(const std::vector<nn::Param*>& state, const std::vector<double>& flat) {
  size_t k = 0;
  for (nn::Param* p : state)
    for (size_t i = 0; i < p->value.size(); ++i) p->value[i] = flat[k++];
}

double run_epoch(Network& net, const std::vector<io::ManifestEntry>& items,
                 const std::string& root, nn::SGDMomentum& opt, double lr, double wd,
                 int batch_size, std::mt19937_64& rng, uint64_t epoch_seed) {
  std::vector<size_t> order(items.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::shuffle(order.begin(), order.end(), rng);

  double total = 0.0;
  long long seen = 0;
  for (size_t start = 0; start < order.size(); start += static_cast<size_t>(batch_size)) {
    size_t end = std::min(order.size(), start + static_cast<size_t>(batch_size));
    std::vector<const io::ManifestEntry*> batch;
    for (size_t i = start; i < end; ++i) batch.push_back(&items[order[i]]);
    Tensor x = net.load_batch(batch, root, true, epoch_seed);
    double loss = net.loss_and_grad(x, labels_of(batch), rng);
    opt.step(lr, wd);
    opt.zero_grad();
    total += loss * static_cast<double>(batch.size());
    seen += static_cast<long long>(batch.size());
  }
  return seen > 0 ? total / static_cast<double>(seen) : 0.0;
}

void write_log(const std::string& path, const std::vector<EpochLog>& log) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << "epoch,lr,weight_decay,train_loss,val_top1\n";
  char buf[160];
  for (const EpochLog& e : log) {
    std::snprintf(buf, sizeof(buf), "%d,%.12g,%.12g,%.12g,%.12g\n", e.epoch, e.lr, e.weight_decay,
                  e.train_loss, e.val_top1);
    out << buf;
  }
}

}  // namespace

EvalReport evaluate(Network& net, const std::vector<io::ManifestEntry>& items,
                    const std::string& root, std::vector<io::ScoreRow>* scores_out,
                    int batch_size) {
  check_files(items, root);
  const int nc = net.num_classes();
  EvalReport report;
  report.per_class.assign(static_cast<size_t>(nc), 0.0);
  report.confusion.assign(static_cast<size_t>(nc), std::vector<int>(static_cast<size_t>(nc), 0));
  std::vector<int> class_total(static_cast<size_t>(nc), 0);
  if (scores_out) scores_out->clear();

  long long top1_hits = 0, top5_hits = 0, total = 0;
  for (size_t start = 0; start < items.size(); start += static_cast<size_t>(batch_size)) {
    size_t end = std::min(items.size(), start + static_cast<size_t>(batch_size));
    std::vector<const io::ManifestEntry*> batch;
    for (size_t i = start; i < end; ++i) batch.push_back(&items[i]);
    Tensor x = net.load_batch(batch, root, false, 0);
    Tensor scores = net.forward_eval(x);
    for (size_t b = 0; b < batch.size(); ++b) {
      std::vector<double> row(static_cast<size_t>(nc));
      for (int k = 0; k < nc; ++k) row[static_cast<size_t>(k)] = scores.at2(static_cast<int>(b), k);
      if (scores_out) scores_out->push_back(io::ScoreRow{batch[b]->sample_id, row});
      if (!batch[b]->label) continue;
      int truth = *batch[b]->label;
      if (truth < 0 || truth >= nc)
        throw std::invalid_argument("label out of range for " + batch[b]->sample_id);
      int pred = ensemble::predict(row);
      std::vector<int> idx(static_cast<size_t>(nc));
      std::iota(idx.begin(), idx.end(), 0);
      std::stable_sort(idx.begin(), idx.end(), [&](int a, int c) {
        return row[static_cast<size_t>(a)] > row[static_cast<size_t>(c)];
      });
      bool in_top5 = false;
      for (int k = 0; k < std::min(5, nc); ++k) in_top5 = in_top5 || idx[static_cast<size_t>(k)] == truth;
      top1_hits += pred == truth;
      top5_hits += in_top5;
      ++total;
      ++class_total[static_cast<size_t>(truth)];
      report.confusion[static_cast<size_t>(truth)][static_cast<size_t>(pred)] += 1;
      if (pred == truth) report.per_class[static_cast<size_t>(truth)] += 1.0;
    }
  }
  if (total > 0) {
    report.top1 = static_cast<double>(top1_hits) / static_cast<double>(total);
    report.top5 = static_cast<double>(top5_hits) / static_cast<double>(total);
  }
  for (int c = 0; c < nc; ++c)
    if (class_total[static_cast<size_t>(c)] > 0)
      report.per_class[static_cast<size_t>(c)] /= class_total[static_cast<size_t>(c)];
  return report;
}

TrainResult train(Network& net, const std::vector<io::ManifestEntry>& manifest,
                  const std::string& root, const TrainOptions& opts) {
  TrainSchedule sched = opts.schedule;
  if (sched.milestones.empty()) sched.milestones = TrainSchedule::default_milestones();
  while (!sched.milestones.empty() && sched.total_epochs > 0 &&
         sched.milestones.back().epoch > sched.total_epochs)
    sched.milestones.pop_back();
  sched.validate();
  if (opts.out_dir.empty()) throw std::invalid_argument("train: output directory required");
  fs::create_directories(opts.out_dir);

  std::vector<io::ManifestEntry> train_items = split_entries(manifest, "train");
  std::vector<io::ManifestEntry> val_items = split_entries(manifest, "val");
  if (train_items.empty()) throw std::invalid_argument("train: no train-split samples in manifest");
  check_files(train_items, root);
  check_files(val_items, root);

  const uint64_t digest = checkpoint::config_digest(net.digest_text());
  nn::SGDMomentum opt(net.params(), opts.momentum);
  std::mt19937_64 rng(sched.seed);

  TrainResult result;
  std::vector<double> best_state = snapshot(net.state());
  std::vector<io::ScoreRow> best_scores;
  evaluate(net, val_items, root, &best_scores);
  int stale = 0;

  for (int epoch = 0; epoch < sched.total_epochs; ++epoch) {
    double lr = sched.lr_at(epoch);
    double wd = sched.weight_decay_at(epoch);
    uint64_t epoch_seed =
        streams::derive_seed(sched.seed, "epoch" + std::to_string(epoch));
    double train_loss;
    try {
      train_loss = run_epoch(net, train_items, root, opt, lr, wd, sched.batch_size, rng,
                             epoch_seed);
    } catch (const std::exception& ex) {
      std::cerr << "training diverged at epoch " << epoch << ": " << ex.what() << "\n";
      checkpoint::save_checkpoint((fs::path(opts.out_dir) / "diverged.ckpt").string(), digest,
                                  static_cast<uint64_t>(epoch), net.state());
      result.diverged = true;
      break;
    }

    std::vector<io::ScoreRow> scores;
    EvalReport val =
        val_items.empty() ? EvalReport{} : evaluate(net, val_items, root, &scores);
    result.log.push_back(EpochLog{epoch, lr, wd, train_loss, val.top1});

    if (result.best_epoch < 0 || val.top1 > result.best_val_top1) {
      result.best_epoch = epoch;
      result.best_val_top1 = val.top1;
      result.stop_loss = train_loss;
      best_state = snapshot(net.state());
      best_scores = std::move(scores);
      stale = 0;
    } else if (++stale >= opts.patience && opts.patience > 0) {
      break;
    }
  }

  checkpoint::save_checkpoint((fs::path(opts.out_dir) / "last.ckpt").string(), digest,
                              static_cast<uint64_t>(result.log.size()), net.state());
  restore(net.state(), best_state);
  checkpoint::save_checkpoint((fs::path(opts.out_dir) / "best.ckpt").string(), digest,
                              static_cast<uint64_t>(std::max(result.best_epoch, 0)), net.state());
  write_log((fs::path(opts.out_dir) / "log.csv").string(), result.log);
  io::save_scores((fs::path(opts.out_dir) / "val_scores.csv").string(), best_scores);

  config::Config meta;
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", result.stop_loss);
  meta.set("stop_loss", buf);
  meta.set("best_epoch", std::to_string(result.best_epoch));
  std::snprintf(buf, sizeof(buf), "%.12g", result.best_val_top1);
  meta.set("best_val_top1", buf);
  meta.set("epochs_run", std::to_string(result.log.size()));
  meta.set("digest", std::to_string(digest));
  std::ofstream meta_out((fs::path(opts.out_dir) / "train_meta.cfg").string());
  meta_out << meta.dump();
  return result;
}

FinetuneResult finetune(Network& net, const std::vector<io::ManifestEntry>& items,
                        const std::string& root, double stop_loss, const FinetuneOptions& opts) {
  if (std::isnan(stop_loss)) throw std::invalid_argument("finetune: stop_loss required");
  if (items.empty()) throw std::invalid_argument("finetune: empty item list");
  check_files(items, root);
  nn::SGDMomentum opt(net.params(), opts.momentum);
  std::mt19937_64 rng(opts.seed);

  FinetuneResult result;
  double running = 0.0;
  for (int epoch = 0; epoch < opts.epoch_cap; ++epoch) {
    uint64_t epoch_seed = streams::derive_seed(opts.seed, "finetune" + std::to_string(epoch));
    double loss = run_epoch(net, items, root, opt, opts.lr, opts.weight_decay, opts.batch_size,
                            rng, epoch_seed);
    running = (running * epoch + loss) / (epoch + 1);
    result.epochs_run = epoch + 1;
    result.final_loss = running;
    if (running <= stop_loss) {
      result.stopped_by_threshold = true;
      break;
    }
  }
  return result;
}

namespace {

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    out.push_back(std::stoi(tok));
  }
  return out;
}

}  // namespace

TrainSetup setup_from_config(const config::Config& cfg, const std::string& net_kind,
                             const std::string& stream_name) {
  TrainSetup setup;
  setup.manifest_path = cfg.get_string("manifest");
  setup.data_root = cfg.get_string("data_root", ".");

  TrainSchedule& sched = setup.options.schedule;
  sched.total_epochs = static_cast<int>(cfg.get_int("epochs", 200));
  sched.batch_size = static_cast<int>(cfg.get_int("batch_size", 32));
  sched.seed = static_cast<uint64_t>(cfg.get_int("seed", 1));
  sched.initial_lr = cfg.get_double("lr", 1e-3);
  sched.initial_weight_decay = cfg.get_double("weight_decay", 1e-4);
  sched.milestones = TrainSchedule::default_milestones();
  if (cfg.has("milestone1_epoch")) {
    sched.milestones[0].epoch = static_cast<int>(cfg.get_int("milestone1_epoch"));
    sched.milestones[0].lr = cfg.get_double("milestone1_lr", sched.milestones[0].lr);
  }
  if (cfg.has("milestone2_epoch")) {
    sched.milestones[1].epoch = static_cast<int>(cfg.get_int("milestone2_epoch"));
    sched.milestones[1].lr = cfg.get_double("milestone2_lr", sched.milestones[1].lr);
  }
  setup.options.momentum = cfg.get_double("momentum", 0.9);
  setup.options.label_smoothing = cfg.get_double("label_smoothing", 0.1);
  setup.options.patience = static_cast<int>(cfg.get_int("patience", 0));
  setup.options.out_dir = cfg.get_string("out_dir");

  const int num_classes = static_cast<int>(cfg.get_int("num_classes"));
  const uint64_t init_seed = static_cast<uint64_t>(cfg.get_int("init_seed", 1));

  if (net_kind == "slgcn") {
    slgcn::SLGCNConfig mc;
    mc.num_classes = num_classes;
    mc.init_seed = init_seed;
    mc.decouple_groups = static_cast<int>(cfg.get_int("decouple_groups", 8));
    mc.temporal_kernel = static_cast<int>(cfg.get_int("temporal_kernel", 9));
    mc.attention = cfg.get_bool("attention", true);
    mc.dropgraph = cfg.get_bool("dropgraph", true);
    if (cfg.has("channels")) {
      std::vector<int> widths = parse_int_list(cfg.get_string("channels"));
      std::vector<int> strides(widths.size(), 1);
      if (cfg.has("strides")) {
        strides = parse_int_list(cfg.get_string("strides"));
        if (strides.size() != widths.size())
          throw std::invalid_argument("config: channels and strides length mismatch");
      }
      int in = mc.input_channels;
      for (size_t i = 0; i < widths.size(); ++i) {
        mc.blocks.push_back(slgcn::BlockSpec{in, widths[i], strides[i]});
        in = widths[i];
      }
      mc.dropgraph_from_block =
          static_cast<int>(cfg.get_int("dropgraph_from_block", static_cast<long long>(widths.size()) / 2));
    }

    graph::SkeletonGraph g =
        cfg.has("graph_layout")
            ? graph::reduce_graph(
                  graph::build_full_graph(graph::load_layout(cfg.get_string("graph_layout"))),
                  graph::load_selection(cfg.get_string("graph_selection")))
            : graph::default_slr_graph();

    streams::AugmentationParams aug;
    aug.target_len = static_cast<int>(cfg.get_int("target_len", 150));
    aug.mirror_prob = cfg.get_double("mirror_prob", aug.mirror_prob);
    aug.rotation_range = cfg.get_double("rotation_deg", 13.0) * M_PI / 180.0;
    aug.scale_low = cfg.get_double("scale_low", aug.scale_low);
    aug.scale_high = cfg.get_double("scale_high", aug.scale_high);
    aug.jitter_std = cfg.get_double("jitter_std", aug.jitter_std);
    aug.shift_range = cfg.get_double("shift_range", aug.shift_range);

    setup.network = std::make_unique<SLGCNNetwork>(std::move(mc), std::move(g),
                                                   streams::stream_kind_from_name(stream_name),
                                                   aug, setup.options.label_smoothing);
  } else if (net_kind == "sstcn") {
    sstcn::SSTCNConfig mc;
    mc.num_classes = num_classes;
    mc.init_seed = init_seed;
    mc.feature_size = static_cast<int>(cfg.get_int("feature_size", 24));
    mc.frames = static_cast<int>(cfg.get_int("feat_frames", 60));
    mc.keypoints = static_cast<int>(cfg.get_int("feat_keypoints", 33));
    mc.stage4_channels = static_cast<int>(cfg.get_int("stage4_channels", 240));
    mc.stage4_hidden = static_cast<int>(cfg.get_int("stage4_hidden", 256));
    mc.dropout_rate = cfg.get_double("dropout", 0.1);
    setup.network = std::make_unique<SSTCNNetwork>(std::move(mc), setup.options.label_smoothing);
  } else {
    throw std::invalid_argument("unknown network kind: " + net_kind);
  }
  return setup;
}

}  // namespace samslr::harness
