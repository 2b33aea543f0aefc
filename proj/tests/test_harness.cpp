#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <random>

#include "doctest.h"
#include "samslr/checkpoint.hpp"
#include "samslr/config.hpp"
#include "samslr/ensemble.hpp"
#include "samslr/harness.hpp"
#include "test_util.hpp"

using namespace samslr;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  fs::path p = fs::temp_directory_path() / "samslr_harness" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string file_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

harness::SyntheticSpec tiny_spec() {
  harness::SyntheticSpec spec;
  spec.num_classes = 2;
  spec.samples_per_class = 5;
  spec.frames = 8;
  spec.noise = 0.0;
  spec.seed = 42;
  spec.emit_features = false;
  return spec;
}

std::unique_ptr<harness::SLGCNNetwork> tiny_network(int classes) {
  slgcn::SLGCNConfig cfg;
  cfg.num_classes = classes;
  cfg.blocks = {slgcn::BlockSpec{3, 4, 1}};
  cfg.decouple_groups = 2;
  cfg.attention = false;
  cfg.dropgraph = false;
  cfg.init_seed = 11;
  streams::AugmentationParams aug;
  aug.target_len = 8;
  aug.rng_seed = 0;
  return std::make_unique<harness::SLGCNNetwork>(cfg, graph::default_slr_graph(),
                                                 streams::StreamKind::kJoint, aug, 0.1);
}

/// Network stub returning canned per-sample scores, for metric tests.
class StubNetwork : public harness::Network {
 public:
  StubNetwork(int classes, std::function<std::vector<double>(const std::string&)> scores)
      : classes_(classes), scores_(std::move(scores)) {}

  Tensor load_batch(const std::vector<const io::ManifestEntry*>& items, const std::string&, bool,
                    uint64_t) override {
    ids_.clear();
    for (const auto* e : items) ids_.push_back(e->sample_id);
    return Tensor({static_cast<int>(items.size()), 1});
  }
  Tensor forward_eval(const Tensor&) override {
    Tensor out({static_cast<int>(ids_.size()), classes_});
    for (size_t b = 0; b < ids_.size(); ++b) {
      auto row = scores_(ids_[b]);
      for (int k = 0; k < classes_; ++k) out.at2(static_cast<int>(b), k) = row[static_cast<size_t>(k)];
    }
    return out;
  }
  double loss_and_grad(const Tensor&, const std::vector<int>&, std::mt19937_64&) override {
    return 0.0;
  }
  std::vector<nn::Param*> params() override { return {}; }
  std::vector<nn::Param*> state() override { return {}; }
  int num_classes() const override { return classes_; }
  std::string digest_text() const override { return "stub"; }

 private:
  int classes_;
  std::function<std::vector<double>(const std::string&)> scores_;
  std::vector<std::string> ids_;
};

std::vector<io::ManifestEntry> stub_manifest(const fs::path& root, int n, int classes,
                                             std::mt19937_64& rng, std::vector<int>* labels_out) {
  std::vector<io::ManifestEntry> items;
  for (int i = 0; i < n; ++i) {
    std::string id = "s" + std::to_string(i);
    std::ofstream(root / (id + ".bin")) << "x";  // evaluate checks existence
    int label = static_cast<int>(rng() % static_cast<uint64_t>(classes));
    if (labels_out) labels_out->push_back(label);
    items.push_back(io::ManifestEntry{id, id + ".bin", label, "val"});
  }
  return items;
}

}  // namespace

TEST_CASE("config files parse key = value lines") {
  auto cfg = config::Config::parse(
      "# header comment\n"
      "alpha = 3\n"
      "beta = hello world\n"
      "gamma = 0.25  # trailing comment\n"
      "flag = true\n"
      "\n");
  CHECK(cfg.get_int("alpha") == 3);
  CHECK(cfg.get_string("beta") == "hello world");
  CHECK(cfg.get_double("gamma") == 0.25);
  CHECK(cfg.get_bool("flag", false));
  CHECK(cfg.get_int("missing", 7) == 7);
  CHECK_THROWS(cfg.get_string("missing"));
  CHECK_THROWS(cfg.get_int("beta"));
  CHECK_THROWS(config::Config::parse("a = 1\na = 2\n"));
  CHECK_THROWS(config::Config::parse("no equals sign\n"));

  auto again = config::Config::parse(cfg.dump());
  CHECK(again.get_string("beta") == "hello world");
}

TEST_CASE("schedule follows the milestone plan") {
  harness::TrainSchedule s;
  s.milestones = harness::TrainSchedule::default_milestones();
  s.validate();
  CHECK(s.lr_at(0) == 1e-3);
  CHECK(s.lr_at(49) == 1e-3);
  CHECK(s.lr_at(50) == 1e-4);
  CHECK(s.lr_at(99) == 1e-4);
  CHECK(s.lr_at(100) == 1e-5);
  CHECK(s.lr_at(199) == 1e-5);
  CHECK(s.weight_decay_at(49) == 1e-4);
  CHECK(s.weight_decay_at(50) == 0.0);
  CHECK(s.weight_decay_at(150) == 0.0);

  harness::TrainSchedule bad = s;
  bad.milestones[1].epoch = 50;  // not strictly increasing
  CHECK_THROWS(bad.validate());
  bad = s;
  bad.total_epochs = 80;  // below last milestone
  CHECK_THROWS(bad.validate());
}

TEST_CASE("synthetic specs with overlapping ranges are rejected") {
  harness::SyntheticSpec spec = tiny_spec();
  spec.classes = {{0.5, 1.5}, {1.0, 2.0}};
  CHECK_THROWS(spec.validate());
  spec.classes = {{0.5, 1.0}, {1.0, 2.0}};  // touching is fine
  CHECK_NOTHROW(spec.validate());
}

TEST_CASE("synthetic generation is deterministic and balanced") {
  auto dir_a = fresh_dir("synth_a");
  auto dir_b = fresh_dir("synth_b");
  harness::SyntheticSpec spec = tiny_spec();
  spec.emit_features = true;
  spec.feat_frames = 4;
  spec.feat_keypoints = 3;
  spec.feat_size = 6;
  harness::generate_synthetic(spec, dir_a.string());
  harness::generate_synthetic(spec, dir_b.string());

  auto manifest = io::load_manifest((dir_a / "manifest.csv").string());
  REQUIRE(manifest.size() == 10);
  int histogram[2] = {0, 0};
  int train_count = 0;
  for (const auto& e : manifest) {
    REQUIRE(e.label.has_value());
    histogram[*e.label] += 1;
    train_count += e.split == "train";
  }
  CHECK(histogram[0] == 5);
  CHECK(histogram[1] == 5);
  CHECK(train_count == 6);

  CHECK(file_bytes(dir_a / "manifest.csv") == file_bytes(dir_b / "manifest.csv"));
  CHECK(file_bytes(dir_a / "kp" / "c0_s000.skel") == file_bytes(dir_b / "kp" / "c0_s000.skel"));
  CHECK(file_bytes(dir_a / "kp" / "c1_s004.skel") == file_bytes(dir_b / "kp" / "c1_s004.skel"));
  CHECK(file_bytes(dir_a / "feat" / "c0_s002.feat") == file_bytes(dir_b / "feat" / "c0_s002.feat"));
}

TEST_CASE("noise-free classes are nearest-centroid separable") {
  auto dir = fresh_dir("synth_sep");
  harness::SyntheticSpec spec = tiny_spec();
  spec.num_classes = 3;
  harness::generate_synthetic(spec, dir.string());
  auto manifest = io::load_manifest((dir / "manifest.csv").string());

  // Centroids over the train split, in normalized joint coordinates.
  std::vector<std::vector<double>> centroid(3);
  std::vector<int> counts(3, 0);
  auto features = [&](const io::ManifestEntry& e) {
    streams::KeypointSequence seq;
    seq.data = io::load_keypoints((dir / e.relative_path).string());
    seq = streams::normalize_coords(seq);
    std::vector<double> f;
    for (size_t i = 0; i < seq.data.size(); ++i) f.push_back(seq.data[i]);
    return f;
  };
  for (const auto& e : manifest) {
    if (e.split != "train") continue;
    auto f = features(e);
    auto& c = centroid[static_cast<size_t>(*e.label)];
    if (c.empty()) c.assign(f.size(), 0.0);
    for (size_t i = 0; i < f.size(); ++i) c[i] += f[i];
    counts[static_cast<size_t>(*e.label)] += 1;
  }
  for (int k = 0; k < 3; ++k)
    for (double& v : centroid[static_cast<size_t>(k)]) v /= counts[static_cast<size_t>(k)];

  int correct = 0, total = 0;
  for (const auto& e : manifest) {
    auto f = features(e);
    int best = -1;
    double best_d = 1e300;
    for (int k = 0; k < 3; ++k) {
      double d = 0;
      for (size_t i = 0; i < f.size(); ++i)
        d += (f[i] - centroid[static_cast<size_t>(k)][i]) * (f[i] - centroid[static_cast<size_t>(k)][i]);
      if (d < best_d) {
        best_d = d;
        best = k;
      }
    }
    correct += best == *e.label;
    ++total;
  }
  CHECK(correct == total);
}

TEST_CASE("checkpoints round trip and refuse digest mismatches") {
  auto dir = fresh_dir("ckpt");
  auto net = tiny_network(2);
  auto state = net->state();
  std::vector<double> original;
  for (nn::Param* p : state)
    for (size_t i = 0; i < p->value.size(); ++i) original.push_back(p->value[i]);

  uint64_t digest = checkpoint::config_digest(net->digest_text());
  checkpoint::save_checkpoint((dir / "a.ckpt").string(), digest, 17, state);

  for (nn::Param* p : state) p->value.fill(0.0);
  uint64_t step = checkpoint::load_checkpoint((dir / "a.ckpt").string(), digest, state);
  CHECK(step == 17);
  size_t k = 0;
  for (nn::Param* p : state)
    for (size_t i = 0; i < p->value.size(); ++i)
      // float32 storage quantizes the doubles
      CHECK(p->value[i] == doctest::Approx(original[k++]).epsilon(1e-6));

  CHECK_THROWS(checkpoint::load_checkpoint((dir / "a.ckpt").string(), digest + 1, state));
  auto info = checkpoint::inspect_checkpoint((dir / "a.ckpt").string());
  CHECK(info.digest == digest);
  CHECK(info.step == 17);
  CHECK(info.tensor_count == state.size());
}

TEST_CASE("zero-epoch training returns the initialized checkpoint") {
  auto data = fresh_dir("train0_data");
  harness::generate_synthetic(tiny_spec(), data.string());
  auto manifest = io::load_manifest((data / "manifest.csv").string());

  auto out = fresh_dir("train0_out");
  auto net = tiny_network(2);
  harness::TrainOptions opts;
  opts.schedule.total_epochs = 0;
  opts.schedule.batch_size = 4;
  opts.out_dir = out.string();
  auto result = harness::train(*net, manifest, data.string(), opts);
  CHECK(result.log.empty());
  CHECK(fs::exists(out / "best.ckpt"));
  CHECK(fs::exists(out / "last.ckpt"));
  CHECK(fs::exists(out / "log.csv"));
  CHECK(fs::exists(out / "val_scores.csv"));
  CHECK(file_bytes(out / "best.ckpt") == file_bytes(out / "last.ckpt"));
}

TEST_CASE("training logs every epoch and keeps the best checkpoint") {
  auto data = fresh_dir("train_data");
  harness::generate_synthetic(tiny_spec(), data.string());
  auto manifest = io::load_manifest((data / "manifest.csv").string());

  auto out = fresh_dir("train_out");
  auto net = tiny_network(2);
  harness::TrainOptions opts;
  opts.schedule.total_epochs = 3;
  opts.schedule.batch_size = 4;
  opts.schedule.seed = 5;
  opts.out_dir = out.string();
  auto result = harness::train(*net, manifest, data.string(), opts);
  REQUIRE(result.log.size() == 3);
  for (int e = 0; e < 3; ++e) {
    CHECK(result.log[static_cast<size_t>(e)].epoch == e);
    CHECK(result.log[static_cast<size_t>(e)].lr == 1e-3);
    CHECK(std::isfinite(result.log[static_cast<size_t>(e)].train_loss));
  }
  // Early stopping invariant: best is the max of the logged curve.
  double best = 0;
  for (const auto& e : result.log) best = std::max(best, e.val_top1);
  CHECK(result.best_val_top1 == best);
  CHECK(fs::exists(out / "train_meta.cfg"));
  auto meta = config::Config::load((out / "train_meta.cfg").string());
  CHECK(meta.get_double("stop_loss") == doctest::Approx(result.stop_loss).epsilon(1e-9));
}

TEST_CASE("finetune boundary conditions") {
  auto data = fresh_dir("ft_data");
  harness::generate_synthetic(tiny_spec(), data.string());
  auto manifest = io::load_manifest((data / "manifest.csv").string());
  std::vector<io::ManifestEntry> merged;
  for (const auto& e : manifest)
    if (e.split != "test") merged.push_back(e);

  harness::FinetuneOptions opts;
  opts.batch_size = 4;
  opts.epoch_cap = 2;

  auto net = tiny_network(2);
  auto inf_result = harness::finetune(*net, merged, data.string(),
                                      std::numeric_limits<double>::infinity(), opts);
  CHECK(inf_result.epochs_run == 1);
  CHECK(inf_result.stopped_by_threshold);

  auto zero_result = harness::finetune(*net, merged, data.string(), 0.0, opts);
  CHECK(zero_result.epochs_run == 2);
  CHECK(!zero_result.stopped_by_threshold);

  CHECK_THROWS(harness::finetune(*net, merged, data.string(),
                                 std::numeric_limits<double>::quiet_NaN(), opts));
}

TEST_CASE("evaluation metrics: perfect predictor") {
  auto dir = fresh_dir("eval_perfect");
  std::mt19937_64 rng(3);
  std::vector<int> labels;
  auto items = stub_manifest(dir, 30, 4, rng, &labels);
  StubNetwork net(4, [&](const std::string& id) {
    int idx = std::stoi(id.substr(1));
    std::vector<double> row(4, 0.0);
    row[static_cast<size_t>(labels[static_cast<size_t>(idx)])] = 1.0;
    return row;
  });
  std::vector<io::ScoreRow> scores;
  auto report = harness::evaluate(net, items, dir.string(), &scores);
  CHECK(report.top1 == 1.0);
  CHECK(report.top5 == 1.0);
  REQUIRE(scores.size() == items.size());

  // Score-file round trip: weight-1 fusion predicts exactly what eval did.
  for (size_t i = 0; i < scores.size(); ++i) {
    ensemble::EnsembleWeights w;
    w.entries = {{"skeleton", 1.0}};
    auto fused = ensemble::fuse(
        {ensemble::ScoreVector{scores[i].sample_id, "skeleton", scores[i].values}}, w);
    CHECK(ensemble::predict(fused) == labels[i]);
  }
}

TEST_CASE("evaluation metrics: random scores obey binomial bounds") {
  auto dir = fresh_dir("eval_random");
  std::mt19937_64 rng(17);
  const int nc = 226, n = 2000;
  std::vector<int> labels;
  auto items = stub_manifest(dir, n, nc, rng, &labels);
  std::mt19937_64 score_rng(99);
  StubNetwork net(nc, [&](const std::string&) {
    std::vector<double> row(static_cast<size_t>(nc));
    std::uniform_real_distribution<double> d(0.0, 1.0);
    for (double& v : row) v = d(score_rng);
    return row;
  });
  auto report = harness::evaluate(net, items, dir.string());
  CHECK(report.top5 >= report.top1);
  double p1 = 1.0 / nc, p5 = 5.0 / nc;
  double s1 = std::sqrt(p1 * (1 - p1) / n), s5 = std::sqrt(p5 * (1 - p5) / n);
  CHECK(std::abs(report.top1 - p1) <= 3 * s1 + 1e-12);
  CHECK(std::abs(report.top5 - p5) <= 3 * s5 + 1e-12);
}

TEST_CASE("evaluation reports missing files and aborts") {
  auto dir = fresh_dir("eval_missing");
  std::vector<io::ManifestEntry> items = {{"ghost", "ghost.bin", 0, "val"}};
  StubNetwork net(2, [](const std::string&) { return std::vector<double>{1.0, 0.0}; });
  CHECK_THROWS(harness::evaluate(net, items, dir.string()));
}

TEST_CASE("per-class accuracy and confusion bookkeeping") {
  auto dir = fresh_dir("eval_conf");
  std::mt19937_64 rng(23);
  std::vector<int> labels;
  auto items = stub_manifest(dir, 20, 2, rng, &labels);
  // Always predicts class 0.
  StubNetwork net(2, [](const std::string&) { return std::vector<double>{1.0, 0.0}; });
  auto report = harness::evaluate(net, items, dir.string());
  int zeros = 0;
  for (int l : labels) zeros += l == 0;
  CHECK(report.per_class[0] == doctest::Approx(1.0));
  CHECK(report.per_class[1] == doctest::Approx(0.0));
  CHECK(report.confusion[0][0] == zeros);
  CHECK(report.confusion[1][0] == 20 - zeros);
  CHECK(report.confusion[1][1] == 0);
  CHECK(report.top1 == doctest::Approx(static_cast<double>(zeros) / 20.0));
}
