#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "samslr/checkpoint.hpp"
#include "samslr/config.hpp"
#include "samslr/ensemble.hpp"
#include "samslr/harness.hpp"
#include "samslr/io.hpp"

namespace fs = std::filesystem;
using namespace samslr;

namespace {

int cmd_prepare(const std::string& manifest_path, const std::string& out_dir) {
  auto entries = io::load_manifest(manifest_path);
  fs::path root = fs::path(manifest_path).parent_path();
  fs::create_directories(fs::path(out_dir) / "kp");

  std::vector<io::ManifestEntry> out_entries;
  std::vector<std::pair<std::string, int>> labels;
  for (auto& e : entries) {
    Tensor kp = io::load_keypoints((root / e.relative_path).string());
    std::string rel = "kp/" + e.sample_id + ".skel";
    io::save_keypoints((fs::path(out_dir) / rel).string(), kp);
    io::ManifestEntry copy = e;
    copy.relative_path = rel;
    out_entries.push_back(copy);
    if (e.label) labels.emplace_back(e.sample_id, *e.label);
  }
  io::save_manifest((fs::path(out_dir) / "manifest.csv").string(), out_entries);
  io::save_labels((fs::path(out_dir) / "labels.csv").string(), labels);
  std::cout << "prepared " << out_entries.size() << " samples into " << out_dir << "\n";
  return 0;
}

int cmd_synth(const std::string& spec_path, const std::string& out_dir) {
  auto cfg = config::Config::load(spec_path);
  auto spec = harness::synthetic_spec_from_config(cfg);
  harness::generate_synthetic(spec, out_dir);
  std::cout << "generated " << spec.num_classes * spec.samples_per_class << " samples into "
            << out_dir << "\n";
  return 0;
}

int cmd_train(const std::string& net_kind, const std::string& stream,
              const std::string& config_path) {
  auto cfg = config::Config::load(config_path);
  auto setup = harness::setup_from_config(cfg, net_kind, stream);
  auto manifest = io::load_manifest(setup.manifest_path);
  auto result = harness::train(*setup.network, manifest, setup.data_root, setup.options);
  if (result.diverged) {
    std::cerr << "error: training diverged, last finite state saved\n";
    return 2;
  }
  std::cout << "best epoch " << result.best_epoch << " val top1 " << result.best_val_top1
            << " stop loss " << result.stop_loss << "\n";
  return 0;
}

int cmd_eval(const std::string& ckpt, const std::string& split, const std::string& scores_out,
             const std::string& net_kind, const std::string& stream,
             const std::string& config_path) {
  auto cfg = config::Config::load(config_path);
  auto setup = harness::setup_from_config(cfg, net_kind, stream);
  uint64_t digest = checkpoint::config_digest(setup.network->digest_text());
  checkpoint::load_checkpoint(ckpt, digest, setup.network->state());
  auto manifest = io::load_manifest(setup.manifest_path);
  auto items = harness::split_entries(manifest, split);
  if (items.empty()) throw std::runtime_error("no samples in split '" + split + "'");
  std::vector<io::ScoreRow> scores;
  auto report = harness::evaluate(*setup.network, items, setup.data_root, &scores);
  if (!scores_out.empty()) io::save_scores(scores_out, scores);
  std::printf("top1 %.6f top5 %.6f samples %zu\n", report.top1, report.top5, items.size());
  return 0;
}

int cmd_finetune(const std::string& ckpt, const std::string& net_kind, const std::string& stream,
                 const std::string& config_path, double stop_loss, const std::string& ckpt_out) {
  auto cfg = config::Config::load(config_path);
  auto setup = harness::setup_from_config(cfg, net_kind, stream);
  uint64_t digest = checkpoint::config_digest(setup.network->digest_text());
  checkpoint::load_checkpoint(ckpt, digest, setup.network->state());
  auto manifest = io::load_manifest(setup.manifest_path);
  std::vector<io::ManifestEntry> merged;
  for (const auto& e : manifest)
    if (e.split == "train" || e.split == "val") merged.push_back(e);

  harness::FinetuneOptions opts;
  opts.lr = cfg.get_double("finetune_lr", 1e-5);
  opts.batch_size = static_cast<int>(cfg.get_int("batch_size", 32));
  opts.seed = static_cast<uint64_t>(cfg.get_int("seed", 1));
  opts.label_smoothing = cfg.get_double("label_smoothing", 0.1);
  opts.epoch_cap = static_cast<int>(cfg.get_int("finetune_epoch_cap", 50));
  auto result = harness::finetune(*setup.network, merged, setup.data_root, stop_loss, opts);
  checkpoint::save_checkpoint(ckpt_out, digest, static_cast<uint64_t>(result.epochs_run),
                              setup.network->state());
  std::cout << "finetuned " << result.epochs_run << " epochs, final loss " << result.final_loss
            << (result.stopped_by_threshold ? " (threshold reached)" : " (epoch cap)") << "\n";
  return 0;
}

int cmd_fuse(const std::string& fusion_cfg, const std::string& out_path) {
  auto entries = ensemble::load_fusion_config(fusion_cfg);
  fs::path root = fs::path(fusion_cfg).parent_path();

  ensemble::EnsembleWeights weights;
  std::vector<std::vector<io::ScoreRow>> tables;
  for (const auto& e : entries) {
    fs::path p = fs::path(e.score_path);
    if (p.is_relative()) p = root / p;
    tables.push_back(io::load_scores(p.string()));
    weights.entries.emplace_back(e.modality, e.alpha);
    if (tables.back().size() != tables.front().size())
      throw std::runtime_error("score files disagree on sample count");
  }

  std::ofstream out(out_path);
  if (!out) throw std::runtime_error("cannot open " + out_path + " for writing");
  out << "sample_id,prediction\n";
  for (size_t i = 0; i < tables.front().size(); ++i) {
    std::vector<ensemble::ScoreVector> per_modality;
    for (size_t m = 0; m < entries.size(); ++m) {
      const io::ScoreRow& row = tables[m][i];
      if (row.sample_id != tables.front()[i].sample_id)
        throw std::runtime_error("score files disagree on sample order at row " +
                                 std::to_string(i));
      per_modality.push_back(
          ensemble::ScoreVector{row.sample_id, entries[m].modality, row.values});
    }
    auto fused = ensemble::fuse(per_modality, weights);
    out << fused.sample_id << "," << ensemble::predict(fused) << "\n";
  }
  std::cout << "wrote predictions for " << tables.front().size() << " samples to " << out_path
            << "\n";
  return 0;
}

int cmd_tune(const std::string& scores_dir, const std::string& labels_path) {
  auto label_rows = io::load_labels(labels_path);
  std::map<std::string, int> label_of(label_rows.begin(), label_rows.end());

  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(scores_dir))
    if (entry.path().extension() == ".csv") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw std::runtime_error("no score files in " + scores_dir);

  std::vector<ensemble::ModalityScores> modalities;
  std::vector<int> labels;
  for (const auto& f : files) {
    auto rows = io::load_scores(f.string());
    ensemble::ModalityScores m;
    m.modality = f.stem().string();
    bool first = modalities.empty();
    for (size_t i = 0; i < rows.size(); ++i) {
      auto it = label_of.find(rows[i].sample_id);
      if (it == label_of.end())
        throw std::runtime_error("no label for sample " + rows[i].sample_id);
      if (first) labels.push_back(it->second);
      else if (labels[i] != it->second)
        throw std::runtime_error("score files disagree on sample order");
      m.rows.push_back(rows[i].values);
    }
    if (m.rows.size() != labels.size())
      throw std::runtime_error("score files disagree on sample count");
    modalities.push_back(std::move(m));
  }

  std::vector<double> grid;
  for (int i = 0; i <= 10; ++i) grid.push_back(0.1 * i);
  auto weights = ensemble::tune_weights(modalities, labels, grid);
  std::vector<double> w;
  for (const auto& [modality, alpha] : weights.entries) {
    std::printf("modality %s - %.3f\n", modality.c_str(), alpha);
    w.push_back(alpha);
  }
  std::printf("top1 %.6f\n", ensemble::top1_accuracy(modalities, labels, w));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"skeleton-pathway sign language recognition toolkit"};
  app.require_subcommand(1);

  std::string manifest, out_dir, spec_path, net_kind, stream = "joint", config_path;
  std::string ckpt, split = "val", scores_out, labels_path, scores_dir, ckpt_out;
  double stop_loss = std::numeric_limits<double>::quiet_NaN();

  auto* prepare = app.add_subcommand("prepare", "validate and repack a keypoint dataset");
  prepare->add_option("--manifest", manifest)->required();
  prepare->add_option("--out", out_dir)->required();

  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  synth->add_option("--spec", spec_path)->required();
  synth->add_option("--out", out_dir)->required();

  auto* train = app.add_subcommand("train", "train a network");
  train->add_option("--net", net_kind)->required()->check(CLI::IsMember({"slgcn", "sstcn"}));
  train->add_option("--stream", stream)
      ->check(CLI::IsMember({"joint", "bone", "joint_motion", "bone_motion"}));
  train->add_option("--config", config_path)->required();

  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint and export scores");
  eval->add_option("--ckpt", ckpt)->required();
  eval->add_option("--split", split)->check(CLI::IsMember({"train", "val", "test"}));
  eval->add_option("--scores-out", scores_out);
  eval->add_option("--net", net_kind)->required()->check(CLI::IsMember({"slgcn", "sstcn"}));
  eval->add_option("--stream", stream)
      ->check(CLI::IsMember({"joint", "bone", "joint_motion", "bone_motion"}));
  eval->add_option("--config", config_path)->required();

  auto* finetune = app.add_subcommand("finetune", "finetune on merged train+val");
  finetune->add_option("--ckpt", ckpt)->required();
  finetune->add_option("--ckpt-out", ckpt_out)->required();
  finetune->add_option("--net", net_kind)->required()->check(CLI::IsMember({"slgcn", "sstcn"}));
  finetune->add_option("--stream", stream)
      ->check(CLI::IsMember({"joint", "bone", "joint_motion", "bone_motion"}));
  finetune->add_option("--config", config_path)->required();
  finetune->add_option("--stop-loss", stop_loss)->required();

  auto* fuse = app.add_subcommand("fuse", "fuse per-modality scores into predictions");
  fuse->add_option("--config", config_path)->required();
  fuse->add_option("--out", out_dir)->required();

  auto* tune = app.add_subcommand("tune", "grid-search fusion weights on validation scores");
  tune->add_option("--scores", scores_dir)->required();
  tune->add_option("--labels", labels_path)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (prepare->parsed()) return cmd_prepare(manifest, out_dir);
    if (synth->parsed()) return cmd_synth(spec_path, out_dir);
    if (train->parsed()) return cmd_train(net_kind, stream, config_path);
    if (eval->parsed()) return cmd_eval(ckpt, split, scores_out, net_kind, stream, config_path);
    if (finetune->parsed())
      return cmd_finetune(ckpt, net_kind, stream, config_path, stop_loss, ckpt_out);
    if (fuse->parsed()) return cmd_fuse(config_path, out_dir);
    if (tune->parsed()) return cmd_tune(scores_dir, labels_path);
  } catch (const std::exception& ex) {
    std::string msg = ex.what();
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    std::cerr << "error: " << msg << "\n";
    return 1;
  }
  return 0;
}
