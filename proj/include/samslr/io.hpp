#pragma once

#include <optional>
#include <string>
#include <vector>

#include "samslr/tensor.hpp"

namespace samslr::io {

/// `SKEL` keypoint file: magic, u32 version, u32 T, u32 N, u32 C=3,
/// then T*N*C little-endian float32.
void save_keypoints(const std::string& path, const Tensor& data);
Tensor load_keypoints(const std::string& path);

/// `FEAT` feature-clip file: magic, u32 version, u32 frames, u32 keypoints,
/// u32 h, u32 w, then float32 payload.
void save_feature_clip(const std::string& path, const Tensor& data);
Tensor load_feature_clip(const std::string& path);

struct ManifestEntry {
  std::string sample_id;
  std::string relative_path;
  std::optional<int> label;
  std::string split;  // train / val / test
};

std::vector<ManifestEntry> load_manifest(const std::string& path);
void save_manifest(const std::string& path, const std::vector<ManifestEntry>& entries);

/// Score CSV: header `sample_id,c0,...,c{n_c-1}`, one row per sample.
struct ScoreRow {
  std::string sample_id;
  std::vector<double> values;
};

std::vector<ScoreRow> load_scores(const std::string& path);
void save_scores(const std::string& path, const std::vector<ScoreRow>& rows);

/// Labels CSV: header `sample_id,label`.
std::vector<std::pair<std::string, int>> load_labels(const std::string& path);
void save_labels(const std::string& path, const std::vector<std::pair<std::string, int>>& labels);

}  // namespace samslr::io
