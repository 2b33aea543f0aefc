#pragma once

#include <string>
#include <vector>

namespace samslr::ensemble {

/// Pre-softmax class scores for one sample from one modality.
struct ScoreVector {
  std::string sample_id;
  std::string modality;
  std::vector<double> values;
};

struct EnsembleWeights {
  std::vector<std::pair<std::string, double>> entries;  // (modality, alpha)

  double weight_for(const std::string& modality) const;
};

/// Weighted sum of per-modality scores for one sample. Modalities carrying
/// nonzero weight must be present; extras are ignored (with a warning on
/// stderr).
ScoreVector fuse(const std::vector<ScoreVector>& scores, const EnsembleWeights& weights);

/// Lowest index among the maxima.
int predict(const ScoreVector& fused);
int predict(const std::vector<double>& values);

/// Same arithmetic as fuse, for the four SL-GCN stream score vectors.
ScoreVector fuse_streams(const std::vector<ScoreVector>& stream_scores,
                         const EnsembleWeights& stream_weights);

/// Validation scores for one modality across samples, sample order shared
/// by every modality in a tuning set.
struct ModalityScores {
  std::string modality;
  std::vector<std::vector<double>> rows;  // [sample][class]
};

/// Exhaustive grid search maximizing Top-1 accuracy; ties break toward the
/// lexicographically smaller weight vector. Above `beam_limit` total grid
/// points, coordinate-wise beam search prunes the grid (still deterministic).
EnsembleWeights tune_weights(const std::vector<ModalityScores>& scores,
                             const std::vector<int>& labels, const std::vector<double>& grid,
                             long long beam_limit = 1000000);

double top1_accuracy(const std::vector<ModalityScores>& scores,
                     const std::vector<int>& labels, const std::vector<double>& weights);

/// Fusion configuration file: lines `modality <name> <score_csv> <alpha>`,
/// `#` comments.
struct FusionConfigEntry {
  std::string modality;
  std::string score_path;
  double alpha = 0.0;
};

std::vector<FusionConfigEntry> parse_fusion_config(const std::string& text);
std::vector<FusionConfigEntry> load_fusion_config(const std::string& path);

}  // namespace samslr::ensemble
