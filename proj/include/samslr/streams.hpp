#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "samslr/graph.hpp"
#include "samslr/tensor.hpp"

namespace samslr::streams {

/// One video's keypoints: T frames x N nodes x (x, y, confidence).
struct KeypointSequence {
  Tensor data;  // (T, N, 3)
  int width = 512;
  int height = 512;
  std::string sample_id;
  std::optional<int> label;
  bool normalized = false;

  int frames() const { return data.dim(0); }
  int nodes() const { return data.dim(1); }
};

enum class StreamKind { kJoint, kBone, kJointMotion, kBoneMotion };

const char* stream_kind_name(StreamKind k);
StreamKind stream_kind_from_name(const std::string& name);

struct StreamTensor {
  StreamKind kind = StreamKind::kJoint;
  Tensor data;  // (T, N, 3)
  bool normalized = false;
};

enum class SampleMode { kRepeatPadRandom, kUniform };

struct AugmentationParams {
  double mirror_prob = 0.5;
  double rotation_range = 13.0 * 3.14159265358979323846 / 180.0;  // radians
  double scale_low = 0.9;
  double scale_high = 1.1;
  double jitter_std = 0.01;
  double shift_range = 0.1;
  SampleMode temporal_sampling = SampleMode::kRepeatPadRandom;
  int target_len = 150;
  uint64_t rng_seed = 0;
};

/// Map pixel coordinates to [-1, 1]; confidence channel untouched.
KeypointSequence normalize_coords(const KeypointSequence& seq);

/// Resample to target_len frames. Repeat-pad tiles the clip then takes a
/// random window; uniform takes evenly spaced indices floor(i*T/target).
KeypointSequence sample_frames(const KeypointSequence& seq, int target_len, SampleMode mode,
                               uint64_t seed);

StreamTensor to_joint_stream(const KeypointSequence& seq);

/// Bone vectors along the tree: target minus source in x,y, confidence of
/// the target; the root bone is (0, 0, s_root).
StreamTensor compute_bones(const StreamTensor& joints, const graph::SkeletonGraph& topology);

/// Frame-to-frame differences, last frame zero-padded. Joint motion keeps
/// the per-frame confidence; bone motion differences all three channels.
StreamTensor compute_motion(const StreamTensor& stream);

/// Temporal sampling, mirror, rotate, scale, jitter, shift, in that order.
/// Requires normalized input; deterministic for a fixed (seed, sample_id).
KeypointSequence augment(const KeypointSequence& seq, const AugmentationParams& params,
                         const graph::SkeletonGraph& topology);

/// Per-sample RNG stream derived from the base seed and the sample id.
uint64_t derive_seed(uint64_t base_seed, const std::string& sample_id);

}  // namespace samslr::streams
