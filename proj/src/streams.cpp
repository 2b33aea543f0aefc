#include "samslr/streams.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace samslr::streams {

const char* stream_kind_name(StreamKind k) {
  switch (k) {
    case StreamKind::kJoint: return "joint";
    case StreamKind::kBone: return "bone";
    case StreamKind::kJointMotion: return "joint_motion";
    case StreamKind::kBoneMotion: return "bone_motion";
  }
  return "?";
}

StreamKind stream_kind_from_name(const std::string& name) {
  if (name == "joint") return StreamKind::kJoint;
  if (name == "bone") return StreamKind::kBone;
  if (name == "joint_motion") return StreamKind::kJointMotion;
  if (name == "bone_motion") return StreamKind::kBoneMotion;
  throw std::invalid_argument("unknown stream kind '" + name + "'");
}

uint64_t derive_seed(uint64_t base_seed, const std::string& sample_id) {
  // FNV-1a over the id, folded with the base seed.
  uint64_t h = 14695981039346656037ull ^ base_seed;
  for (unsigned char c : sample_id) {
    h ^= c;
    h *= 1099511628211ull;
  }
  h ^= base_seed * 0x9e3779b97f4a7c15ull;
  return h;
}

KeypointSequence normalize_coords(const KeypointSequence& seq) {
  if (seq.width <= 0 || seq.height <= 0)
    throw std::invalid_argument("normalize_coords: frame size must be positive");
  KeypointSequence out = seq;
  const int T = seq.frames(), N = seq.nodes();
  for (int t = 0; t < T; ++t)
    for (int n = 0; n < N; ++n) {
      out.data.at3(t, n, 0) = 2.0 * seq.data.at3(t, n, 0) / seq.width - 1.0;
      out.data.at3(t, n, 1) = 2.0 * seq.data.at3(t, n, 1) / seq.height - 1.0;
    }
  out.normalized = true;
  return out;
}

KeypointSequence sample_frames(const KeypointSequence& seq, int target_len, SampleMode mode,
                               uint64_t seed) {
  const int T = seq.frames(), N = seq.nodes();
  if (T < 1) throw std::invalid_argument("sample_frames: empty sequence");
  if (target_len < 1) throw std::invalid_argument("sample_frames: bad target length");
  std::vector<int> idx(static_cast<size_t>(target_len));
  if (mode == SampleMode::kUniform) {
    for (int i = 0; i < target_len; ++i)
      idx[static_cast<size_t>(i)] = static_cast<int>(static_cast<long long>(i) * T / target_len);
  } else {
    // Tile the clip until it covers target_len, then pick a random window.
    int copies = (target_len + T - 1) / T;
    int total = copies * T;
    std::mt19937_64 rng(seed);
    int start = 0;
    if (total > target_len)
      start = static_cast<int>(rng() % static_cast<uint64_t>(total - target_len + 1));
    for (int i = 0; i < target_len; ++i) idx[static_cast<size_t>(i)] = (start + i) % T;
  }
  KeypointSequence out = seq;
  out.data = Tensor({target_len, N, 3});
  for (int i = 0; i < target_len; ++i)
    for (int n = 0; n < N; ++n)
      for (int c = 0; c < 3; ++c)
        out.data.at3(i, n, c) = seq.data.at3(idx[static_cast<size_t>(i)], n, c);
  return out;
}

StreamTensor to_joint_stream(const KeypointSequence& seq) {
  StreamTensor s;
  s.kind = StreamKind::kJoint;
  s.data = seq.data;
  s.normalized = seq.normalized;
  return s;
}

StreamTensor compute_bones(const StreamTensor& joints, const graph::SkeletonGraph& topology) {
  const int T = joints.data.dim(0), N = joints.data.dim(1);
  if (N != topology.num_nodes())
    throw std::invalid_argument("compute_bones: tensor has " + std::to_string(N) +
                                " nodes, topology has " + std::to_string(topology.num_nodes()));
  StreamTensor out;
  out.kind = StreamKind::kBone;
  out.normalized = joints.normalized;
  out.data = Tensor({T, N, 3});
  for (int t = 0; t < T; ++t) {
    int root = topology.root();
    out.data.at3(t, root, 0) = 0.0;
    out.data.at3(t, root, 1) = 0.0;
    out.data.at3(t, root, 2) = joints.data.at3(t, root, 2);
    for (const auto& b : topology.bones()) {
      out.data.at3(t, b.dst, 0) = joints.data.at3(t, b.dst, 0) - joints.data.at3(t, b.src, 0);
      out.data.at3(t, b.dst, 1) = joints.data.at3(t, b.dst, 1) - joints.data.at3(t, b.src, 1);
      out.data.at3(t, b.dst, 2) = joints.data.at3(t, b.dst, 2);
    }
  }
  return out;
}

StreamTensor compute_motion(const StreamTensor& stream) {
  const int T = stream.data.dim(0), N = stream.data.dim(1);
  if (T < 2) throw std::invalid_argument("compute_motion: need at least two frames");
  StreamTensor out;
  out.normalized = stream.normalized;
  if (stream.kind == StreamKind::kJoint)
    out.kind = StreamKind::kJointMotion;
  else if (stream.kind == StreamKind::kBone)
    out.kind = StreamKind::kBoneMotion;
  else
    throw std::invalid_argument("compute_motion: input must be a joint or bone stream");
  const bool diff_confidence = stream.kind == StreamKind::kBone;
  out.data = Tensor({T, N, 3});
  for (int t = 0; t + 1 < T; ++t)
    for (int n = 0; n < N; ++n) {
      out.data.at3(t, n, 0) = stream.data.at3(t + 1, n, 0) - stream.data.at3(t, n, 0);
      out.data.at3(t, n, 1) = stream.data.at3(t + 1, n, 1) - stream.data.at3(t, n, 1);
      out.data.at3(t, n, 2) = diff_confidence
                                  ? stream.data.at3(t + 1, n, 2) - stream.data.at3(t, n, 2)
                                  : stream.data.at3(t, n, 2);
    }
  // Last frame stays zero (difference padding), except that joint motion
  // carries the per-frame confidence through unchanged.
  if (!diff_confidence)
    for (int n = 0; n < N; ++n) out.data.at3(T - 1, n, 2) = stream.data.at3(T - 1, n, 2);
  return out;
}

KeypointSequence augment(const KeypointSequence& seq, const AugmentationParams& params,
                         const graph::SkeletonGraph& topology) {
  if (!seq.normalized)
    throw std::invalid_argument("augment: input must be coordinate-normalized first");
  if (params.rotation_range < 0 || params.jitter_std < 0 || params.shift_range < 0 ||
      params.scale_low > params.scale_high)
    throw std::invalid_argument("augment: malformed parameter ranges");

  uint64_t seed = derive_seed(params.rng_seed, seq.sample_id);
  KeypointSequence out =
      sample_frames(seq, params.target_len, params.temporal_sampling, seed ^ 0x74656d70ull);
  std::mt19937_64 rng(seed);
  const int T = out.frames(), N = out.nodes();

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  bool mirror = unit(rng) < params.mirror_prob;
  std::uniform_real_distribution<double> rot_d(-params.rotation_range, params.rotation_range);
  double theta = params.rotation_range > 0 ? rot_d(rng) : 0.0;
  std::uniform_real_distribution<double> scale_d(params.scale_low, params.scale_high);
  double scale = params.scale_low < params.scale_high ? scale_d(rng) : params.scale_low;
  std::uniform_real_distribution<double> shift_d(-params.shift_range, params.shift_range);
  double dx = params.shift_range > 0 ? shift_d(rng) : 0.0;
  double dy = params.shift_range > 0 ? shift_d(rng) : 0.0;

  if (mirror) {
    for (int t = 0; t < T; ++t)
      for (int n = 0; n < N; ++n) out.data.at3(t, n, 0) = -out.data.at3(t, n, 0);
    for (auto [l, r] : topology.left_right_pairs())
      for (int t = 0; t < T; ++t)
        for (int c = 0; c < 3; ++c)
          std::swap(out.data.at3(t, l, c), out.data.at3(t, r, c));
  }

  const double ct = std::cos(theta), st = std::sin(theta);
  std::normal_distribution<double> jitter(0.0, params.jitter_std);
  for (int t = 0; t < T; ++t)
    for (int n = 0; n < N; ++n) {
      double x = out.data.at3(t, n, 0), y = out.data.at3(t, n, 1);
      double xr = ct * x - st * y, yr = st * x + ct * y;
      xr *= scale;
      yr *= scale;
      if (params.jitter_std > 0) {
        xr += jitter(rng);
        yr += jitter(rng);
      }
      out.data.at3(t, n, 0) = xr + dx;
      out.data.at3(t, n, 1) = yr + dy;
    }
  return out;
}

}  // namespace samslr::streams
