#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "samslr/nn.hpp"

namespace samslr::checkpoint {

/// FNV-1a over an arbitrary string, used to fingerprint a model
/// configuration so checkpoints refuse to load into a different shape.
uint64_t config_digest(const std::string& config_text);

/// Binary checkpoint: magic "SLCK", version, config digest, step counter,
/// then the named state tensors as float32. Loading verifies the digest
/// and the name/shape of every tensor.
void save_checkpoint(const std::string& path, uint64_t digest, uint64_t step,
                     const std::vector<nn::Param*>& state);

/// Returns the stored step counter. Throws on digest or shape mismatch.
uint64_t load_checkpoint(const std::string& path, uint64_t digest,
                         const std::vector<nn::Param*>& state);

/// Reads only the header, for inspection.
struct CheckpointInfo {
  uint64_t digest = 0;
  uint64_t step = 0;
  uint32_t tensor_count = 0;
};
CheckpointInfo inspect_checkpoint(const std::string& path);

}  // namespace samslr::checkpoint
