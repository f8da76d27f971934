#pragma once

#include <cstdint>
#include <string>

#include "bcsnn/coding.hpp"
#include "bcsnn/model.hpp"
#include "bcsnn/network.hpp"

namespace bcsnn {

// Everything needed to rebuild a network and resume inference with the same
// coding configuration.
struct CheckpointMeta {
  ArchitectureSpec arch;
  CodingMode coding = CodingMode::kRate;
  int num_steps = 25;
  std::uint64_t seed = 0;
};

struct LoadedCheckpoint {
  CheckpointMeta meta;
  Network network;
};

// Writes the architecture, coding metadata, and every parameter and buffer
// tensor to a little-endian binary file. Round-tripping is bit exact.
// Throws std::runtime_error when the file cannot be written.
void save_checkpoint(const std::string& path, Network& network, const CheckpointMeta& meta);

// Rebuilds the model from the stored architecture and restores all tensors.
// Truncated files, bad magic bytes, unknown versions, and tensors that do not
// match the rebuilt model all raise std::runtime_error naming the problem.
LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace bcsnn
