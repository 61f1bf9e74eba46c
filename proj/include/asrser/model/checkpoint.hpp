// Single-file checkpoint: JSON header (architecture, config, vocab, fold
// bookkeeping, tensor directory) followed by row-major float32 tensor data.
#pragma once

#include <string>
#include <vector>

#include "asrser/model/model.hpp"

namespace asrser::model {

struct CheckpointMeta {
  std::string test_speaker;                // empty when not fold-scoped
  std::vector<std::string> train_speakers;
  uint64_t config_hash = 0;
};

void save_checkpoint(const std::string& path, const Model& model,
                     const CheckpointMeta& meta);

// Reads the header only (cheap leakage / compatibility checks).
CheckpointMeta read_checkpoint_meta(const std::string& path,
                                    ModelConfig* config = nullptr);

Model load_checkpoint(const std::string& path, CheckpointMeta* meta = nullptr);

}  // namespace asrser::model
