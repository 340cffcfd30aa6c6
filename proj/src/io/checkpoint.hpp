#pragma once

#include <string>

#include "nn/model.hpp"
#include "train/optim.hpp"

namespace ral::io {

// Checkpoint layout: <dir>/manifest.json + <dir>/params.bin.
// The manifest lists {name, shape, dtype, offset} per entry (parameters,
// batch-norm running statistics, optimizer moments) plus schema version,
// the model config and training progress. The blob is flat little-endian f32;
// a save/load round trip is bit-exact.
constexpr int kCheckpointSchema = 1;

struct CheckpointMeta {
    int epoch = 0;          // next epoch to run
    std::int64_t step = 0;  // optimizer step count
    std::string train_rng;  // serialized training RNG stream ("" if absent)
};

void save_checkpoint(const std::string& dir, const nn::RalModelT<float>& model,
                     const CheckpointMeta& meta, train::Adam* adam = nullptr);

RalConfig peek_checkpoint_config(const std::string& dir);

// Model must have been built from the stored config. Returns meta; restores
// adam moments when a non-null optimizer is supplied (errors if absent).
CheckpointMeta load_checkpoint(const std::string& dir, nn::RalModelT<float>& model,
                               train::Adam* adam = nullptr);

}  // namespace ral::io
