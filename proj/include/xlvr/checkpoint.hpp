/**
 * @file checkpoint.hpp
 * @brief Checkpoint archive: JSON header plus named flat float64 arrays.
 *
 * One file carries the architecture, every parameter tensor, the prune
 * mask (when present), optimizer moments for resume, and the config/data
 * hashes of the run that produced it. Writes are atomic.
 */
#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "xlvr/params.hpp"
#include "xlvr/train.hpp"

namespace xlvr::ckpt {

struct CheckpointMeta {
  std::string config_hash;
  std::string data_hash;
  std::string variant = "vrnet";  // vrnet | ablation
  int next_epoch = 0;
};

struct Checkpoint {
  net::NetworkState state;
  train::PruneMask mask;
  train::AdamState adam;
  CheckpointMeta meta;
};

void save_checkpoint(const std::filesystem::path& path, const net::NetworkState& state,
                     const CheckpointMeta& meta, const train::PruneMask* mask = nullptr,
                     const train::AdamState* adam = nullptr);

Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace xlvr::ckpt
