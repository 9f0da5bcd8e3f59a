/**
 * @file config.hpp
 * @brief Experiment configuration: JSON round-trip with strict unknown-key
 *        rejection, plus a stable content hash embedded in artifacts.
 */
#pragma once

#include <filesystem>
#include <string>

#include "xlvr/array_config.hpp"
#include "xlvr/measurement.hpp"
#include "xlvr/params.hpp"
#include "xlvr/train.hpp"

namespace xlvr::cfg {

struct DatasetConfig {
  int train_count = 4000;
  int val_count = 500;
  int test_count = 500;
  uint64_t seed = 2024;
  int n_paths = 1;
};

struct ExperimentConfig {
  ArrayConfig array;
  measure::PilotConfig pilot;
  DatasetConfig dataset;
  net::ArchConfig arch;
  train::TrainConfig train;
  std::string out_root;  // empty = $XLVR_OUT or current directory

  void validate() const;
};

/// Desk-scale defaults (N = 64): the configuration exercised by the
/// acceptance experiments.
ExperimentConfig desk_config();

/// Full-scale defaults (N = 256, 16k/2k/2k, 100 epochs, prune at 50).
ExperimentConfig fullscale_config();

std::string to_json_string(const ExperimentConfig& cfg);
ExperimentConfig from_json_string(const std::string& text);

ExperimentConfig load_config(const std::filesystem::path& path);
void save_config(const ExperimentConfig& cfg, const std::filesystem::path& path);

/// FNV-1a over the canonical (sorted-key) JSON dump, as a hex string.
std::string config_hash(const ExperimentConfig& cfg);

/// Hash of the data-affecting subset (array + dataset) used to pair
/// checkpoints and datasets.
std::string data_hash(const ExperimentConfig& cfg);

}  // namespace xlvr::cfg
