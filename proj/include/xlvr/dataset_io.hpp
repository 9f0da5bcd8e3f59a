/**
 * @file dataset_io.hpp
 * @brief Binary dataset files with structured-text (JSON) manifests.
 *
 * Records are little-endian 32-bit floats; complex values are interleaved
 * (real, imag) with the antenna index fastest-varying. Each data file has
 * a sidecar `<name>.manifest.json` carrying the configuration, counts,
 * seed, field order, and a CRC-32 of the payload. All writes go through a
 * temp file and a rename.
 */
#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "xlvr/channel.hpp"
#include "xlvr/measurement.hpp"

namespace xlvr::io {

/// Channel record field order, frozen in the manifest:
///   theta, r, gamma(re, im), u_sub[S], u[N], h[2N interleaved].
struct DatasetManifest {
  ArrayConfig cfg;
  int count = 0;
  uint64_t seed = 0;
  std::string split;  // train | val | test
  int n_paths = 1;
  std::string config_hash;  // hash of the generating experiment config
  uint32_t crc32 = 0;
};

void write_dataset(const std::filesystem::path& bin_path,
                   const std::vector<channel::ChannelSample>& samples, const DatasetManifest& meta);

std::vector<channel::ChannelSample> read_dataset(const std::filesystem::path& bin_path,
                                                 DatasetManifest* meta_out = nullptr);

/// Observation records: sigma2 followed by y[2*N_RF*P interleaved]; the
/// manifest stores snr_db, pilot count, combiner policy and seeds so the
/// combiners can be re-derived.
struct ObservationManifest {
  ArrayConfig cfg;
  int count = 0;
  int n_pilots = 0;
  double snr_db = 0.0;
  std::string combiner_policy;  // per_sample | fixed
  uint64_t combiner_seed = 0;
  uint64_t noise_seed = 0;
  uint32_t crc32 = 0;
};

struct ObservationRecord {
  double sigma2 = 0.0;
  CVec y;
};

void write_observations(const std::filesystem::path& bin_path,
                        const std::vector<ObservationRecord>& records,
                        const ObservationManifest& meta);

std::vector<ObservationRecord> read_observations(const std::filesystem::path& bin_path,
                                                 ObservationManifest* meta_out = nullptr);

/// Atomic write helper shared by every artifact emitter.
void atomic_write(const std::filesystem::path& path, const std::string& bytes);

std::filesystem::path manifest_path(const std::filesystem::path& bin_path);

uint32_t crc32_bytes(const std::string& bytes);

}  // namespace xlvr::io
