/**
 * @file channel.hpp
 * @brief Near-field spatially non-stationary channel generation.
 *
 * A user at (theta, r) sees the array through a spherical-wave steering
 * vector; spatial non-stationarity is modeled by a subarray-level
 * visibility mask expanded to antenna level. Channels are
 *   h = gamma * b(theta, r) .* u,  gamma = sqrt(N) * lambda/(4 pi r) * exp(-j 2 pi r / lambda).
 */
#pragma once

#include <vector>

#include "xlvr/array_config.hpp"
#include "xlvr/common.hpp"

namespace xlvr::channel {

/// One generated user sample: ground-truth channel plus its VR masks.
struct ChannelSample {
  CVec h;            // length N, zero outside the VR
  RVec u_sub;        // length S, binary
  RVec u;            // length N, binary, block expansion of u_sub
  UserGeometry geometry;
  cplx gamma{0.0, 0.0};
};

/// Options for dataset generation. Single dominant path by default; a
/// multipath sum (each path with its own VR) can be enabled explicitly.
struct GenOptions {
  int n_paths = 1;
};

/// Spherical-wave array response, entry n = (1/sqrt(N)) exp(-j k (r_n - r))
/// with r_n = sqrt(r^2 + delta_n^2 d^2 - 2 r delta_n d theta). Unit norm.
CVec steering_vector(const ArrayConfig& cfg, const UserGeometry& geo);

/// Far-field (planar wave) response used as the r -> inf reference:
/// entry n = (1/sqrt(N)) exp(+j k delta_n d theta).
CVec steering_vector_far_field(const ArrayConfig& cfg, double theta);

/// theta ~ U(-sqrt(3)/2, sqrt(3)/2), r ~ U(4, 88) m.
UserGeometry sample_geometry(uint64_t seed);

/// Subarray mask entries are Bernoulli(0.5), resampled until at least one
/// subarray is visible; returns (u_sub, u) with u = u_sub (x) 1_{N_s}.
std::pair<RVec, RVec> sample_vr_mask(const ArrayConfig& cfg, uint64_t seed);

/// Expand a subarray mask to antenna level (block-constant).
RVec expand_mask(const ArrayConfig& cfg, const RVec& u_sub);

/// Assemble the masked channel for a given geometry and antenna mask.
/// Throws on an all-zero mask (degenerate sample, caller must resample).
ChannelSample channel_vector(const ArrayConfig& cfg, const UserGeometry& geo, const RVec& u);

/// Draw one complete sample (geometry, mask, channel) from a seed.
ChannelSample sample_channel(const ArrayConfig& cfg, uint64_t seed, const GenOptions& opt = {});

/// count independent samples; sample i depends only on (seed, i).
std::vector<ChannelSample> generate_dataset(const ArrayConfig& cfg, int count, uint64_t seed,
                                            const GenOptions& opt = {});

}  // namespace xlvr::channel
