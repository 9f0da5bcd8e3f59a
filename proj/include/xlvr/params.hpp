/**
 * @file params.hpp
 * @brief Named-tensor registry and the trainable state of the unfolded
 *        network.
 *
 * Every trainable tensor is registered with a stable name, a module tag
 * for the census, and a prunable flag. Layers hold tensor ids; weight
 * sharing across unfolded layers aliases ids instead of duplicating data.
 */
#pragma once

#include <string>
#include <vector>

#include "xlvr/common.hpp"
#include "xlvr/tape.hpp"

namespace xlvr::net {

struct ArchConfig {
  int layers = 5;         // unfolded depth T
  int gcn_depth = 2;      // propagation layers per GCN
  int conv_channels = 16; // C
  int conv_kernel = 3;    // k, odd
  int gate_channels = 0;  // gate width; 0 = same as conv_channels
  double beta = 10.0;     // out-of-VR penalty
  double tau = 0.0;       // edge relaxation temperature; 0 = set at threshold init
  bool share_zeta = false;
  bool share_gcn = false;

  int gate_width() const { return gate_channels > 0 ? gate_channels : conv_channels; }

  void validate() const {
    require(layers >= 1, "ArchConfig: layers must be >= 1");
    require(gcn_depth >= 1, "ArchConfig: gcn_depth must be >= 1");
    require(conv_channels >= 2, "ArchConfig: conv_channels must be >= 2");
    require(conv_kernel % 2 == 1 && conv_kernel >= 1, "ArchConfig: conv_kernel must be odd");
    require(gate_channels == 0 || gate_channels >= 2, "ArchConfig: gate_channels must be 0 or >= 2");
    require(beta >= 0.0, "ArchConfig: beta must be nonnegative");
  }
};

struct TensorInfo {
  std::string name;
  std::string module;  // census grouping: dun | gcn | gate | prox
  bool prunable = false;
};

class ParamStore {
 public:
  int add(std::string name, std::string module, bool prunable, ad::Arr init);
  int count() const { return static_cast<int>(data_.size()); }
  ad::Arr& data(int id) { return data_[id]; }
  const ad::Arr& data(int id) const { return data_[id]; }
  const TensorInfo& info(int id) const { return info_[id]; }
  int find(const std::string& name) const;  // -1 if absent
  Eigen::Index total_size() const;

 private:
  std::vector<TensorInfo> info_;
  std::vector<ad::Arr> data_;
};

struct ConvHandles {
  int w = -1;
  int b = -1;
};

struct GateHandles {
  ConvHandles conv_in, res1_a, res1_b, res2_a, res2_b, conv_out;
};

struct LayerHandles {
  int gamma = -1;
  int mu_raw = -1;           // mu = softplus(mu_raw)
  int zeta = -1;
  std::vector<int> w_gcn;    // gcn_depth tensors of 16 entries (4x4 row-major)
  int w_out = -1;            // 4 entries
  ConvHandles prox_conv1, prox_conv2;
  GateHandles gate;
};

struct NetworkState {
  ArchConfig arch;
  ParamStore params;
  std::vector<LayerHandles> layers;
};

/// Fresh state with seeded Glorot-style initialization. Thresholds start
/// at zero; init_thresholds_from_probe sets them from data.
NetworkState init_network(const ArchConfig& arch, uint64_t seed);

struct CensusRow {
  std::string module;
  long total = 0;
  long nonzero = 0;
  long prunable = 0;
};

struct Census {
  std::vector<CensusRow> rows;
  long total = 0;
  long nonzero = 0;
  long prunable = 0;
};

Census count_params(const NetworkState& state);

}  // namespace xlvr::net
