#include "xlvr/params.hpp"

#include <cmath>
#include <map>

#include "xlvr/rng.hpp"

namespace xlvr::net {

int ParamStore::add(std::string name, std::string module, bool prunable, ad::Arr init) {
  require(find(name) < 0, "ParamStore: duplicate tensor name " + name);
  info_.push_back({std::move(name), std::move(module), prunable});
  data_.push_back(std::move(init));
  return count() - 1;
}

int ParamStore::find(const std::string& name) const {
  for (int i = 0; i < count(); ++i)
    if (info_[i].name == name) return i;
  return -1;
}

Eigen::Index ParamStore::total_size() const {
  Eigen::Index n = 0;
  for (const auto& d : data_) n += d.size();
  return n;
}

namespace {

ad::Arr glorot(std::mt19937_64& rng, Eigen::Index n, double fan_in, double fan_out) {
  const double limit = std::sqrt(6.0 / (fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  ad::Arr v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = dist(rng);
  return v;
}

ConvHandles add_conv(ParamStore& ps, std::mt19937_64& rng, const std::string& prefix,
                     const std::string& module, int in_c, int out_c, int k) {
  ConvHandles h;
  h.w = ps.add(prefix + "/w", module, true,
               glorot(rng, static_cast<Eigen::Index>(out_c) * in_c * k, in_c * k, out_c * k));
  h.b = ps.add(prefix + "/b", module, false, ad::Arr::Zero(out_c));
  return h;
}

double inverse_softplus(double y) { return std::log(std::expm1(y)); }

}  // namespace

NetworkState init_network(const ArchConfig& arch, uint64_t seed) {
  arch.validate();
  NetworkState state;
  state.arch = arch;
  auto rng = make_rng(derive_seed(seed, "net-init", 0));
  const int c = arch.conv_channels;
  const int gw = arch.gate_width();
  const int k = arch.conv_kernel;

  for (int t = 0; t < arch.layers; ++t) {
    LayerHandles layer;
    const std::string lp = "layer" + std::to_string(t);
    // Staggered step-size ladder: later layers push harder into the
    // weakly-observed subspace once the prior has stabilized.
    const double gamma0 = std::min(0.2 * std::pow(1.45, t), 1.0);
    layer.gamma = state.params.add(lp + "/gamma", "dun", false, ad::Arr::Constant(1, gamma0));
    layer.mu_raw =
        state.params.add(lp + "/mu_raw", "dun", false, ad::Arr::Constant(1, inverse_softplus(0.1)));

    if (arch.share_zeta && t > 0) {
      layer.zeta = state.layers[0].zeta;
    } else {
      layer.zeta = state.params.add(lp + "/zeta", "gcn", false, ad::Arr::Zero(1));
    }

    if (arch.share_gcn && t > 0) {
      layer.w_gcn = state.layers[0].w_gcn;
      layer.w_out = state.layers[0].w_out;
    } else {
      for (int l = 0; l < arch.gcn_depth; ++l) {
        // Identity-leaning start so the extracted channel begins as a
        // (degree-scaled) copy instead of a random feature mixture.
        ad::Arr w = 0.25 * glorot(rng, 16, 4, 4);
        for (int dd = 0; dd < 4; ++dd) w[dd * 4 + dd] += 1.0;
        layer.w_gcn.push_back(
            state.params.add(lp + "/gcn/w" + std::to_string(l), "gcn", true, std::move(w)));
      }
      layer.w_out = state.params.add(lp + "/gcn/w_out", "gcn", false, glorot(rng, 4, 4, 1));
    }

    layer.gate.conv_in = add_conv(state.params, rng, lp + "/gate/conv_in", "gate", 3, gw, k);
    layer.gate.res1_a = add_conv(state.params, rng, lp + "/gate/res1_a", "gate", gw, gw, k);
    layer.gate.res1_b = add_conv(state.params, rng, lp + "/gate/res1_b", "gate", gw, gw, k);
    layer.gate.res2_a = add_conv(state.params, rng, lp + "/gate/res2_a", "gate", gw, gw, k);
    layer.gate.res2_b = add_conv(state.params, rng, lp + "/gate/res2_b", "gate", gw, gw, k);
    layer.gate.conv_out = add_conv(state.params, rng, lp + "/gate/conv_out", "gate", gw, 1, k);
    layer.prox_conv1 = add_conv(state.params, rng, lp + "/prox/conv1", "prox", 2, c, k);
    layer.prox_conv2 = add_conv(state.params, rng, lp + "/prox/conv2", "prox", c, 2, k);

    state.layers.push_back(std::move(layer));
  }
  return state;
}

Census count_params(const NetworkState& state) {
  Census census;
  std::map<std::string, CensusRow> rows;
  for (int id = 0; id < state.params.count(); ++id) {
    const auto& info = state.params.info(id);
    const auto& data = state.params.data(id);
    auto& row = rows[info.module];
    row.module = info.module;
    row.total += data.size();
    long nz = 0;
    for (Eigen::Index i = 0; i < data.size(); ++i)
      if (data[i] != 0.0) ++nz;
    row.nonzero += nz;
    if (info.prunable) row.prunable += data.size();
  }
  for (auto& [_, row] : rows) {
    census.total += row.total;
    census.nonzero += row.nonzero;
    census.prunable += row.prunable;
    census.rows.push_back(row);
  }
  return census;
}

}  // namespace xlvr::net
