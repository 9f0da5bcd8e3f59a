/**
 * @file train.hpp
 * @brief End-to-end training of the unfolded network, global magnitude
 *        pruning, and masked fine-tuning.
 */
#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "xlvr/channel.hpp"
#include "xlvr/measurement.hpp"
#include "xlvr/network.hpp"

namespace xlvr::train {

enum class LrSchedule { kConstant, kCosine };

struct TrainConfig {
  int epochs = 40;
  int batch_size = 32;
  double lr = 2e-3;
  double lr_zeta = 2e-3;       // dedicated threshold rate
  LrSchedule lr_schedule = LrSchedule::kConstant;
  double alpha = 0.5;          // VR task weight
  double prune_rho = 0.0;      // 0 disables pruning
  int prune_start_epoch = 0;   // epoch index at which pruning triggers
  uint64_t seed = 1;
  double snr_min_db = 0.0;     // per-sample training SNR drawn uniformly
  double snr_max_db = 20.0;
  int threads = 0;             // 0 = hardware concurrency
  net::Variant variant = net::Variant::kVrNet;

  void validate() const {
    require(epochs >= 0, "TrainConfig: epochs must be nonnegative");
    require(batch_size >= 1, "TrainConfig: batch_size must be >= 1");
    require(alpha >= 0.0 && alpha <= 1.0, "TrainConfig: alpha must lie in [0, 1]");
    require(prune_rho >= 0.0 && prune_rho < 1.0, "TrainConfig: prune_rho must lie in [0, 1)");
    require(prune_start_epoch <= epochs, "TrainConfig: prune_start_epoch must be <= epochs");
    require(snr_min_db <= snr_max_db, "TrainConfig: SNR range inverted");
  }
};

/// Binary keep-mask aligned to every prunable tensor (1 = retained).
struct PruneMask {
  std::vector<std::optional<RVec>> keep;  // indexed by tensor id
  double threshold = 0.0;

  bool active() const { return !keep.empty(); }
};

struct EpochLog {
  int epoch = 0;
  double loss = 0.0;
  double nmse_db = 0.0;
  double sdr = 1.0;
  double lr = 0.0;
  long nonzero_params = 0;
};

struct AdamState {
  std::vector<ad::Arr> m;
  std::vector<ad::Arr> v;
  long step = 0;
};

/// Thrown when the loss stops being finite; carries the offending epoch.
struct TrainDivergence : std::runtime_error {
  explicit TrainDivergence(const std::string& msg) : std::runtime_error(msg) {}
};

struct TrainResult {
  std::vector<EpochLog> log;
  PruneMask mask;  // empty unless pruning ran
};

using EpochCallback =
    std::function<void(const EpochLog&, const net::NetworkState&, const PruneMask&)>;

/// Set per-layer thresholds from a probe batch (mean antenna energy at
/// each layer input) and resolve the relaxation temperature when unset.
void init_thresholds_from_probe(net::NetworkState& state, const ArrayConfig& cfg,
                                const measure::PilotConfig& pcfg,
                                const std::vector<channel::ChannelSample>& probe, uint64_t seed);

/// Minibatch training through all layers; deterministic given seeds.
/// Resumable: start_epoch > 0 continues an interrupted schedule.
TrainResult train(net::NetworkState& state, const ArrayConfig& cfg,
                  const measure::PilotConfig& pcfg,
                  const std::vector<channel::ChannelSample>& data, const TrainConfig& tcfg,
                  AdamState* opt_state = nullptr, int start_epoch = 0,
                  PruneMask existing_mask = {}, const EpochCallback& on_epoch = nullptr);

/// rho-quantile (linear interpolation) of |w| over all prunable tensors.
double prune_threshold(const net::NetworkState& state, double rho);

/// Zero weights with |w| < q and return the keep mask.
PruneMask apply_prune(net::NetworkState& state, double q);

/// One masked SGD step on a batch: W <- W - lr * grad, masked entries
/// re-zeroed afterwards.
void finetune_step(net::NetworkState& state, const PruneMask& mask, const ArrayConfig& cfg,
                   const measure::PilotConfig& pcfg,
                   const std::vector<channel::ChannelSample>& batch, double lr,
                   const TrainConfig& tcfg, uint64_t step_seed);

/// Batched gradient of the joint loss wrt every tensor (sum over samples
/// divided by batch size); exposed for finetune_step and tests.
struct BatchGrad {
  std::vector<ad::Arr> grad;  // per tensor id
  double loss = 0.0;
  double nmse = 0.0;
  double sdr = 1.0;
};

struct SampleContext {
  const channel::ChannelSample* sample;
  uint64_t combiner_seed;
  uint64_t noise_seed;
  double snr_db;
};

BatchGrad batch_gradient(const net::NetworkState& state, const ArrayConfig& cfg,
                         const measure::PilotConfig& pcfg,
                         const std::vector<SampleContext>& batch, double alpha,
                         net::Variant variant, int threads);

}  // namespace xlvr::train
