#include "xlvr/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

#include "xlvr/metrics.hpp"
#include "xlvr/rng.hpp"

namespace xlvr::train {

namespace {

struct SampleEval {
  std::vector<ad::Arr> grad;
  double loss = 0.0;
  double nmse = 0.0;
  double sdr = 1.0;
  bool has_sdr = false;
};

uint64_t combiner_seed_for(const measure::PilotConfig& pcfg, uint64_t base, uint64_t idx) {
  if (pcfg.policy == measure::CombinerPolicy::kFixed) return pcfg.combiner_seed;
  return derive_seed(base, "combiner", idx);
}

SampleEval eval_sample(const net::NetworkState& state, const ArrayConfig& cfg,
                       const measure::PilotConfig& pcfg, const SampleContext& ctx, double alpha,
                       net::Variant variant) {
  const auto& sample = *ctx.sample;
  CMat A = measure::make_combiner(cfg, pcfg.n_pilots, ctx.combiner_seed);
  const double sigma2 = measure::sigma2_for_snr(sample.h, A, ctx.snr_db);
  auto block = measure::observe(sample.h, A, cfg.n_rf, sigma2, ctx.noise_seed);

  const double s = net::input_scale(block.y);
  const CVec y_norm = block.y / s;
  const CVec h_norm = sample.h / s;

  ad::Tape tape;
  auto bind = net::bind_params(tape, state);
  auto out = net::forward_tape(tape, state, bind, &A, y_norm, variant);
  ad::Var loss = net::loss_tape(tape, out, h_norm, sample.u, alpha, variant);
  tape.backward(loss);

  SampleEval ev;
  ev.loss = tape.val(loss)[0];
  {
    const ad::Arr& hh = tape.val(out.h_hat);
    const Eigen::Index n = hh.size() / 2;
    double err = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double dr = hh[i] - h_norm[i].real();
      const double di = hh[n + i] - h_norm[i].imag();
      err += dr * dr + di * di;
    }
    ev.nmse = err / h_norm.squaredNorm();
  }
  if (variant == net::Variant::kVrNet && out.u_soft.valid()) {
    RVec u_soft = tape.val(out.u_soft);
    ev.sdr = metrics::sdr(metrics::harden(u_soft), sample.u);
    ev.has_sdr = true;
  }
  ev.grad.resize(state.params.count());
  for (int id = 0; id < state.params.count(); ++id) ev.grad[id] = tape.grad_of(bind.leaf[id]);
  return ev;
}

void mask_grads(std::vector<ad::Arr>& grads, const PruneMask& mask) {
  if (!mask.active()) return;
  for (size_t id = 0; id < grads.size(); ++id) {
    if (id < mask.keep.size() && mask.keep[id]) grads[id] *= *mask.keep[id];
  }
}

void reapply_mask(net::NetworkState& state, const PruneMask& mask) {
  if (!mask.active()) return;
  for (int id = 0; id < state.params.count(); ++id) {
    if (static_cast<size_t>(id) < mask.keep.size() && mask.keep[id])
      state.params.data(id) *= *mask.keep[id];
  }
}

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

}  // namespace

BatchGrad batch_gradient(const net::NetworkState& state, const ArrayConfig& cfg,
                         const measure::PilotConfig& pcfg,
                         const std::vector<SampleContext>& batch, double alpha,
                         net::Variant variant, int threads) {
  require(!batch.empty(), "batch_gradient: empty batch");
  const int nthreads = std::min<int>(resolve_threads(threads), static_cast<int>(batch.size()));
  std::vector<SampleEval> evals(batch.size());

  auto worker = [&](int tid) {
    for (size_t i = tid; i < batch.size(); i += nthreads)
      evals[i] = eval_sample(state, cfg, pcfg, batch[i], alpha, variant);
  };
  if (nthreads == 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker, t);
    for (auto& th : pool) th.join();
  }

  // Reduce in sample order so results do not depend on thread count.
  BatchGrad out;
  out.grad.resize(state.params.count());
  for (int id = 0; id < state.params.count(); ++id)
    out.grad[id] = ad::Arr::Zero(state.params.data(id).size());
  double sdr_acc = 0.0;
  int sdr_count = 0;
  for (const auto& ev : evals) {
    out.loss += ev.loss;
    out.nmse += ev.nmse;
    if (ev.has_sdr) {
      sdr_acc += ev.sdr;
      ++sdr_count;
    }
    for (int id = 0; id < state.params.count(); ++id) out.grad[id] += ev.grad[id];
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  out.loss *= inv;
  out.nmse *= inv;
  for (auto& gr : out.grad) gr *= inv;
  out.sdr = sdr_count > 0 ? sdr_acc / sdr_count : 1.0;
  return out;
}

void init_thresholds_from_probe(net::NetworkState& state, const ArrayConfig& cfg,
                                const measure::PilotConfig& pcfg,
                                const std::vector<channel::ChannelSample>& probe, uint64_t seed) {
  require(!probe.empty(), "init_thresholds_from_probe: empty probe set");
  std::vector<double> acc(state.arch.layers, 0.0);
  for (size_t i = 0; i < probe.size(); ++i) {
    CMat A = measure::make_combiner(cfg, pcfg.n_pilots, derive_seed(seed, "probe-comb", i));
    const double sigma2 = measure::sigma2_for_snr(probe[i].h, A, pcfg.snr_db);
    auto block = measure::observe(probe[i].h, A, cfg.n_rf, sigma2, derive_seed(seed, "probe-noise", i));
    const CVec y_norm = block.y / net::input_scale(block.y);

    net::ForwardOptions opt;
    opt.auto_threshold = true;
    opt.soft_adjacency = true;
    std::vector<double> zetas;
    opt.zeta_used = &zetas;
    net::forward_plain(state, A, y_norm, opt);
    for (int t = 0; t < state.arch.layers; ++t) acc[t] += zetas[t];
  }
  double mean_all = 0.0;
  for (int t = 0; t < state.arch.layers; ++t) {
    const double zeta0 = acc[t] / static_cast<double>(probe.size());
    state.params.data(state.layers[t].zeta)[0] = zeta0;
    mean_all += zeta0;
  }
  mean_all /= state.arch.layers;
  if (state.arch.tau <= 0.0) state.arch.tau = std::max(0.1 * mean_all, 1e-6);
}

namespace {

double schedule_scale(const TrainConfig& tcfg, int epoch) {
  if (tcfg.lr_schedule == LrSchedule::kConstant || tcfg.epochs <= 1) return 1.0;
  const double t = static_cast<double>(epoch) / static_cast<double>(tcfg.epochs - 1);
  const double floor = 0.05;
  return floor + (1.0 - floor) * 0.5 * (1.0 + std::cos(t * 3.14159265358979323846));
}

void adam_step(net::NetworkState& state, AdamState& opt, std::vector<ad::Arr>& grads,
               const TrainConfig& tcfg, const PruneMask& mask, double lr_scale) {
  constexpr double kBeta1 = 0.9;
  constexpr double kBeta2 = 0.999;
  constexpr double kEps = 1e-8;
  if (opt.m.empty()) {
    opt.m.resize(state.params.count());
    opt.v.resize(state.params.count());
    for (int id = 0; id < state.params.count(); ++id) {
      opt.m[id] = ad::Arr::Zero(state.params.data(id).size());
      opt.v[id] = ad::Arr::Zero(state.params.data(id).size());
    }
  }
  mask_grads(grads, mask);
  ++opt.step;
  const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(opt.step));
  const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(opt.step));
  for (int id = 0; id < state.params.count(); ++id) {
    const bool is_zeta = state.params.info(id).name.ends_with("/zeta");
    const double lr = (is_zeta ? tcfg.lr_zeta : tcfg.lr) * lr_scale;
    opt.m[id] = kBeta1 * opt.m[id] + (1.0 - kBeta1) * grads[id];
    opt.v[id] = kBeta2 * opt.v[id] + (1.0 - kBeta2) * grads[id].square();
    state.params.data(id) -=
        lr * (opt.m[id] / bc1) / ((opt.v[id] / bc2).sqrt() + kEps);
  }
  reapply_mask(state, mask);
}

}  // namespace

TrainResult train(net::NetworkState& state, const ArrayConfig& cfg,
                  const measure::PilotConfig& pcfg,
                  const std::vector<channel::ChannelSample>& data, const TrainConfig& tcfg,
                  AdamState* opt_state, int start_epoch, PruneMask existing_mask,
                  const EpochCallback& on_epoch) {
  tcfg.validate();
  require(!data.empty(), "train: empty dataset");

  TrainResult result;
  result.mask = std::move(existing_mask);
  AdamState local_opt;
  AdamState& opt = opt_state ? *opt_state : local_opt;

  std::vector<size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = start_epoch; epoch < tcfg.epochs; ++epoch) {
    // Pruning triggers at the start of the scheduled epoch.
    if (tcfg.prune_rho > 0.0 && !result.mask.active() && epoch >= tcfg.prune_start_epoch) {
      const double q = prune_threshold(state, tcfg.prune_rho);
      result.mask = apply_prune(state, q);
    }

    auto shuffle_rng = make_rng(derive_seed(tcfg.seed, "shuffle", epoch));
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    double loss_acc = 0.0, nmse_acc = 0.0, sdr_acc = 0.0;
    long batches = 0;
    for (size_t pos = 0; pos < order.size(); pos += tcfg.batch_size) {
      const size_t end = std::min(order.size(), pos + tcfg.batch_size);
      std::vector<SampleContext> batch;
      batch.reserve(end - pos);
      for (size_t i = pos; i < end; ++i) {
        const size_t idx = order[i];
        SampleContext ctx;
        ctx.sample = &data[idx];
        const uint64_t draw = derive_seed(tcfg.seed, "epoch-draw", (static_cast<uint64_t>(epoch) << 32) | idx);
        ctx.combiner_seed = combiner_seed_for(pcfg, draw, idx);
        ctx.noise_seed = derive_seed(draw, "noise", idx);
        if (tcfg.snr_min_db == tcfg.snr_max_db) {
          ctx.snr_db = tcfg.snr_min_db;
        } else {
          auto rng = make_rng(derive_seed(draw, "snr", idx));
          std::uniform_real_distribution<double> dist(tcfg.snr_min_db, tcfg.snr_max_db);
          ctx.snr_db = dist(rng);
        }
        batch.push_back(ctx);
      }
      BatchGrad bg = batch_gradient(state, cfg, pcfg, batch, tcfg.alpha, tcfg.variant, tcfg.threads);
      if (!std::isfinite(bg.loss))
        throw TrainDivergence("train: non-finite loss at epoch " + std::to_string(epoch));
      adam_step(state, opt, bg.grad, tcfg, result.mask, schedule_scale(tcfg, epoch));
      loss_acc += bg.loss;
      nmse_acc += bg.nmse;
      sdr_acc += bg.sdr;
      ++batches;
    }

    EpochLog row;
    row.epoch = epoch;
    row.loss = loss_acc / batches;
    row.nmse_db = metrics::nmse_db(nmse_acc / batches);
    row.sdr = sdr_acc / batches;
    row.lr = tcfg.lr * schedule_scale(tcfg, epoch);
    row.nonzero_params = net::count_params(state).nonzero;
    result.log.push_back(row);
    if (on_epoch) on_epoch(row, state, result.mask);
  }
  return result;
}

double prune_threshold(const net::NetworkState& state, double rho) {
  require(rho >= 0.0 && rho < 1.0, "prune_threshold: rho must lie in [0, 1)");
  std::vector<double> mags;
  for (int id = 0; id < state.params.count(); ++id) {
    if (!state.params.info(id).prunable) continue;
    const auto& d = state.params.data(id);
    for (Eigen::Index i = 0; i < d.size(); ++i) mags.push_back(std::abs(d[i]));
  }
  require(!mags.empty(), "prune_threshold: no prunable weights");
  std::sort(mags.begin(), mags.end());
  const double pos = rho * static_cast<double>(mags.size() - 1);
  const size_t lo = static_cast<size_t>(pos);
  const double frac = pos - static_cast<double>(lo);
  if (lo + 1 >= mags.size()) return mags.back();
  return mags[lo] + frac * (mags[lo + 1] - mags[lo]);
}

PruneMask apply_prune(net::NetworkState& state, double q) {
  PruneMask mask;
  mask.threshold = q;
  mask.keep.resize(state.params.count());
  for (int id = 0; id < state.params.count(); ++id) {
    if (!state.params.info(id).prunable) continue;
    auto& d = state.params.data(id);
    RVec keep(d.size());
    for (Eigen::Index i = 0; i < d.size(); ++i) {
      if (std::abs(d[i]) < q) {
        d[i] = 0.0;
        keep[i] = 0.0;
      } else {
        keep[i] = 1.0;
      }
    }
    mask.keep[id] = std::move(keep);
  }
  return mask;
}

void finetune_step(net::NetworkState& state, const PruneMask& mask, const ArrayConfig& cfg,
                   const measure::PilotConfig& pcfg,
                   const std::vector<channel::ChannelSample>& batch, double lr,
                   const TrainConfig& tcfg, uint64_t step_seed) {
  require(!batch.empty(), "finetune_step: empty batch");
  if (mask.active())
    require(mask.keep.size() == static_cast<size_t>(state.params.count()),
            "finetune_step: mask misaligned with state");
  std::vector<SampleContext> ctxs;
  ctxs.reserve(batch.size());
  for (size_t i = 0; i < batch.size(); ++i) {
    SampleContext ctx;
    ctx.sample = &batch[i];
    const uint64_t draw = derive_seed(step_seed, "finetune", i);
    ctx.combiner_seed = combiner_seed_for(pcfg, draw, i);
    ctx.noise_seed = derive_seed(draw, "noise", i);
    ctx.snr_db = pcfg.snr_db;
    ctxs.push_back(ctx);
  }
  BatchGrad bg = batch_gradient(state, cfg, pcfg, ctxs, tcfg.alpha, tcfg.variant, tcfg.threads);
  mask_grads(bg.grad, mask);
  for (int id = 0; id < state.params.count(); ++id) state.params.data(id) -= lr * bg.grad[id];
  reapply_mask(state, mask);
}

}  // namespace xlvr::train
