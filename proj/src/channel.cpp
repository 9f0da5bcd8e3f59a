#include "xlvr/channel.hpp"

#include <cmath>
#include <numbers>

#include "xlvr/rng.hpp"

namespace xlvr::channel {

namespace {
constexpr double kPi = std::numbers::pi;
}

CVec steering_vector(const ArrayConfig& cfg, const UserGeometry& geo) {
  cfg.validate();
  if (geo.r <= 0.0) throw std::domain_error("steering_vector: r must be positive");
  const int n = cfg.n_antennas;
  const double d = cfg.spacing();
  const double kappa = 2.0 * kPi / cfg.wavelength();
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));

  CVec b(n);
  for (int i = 1; i <= n; ++i) {
    const double dn = cfg.delta(i) * d;
    const double sq = geo.r * geo.r + dn * dn - 2.0 * geo.r * dn * geo.theta;
    if (sq <= 0.0) throw std::domain_error("steering_vector: non-positive squared distance");
    const double rn = std::sqrt(sq);
    const double phase = -kappa * (rn - geo.r);
    b[i - 1] = scale * cplx(std::cos(phase), std::sin(phase));
  }
  return b;
}

CVec steering_vector_far_field(const ArrayConfig& cfg, double theta) {
  cfg.validate();
  const int n = cfg.n_antennas;
  const double d = cfg.spacing();
  const double kappa = 2.0 * kPi / cfg.wavelength();
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  CVec b(n);
  for (int i = 1; i <= n; ++i) {
    const double phase = kappa * cfg.delta(i) * d * theta;
    b[i - 1] = scale * cplx(std::cos(phase), std::sin(phase));
  }
  return b;
}

UserGeometry sample_geometry(uint64_t seed) {
  auto rng = make_rng(seed);
  std::uniform_real_distribution<double> theta_dist(-kThetaBound, kThetaBound);
  std::uniform_real_distribution<double> r_dist(kRangeMin, kRangeMax);
  UserGeometry geo;
  geo.theta = theta_dist(rng);
  geo.r = r_dist(rng);
  return geo;
}

std::pair<RVec, RVec> sample_vr_mask(const ArrayConfig& cfg, uint64_t seed) {
  cfg.validate();
  auto rng = make_rng(seed);
  std::bernoulli_distribution coin(0.5);
  RVec u_sub(cfg.n_subarrays);
  do {
    for (int s = 0; s < cfg.n_subarrays; ++s) u_sub[s] = coin(rng) ? 1.0 : 0.0;
  } while (u_sub.sum() == 0.0);
  return {u_sub, expand_mask(cfg, u_sub)};
}

RVec expand_mask(const ArrayConfig& cfg, const RVec& u_sub) {
  require(u_sub.size() == cfg.n_subarrays, "expand_mask: u_sub length must equal n_subarrays");
  const int ns = cfg.antennas_per_subarray();
  RVec u(cfg.n_antennas);
  for (int s = 0; s < cfg.n_subarrays; ++s) u.segment(s * ns, ns).setConstant(u_sub[s]);
  return u;
}

ChannelSample channel_vector(const ArrayConfig& cfg, const UserGeometry& geo, const RVec& u) {
  require(u.size() == cfg.n_antennas, "channel_vector: mask length must equal n_antennas");
  if (u.sum() == 0.0) throw std::invalid_argument("channel_vector: all-zero VR mask");
  const double lam = cfg.wavelength();
  const double mag = std::sqrt(static_cast<double>(cfg.n_antennas)) * lam / (4.0 * kPi * geo.r);
  const double phase = -2.0 * kPi * geo.r / lam;
  const cplx gamma = mag * cplx(std::cos(phase), std::sin(phase));

  ChannelSample sample;
  sample.geometry = geo;
  sample.gamma = gamma;
  sample.u = u;
  sample.h = (gamma * steering_vector(cfg, geo).array() * u.cast<cplx>()).matrix();
  // Recover the subarray mask from the expanded one (block-constant input).
  const int ns = cfg.antennas_per_subarray();
  sample.u_sub = RVec(cfg.n_subarrays);
  for (int s = 0; s < cfg.n_subarrays; ++s) sample.u_sub[s] = u[s * ns];
  return sample;
}

ChannelSample sample_channel(const ArrayConfig& cfg, uint64_t seed, const GenOptions& opt) {
  require(opt.n_paths >= 1, "sample_channel: n_paths must be >= 1");
  if (opt.n_paths == 1) {
    auto geo = sample_geometry(derive_seed(seed, "geometry", 0));
    auto [u_sub, u] = sample_vr_mask(cfg, derive_seed(seed, "vr-mask", 0));
    return channel_vector(cfg, geo, u);
  }
  // Multipath sum: each path carries its own geometry and VR; the sample's
  // mask is the union of the per-path masks.
  ChannelSample acc;
  acc.h = CVec::Zero(cfg.n_antennas);
  acc.u = RVec::Zero(cfg.n_antennas);
  acc.u_sub = RVec::Zero(cfg.n_subarrays);
  for (int l = 0; l < opt.n_paths; ++l) {
    auto geo = sample_geometry(derive_seed(seed, "geometry", l));
    auto [u_sub, u] = sample_vr_mask(cfg, derive_seed(seed, "vr-mask", l));
    auto path = channel_vector(cfg, geo, u);
    acc.h += path.h;
    acc.u = acc.u.max(u);
    acc.u_sub = acc.u_sub.max(u_sub);
    if (l == 0) {
      acc.geometry = geo;
      acc.gamma = path.gamma;
    }
  }
  return acc;
}

std::vector<ChannelSample> generate_dataset(const ArrayConfig& cfg, int count, uint64_t seed,
                                            const GenOptions& opt) {
  require(count >= 1, "generate_dataset: count must be >= 1");
  std::vector<ChannelSample> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) out.push_back(sample_channel(cfg, derive_seed(seed, "sample", i), opt));
  return out;
}

}  // namespace xlvr::channel
