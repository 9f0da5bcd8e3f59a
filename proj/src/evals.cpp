#include "xlvr/evals.hpp"

#include <zlib.h>

#include <cmath>
#include <cstring>
#include <sstream>

#include "xlvr/rng.hpp"

namespace xlvr::evals {

CVec genie_ls(const CVec& y, const CMat& A, const RVec& u_true, bool* regularized) {
  require(A.cols() == u_true.size(), "genie_ls: mask length mismatch");
  std::vector<int> support;
  for (Eigen::Index i = 0; i < u_true.size(); ++i)
    if (u_true[i] != 0.0) support.push_back(static_cast<int>(i));
  require(!support.empty(), "genie_ls: empty support");

  CMat As(A.rows(), support.size());
  for (size_t c = 0; c < support.size(); ++c) As.col(c) = A.col(support[c]);

  CVec coef;
  bool used_ridge = false;
  Eigen::ColPivHouseholderQR<CMat> qr(As);
  if (As.rows() >= As.cols() && qr.rank() == As.cols()) {
    coef = qr.solve(y);
  } else {
    // Rank-deficient restricted system: flagged ridge fallback.
    used_ridge = true;
    const double lambda = 1e-8 * As.squaredNorm() / static_cast<double>(As.cols());
    CMat gram = As.adjoint() * As;
    gram.diagonal().array() += lambda;
    coef = gram.ldlt().solve(As.adjoint() * y);
  }
  if (regularized) *regularized = used_ridge;

  CVec h_hat = CVec::Zero(A.cols());
  for (size_t c = 0; c < support.size(); ++c) h_hat[support[c]] = coef[c];
  return h_hat;
}

CVec ridge_ls(const CVec& y, const CMat& A, double sigma2) {
  CMat gram = A.adjoint() * A;
  gram.diagonal().array() += sigma2;
  return gram.ldlt().solve(A.adjoint() * y);
}

CVec matched_filter(const CVec& y, const CMat& A) {
  const double scale = static_cast<double>(A.cols()) / static_cast<double>(A.rows());
  return scale * (A.adjoint() * y);
}

Method make_genie_ls_method() {
  return {"genie_ls", [](const EvalSample& s) {
            Estimate e;
            e.h_hat = genie_ls(s.block->y, s.block->A, s.truth->u);
            return e;
          }};
}

Method make_ridge_ls_method() {
  return {"ridge_ls", [](const EvalSample& s) {
            Estimate e;
            e.h_hat = ridge_ls(s.block->y, s.block->A, s.block->sigma2);
            return e;
          }};
}

Method make_matched_filter_method() {
  return {"matched_filter", [](const EvalSample& s) {
            Estimate e;
            e.h_hat = matched_filter(s.block->y, s.block->A);
            return e;
          }};
}

Method make_network_method(std::string name, const net::NetworkState& state, net::Variant variant) {
  return {std::move(name), [&state, variant](const EvalSample& s) {
            auto out = net::estimate(state, s.block->A, s.block->y, variant);
            Estimate e;
            e.h_hat = out.h_hat;
            if (out.u_soft.size() > 0) e.u_hard = metrics::harden(out.u_soft);
            return e;
          }};
}

namespace {

uint32_t crc_append(uint32_t crc, const void* data, size_t bytes) {
  return static_cast<uint32_t>(
      ::crc32(crc, reinterpret_cast<const Bytef*>(data), static_cast<uInt>(bytes)));
}

uint32_t crc_inputs(uint32_t crc, const channel::ChannelSample& truth,
                    const measure::PilotBlock& block) {
  crc = crc_append(crc, truth.h.data(), truth.h.size() * sizeof(cplx));
  crc = crc_append(crc, block.A.data(), block.A.size() * sizeof(cplx));
  crc = crc_append(crc, block.y.data(), block.y.size() * sizeof(cplx));
  return crc;
}

struct MethodAccum {
  std::vector<double> nmse_ratios;
  std::vector<double> sdrs;
  int failures = 0;
};

PointResult finalize(double sweep_var, const std::string& name, const MethodAccum& acc) {
  PointResult r;
  r.sweep_var = sweep_var;
  r.method = name;
  r.failures = acc.failures;
  r.n_samples = static_cast<int>(acc.nmse_ratios.size());
  auto stat = metrics::batch_stat(acc.nmse_ratios);
  r.nmse_mean_ratio = stat.mean;
  r.nmse_db = metrics::nmse_db(stat.mean);
  const double lo = std::max(stat.mean - stat.ci_halfwidth, 1e-15);
  const double hi = stat.mean + stat.ci_halfwidth;
  r.nmse_ci_db = 0.5 * (metrics::nmse_db(hi) - metrics::nmse_db(lo));
  if (!acc.sdrs.empty()) {
    auto sstat = metrics::batch_stat(acc.sdrs);
    r.sdr = sstat.mean;
    r.sdr_ci = sstat.ci_halfwidth;
  }
  return r;
}

EvalResult run_sweep(const std::vector<Method>& methods,
                     const std::vector<channel::ChannelSample>& dataset, const ArrayConfig& cfg,
                     const std::string& sweep_name, const std::vector<double>& sweep_values,
                     const std::function<measure::PilotBlock(const channel::ChannelSample&, double,
                                                             uint64_t)>& observe_at,
                     uint64_t seed) {
  require(!methods.empty(), "sweep: empty method set");
  require(!dataset.empty(), "sweep: empty dataset");
  require(!sweep_values.empty(), "sweep: empty sweep list");

  EvalResult result;
  result.sweep_name = sweep_name;
  for (double point : sweep_values) {
    std::vector<MethodAccum> accum(methods.size());
    uint32_t crc = static_cast<uint32_t>(::crc32(0L, Z_NULL, 0));
    double err_den = 0.0;
    std::vector<double> err_nums(methods.size(), 0.0);
    for (size_t i = 0; i < dataset.size(); ++i) {
      const auto& truth = dataset[i];
      const uint64_t sample_seed =
          derive_seed(seed, sweep_name, (static_cast<uint64_t>(std::llround(point * 1024.0)) << 24) | i);
      measure::PilotBlock block = observe_at(truth, point, sample_seed);
      crc = crc_inputs(crc, truth, block);
      EvalSample es{&truth, &block, &cfg};
      const double h_energy = truth.h.squaredNorm();
      err_den += h_energy;
      for (size_t m = 0; m < methods.size(); ++m) {
        try {
          Estimate est = methods[m].run(es);
          accum[m].nmse_ratios.push_back(metrics::nmse(est.h_hat, truth.h));
          err_nums[m] += (est.h_hat - truth.h).squaredNorm();
          if (est.u_hard) accum[m].sdrs.push_back(metrics::sdr(*est.u_hard, truth.u));
        } catch (const std::exception&) {
          ++accum[m].failures;
        }
      }
    }
    result.input_crc.emplace_back(point, crc);
    for (size_t m = 0; m < methods.size(); ++m) {
      PointResult pr = finalize(point, methods[m].name, accum[m]);
      pr.nmse_ratio_of_means = err_den > 0.0 ? err_nums[m] / err_den : 0.0;
      result.points.push_back(pr);
    }
  }
  return result;
}

}  // namespace

EvalResult sweep_snr(const std::vector<Method>& methods,
                     const std::vector<channel::ChannelSample>& dataset,
                     const std::vector<double>& snr_list_db, const ArrayConfig& cfg, int n_pilots,
                     uint64_t seed) {
  auto observe_at = [&](const channel::ChannelSample& truth, double snr_db,
                        uint64_t sample_seed) {
    CMat A = measure::make_combiner(cfg, n_pilots, derive_seed(sample_seed, "comb", 0));
    const double sigma2 = measure::sigma2_for_snr(truth.h, A, snr_db);
    return measure::observe(truth.h, A, cfg.n_rf, sigma2, derive_seed(sample_seed, "noise", 0));
  };
  return run_sweep(methods, dataset, cfg, "snr_db", snr_list_db, observe_at, seed);
}

EvalResult sweep_pilots(const std::vector<Method>& methods,
                        const std::vector<channel::ChannelSample>& dataset,
                        const std::vector<int>& pilot_list, const ArrayConfig& cfg, double snr_db,
                        uint64_t seed) {
  require(!pilot_list.empty(), "sweep_pilots: empty pilot list");
  int p_max = 0;
  for (int p : pilot_list) {
    require(p >= 1, "sweep_pilots: pilot counts must be positive");
    p_max = std::max(p_max, p);
  }
  // Nested measurement sets: slot p of the full block is reused verbatim
  // at every point that includes it (same combiner rows, same noise draw).
  auto observe_at = [&, p_max](const channel::ChannelSample& truth, double pilots_d,
                               uint64_t sample_seed) {
    const int pilots = static_cast<int>(pilots_d);
    CMat A_full = measure::make_combiner(cfg, p_max, derive_seed(sample_seed, "comb-full", 0));
    CMat A = A_full.topRows(static_cast<Eigen::Index>(cfg.n_rf) * pilots);
    const double sigma2 = measure::sigma2_for_snr(truth.h, A, snr_db);
    return measure::observe(truth.h, A, cfg.n_rf, sigma2, derive_seed(sample_seed, "noise-full", 0));
  };
  std::vector<double> values;
  for (int p : pilot_list) values.push_back(static_cast<double>(p));
  return run_sweep(methods, dataset, cfg, "pilots", values, observe_at, seed);
}

std::string to_csv(const EvalResult& result) {
  std::ostringstream out;
  out << "# sweep=" << result.sweep_name << "\n";
  out << "sweep_var,method,nmse_db,nmse_ci,sdr,sdr_ci,n_samples,failures\n";
  out.precision(10);
  for (const auto& p : result.points) {
    out << p.sweep_var << "," << p.method << "," << p.nmse_db << "," << p.nmse_ci_db << ",";
    if (std::isnan(p.sdr)) {
      out << ",";
    } else {
      out << p.sdr << "," << p.sdr_ci;
    }
    out << "," << p.n_samples << "," << p.failures << "\n";
  }
  return out.str();
}

EvalResult from_csv(const std::string& text) {
  EvalResult result;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line.rfind("# sweep=", 0) == 0) {
      result.sweep_name = line.substr(8);
      continue;
    }
    if (line.rfind("sweep_var", 0) == 0) continue;
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (cells.size() < 8) cells.resize(8);
    PointResult p;
    p.sweep_var = std::stod(cells[0]);
    p.method = cells[1];
    p.nmse_db = std::stod(cells[2]);
    p.nmse_ci_db = std::stod(cells[3]);
    p.sdr = cells[4].empty() ? std::numeric_limits<double>::quiet_NaN() : std::stod(cells[4]);
    p.sdr_ci = cells[5].empty() ? std::numeric_limits<double>::quiet_NaN() : std::stod(cells[5]);
    p.n_samples = cells[6].empty() ? 0 : std::stoi(cells[6]);
    p.failures = cells[7].empty() ? 0 : std::stoi(cells[7]);
    result.points.push_back(p);
  }
  require(!result.points.empty(), "from_csv: malformed or empty results CSV");
  return result;
}

}  // namespace xlvr::evals
