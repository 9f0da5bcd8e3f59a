/**
 * @file module.cpp
 * @brief Python bindings for the main operations: channel generation,
 *        hybrid-combining observation, unfolded estimator steps, graph
 *        utilities, training, pruning, and metrics.
 */
#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "xlvr/channel.hpp"
#include "xlvr/checkpoint.hpp"
#include "xlvr/config.hpp"
#include "xlvr/evals.hpp"
#include "xlvr/metrics.hpp"
#include "xlvr/network.hpp"
#include "xlvr/train.hpp"

namespace py = pybind11;
using namespace xlvr;

namespace {

/// Network handle: state plus the training bookkeeping the CLI keeps.
struct PyNetwork {
  net::NetworkState state;
  train::PruneMask mask;
  train::AdamState adam;
  std::string variant = "vrnet";

  net::Variant variant_enum() const {
    return variant == "ablation" ? net::Variant::kAblation : net::Variant::kVrNet;
  }
};

measure::PilotConfig pilot_from_kwargs(int n_pilots, double snr_db) {
  measure::PilotConfig p;
  p.n_pilots = n_pilots;
  p.snr_db = snr_db;
  return p;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Near-field XL-MIMO joint VR recognition and channel estimation";

  py::class_<ArrayConfig>(m, "ArrayConfig")
      .def(py::init([](int n_antennas, int n_subarrays, double carrier_hz, int n_rf) {
             ArrayConfig c{n_antennas, n_subarrays, carrier_hz, n_rf};
             c.validate();
             return c;
           }),
           py::arg("n_antennas") = 64, py::arg("n_subarrays") = 8,
           py::arg("carrier_hz") = 100e9, py::arg("n_rf") = 4)
      .def_readonly("n_antennas", &ArrayConfig::n_antennas)
      .def_readonly("n_subarrays", &ArrayConfig::n_subarrays)
      .def_readonly("carrier_hz", &ArrayConfig::carrier_hz)
      .def_readonly("n_rf", &ArrayConfig::n_rf)
      .def_property_readonly("wavelength", &ArrayConfig::wavelength)
      .def_property_readonly("spacing", &ArrayConfig::spacing);

  py::class_<UserGeometry>(m, "UserGeometry")
      .def(py::init<double, double>(), py::arg("theta"), py::arg("r"))
      .def_readwrite("theta", &UserGeometry::theta)
      .def_readwrite("r", &UserGeometry::r);

  py::class_<channel::ChannelSample>(m, "ChannelSample")
      .def_property_readonly("h", [](const channel::ChannelSample& s) { return s.h; })
      .def_property_readonly("u", [](const channel::ChannelSample& s) { return s.u; })
      .def_property_readonly("u_sub", [](const channel::ChannelSample& s) { return s.u_sub; })
      .def_property_readonly("theta", [](const channel::ChannelSample& s) { return s.geometry.theta; })
      .def_property_readonly("r", [](const channel::ChannelSample& s) { return s.geometry.r; })
      .def_property_readonly("gamma", [](const channel::ChannelSample& s) { return s.gamma; });

  m.def(
      "steering_vector",
      [](const ArrayConfig& cfg, double theta, double r) {
        return channel::steering_vector(cfg, UserGeometry{theta, r});
      },
      py::arg("cfg"), py::arg("theta"), py::arg("r"));
  m.def(
      "steering_vector_far_field",
      [](const ArrayConfig& cfg, double theta) {
        return channel::steering_vector_far_field(cfg, theta);
      },
      py::arg("cfg"), py::arg("theta"));
  m.def(
      "sample_geometry",
      [](uint64_t seed) {
        auto g = channel::sample_geometry(seed);
        return std::make_pair(g.theta, g.r);
      },
      py::arg("seed"));
  m.def(
      "sample_vr_mask",
      [](const ArrayConfig& cfg, uint64_t seed) { return channel::sample_vr_mask(cfg, seed); },
      py::arg("cfg"), py::arg("seed"));
  m.def(
      "channel_vector",
      [](const ArrayConfig& cfg, double theta, double r, const RVec& u) {
        return channel::channel_vector(cfg, UserGeometry{theta, r}, u);
      },
      py::arg("cfg"), py::arg("theta"), py::arg("r"), py::arg("u"));
  m.def(
      "generate_dataset",
      [](const ArrayConfig& cfg, int count, uint64_t seed, int n_paths) {
        channel::GenOptions opt;
        opt.n_paths = n_paths;
        return channel::generate_dataset(cfg, count, seed, opt);
      },
      py::arg("cfg"), py::arg("count"), py::arg("seed"), py::arg("n_paths") = 1);

  m.def("make_combiner", &measure::make_combiner, py::arg("cfg"), py::arg("n_pilots"),
        py::arg("seed"));
  m.def(
      "observe",
      [](const CVec& h, const CMat& A, int n_rf, double sigma2, uint64_t seed) {
        auto block = measure::observe(h, A, n_rf, sigma2, seed);
        return std::make_pair(block.y, block.sigma2);
      },
      py::arg("h"), py::arg("A"), py::arg("n_rf"), py::arg("sigma2"), py::arg("noise_seed"));
  m.def("sigma2_for_snr", &measure::sigma2_for_snr, py::arg("h"), py::arg("A"),
        py::arg("snr_db"));

  m.def("weight_matrix_diag", &dun::weight_matrix_diag, py::arg("u"), py::arg("beta"));
  m.def("vr_weighted_objective", &dun::vr_weighted_objective, py::arg("h"), py::arg("y"),
        py::arg("A"), py::arg("z"), py::arg("u"), py::arg("mu"), py::arg("beta"));
  m.def(
      "dun_step",
      [](const CVec& h, const CVec& y, const CMat& A, const CVec& z, const RVec& u, double gamma,
         double mu, double beta) {
        return dun::dun_step(h, y, A, z, u, {gamma, mu, beta});
      },
      py::arg("h"), py::arg("y"), py::arg("A"), py::arg("z"), py::arg("u"), py::arg("gamma"),
      py::arg("mu"), py::arg("beta") = 10.0);
  m.def(
      "mdisr_step",
      [](const CVec& h, const CVec& y, const CMat& A, const CVec& z, double gamma, double mu) {
        return dun::mdisr_step(h, y, A, z, {gamma, mu, 0.0});
      },
      py::arg("h"), py::arg("y"), py::arg("A"), py::arg("z"), py::arg("gamma"), py::arg("mu"));
  m.def(
      "init_estimate",
      [](const CVec& y, const CMat& A) {
        auto s = dun::init_estimate(y, A);
        return std::make_tuple(s.h0, s.z0, s.u0);
      },
      py::arg("y"), py::arg("A"));

  m.def(
      "build_node_features",
      [](const CVec& h) { return gcn::build_node_features(h).X; }, py::arg("h_dun"));
  m.def(
      "init_threshold", [](const CVec& h) { return gcn::init_threshold(gcn::build_node_features(h)); },
      py::arg("h_dun"));
  m.def("normalize_adjacency", &gcn::normalize_adjacency, py::arg("G"));

  m.def("nmse", &metrics::nmse, py::arg("h_hat"), py::arg("h"));
  m.def("nmse_db", &metrics::nmse_db, py::arg("ratio"));
  m.def("sdr", &metrics::sdr, py::arg("u_hat_hard"), py::arg("u_true"));
  m.def("harden", &metrics::harden, py::arg("u_soft"));
  m.def("genie_ls", [](const CVec& y, const CMat& A, const RVec& u) {
        return evals::genie_ls(y, A, u);
      },
      py::arg("y"), py::arg("A"), py::arg("u_true"));

  py::class_<PyNetwork>(m, "Network")
      .def(py::init([](int layers, int gcn_depth, int conv_channels, int conv_kernel,
                       int gate_channels, double beta, double tau, uint64_t seed,
                       const std::string& variant) {
             net::ArchConfig arch;
             arch.layers = layers;
             arch.gcn_depth = gcn_depth;
             arch.conv_channels = conv_channels;
             arch.conv_kernel = conv_kernel;
             arch.gate_channels = gate_channels;
             arch.beta = beta;
             arch.tau = tau;
             auto p = std::make_unique<PyNetwork>();
             p->state = net::init_network(arch, seed);
             p->variant = variant;
             return p;
           }),
           py::arg("layers") = 5, py::arg("gcn_depth") = 2, py::arg("conv_channels") = 16,
           py::arg("conv_kernel") = 3, py::arg("gate_channels") = 0, py::arg("beta") = 10.0,
           py::arg("tau") = 0.0, py::arg("seed") = 1, py::arg("variant") = "vrnet")
      .def("init_thresholds",
           [](PyNetwork& self, const ArrayConfig& cfg, int n_pilots, double snr_db,
              const std::vector<channel::ChannelSample>& probe, uint64_t seed) {
             train::init_thresholds_from_probe(self.state, cfg,
                                               pilot_from_kwargs(n_pilots, snr_db), probe, seed);
           },
           py::arg("cfg"), py::arg("n_pilots"), py::arg("snr_db"), py::arg("probe"),
           py::arg("seed"))
      .def("train",
           [](PyNetwork& self, const ArrayConfig& cfg, int n_pilots,
              const std::vector<channel::ChannelSample>& data, int epochs, int batch_size,
              double lr, double lr_zeta, double alpha, double prune_rho, int prune_start_epoch,
              uint64_t seed, double snr_min_db, double snr_max_db, int threads) {
             train::TrainConfig tcfg;
             tcfg.epochs = epochs;
             tcfg.batch_size = batch_size;
             tcfg.lr = lr;
             tcfg.lr_zeta = lr_zeta;
             tcfg.alpha = alpha;
             tcfg.prune_rho = prune_rho;
             tcfg.prune_start_epoch = prune_start_epoch;
             tcfg.seed = seed;
             tcfg.snr_min_db = snr_min_db;
             tcfg.snr_max_db = snr_max_db;
             tcfg.threads = threads;
             tcfg.variant = self.variant_enum();
             measure::PilotConfig pcfg = pilot_from_kwargs(n_pilots, (snr_min_db + snr_max_db) / 2);
             auto result = train::train(self.state, cfg, pcfg, data, tcfg, &self.adam, 0,
                                        std::move(self.mask));
             self.mask = std::move(result.mask);
             py::list log;
             for (const auto& row : result.log) {
               py::dict d;
               d["epoch"] = row.epoch;
               d["loss"] = row.loss;
               d["nmse_db"] = row.nmse_db;
               d["sdr"] = row.sdr;
               d["nonzero_params"] = row.nonzero_params;
               log.append(d);
             }
             return log;
           },
           py::arg("cfg"), py::arg("n_pilots"), py::arg("data"), py::arg("epochs") = 10,
           py::arg("batch_size") = 32, py::arg("lr") = 2e-3, py::arg("lr_zeta") = 2e-3,
           py::arg("alpha") = 0.5, py::arg("prune_rho") = 0.0, py::arg("prune_start_epoch") = 0,
           py::arg("seed") = 1, py::arg("snr_min_db") = 10.0, py::arg("snr_max_db") = 10.0,
           py::arg("threads") = 0)
      .def("estimate",
           [](const PyNetwork& self, const CMat& A, const CVec& y) {
             auto out = net::estimate(self.state, A, y, self.variant_enum());
             return std::make_pair(out.h_hat, out.u_soft);
           },
           py::arg("A"), py::arg("y"))
      .def("prune",
           [](PyNetwork& self, double rho) {
             const double q = train::prune_threshold(self.state, rho);
             self.mask = train::apply_prune(self.state, q);
             return q;
           },
           py::arg("rho"))
      .def("census",
           [](const PyNetwork& self) {
             auto census = net::count_params(self.state);
             py::dict d;
             d["total"] = census.total;
             d["nonzero"] = census.nonzero;
             d["prunable"] = census.prunable;
             py::dict rows;
             for (const auto& row : census.rows) {
               py::dict r;
               r["total"] = row.total;
               r["nonzero"] = row.nonzero;
               r["prunable"] = row.prunable;
               rows[row.module.c_str()] = r;
             }
             d["modules"] = rows;
             return d;
           })
      .def("save",
           [](const PyNetwork& self, const std::filesystem::path& path) {
             ckpt::CheckpointMeta meta;
             meta.variant = self.variant;
             ckpt::save_checkpoint(path, self.state, meta, &self.mask, &self.adam);
           },
           py::arg("path"))
      .def_static("load", [](const std::filesystem::path& path) {
        auto loaded = ckpt::load_checkpoint(path);
        auto p = std::make_unique<PyNetwork>();
        p->state = std::move(loaded.state);
        p->mask = std::move(loaded.mask);
        p->adam = std::move(loaded.adam);
        p->variant = loaded.meta.variant;
        return p;
      }, py::arg("path"));

  m.attr("__version__") = "0.1.0";
}
