/**
 * @file xlvr_main.cpp
 * @brief Command-line harness: gen, train, prune, eval, plot, params, trace.
 *
 * Exit codes: 0 success, 1 usage/config error, 2 runtime failure.
 */
#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>

#include "xlvr/checkpoint.hpp"
#include "xlvr/config.hpp"
#include "xlvr/dataset_io.hpp"
#include "xlvr/evals.hpp"
#include "xlvr/rng.hpp"
#include "xlvr/svg_plot.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace xlvr;

namespace {

fs::path resolve_out_root(const cfg::ExperimentConfig& config) {
  if (!config.out_root.empty()) return config.out_root;
  if (const char* env = std::getenv("XLVR_OUT")) return env;
  return fs::current_path();
}

int cmd_gen(const fs::path& config_path, fs::path out_dir, bool with_observations) {
  auto config = cfg::load_config(config_path);
  if (out_dir.empty()) out_dir = resolve_out_root(config) / "data";
  fs::create_directories(out_dir);

  const std::string hash = cfg::config_hash(config);
  struct SplitSpec {
    const char* name;
    int count;
    const char* stream;
  };
  const SplitSpec splits[] = {{"train", config.dataset.train_count, "split-train"},
                              {"val", config.dataset.val_count, "split-val"},
                              {"test", config.dataset.test_count, "split-test"}};
  channel::GenOptions gen_opt;
  gen_opt.n_paths = config.dataset.n_paths;

  for (const auto& split : splits) {
    if (split.count <= 0) continue;
    const uint64_t split_seed = derive_seed(config.dataset.seed, split.stream, 0);
    auto samples = channel::generate_dataset(config.array, split.count, split_seed, gen_opt);
    io::DatasetManifest meta;
    meta.cfg = config.array;
    meta.count = split.count;
    meta.seed = split_seed;
    meta.split = split.name;
    meta.n_paths = config.dataset.n_paths;
    meta.config_hash = hash;
    const fs::path bin = out_dir / (std::string(split.name) + ".bin");
    io::write_dataset(bin, samples, meta);
    std::cout << "wrote " << bin.string() << " (" << split.count << " records)\n";

    if (with_observations) {
      std::vector<io::ObservationRecord> records(samples.size());
      const uint64_t obs_seed = derive_seed(config.dataset.seed, "observations", 0);
      for (size_t i = 0; i < samples.size(); ++i) {
        const uint64_t cseed = config.pilot.policy == measure::CombinerPolicy::kFixed
                                   ? config.pilot.combiner_seed
                                   : derive_seed(obs_seed, "comb", i);
        CMat a = measure::make_combiner(config.array, config.pilot.n_pilots, cseed);
        const double sigma2 = measure::sigma2_for_snr(samples[i].h, a, config.pilot.snr_db);
        auto block = measure::observe(samples[i].h, a, config.array.n_rf, sigma2,
                                      derive_seed(obs_seed, "noise", i));
        records[i].sigma2 = block.sigma2;
        records[i].y = block.y;
      }
      io::ObservationManifest ometa;
      ometa.cfg = config.array;
      ometa.count = static_cast<int>(records.size());
      ometa.n_pilots = config.pilot.n_pilots;
      ometa.snr_db = config.pilot.snr_db;
      ometa.combiner_policy =
          config.pilot.policy == measure::CombinerPolicy::kFixed ? "fixed" : "per_sample";
      ometa.combiner_seed = config.pilot.policy == measure::CombinerPolicy::kFixed
                                ? config.pilot.combiner_seed
                                : obs_seed;
      ometa.noise_seed = obs_seed;
      const fs::path obin = out_dir / (std::string(split.name) + ".obs.bin");
      io::write_observations(obin, records, ometa);
      std::cout << "wrote " << obin.string() << "\n";
    }
  }
  cfg::save_config(config, out_dir / "config.json");
  return 0;
}

std::vector<channel::ChannelSample> load_split(const fs::path& data_dir, const std::string& split,
                                               const cfg::ExperimentConfig& config) {
  io::DatasetManifest meta;
  auto samples = io::read_dataset(data_dir / (split + ".bin"), &meta);
  require(meta.cfg.n_antennas == config.array.n_antennas &&
              meta.cfg.n_subarrays == config.array.n_subarrays &&
              meta.cfg.n_rf == config.array.n_rf &&
              meta.cfg.carrier_hz == config.array.carrier_hz &&
              meta.n_paths == config.dataset.n_paths,
          "dataset manifest does not match the configured array; refusing");
  return samples;
}

void append_log_row(const fs::path& log_path, const train::EpochLog& row) {
  const bool fresh = !fs::exists(log_path);
  std::ofstream out(log_path, std::ios::app);
  if (fresh) out << "epoch,loss,nmse_db,sdr,lr,nonzero_params\n";
  out << row.epoch << "," << row.loss << "," << row.nmse_db << "," << row.sdr << "," << row.lr
      << "," << row.nonzero_params << "\n";
}

int cmd_train(const fs::path& config_path, const fs::path& data_dir, fs::path out_ckpt,
              bool resume, fs::path log_path) {
  auto config = cfg::load_config(config_path);
  if (out_ckpt.empty()) out_ckpt = resolve_out_root(config) / "model.ckpt";
  if (log_path.empty()) log_path = out_ckpt.string() + ".log.csv";

  auto data = load_split(data_dir, "train", config);

  ckpt::CheckpointMeta meta;
  meta.config_hash = cfg::config_hash(config);
  meta.data_hash = cfg::data_hash(config);
  meta.variant = config.train.variant == net::Variant::kVrNet ? "vrnet" : "ablation";

  net::NetworkState state;
  train::AdamState adam;
  train::PruneMask mask;
  int start_epoch = 0;
  if (resume && fs::exists(out_ckpt)) {
    auto loaded = ckpt::load_checkpoint(out_ckpt);
    require(loaded.meta.config_hash == meta.config_hash,
            "resume: checkpoint was produced by a different config");
    state = std::move(loaded.state);
    adam = std::move(loaded.adam);
    mask = std::move(loaded.mask);
    start_epoch = loaded.meta.next_epoch;
    std::cout << "resuming at epoch " << start_epoch << "\n";
  } else {
    state = net::init_network(config.arch, config.train.seed);
    const size_t probe_count = std::min<size_t>(data.size(), 128);
    std::vector<channel::ChannelSample> probe(data.begin(), data.begin() + probe_count);
    train::init_thresholds_from_probe(state, config.array, config.pilot, probe,
                                      derive_seed(config.train.seed, "probe", 0));
  }

  auto on_epoch = [&](const train::EpochLog& row, const net::NetworkState& st,
                      const train::PruneMask& m) {
    append_log_row(log_path, row);
    std::cout << "epoch " << row.epoch << " loss " << row.loss << " nmse_db " << row.nmse_db
              << " sdr " << row.sdr << " nonzero " << row.nonzero_params << "\n";
    ckpt::CheckpointMeta cm = meta;
    cm.next_epoch = row.epoch + 1;
    ckpt::save_checkpoint(out_ckpt, st, cm, &m, &adam);
  };

  try {
    train::train(state, config.array, config.pilot, data, config.train, &adam, start_epoch,
                 std::move(mask), on_epoch);
  } catch (const train::TrainDivergence& e) {
    // Diagnostic snapshot of the diverged state next to the checkpoint.
    ckpt::CheckpointMeta cm = meta;
    cm.next_epoch = -1;
    ckpt::save_checkpoint(out_ckpt.string() + ".diverged", state, cm);
    std::cerr << "error: " << e.what() << " (diagnostic snapshot written)\n";
    return 2;
  }
  if (config.train.epochs == 0) {
    // Still emit a checkpoint so downstream commands can run.
    ckpt::save_checkpoint(out_ckpt, state, meta);
  }
  std::cout << "final checkpoint: " << out_ckpt.string() << "\n";
  return 0;
}

int cmd_prune(const fs::path& config_path, const fs::path& data_dir, const fs::path& in_ckpt,
              fs::path out_ckpt, double rho, int finetune_epochs) {
  auto config = cfg::load_config(config_path);
  if (out_ckpt.empty()) out_ckpt = in_ckpt.string() + ".pruned";
  auto loaded = ckpt::load_checkpoint(in_ckpt);
  auto data = load_split(data_dir, "train", config);

  const double q = train::prune_threshold(loaded.state, rho);
  auto mask = train::apply_prune(loaded.state, q);
  std::cout << "pruned at rho " << rho << " (threshold " << q << "), nonzero now "
            << net::count_params(loaded.state).nonzero << "\n";

  train::TrainConfig ft = config.train;
  ft.epochs = finetune_epochs;
  ft.prune_rho = 0.0;
  ft.prune_start_epoch = 0;
  ft.variant = loaded.meta.variant == "ablation" ? net::Variant::kAblation : net::Variant::kVrNet;
  ft.seed = derive_seed(config.train.seed, "finetune", 0);
  train::AdamState adam;  // fresh moments for the fine-tune phase
  train::train(loaded.state, config.array, config.pilot, data, ft, &adam, 0, mask, nullptr);

  ckpt::CheckpointMeta meta = loaded.meta;
  meta.config_hash = cfg::config_hash(config);
  meta.next_epoch = 0;
  ckpt::save_checkpoint(out_ckpt, loaded.state, meta, &mask);
  std::cout << "wrote " << out_ckpt.string() << "\n";
  return 0;
}

int cmd_eval(const fs::path& config_path, const fs::path& data_dir, const fs::path& ckpt_path,
             const fs::path& ablation_ckpt, const std::string& sweep,
             const std::string& points_arg, std::vector<std::string> method_names,
             fs::path out_csv) {
  auto config = cfg::load_config(config_path);
  if (out_csv.empty()) out_csv = resolve_out_root(config) / ("sweep_" + sweep + ".csv");

  auto test_data = load_split(data_dir, "test", config);

  ckpt::Checkpoint main_ckpt;
  bool has_main = false;
  if (!ckpt_path.empty()) {
    main_ckpt = ckpt::load_checkpoint(ckpt_path);
    require(main_ckpt.meta.data_hash == cfg::data_hash(config),
            "eval: checkpoint data hash does not match the config; refusing");
    has_main = true;
  }
  ckpt::Checkpoint abl_ckpt;
  bool has_abl = false;
  if (!ablation_ckpt.empty()) {
    abl_ckpt = ckpt::load_checkpoint(ablation_ckpt);
    has_abl = true;
  }

  if (method_names.empty()) {
    method_names = {"vrnet", "genie_ls", "ridge_ls", "matched_filter"};
    if (has_abl) method_names.push_back("dun_plain");
  }
  std::vector<evals::Method> methods;
  for (const auto& name : method_names) {
    if (name == "vrnet" && has_main) {
      methods.push_back(evals::make_network_method("vrnet", main_ckpt.state,
                                                   main_ckpt.meta.variant == "ablation"
                                                       ? net::Variant::kAblation
                                                       : net::Variant::kVrNet));
    } else if (name == "dun_plain" && has_abl) {
      methods.push_back(
          evals::make_network_method("dun_plain", abl_ckpt.state, net::Variant::kAblation));
    } else if (name == "genie_ls") {
      methods.push_back(evals::make_genie_ls_method());
    } else if (name == "ridge_ls") {
      methods.push_back(evals::make_ridge_ls_method());
    } else if (name == "matched_filter") {
      methods.push_back(evals::make_matched_filter_method());
    } else {
      std::cerr << "warning: method '" << name << "' unavailable, skipped\n";
    }
  }
  require(!methods.empty(), "eval: no usable methods");

  std::istringstream ps(points_arg);
  std::string tok;
  std::vector<double> points;
  while (std::getline(ps, tok, ',')) {
    if (!tok.empty()) points.push_back(std::stod(tok));
  }
  require(!points.empty(), "eval: empty sweep list");

  const uint64_t seed = derive_seed(config.dataset.seed, "eval", 0);
  evals::EvalResult result;
  if (sweep == "snr") {
    result = evals::sweep_snr(methods, test_data, points, config.array, config.pilot.n_pilots, seed);
  } else if (sweep == "pilots") {
    std::vector<int> pilot_points;
    for (double p : points) pilot_points.push_back(static_cast<int>(p));
    result = evals::sweep_pilots(methods, test_data, pilot_points, config.array,
                                 config.pilot.snr_db, seed);
  } else {
    throw std::invalid_argument("eval: sweep must be snr or pilots");
  }

  for (const auto& [point, crc] : result.input_crc)
    std::cout << "point " << point << " input_crc32 " << std::hex << crc << std::dec << "\n";
  io::atomic_write(out_csv, evals::to_csv(result));
  std::cout << "wrote " << out_csv.string() << "\n";
  return 0;
}

int cmd_plot(const fs::path& results_csv, fs::path out_image) {
  if (out_image.empty()) out_image = results_csv.string() + ".svg";
  std::ifstream in(results_csv);
  require(static_cast<bool>(in), "plot: cannot open results CSV");
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  auto result = evals::from_csv(text);
  io::atomic_write(out_image, plot::render_sweep_svg(result));
  std::cout << "wrote " << out_image.string() << "\n";
  return 0;
}

int cmd_params(const fs::path& ckpt_path, bool as_csv) {
  auto loaded = ckpt::load_checkpoint(ckpt_path);
  auto census = net::count_params(loaded.state);
  if (as_csv) {
    std::cout << "module,total,nonzero,prunable\n";
    for (const auto& row : census.rows)
      std::cout << row.module << "," << row.total << "," << row.nonzero << "," << row.prunable
                << "\n";
    std::cout << "total," << census.total << "," << census.nonzero << "," << census.prunable
              << "\n";
  } else {
    std::cout << "variant: " << loaded.meta.variant << "\n";
    std::cout << "config_hash: " << loaded.meta.config_hash << "\n";
    for (const auto& row : census.rows)
      std::cout << row.module << ": total " << row.total << ", nonzero " << row.nonzero
                << ", prunable " << row.prunable << "\n";
    std::cout << "total: " << census.total << ", nonzero: " << census.nonzero << " ("
              << (census.total ? 100.0 * census.nonzero / census.total : 0.0) << "%)\n";
  }
  return 0;
}

int cmd_trace(const fs::path& config_path, const fs::path& data_dir, const fs::path& ckpt_path,
              int index, fs::path out_json) {
  auto config = cfg::load_config(config_path);
  if (out_json.empty()) out_json = resolve_out_root(config) / "trace.json";
  auto loaded = ckpt::load_checkpoint(ckpt_path);
  auto test_data = load_split(data_dir, "test", config);
  require(index >= 0 && index < static_cast<int>(test_data.size()), "trace: index out of range");

  const auto& sample = test_data[index];
  const uint64_t seed = derive_seed(config.dataset.seed, "trace", index);
  CMat a = measure::make_combiner(config.array, config.pilot.n_pilots,
                                  derive_seed(seed, "comb", 0));
  const double sigma2 = measure::sigma2_for_snr(sample.h, a, config.pilot.snr_db);
  auto block = measure::observe(sample.h, a, config.array.n_rf, sigma2,
                                derive_seed(seed, "noise", 0));

  const double s = net::input_scale(block.y);
  net::ForwardTrace trace;
  net::ForwardOptions opt;
  opt.variant =
      loaded.meta.variant == "ablation" ? net::Variant::kAblation : net::Variant::kVrNet;
  opt.trace = &trace;
  net::forward_plain(loaded.state, a, block.y / s, opt);

  auto cvec_json = [](const CVec& v) {
    json arr = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i)
      arr.push_back(json::array({v[i].real(), v[i].imag()}));
    return arr;
  };
  auto rvec_json = [](const RVec& v) {
    json arr = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
    return arr;
  };

  json layers = json::array();
  for (size_t t = 0; t < trace.h_dun.size(); ++t) {
    layers.push_back(json{{"layer", t},
                          {"h_dun", cvec_json(trace.h_dun[t])},
                          {"h_gcn", cvec_json(trace.h_gcn[t])},
                          {"u", rvec_json(trace.u[t])},
                          {"z", cvec_json(trace.z[t])}});
  }
  json doc{{"sample_index", index},
           {"input_scale", s},
           {"config_hash", cfg::config_hash(config)},
           {"layers", layers}};
  io::atomic_write(out_json, doc.dump(2) + "\n");
  std::cout << "wrote " << out_json.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Near-field XL-MIMO VR-aware channel estimation workbench"};
  app.require_subcommand(1);

  std::string config_path, data_dir, out_path, ckpt_path, ablation_ckpt, sweep = "snr";
  std::string points = "0,5,10,15,20", results_csv, log_path;
  std::vector<std::string> methods;
  bool with_obs = false, resume = false, as_csv = false;
  double rho = 0.5;
  int finetune_epochs = 10, trace_index = 0;

  auto* gen = app.add_subcommand("gen", "Generate dataset splits");
  gen->add_option("--config", config_path, "Experiment config JSON")->required();
  gen->add_option("--out", out_path, "Output directory");
  gen->add_flag("--observations", with_obs, "Also write observation records");

  auto* tr = app.add_subcommand("train", "Train a model");
  tr->add_option("--config", config_path)->required();
  tr->add_option("--data", data_dir, "Dataset directory")->required();
  tr->add_option("--out", out_path, "Checkpoint path");
  tr->add_option("--log", log_path, "Training log CSV path");
  tr->add_flag("--resume", resume, "Resume from the checkpoint if present");

  auto* pr = app.add_subcommand("prune", "Prune and fine-tune an existing checkpoint");
  pr->add_option("--config", config_path)->required();
  pr->add_option("--data", data_dir)->required();
  pr->add_option("--ckpt", ckpt_path)->required();
  pr->add_option("--out", out_path);
  pr->add_option("--rho", rho, "Pruning rate");
  pr->add_option("--finetune-epochs", finetune_epochs);

  auto* ev = app.add_subcommand("eval", "Run an SNR or pilot sweep");
  ev->add_option("--config", config_path)->required();
  ev->add_option("--data", data_dir)->required();
  ev->add_option("--ckpt", ckpt_path, "Trained checkpoint (enables vrnet)");
  ev->add_option("--ablation-ckpt", ablation_ckpt, "Ablation checkpoint (enables dun_plain)");
  ev->add_option("--sweep", sweep, "snr | pilots");
  ev->add_option("--points", points, "Comma-separated sweep values");
  ev->add_option("--methods", methods, "Method subset");
  ev->add_option("--out", out_path, "Results CSV path");

  auto* pl = app.add_subcommand("plot", "Render a results CSV to SVG");
  pl->add_option("--results", results_csv)->required();
  pl->add_option("--out", out_path);

  auto* pa = app.add_subcommand("params", "Print the parameter census of a checkpoint");
  pa->add_option("--ckpt", ckpt_path)->required();
  pa->add_flag("--csv", as_csv, "Machine-readable output");

  auto* tc = app.add_subcommand("trace", "Dump per-layer iterates for one test sample");
  tc->add_option("--config", config_path)->required();
  tc->add_option("--data", data_dir)->required();
  tc->add_option("--ckpt", ckpt_path)->required();
  tc->add_option("--index", trace_index);
  tc->add_option("--out", out_path);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (gen->parsed()) return cmd_gen(config_path, out_path, with_obs);
    if (tr->parsed()) return cmd_train(config_path, data_dir, out_path, resume, log_path);
    if (pr->parsed())
      return cmd_prune(config_path, data_dir, ckpt_path, out_path, rho, finetune_epochs);
    if (ev->parsed())
      return cmd_eval(config_path, data_dir, ckpt_path, ablation_ckpt, sweep, points, methods,
                      out_path);
    if (pl->parsed()) return cmd_plot(results_csv, out_path);
    if (pa->parsed()) return cmd_params(ckpt_path, as_csv);
    if (tc->parsed()) return cmd_trace(config_path, data_dir, ckpt_path, trace_index, out_path);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
