#include "xlvr/config.hpp"

#include <fstream>
#include <json.hpp>
#include <set>

#include "xlvr/dataset_io.hpp"
#include "xlvr/rng.hpp"

namespace xlvr::cfg {

using nlohmann::json;

namespace {

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& scope) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!allowed.contains(it.key()))
      throw std::invalid_argument("config: unknown key '" + scope + "." + it.key() + "'");
  }
}

json to_json(const ExperimentConfig& c) {
  return json{
      {"array",
       {{"n_antennas", c.array.n_antennas},
        {"n_subarrays", c.array.n_subarrays},
        {"carrier_hz", c.array.carrier_hz},
        {"n_rf", c.array.n_rf}}},
      {"pilot",
       {{"n_pilots", c.pilot.n_pilots},
        {"snr_db", c.pilot.snr_db},
        {"combiner_policy",
         c.pilot.policy == measure::CombinerPolicy::kPerSample ? "per_sample" : "fixed"},
        {"combiner_seed", c.pilot.combiner_seed}}},
      {"dataset",
       {{"train_count", c.dataset.train_count},
        {"val_count", c.dataset.val_count},
        {"test_count", c.dataset.test_count},
        {"seed", c.dataset.seed},
        {"n_paths", c.dataset.n_paths}}},
      {"arch",
       {{"layers", c.arch.layers},
        {"gcn_depth", c.arch.gcn_depth},
        {"conv_channels", c.arch.conv_channels},
        {"conv_kernel", c.arch.conv_kernel},
        {"gate_channels", c.arch.gate_channels},
        {"beta", c.arch.beta},
        {"tau", c.arch.tau},
        {"share_zeta", c.arch.share_zeta},
        {"share_gcn", c.arch.share_gcn}}},
      {"train",
       {{"epochs", c.train.epochs},
        {"batch_size", c.train.batch_size},
        {"lr", c.train.lr},
        {"lr_zeta", c.train.lr_zeta},
        {"alpha", c.train.alpha},
        {"prune_rho", c.train.prune_rho},
        {"prune_start_epoch", c.train.prune_start_epoch},
        {"seed", c.train.seed},
        {"lr_schedule",
         c.train.lr_schedule == train::LrSchedule::kCosine ? "cosine" : "constant"},
        {"snr_min_db", c.train.snr_min_db},
        {"snr_max_db", c.train.snr_max_db},
        {"threads", c.train.threads},
        {"variant", c.train.variant == net::Variant::kVrNet ? "vrnet" : "ablation"}}},
      {"out_root", c.out_root},
  };
}

ExperimentConfig parse(const json& j) {
  reject_unknown(j, {"array", "pilot", "dataset", "arch", "train", "out_root"}, "");
  ExperimentConfig c;

  const json& a = j.at("array");
  reject_unknown(a, {"n_antennas", "n_subarrays", "carrier_hz", "n_rf"}, "array");
  c.array.n_antennas = a.at("n_antennas").get<int>();
  c.array.n_subarrays = a.at("n_subarrays").get<int>();
  c.array.carrier_hz = a.at("carrier_hz").get<double>();
  c.array.n_rf = a.at("n_rf").get<int>();

  const json& p = j.at("pilot");
  reject_unknown(p, {"n_pilots", "snr_db", "combiner_policy", "combiner_seed"}, "pilot");
  c.pilot.n_pilots = p.at("n_pilots").get<int>();
  c.pilot.snr_db = p.at("snr_db").get<double>();
  const std::string policy = p.at("combiner_policy").get<std::string>();
  if (policy == "per_sample") {
    c.pilot.policy = measure::CombinerPolicy::kPerSample;
  } else if (policy == "fixed") {
    c.pilot.policy = measure::CombinerPolicy::kFixed;
  } else {
    throw std::invalid_argument("config: pilot.combiner_policy must be per_sample or fixed");
  }
  c.pilot.combiner_seed = p.at("combiner_seed").get<uint64_t>();

  const json& d = j.at("dataset");
  reject_unknown(d, {"train_count", "val_count", "test_count", "seed", "n_paths"}, "dataset");
  c.dataset.train_count = d.at("train_count").get<int>();
  c.dataset.val_count = d.at("val_count").get<int>();
  c.dataset.test_count = d.at("test_count").get<int>();
  c.dataset.seed = d.at("seed").get<uint64_t>();
  c.dataset.n_paths = d.at("n_paths").get<int>();

  const json& ar = j.at("arch");
  reject_unknown(ar,
                 {"layers", "gcn_depth", "conv_channels", "conv_kernel", "gate_channels", "beta",
                  "tau", "share_zeta", "share_gcn"},
                 "arch");
  c.arch.layers = ar.at("layers").get<int>();
  c.arch.gcn_depth = ar.at("gcn_depth").get<int>();
  c.arch.conv_channels = ar.at("conv_channels").get<int>();
  c.arch.conv_kernel = ar.at("conv_kernel").get<int>();
  c.arch.gate_channels = ar.at("gate_channels").get<int>();
  c.arch.beta = ar.at("beta").get<double>();
  c.arch.tau = ar.at("tau").get<double>();
  c.arch.share_zeta = ar.at("share_zeta").get<bool>();
  c.arch.share_gcn = ar.at("share_gcn").get<bool>();

  const json& t = j.at("train");
  reject_unknown(t,
                 {"epochs", "batch_size", "lr", "lr_zeta", "lr_schedule", "alpha", "prune_rho",
                  "prune_start_epoch", "seed", "snr_min_db", "snr_max_db", "threads", "variant"},
                 "train");
  c.train.epochs = t.at("epochs").get<int>();
  c.train.batch_size = t.at("batch_size").get<int>();
  c.train.lr = t.at("lr").get<double>();
  c.train.lr_zeta = t.at("lr_zeta").get<double>();
  const std::string sched = t.at("lr_schedule").get<std::string>();
  if (sched == "constant") {
    c.train.lr_schedule = train::LrSchedule::kConstant;
  } else if (sched == "cosine") {
    c.train.lr_schedule = train::LrSchedule::kCosine;
  } else {
    throw std::invalid_argument("config: train.lr_schedule must be constant or cosine");
  }
  c.train.alpha = t.at("alpha").get<double>();
  c.train.prune_rho = t.at("prune_rho").get<double>();
  c.train.prune_start_epoch = t.at("prune_start_epoch").get<int>();
  c.train.seed = t.at("seed").get<uint64_t>();
  c.train.snr_min_db = t.at("snr_min_db").get<double>();
  c.train.snr_max_db = t.at("snr_max_db").get<double>();
  c.train.threads = t.at("threads").get<int>();
  const std::string variant = t.at("variant").get<std::string>();
  if (variant == "vrnet") {
    c.train.variant = net::Variant::kVrNet;
  } else if (variant == "ablation") {
    c.train.variant = net::Variant::kAblation;
  } else {
    throw std::invalid_argument("config: train.variant must be vrnet or ablation");
  }

  c.out_root = j.at("out_root").get<std::string>();
  return c;
}

std::string fnv_hex(const std::string& text) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (char ch : text) {
    h ^= static_cast<unsigned char>(ch);
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

}  // namespace

void ExperimentConfig::validate() const {
  array.validate();
  pilot.validate();
  arch.validate();
  train.validate();
  require(dataset.train_count >= 1 && dataset.val_count >= 0 && dataset.test_count >= 0,
          "config: dataset counts invalid");
  require(dataset.n_paths >= 1, "config: dataset.n_paths must be >= 1");
}

ExperimentConfig desk_config() {
  ExperimentConfig c;
  c.array = {64, 8, 100e9, 4};
  c.pilot.n_pilots = 16;
  c.pilot.snr_db = 10.0;
  c.dataset = {4000, 500, 500, 2024, 1};
  c.arch.layers = 5;
  c.train.epochs = 40;
  c.train.prune_start_epoch = 20;
  c.train.prune_rho = 0.5;
  return c;
}

ExperimentConfig fullscale_config() {
  ExperimentConfig c;
  c.array = {256, 8, 100e9, 4};
  c.pilot.n_pilots = 32;
  c.pilot.snr_db = 10.0;
  c.dataset = {16000, 2000, 2000, 2024, 1};
  c.arch.layers = 5;
  c.train.epochs = 100;
  c.train.prune_start_epoch = 50;
  c.train.prune_rho = 0.5;
  return c;
}

std::string to_json_string(const ExperimentConfig& cfg) { return to_json(cfg).dump(2) + "\n"; }

ExperimentConfig from_json_string(const std::string& text) {
  try {
    ExperimentConfig c = parse(json::parse(text));
    c.validate();
    return c;
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return from_json_string(text);
}

void save_config(const ExperimentConfig& cfg, const std::filesystem::path& path) {
  io::atomic_write(path, to_json_string(cfg));
}

std::string config_hash(const ExperimentConfig& cfg) {
  // nlohmann object keys are sorted, so dump() is canonical.
  return fnv_hex(to_json(cfg).dump());
}

std::string data_hash(const ExperimentConfig& cfg) {
  json j{{"array", to_json(cfg).at("array")}, {"dataset", to_json(cfg).at("dataset")}};
  return fnv_hex(j.dump());
}

}  // namespace xlvr::cfg
