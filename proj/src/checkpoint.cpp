#include "xlvr/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <json.hpp>

#include "xlvr/dataset_io.hpp"

namespace xlvr::ckpt {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr char kMagic[] = "XLVRCKPT1\n";

struct BlobWriter {
  std::string bytes;
  size_t append(const ad::Arr& a) {
    const size_t off = bytes.size();
    bytes.append(reinterpret_cast<const char*>(a.data()), a.size() * sizeof(double));
    return off;
  }
};

ad::Arr read_arr(const std::string& blob, size_t offset, Eigen::Index n) {
  ad::Arr a(n);
  std::memcpy(a.data(), blob.data() + offset, n * sizeof(double));
  return a;
}

json arch_json(const net::ArchConfig& a) {
  return json{{"layers", a.layers},
              {"gcn_depth", a.gcn_depth},
              {"conv_channels", a.conv_channels},
              {"conv_kernel", a.conv_kernel},
              {"gate_channels", a.gate_channels},
              {"beta", a.beta},
              {"tau", a.tau},
              {"share_zeta", a.share_zeta},
              {"share_gcn", a.share_gcn}};
}

net::ArchConfig arch_from_json(const json& j) {
  net::ArchConfig a;
  a.layers = j.at("layers").get<int>();
  a.gcn_depth = j.at("gcn_depth").get<int>();
  a.conv_channels = j.at("conv_channels").get<int>();
  a.conv_kernel = j.at("conv_kernel").get<int>();
  a.gate_channels = j.value("gate_channels", 0);
  a.beta = j.at("beta").get<double>();
  a.tau = j.at("tau").get<double>();
  a.share_zeta = j.at("share_zeta").get<bool>();
  a.share_gcn = j.at("share_gcn").get<bool>();
  return a;
}

}  // namespace

void save_checkpoint(const fs::path& path, const net::NetworkState& state,
                     const CheckpointMeta& meta, const train::PruneMask* mask,
                     const train::AdamState* adam) {
  BlobWriter blob;
  json tensors = json::array();
  for (int id = 0; id < state.params.count(); ++id) {
    const auto& info = state.params.info(id);
    const auto& data = state.params.data(id);
    tensors.push_back(json{{"name", info.name},
                           {"module", info.module},
                           {"prunable", info.prunable},
                           {"size", data.size()},
                           {"offset", blob.append(data)}});
  }

  json masks = json::array();
  if (mask && mask->active()) {
    for (int id = 0; id < state.params.count(); ++id) {
      if (static_cast<size_t>(id) >= mask->keep.size() || !mask->keep[id]) continue;
      masks.push_back(json{{"name", state.params.info(id).name},
                           {"size", mask->keep[id]->size()},
                           {"offset", blob.append(*mask->keep[id])}});
    }
  }

  json opt = nullptr;
  if (adam && !adam->m.empty()) {
    json moments = json::array();
    for (int id = 0; id < state.params.count(); ++id) {
      moments.push_back(json{{"name", state.params.info(id).name},
                             {"size", adam->m[id].size()},
                             {"m_offset", blob.append(adam->m[id])},
                             {"v_offset", blob.append(adam->v[id])}});
    }
    opt = json{{"step", adam->step}, {"moments", moments}};
  }

  json header{
      {"format", "checkpoint"},
      {"version", 1},
      {"arch", arch_json(state.arch)},
      {"config_hash", meta.config_hash},
      {"data_hash", meta.data_hash},
      {"variant", meta.variant},
      {"next_epoch", meta.next_epoch},
      {"mask_threshold", mask ? mask->threshold : 0.0},
      {"tensors", tensors},
      {"masks", masks},
      {"optimizer", opt},
  };

  const std::string htext = header.dump();
  std::string out;
  out.reserve(sizeof(kMagic) + 8 + htext.size() + blob.bytes.size());
  out.append(kMagic, sizeof(kMagic) - 1);
  uint64_t hlen = htext.size();
  out.append(reinterpret_cast<const char*>(&hlen), 8);
  out.append(htext);
  out.append(blob.bytes);
  io::atomic_write(path, out);
}

Checkpoint load_checkpoint(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const size_t magic_len = sizeof(kMagic) - 1;
  if (bytes.size() < magic_len + 8 || bytes.compare(0, magic_len, kMagic) != 0)
    throw std::runtime_error("corrupt checkpoint: bad magic");
  uint64_t hlen = 0;
  std::memcpy(&hlen, bytes.data() + magic_len, 8);
  if (bytes.size() < magic_len + 8 + hlen) throw std::runtime_error("corrupt checkpoint: truncated header");
  const json header = json::parse(bytes.substr(magic_len + 8, hlen));
  require(header.at("format") == "checkpoint", "corrupt checkpoint: wrong format tag");
  const std::string blob = bytes.substr(magic_len + 8 + hlen);

  Checkpoint ck;
  ck.state = net::init_network(arch_from_json(header.at("arch")), 0);
  for (const auto& t : header.at("tensors")) {
    const std::string name = t.at("name").get<std::string>();
    const int id = ck.state.params.find(name);
    require(id >= 0, "checkpoint: unknown tensor " + name);
    const Eigen::Index size = t.at("size").get<Eigen::Index>();
    require(ck.state.params.data(id).size() == size, "checkpoint: size mismatch for " + name);
    ck.state.params.data(id) = read_arr(blob, t.at("offset").get<size_t>(), size);
  }

  if (header.contains("masks") && !header.at("masks").empty()) {
    ck.mask.keep.resize(ck.state.params.count());
    ck.mask.threshold = header.value("mask_threshold", 0.0);
    for (const auto& m : header.at("masks")) {
      const int id = ck.state.params.find(m.at("name").get<std::string>());
      require(id >= 0, "checkpoint: mask for unknown tensor");
      ck.mask.keep[id] = read_arr(blob, m.at("offset").get<size_t>(), m.at("size").get<Eigen::Index>());
    }
  }

  if (header.contains("optimizer") && !header.at("optimizer").is_null()) {
    const auto& opt = header.at("optimizer");
    ck.adam.step = opt.at("step").get<long>();
    ck.adam.m.resize(ck.state.params.count());
    ck.adam.v.resize(ck.state.params.count());
    for (const auto& mo : opt.at("moments")) {
      const int id = ck.state.params.find(mo.at("name").get<std::string>());
      require(id >= 0, "checkpoint: moments for unknown tensor");
      const Eigen::Index size = mo.at("size").get<Eigen::Index>();
      ck.adam.m[id] = read_arr(blob, mo.at("m_offset").get<size_t>(), size);
      ck.adam.v[id] = read_arr(blob, mo.at("v_offset").get<size_t>(), size);
    }
  }

  ck.meta.config_hash = header.at("config_hash").get<std::string>();
  ck.meta.data_hash = header.at("data_hash").get<std::string>();
  ck.meta.variant = header.at("variant").get<std::string>();
  ck.meta.next_epoch = header.at("next_epoch").get<int>();
  return ck;
}

}  // namespace xlvr::ckpt
