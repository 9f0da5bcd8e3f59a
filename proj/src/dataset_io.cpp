#include "xlvr/dataset_io.hpp"

#include <zlib.h>

#include <cstring>
#include <fstream>
#include <json.hpp>

namespace xlvr::io {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void push_f32(std::string& out, float v) {
  char buf[4];
  std::memcpy(buf, &v, 4);
  out.append(buf, 4);  // x86 little-endian layout
}

float read_f32(const std::string& bytes, size_t& off) {
  float v;
  std::memcpy(&v, bytes.data() + off, 4);
  off += 4;
  return v;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

json array_cfg_json(const ArrayConfig& cfg) {
  return json{{"n_antennas", cfg.n_antennas},
              {"n_subarrays", cfg.n_subarrays},
              {"carrier_hz", cfg.carrier_hz},
              {"n_rf", cfg.n_rf}};
}

ArrayConfig array_cfg_from_json(const json& j) {
  ArrayConfig cfg;
  cfg.n_antennas = j.at("n_antennas").get<int>();
  cfg.n_subarrays = j.at("n_subarrays").get<int>();
  cfg.carrier_hz = j.at("carrier_hz").get<double>();
  cfg.n_rf = j.at("n_rf").get<int>();
  return cfg;
}

}  // namespace

uint32_t crc32_bytes(const std::string& bytes) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  crc = ::crc32(crc, reinterpret_cast<const Bytef*>(bytes.data()), static_cast<uInt>(bytes.size()));
  return static_cast<uint32_t>(crc);
}

void atomic_write(const fs::path& path, const std::string& bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  }
  fs::rename(tmp, path);
}

fs::path manifest_path(const fs::path& bin_path) {
  fs::path p = bin_path;
  p += ".manifest.json";
  return p;
}

void write_dataset(const fs::path& bin_path, const std::vector<channel::ChannelSample>& samples,
                   const DatasetManifest& meta) {
  std::string payload;
  const int n = meta.cfg.n_antennas;
  const int s = meta.cfg.n_subarrays;
  payload.reserve(samples.size() * (4 + s + 3 * n) * 4);
  for (const auto& sample : samples) {
    require(sample.h.size() == n && sample.u.size() == n && sample.u_sub.size() == s,
            "write_dataset: sample shape mismatch with manifest cfg");
    push_f32(payload, static_cast<float>(sample.geometry.theta));
    push_f32(payload, static_cast<float>(sample.geometry.r));
    push_f32(payload, static_cast<float>(sample.gamma.real()));
    push_f32(payload, static_cast<float>(sample.gamma.imag()));
    for (int i = 0; i < s; ++i) push_f32(payload, static_cast<float>(sample.u_sub[i]));
    for (int i = 0; i < n; ++i) push_f32(payload, static_cast<float>(sample.u[i]));
    for (int i = 0; i < n; ++i) {
      push_f32(payload, static_cast<float>(sample.h[i].real()));
      push_f32(payload, static_cast<float>(sample.h[i].imag()));
    }
  }

  json manifest{
      {"format", "channel_dataset"},
      {"version", 1},
      {"array", array_cfg_json(meta.cfg)},
      {"count", meta.count},
      {"seed", meta.seed},
      {"split", meta.split},
      {"n_paths", meta.n_paths},
      {"config_hash", meta.config_hash},
      {"byte_order", "little"},
      {"scalar", "f32"},
      {"field_order", json::array({"theta", "r", "gamma_re", "gamma_im", "u_sub", "u", "h_interleaved"})},
      {"record_floats", 4 + s + 3 * n},
      {"crc32", crc32_bytes(payload)},
  };
  atomic_write(bin_path, payload);
  atomic_write(manifest_path(bin_path), manifest.dump(2) + "\n");
}

std::vector<channel::ChannelSample> read_dataset(const fs::path& bin_path, DatasetManifest* meta_out) {
  const json manifest = json::parse(slurp(manifest_path(bin_path)));
  require(manifest.at("format") == "channel_dataset", "read_dataset: wrong manifest format");
  DatasetManifest meta;
  meta.cfg = array_cfg_from_json(manifest.at("array"));
  meta.count = manifest.at("count").get<int>();
  meta.seed = manifest.at("seed").get<uint64_t>();
  meta.split = manifest.at("split").get<std::string>();
  meta.n_paths = manifest.at("n_paths").get<int>();
  meta.config_hash = manifest.value("config_hash", "");
  meta.crc32 = manifest.at("crc32").get<uint32_t>();

  const std::string payload = slurp(bin_path);
  require(crc32_bytes(payload) == meta.crc32, "read_dataset: checksum mismatch");
  const int n = meta.cfg.n_antennas;
  const int s = meta.cfg.n_subarrays;
  const size_t record_bytes = static_cast<size_t>(4 + s + 3 * n) * 4;
  require(payload.size() == record_bytes * meta.count, "read_dataset: truncated payload");

  std::vector<channel::ChannelSample> samples(meta.count);
  size_t off = 0;
  for (auto& sample : samples) {
    sample.geometry.theta = read_f32(payload, off);
    sample.geometry.r = read_f32(payload, off);
    const float gr = read_f32(payload, off);
    const float gi = read_f32(payload, off);
    sample.gamma = cplx(gr, gi);
    sample.u_sub = RVec(s);
    for (int i = 0; i < s; ++i) sample.u_sub[i] = read_f32(payload, off);
    sample.u = RVec(n);
    for (int i = 0; i < n; ++i) sample.u[i] = read_f32(payload, off);
    sample.h = CVec(n);
    for (int i = 0; i < n; ++i) {
      const float re = read_f32(payload, off);
      const float im = read_f32(payload, off);
      sample.h[i] = cplx(re, im);
    }
  }
  if (meta_out) *meta_out = meta;
  return samples;
}

void write_observations(const fs::path& bin_path, const std::vector<ObservationRecord>& records,
                        const ObservationManifest& meta) {
  std::string payload;
  const int m = meta.cfg.n_rf * meta.n_pilots;
  for (const auto& rec : records) {
    require(rec.y.size() == m, "write_observations: record length mismatch");
    push_f32(payload, static_cast<float>(rec.sigma2));
    for (int i = 0; i < m; ++i) {
      push_f32(payload, static_cast<float>(rec.y[i].real()));
      push_f32(payload, static_cast<float>(rec.y[i].imag()));
    }
  }
  json manifest{
      {"format", "observation_dataset"},
      {"version", 1},
      {"array", array_cfg_json(meta.cfg)},
      {"count", meta.count},
      {"n_pilots", meta.n_pilots},
      {"snr_db", meta.snr_db},
      {"combiner_policy", meta.combiner_policy},
      {"combiner_seed", meta.combiner_seed},
      {"noise_seed", meta.noise_seed},
      {"byte_order", "little"},
      {"scalar", "f32"},
      {"field_order", json::array({"sigma2", "y_interleaved"})},
      {"record_floats", 1 + 2 * m},
      {"crc32", crc32_bytes(payload)},
  };
  atomic_write(bin_path, payload);
  atomic_write(manifest_path(bin_path), manifest.dump(2) + "\n");
}

std::vector<ObservationRecord> read_observations(const fs::path& bin_path,
                                                 ObservationManifest* meta_out) {
  const json manifest = json::parse(slurp(manifest_path(bin_path)));
  require(manifest.at("format") == "observation_dataset", "read_observations: wrong manifest format");
  ObservationManifest meta;
  meta.cfg = array_cfg_from_json(manifest.at("array"));
  meta.count = manifest.at("count").get<int>();
  meta.n_pilots = manifest.at("n_pilots").get<int>();
  meta.snr_db = manifest.at("snr_db").get<double>();
  meta.combiner_policy = manifest.at("combiner_policy").get<std::string>();
  meta.combiner_seed = manifest.at("combiner_seed").get<uint64_t>();
  meta.noise_seed = manifest.at("noise_seed").get<uint64_t>();
  meta.crc32 = manifest.at("crc32").get<uint32_t>();

  const std::string payload = slurp(bin_path);
  require(crc32_bytes(payload) == meta.crc32, "read_observations: checksum mismatch");
  const int m = meta.cfg.n_rf * meta.n_pilots;
  const size_t record_bytes = static_cast<size_t>(1 + 2 * m) * 4;
  require(payload.size() == record_bytes * meta.count, "read_observations: truncated payload");

  std::vector<ObservationRecord> records(meta.count);
  size_t off = 0;
  for (auto& rec : records) {
    rec.sigma2 = read_f32(payload, off);
    rec.y = CVec(m);
    for (int i = 0; i < m; ++i) {
      const float re = read_f32(payload, off);
      const float im = read_f32(payload, off);
      rec.y[i] = cplx(re, im);
    }
  }
  if (meta_out) *meta_out = meta;
  return records;
}

}  // namespace xlvr::io
