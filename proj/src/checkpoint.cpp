#include <fstream>

#include "json.hpp"

#include "wifipose/dataio.hpp"
#include "wifipose/errors.hpp"
#include "wifipose/nnet.hpp"

namespace wifipose::nnet {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {
constexpr const char* kCheckpointManifest = "checkpoint.json";
constexpr const char* kCheckpointPayload = "tensors.f32";
constexpr int kCheckpointVersion = 1;
}  // namespace

void save_checkpoint(const WpnetParams<float>& params, const fs::path& dir) {
  const fs::path parent = dir.has_parent_path() ? dir.parent_path() : fs::path(".");
  if (!fs::exists(parent)) throw NotFoundError("parent directory does not exist: " + parent.string());
  fs::create_directories(dir);

  const auto& c = params.config;
  json table = json::array();
  for (const auto& t : params.tensors) {
    table.push_back({{"name", t.name}, {"shape", t.shape}, {"trainable", t.trainable}});
  }
  const json manifest = {
      {"format_version", kCheckpointVersion},
      {"seed", params.seed},
      {"config",
       {{"base_channels", c.base_channels},
        {"block_counts", c.block_counts},
        {"input_size", c.input_size},
        {"n_landmarks", c.n_landmarks},
        {"width_multiplier", c.width_multiplier},
        {"pool_last_axis", c.pool_last_axis}}},
      {"tensors", std::move(table)},
  };
  {
    std::ofstream out(dir / kCheckpointManifest, std::ios::trunc);
    if (!out) throw NotFoundError("cannot open for writing: " + (dir / kCheckpointManifest).string());
    out << manifest.dump(2) << "\n";
  }
  std::ofstream out(dir / kCheckpointPayload, std::ios::binary | std::ios::trunc);
  if (!out) throw NotFoundError("cannot open for writing: " + (dir / kCheckpointPayload).string());
  for (const auto& t : params.tensors) dataio::write_f32_le(out, t.values);
  if (!out) throw std::runtime_error("write failed: " + (dir / kCheckpointPayload).string());
}

WpnetParams<float> load_checkpoint(const fs::path& dir) {
  const fs::path mpath = dir / kCheckpointManifest, ppath = dir / kCheckpointPayload;
  if (!fs::exists(mpath)) throw NotFoundError("missing file: " + mpath.string());
  if (!fs::exists(ppath)) throw NotFoundError("missing file: " + ppath.string());

  WpnetParams<float> p;
  std::size_t total = 0;
  try {
    std::ifstream in(mpath);
    const json m = json::parse(in);
    if (m.at("format_version").get<int>() != kCheckpointVersion) throw CorruptDatasetError("unsupported checkpoint version");
    p.seed = m.at("seed").get<std::uint64_t>();
    const auto& c = m.at("config");
    p.config.base_channels = c.at("base_channels").get<std::size_t>();
    p.config.block_counts = c.at("block_counts").get<std::array<std::size_t, 4>>();
    p.config.input_size = c.at("input_size").get<std::size_t>();
    p.config.n_landmarks = c.at("n_landmarks").get<std::size_t>();
    p.config.width_multiplier = c.at("width_multiplier").get<double>();
    p.config.pool_last_axis = c.at("pool_last_axis").get<bool>();
    for (const auto& t : m.at("tensors")) {
      NamedTensor<float> nt;
      nt.name = t.at("name").get<std::string>();
      nt.shape = t.at("shape").get<std::vector<std::size_t>>();
      nt.trainable = t.at("trainable").get<bool>();
      std::size_t n = 1;
      for (auto d : nt.shape) n *= d;
      nt.values.resize(n);
      total += n;
      p.tensors.push_back(std::move(nt));
    }
  } catch (const json::exception& e) {
    throw CorruptDatasetError(std::string("checkpoint.json: ") + e.what());
  }

  if (fs::file_size(ppath) != total * sizeof(float)) {
    throw CorruptDatasetError("tensors.f32 size " + std::to_string(fs::file_size(ppath)) + " != " +
                              std::to_string(total * sizeof(float)) + " bytes implied by checkpoint.json");
  }
  std::ifstream in(ppath, std::ios::binary);
  for (auto& t : p.tensors) dataio::read_f32_le(in, t.values);
  if (!in) throw CorruptDatasetError("short read: " + ppath.string());

  // Rejects tables that do not match the architecture.
  const auto reference = build_wpnet<float>(p.config, 0);
  if (reference.tensors.size() != p.tensors.size()) throw CorruptDatasetError("checkpoint tensor count mismatch");
  for (std::size_t i = 0; i < p.tensors.size(); ++i) {
    if (reference.tensors[i].name != p.tensors[i].name || reference.tensors[i].shape != p.tensors[i].shape) {
      throw CorruptDatasetError("checkpoint tensor '" + p.tensors[i].name + "' does not match the config");
    }
  }
  return p;
}

}  // namespace wifipose::nnet
