#include "wifipose/config.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>

#include "wifipose/errors.hpp"

namespace wifipose::config {
namespace {

using nlohmann::json;

bool compatible(const json& def, const json& value) {
  if (def.is_number_unsigned()) return value.is_number_unsigned() || (value.is_number_integer() && value.get<std::int64_t>() >= 0);
  if (def.is_number()) return value.is_number();
  if (def.is_array()) {
    if (!value.is_array()) return false;
    if (def.empty()) return true;
    for (const auto& v : value) {
      if (!compatible(def.front(), v)) return false;
    }
    return true;
  }
  return def.type() == value.type();
}

// Copies `src` into `dst`, which holds the defaults and so defines the schema.
void merge_checked(json& dst, const json& src, const std::string& prefix) {
  if (!src.is_object()) throw ConfigError("config" + (prefix.empty() ? "" : " section '" + prefix + "'") + " must be an object");
  for (auto it = src.begin(); it != src.end(); ++it) {
    const std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
    if (!dst.contains(it.key())) throw ConfigError("unknown config key '" + key + "'");
    json& slot = dst[it.key()];
    if (slot.is_object()) {
      merge_checked(slot, it.value(), key);
    } else {
      if (!compatible(slot, it.value())) {
        throw ConfigError("config key '" + key + "' expects " + std::string(slot.type_name()) + ", got " +
                          it.value().dump());
      }
      slot = it.value();
    }
  }
}

void flatten(const json& j, const std::string& prefix, std::vector<std::pair<std::string, json>>& out) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
    if (it.value().is_object()) {
      flatten(it.value(), key, out);
    } else {
      out.emplace_back(key, it.value());
    }
  }
}

json::json_pointer pointer_for(const std::string& dotted) {
  std::string p;
  std::size_t start = 0;
  while (start <= dotted.size()) {
    const auto dot = dotted.find('.', start);
    p += "/" + dotted.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  return json::json_pointer(p);
}

}  // namespace

json to_json(const RunConfig& c) {
  return {
      {"scene",
       {{"seed", c.scene.seed},
        {"n_frames", c.scene.n_frames},
        {"frame_width", c.scene.frame_width},
        {"frame_height", c.scene.frame_height},
        {"n_body_paths", c.scene.n_body_paths},
        {"noise_sigma", c.scene.noise_sigma},
        {"carrier_hz", c.scene.carrier_hz},
        {"subcarrier_spacing_hz", c.scene.subcarrier_spacing_hz},
        {"tx_pos", c.scene.tx_pos},
        {"rx_pos", c.scene.rx_pos}}},
      {"net",
       {{"base_channels", c.net.base_channels},
        {"block_counts", c.net.block_counts},
        {"input_size", c.net.input_size},
        {"n_landmarks", c.net.n_landmarks},
        {"width_multiplier", c.net.width_multiplier},
        {"pool_last_axis", c.net.pool_last_axis}}},
      {"train",
       {{"epochs", c.train.epochs},
        {"batch_size", c.train.batch_size},
        {"lr0", c.train.lr0},
        {"momentum", c.train.momentum},
        {"lr_gamma", c.train.lr_gamma},
        {"lr_step", c.train.lr_step},
        {"seed", c.train.seed}}},
      {"pck", {{"thresholds", c.pck.thresholds}, {"torso_epsilon", c.pck.torso_epsilon}}},
      {"split", {{"val_frac", c.split.val_frac}, {"test_frac", c.split.test_frac}, {"seed", c.split.seed}}},
      {"paths",
       {{"dataset_dir", c.paths.dataset_dir}, {"checkpoint", c.paths.checkpoint}, {"output_dir", c.paths.output_dir}}},
  };
}

RunConfig from_json(const json& j) {
  json doc = to_json(RunConfig{});
  merge_checked(doc, j, "");

  RunConfig c;
  const auto& s = doc["scene"];
  c.scene.seed = s["seed"].get<std::uint64_t>();
  c.scene.n_frames = s["n_frames"].get<std::size_t>();
  c.scene.frame_width = s["frame_width"].get<double>();
  c.scene.frame_height = s["frame_height"].get<double>();
  c.scene.n_body_paths = s["n_body_paths"].get<std::size_t>();
  c.scene.noise_sigma = s["noise_sigma"].get<double>();
  c.scene.carrier_hz = s["carrier_hz"].get<double>();
  c.scene.subcarrier_spacing_hz = s["subcarrier_spacing_hz"].get<double>();
  if (s["tx_pos"].size() != 3 || s["rx_pos"].size() != 3) throw ConfigError("scene.tx_pos and scene.rx_pos need 3 coordinates");
  c.scene.tx_pos = s["tx_pos"].get<synth::Vec3>();
  c.scene.rx_pos = s["rx_pos"].get<synth::Vec3>();

  const auto& n = doc["net"];
  c.net.base_channels = n["base_channels"].get<std::size_t>();
  if (n["block_counts"].size() != 4) throw ConfigError("net.block_counts needs 4 entries");
  c.net.block_counts = n["block_counts"].get<std::array<std::size_t, 4>>();
  c.net.input_size = n["input_size"].get<std::size_t>();
  c.net.n_landmarks = n["n_landmarks"].get<std::size_t>();
  c.net.width_multiplier = n["width_multiplier"].get<double>();
  c.net.pool_last_axis = n["pool_last_axis"].get<bool>();

  const auto& t = doc["train"];
  c.train.epochs = t["epochs"].get<std::size_t>();
  c.train.batch_size = t["batch_size"].get<std::size_t>();
  c.train.lr0 = t["lr0"].get<double>();
  c.train.momentum = t["momentum"].get<double>();
  c.train.lr_gamma = t["lr_gamma"].get<double>();
  c.train.lr_step = t["lr_step"].get<std::size_t>();
  c.train.seed = t["seed"].get<std::uint64_t>();

  c.pck.thresholds = doc["pck"]["thresholds"].get<std::vector<double>>();
  c.pck.torso_epsilon = doc["pck"]["torso_epsilon"].get<double>();

  c.split.val_frac = doc["split"]["val_frac"].get<double>();
  c.split.test_frac = doc["split"]["test_frac"].get<double>();
  c.split.seed = doc["split"]["seed"].get<std::uint64_t>();

  c.paths.dataset_dir = doc["paths"]["dataset_dir"].get<std::string>();
  c.paths.checkpoint = doc["paths"]["checkpoint"].get<std::string>();
  c.paths.output_dir = doc["paths"]["output_dir"].get<std::string>();
  return c;
}

RunConfig load(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw NotFoundError("cannot open config file '" + file.string() + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config file '" + file.string() + "': " + e.what());
  }
  return from_json(j);
}

std::vector<std::pair<std::string, json>> field_defaults() {
  std::vector<std::pair<std::string, json>> out;
  flatten(to_json(RunConfig{}), "", out);
  return out;
}

void apply_override(json& doc, const std::string& key, const std::string& text) {
  json base = to_json(RunConfig{});
  const auto ptr = pointer_for(key);
  if (!base.contains(ptr) || base[ptr].is_object()) throw ConfigError("unknown config key '" + key + "'");

  json value = text;
  if (!base[ptr].is_string()) {
    value = json::parse(text, nullptr, /*allow_exceptions=*/false);
    if (value.is_discarded()) throw ConfigError("cannot parse value '" + text + "' for config key '" + key + "'");
  }
  json patch = json::object();
  patch[ptr] = std::move(value);
  merge_checked(base, doc, "");
  merge_checked(base, patch, "");
  doc = std::move(base);
}

void override_seeds(json& doc, std::uint64_t seed) {
  for (const char* section : {"scene", "split", "train"}) doc[section]["seed"] = seed;
}

std::optional<std::uint64_t> seed_from_env() {
  const char* v = std::getenv("WIFIPOSE_SEED");
  if (v == nullptr) return std::nullopt;
  const std::string s(v);
  std::uint64_t seed = 0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), seed);
  if (s.empty() || ec != std::errc() || end != s.data() + s.size()) {
    throw ConfigError("WIFIPOSE_SEED must be an unsigned integer, got '" + s + "'");
  }
  return seed;
}

}  // namespace wifipose::config
