#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "wifipose/eval.hpp"
#include "wifipose/nnet.hpp"
#include "wifipose/synth.hpp"
#include "wifipose/train.hpp"

namespace wifipose::config {

struct SplitConfig {
  double val_frac = 0.2;
  double test_frac = 0.2;
  std::uint64_t seed = 0;
};

struct PathConfig {
  std::string dataset_dir = "data";
  std::string checkpoint = "checkpoint";
  std::string output_dir = "out";
};

/// Everything a subcommand can be told, serializable as one JSON document:
/// {"scene": {...}, "net": {...}, "train": {...}, "pck": {...}, "split": {...}, "paths": {...}}.
struct RunConfig {
  synth::SceneConfig scene{.n_frames = 1500};
  nnet::WpnetConfig net;
  train::TrainConfig train;
  eval::PckConfig pck;
  SplitConfig split;
  PathConfig paths;
};

nlohmann::json to_json(const RunConfig& cfg);

/// Missing keys keep their defaults; unknown keys and wrongly typed values
/// throw ConfigError naming the key.
RunConfig from_json(const nlohmann::json& j);

/// Reads a JSON config file. Throws NotFoundError or ConfigError.
RunConfig load(const std::filesystem::path& file);

/// Dotted key ("train.epochs") and default value of every config field,
/// sorted by key.
std::vector<std::pair<std::string, nlohmann::json>> field_defaults();

/// Sets one dotted field from its command-line text: verbatim for string
/// fields, parsed as JSON otherwise. Throws ConfigError.
void apply_override(nlohmann::json& doc, const std::string& key, const std::string& text);

/// Replaces every seed (scene, split, train) with `seed`.
void override_seeds(nlohmann::json& doc, std::uint64_t seed);

/// Value of WIFIPOSE_SEED, if set. Throws ConfigError when it is not an unsigned integer.
std::optional<std::uint64_t> seed_from_env();

}  // namespace wifipose::config
