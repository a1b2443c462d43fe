#include "wifipose/cli.hpp"

#include <charconv>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "CLI11.hpp"
#include "json.hpp"

#include "wifipose/errors.hpp"
#include "wifipose/synth.hpp"
#include "wifipose/train.hpp"

namespace wifipose::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string num(double v) {
  char buf[32];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

void write_text(const fs::path& file, const std::string& text) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw NotFoundError("cannot write '" + file.string() + "'");
  out << text;
  if (!out) throw std::runtime_error("write failed for '" + file.string() + "'");
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw NotFoundError("cannot create directory '" + dir.string() + "': " + ec.message());
}

std::vector<std::size_t> split_ids(const dataio::Dataset& ds, std::string_view split) {
  if (split == "train") return ds.splits.train;
  if (split == "val") return ds.splits.val;
  if (split == "test") return ds.splits.test;
  if (split == "all") {
    std::vector<std::size_t> ids(ds.samples.size());
    for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = i;
    return ids;
  }
  throw ConfigError("unknown split '" + std::string(split) + "' (train, val, test or all)");
}

// Runs the checkpoint over `ids` and converts normalized outputs back to pixels.
std::vector<pose::PoseLandmarks> predict_pixels(const nnet::WpnetParams<float>& params, const dataio::Dataset& ds,
                                                const std::vector<std::size_t>& ids, std::size_t batch_size) {
  const auto& net = params.config;
  if (net.n_landmarks != pose::kJointCount) {
    throw ConfigError("checkpoint predicts " + std::to_string(net.n_landmarks) + " landmarks; 17 are needed here");
  }
  const auto set = train::prepare(ds, ids, net);
  const auto pred = train::predict(params, set.inputs, batch_size);
  const std::size_t L = net.n_landmarks;
  std::vector<pose::PoseLandmarks> out(ids.size());
  for (std::size_t k = 0; k < ids.size(); ++k) {
    const float* p = pred.sample(k);
    for (std::size_t j = 0; j < L; ++j) {
      out[k][j] = {static_cast<double>(p[j]) * ds.manifest.frame_width,
                   static_cast<double>(p[L + j]) * ds.manifest.frame_height};
    }
  }
  return out;
}

}  // namespace

std::string landmark_line(const LandmarkRecord& rec) {
  json pts = json::array();
  for (const auto& p : rec.points.points) pts.push_back({p.x, p.y});
  return json{{"frame", rec.frame}, {"points", std::move(pts)}}.dump();
}

LandmarkRecord parse_landmark_line(std::string_view line, std::size_t line_no) {
  const json j = json::parse(line, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded() || !j.is_object()) throw FormatError(line_no, "not a JSON object");
  if (!j.contains("frame") || !j["frame"].is_number_unsigned()) {
    throw FormatError(line_no, "missing or invalid \"frame\"");
  }
  if (!j.contains("points") || !j["points"].is_array() || j["points"].size() != pose::kJointCount) {
    throw FormatError(line_no, "\"points\" must hold 17 [a, b] pairs");
  }
  LandmarkRecord rec;
  rec.frame = j["frame"].get<std::size_t>();
  for (std::size_t i = 0; i < pose::kJointCount; ++i) {
    const auto& p = j["points"][i];
    if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) {
      throw FormatError(line_no, "point " + std::to_string(i) + " is not an [a, b] pair");
    }
    rec.points[i] = {p[0].get<double>(), p[1].get<double>()};
  }
  return rec;
}

std::vector<LandmarkRecord> read_landmarks(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw NotFoundError("cannot open landmarks file '" + file.string() + "'");
  std::vector<LandmarkRecord> out;
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    out.push_back(parse_landmark_line(line, n));
  }
  return out;
}

void write_landmarks(const fs::path& file, const std::vector<LandmarkRecord>& records) {
  std::string text;
  for (const auto& r : records) text += landmark_line(r) + "\n";
  write_text(file, text);
}

std::string svg_name(std::size_t frame) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "frame_%06zu.svg", frame);
  return buf;
}

std::string render_svg(const pose::PoseLandmarks& pose, double width, double height) {
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width) << "\" height=\"" << num(height)
    << "\" viewBox=\"0 0 " << num(width) << ' ' << num(height) << "\">\n";
  s << "  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "  <g stroke=\"#1f77b4\" stroke-width=\"3\" stroke-linecap=\"round\">\n";
  for (const auto& [a, b] : pose::kSkeletonEdges) {
    s << "    <line x1=\"" << num(pose[a].x) << "\" y1=\"" << num(pose[a].y) << "\" x2=\"" << num(pose[b].x)
      << "\" y2=\"" << num(pose[b].y) << "\"/>\n";
  }
  s << "  </g>\n  <g fill=\"#d62728\">\n";
  for (std::size_t j = 0; j < pose::kJointCount; ++j) {
    s << "    <circle cx=\"" << num(pose[j].x) << "\" cy=\"" << num(pose[j].y) << "\" r=\"4\"><title>"
      << pose::kJointNames[j] << "</title></circle>\n";
  }
  s << "  </g>\n</svg>\n";
  return s.str();
}

dataio::Dataset cmd_synth(const config::RunConfig& cfg, std::ostream& log) {
  const auto scene = synth::make_scene(cfg.scene);
  const std::size_t n = scene.n_frames();

  dataio::Dataset ds;
  ds.manifest.n_samples = n;
  ds.manifest.frame_width = cfg.scene.frame_width;
  ds.manifest.frame_height = cfg.scene.frame_height;
  ds.manifest.split_seed = cfg.split.seed;
  ds.samples.resize(n);
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t f = 0; f < static_cast<std::ptrdiff_t>(n); ++f) {
    const auto i = static_cast<std::size_t>(f);
    ds.samples[i] = {synth::render_csi(scene, i), dataio::quantize_f32(scene.landmarks_per_frame[i]), i};
  }
  ds.splits = dataio::split(n, cfg.split.val_frac, cfg.split.test_frac, cfg.split.seed);
  dataio::save_dataset(ds, cfg.paths.dataset_dir);

  log << "wrote " << cfg.paths.dataset_dir << ": " << n << " samples of " << ds.manifest.antennas << "x"
      << ds.manifest.subcarriers << "x" << ds.manifest.packets_per_frame << ", frame " << num(ds.manifest.frame_width)
      << "x" << num(ds.manifest.frame_height) << ", splits " << ds.splits.train.size() << "/" << ds.splits.val.size()
      << "/" << ds.splits.test.size() << " (seed " << cfg.split.seed << ")\n";
  return ds;
}

train::TrainResult cmd_train(const config::RunConfig& cfg, std::ostream& log) {
  const auto ds = dataio::load_dataset(cfg.paths.dataset_dir);
  ensure_dir(cfg.paths.output_dir);
  const fs::path history_file = fs::path(cfg.paths.output_dir) / "history.jsonl";
  std::ofstream history(history_file, std::ios::binary);
  if (!history) throw NotFoundError("cannot write '" + history_file.string() + "'");

  auto result = train::train(ds, ds.splits, cfg.net, cfg.train, [&](const train::EpochRecord& r) {
    history << json{{"epoch", r.epoch}, {"train_loss", r.train_loss}, {"val_loss", r.val_loss}, {"lr", r.lr}}.dump()
            << "\n";
    history.flush();
    log << "epoch " << r.epoch << "  lr " << r.lr << "  train " << r.train_loss << "  val " << r.val_loss << "\n";
  });
  nnet::save_checkpoint(result.best_params, cfg.paths.checkpoint);
  log << "best epoch " << result.history.best_epoch << "; checkpoint written to " << cfg.paths.checkpoint << "\n";
  return result;
}

eval::PckReport cmd_eval(const config::RunConfig& cfg, const std::optional<fs::path>& predictions_file,
                         std::ostream& log) {
  const auto ds = dataio::load_dataset(cfg.paths.dataset_dir);
  const auto& ids = ds.splits.test;
  if (ids.empty()) throw ConfigError("test split is empty");

  std::vector<pose::PoseLandmarks> gts, preds;
  for (auto id : ids) gts.push_back(ds.samples[id].annotation);

  if (predictions_file) {
    std::map<std::size_t, pose::PoseLandmarks> by_frame;
    for (auto& r : read_landmarks(*predictions_file)) by_frame[r.frame] = r.points;
    for (auto id : ids) {
      const auto it = by_frame.find(ds.samples[id].frame_index);
      if (it == by_frame.end()) {
        throw NotFoundError("no prediction for frame " + std::to_string(ds.samples[id].frame_index) + " in '" +
                            predictions_file->string() + "'");
      }
      preds.push_back(it->second);
    }
  } else {
    preds = predict_pixels(nnet::load_checkpoint(cfg.paths.checkpoint), ds, ids, cfg.train.batch_size);
  }

  const auto report = eval::pck(preds, gts, cfg.pck);
  const auto table = eval::report_table(report);
  ensure_dir(cfg.paths.output_dir);
  write_text(fs::path(cfg.paths.output_dir) / "pck.txt", table);
  write_text(fs::path(cfg.paths.output_dir) / "pck.json", eval::report_json(report).dump(2) + "\n");
  log << table;
  log << report.n_evaluated << " frames evaluated, " << report.n_skipped_degenerate << " skipped\n";
  return report;
}

std::vector<LandmarkRecord> cmd_infer(const config::RunConfig& cfg, std::string_view split,
                                      const fs::path& out_file, std::ostream& log) {
  const auto ds = dataio::load_dataset(cfg.paths.dataset_dir);
  const auto ids = split_ids(ds, split);
  const auto params = nnet::load_checkpoint(cfg.paths.checkpoint);
  const auto preds = predict_pixels(params, ds, ids, cfg.train.batch_size);

  std::vector<LandmarkRecord> records(ids.size());
  for (std::size_t k = 0; k < ids.size(); ++k) records[k] = {ds.samples[ids[k]].frame_index, preds[k]};
  if (out_file.has_parent_path()) ensure_dir(out_file.parent_path());
  write_landmarks(out_file, records);
  log << "wrote " << records.size() << " predictions to " << out_file.string() << "\n";
  return records;
}

std::vector<fs::path> cmd_render(const fs::path& predictions_file, const fs::path& out_dir, double width,
                                 double height) {
  const auto records = read_landmarks(predictions_file);
  ensure_dir(out_dir);
  std::vector<fs::path> written;
  for (const auto& r : records) {
    written.push_back(out_dir / svg_name(r.frame));
    write_text(written.back(), render_svg(r.points, width, height));
  }
  return written;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"WiFi CSI human pose estimation: synthesize, train, evaluate, infer, render."};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_file;
  int threads = 1;
  app.add_option("-c,--config", config_file, "JSON config file")->check(CLI::ExistingFile);
  app.add_option("--threads", threads, "Worker threads for parallel kernels")->capture_default_str()->check(
      CLI::PositiveNumber);

  const auto fields = config::field_defaults();
  std::vector<std::optional<std::string>> overrides(fields.size());
  for (std::size_t i = 0; i < fields.size(); ++i) {
    const auto& [key, def] = fields[i];
    app.add_option("--" + key, overrides[i], "default: " + def.dump())->group("Config fields");
  }
  app.footer("Config fields may also be set in the JSON config file under the same dotted path.\n"
             "WIFIPOSE_SEED sets scene.seed, split.seed and train.seed; explicit flags take precedence.");

  auto* synth_cmd = app.add_subcommand("synth", "Synthesize a CSI dataset into paths.dataset_dir");
  auto* train_cmd = app.add_subcommand("train", "Train on paths.dataset_dir, write paths.checkpoint");
  auto* eval_cmd = app.add_subcommand("eval", "PCK report on the test split into paths.output_dir");
  std::string predictions_from;
  eval_cmd->add_option("--predictions-from-file", predictions_from,
                       "Score landmarks from a JSON-lines file instead of running the checkpoint");
  auto* infer_cmd = app.add_subcommand("infer", "Write landmark JSON lines for a split");
  std::string infer_split = "test", infer_out;
  infer_cmd->add_option("--split", infer_split, "train, val, test or all")->capture_default_str();
  infer_cmd->add_option("-o,--out", infer_out, "Output file (default: <paths.output_dir>/predictions.jsonl)");
  auto* render_cmd = app.add_subcommand("render", "One SVG skeleton per landmark line");
  std::string render_in, render_out;
  render_cmd->add_option("predictions", render_in, "Landmark JSON-lines file")->required();
  render_cmd->add_option("out_dir", render_out, "Directory for the SVG files")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
  }

  config::RunConfig cfg;
  try {
    json doc = config_file.empty() ? config::to_json(config::RunConfig{}) : config::to_json(config::load(config_file));
    if (const auto seed = config::seed_from_env()) config::override_seeds(doc, *seed);
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (overrides[i]) config::apply_override(doc, fields[i].first, *overrides[i]);
    }
    cfg = config::from_json(doc);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

#ifdef _OPENMP
  omp_set_num_threads(threads);
#endif

  try {
    if (synth_cmd->parsed()) {
      cmd_synth(cfg, out);
    } else if (train_cmd->parsed()) {
      cmd_train(cfg, out);
    } else if (eval_cmd->parsed()) {
      std::optional<fs::path> preds;
      if (!predictions_from.empty()) preds = predictions_from;
      cmd_eval(cfg, preds, out);
    } else if (infer_cmd->parsed()) {
      const fs::path dest = infer_out.empty() ? fs::path(cfg.paths.output_dir) / "predictions.jsonl" : fs::path(infer_out);
      cmd_infer(cfg, infer_split, dest, out);
    } else if (render_cmd->parsed()) {
      cmd_render(render_in, render_out, cfg.scene.frame_width, cfg.scene.frame_height);
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const TrainingDivergedError& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace wifipose::cli
