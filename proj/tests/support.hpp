#pragma once

// Independent reference implementations and helpers shared by the unit and
// acceptance tests. Nothing here calls into the code it is used to check.

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "wifipose/dataio.hpp"
#include "wifipose/eval.hpp"
#include "wifipose/nnet.hpp"
#include "wifipose/pose.hpp"

namespace testsupport {

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

std::vector<unsigned char> read_bytes(const std::filesystem::path& file);
std::string read_text(const std::filesystem::path& file);

/// Eval-mode WPNet forward with plain nested loops over the named tensors.
/// x is [S x S] row-major; returns [2 x L].
std::vector<double> naive_wpnet_forward(const wifipose::nnet::WpnetParams<double>& params,
                                        const std::vector<double>& x);

/// Direct 2-D convolution: x [C][H][W], w [C'][C][k][k].
std::vector<double> naive_conv(const std::vector<double>& x, std::size_t c, std::size_t h, std::size_t w,
                               const std::vector<double>& weight, std::size_t cout, std::size_t k,
                               std::size_t stride, std::size_t pad, std::size_t& oh, std::size_t& ow);

/// Scalar PCK: per-joint percentages [17][n_thresholds] plus evaluated count.
struct BruteForcePck {
  std::vector<std::vector<double>> per_joint;
  std::vector<double> average;
  std::size_t n_evaluated = 0;
};
BruteForcePck brute_force_pck(const std::vector<wifipose::pose::PoseLandmarks>& preds,
                              const std::vector<wifipose::pose::PoseLandmarks>& gts,
                              const std::vector<double>& thresholds, double torso_epsilon);

/// Parses a rendered PCK table back into thresholds, joint rows and the average row.
struct ParsedTable {
  std::vector<double> thresholds;
  std::vector<std::string> names;
  std::vector<std::vector<double>> rows;  // joints then Average
};
ParsedTable parse_table(const std::string& text);

/// In-memory synthetic dataset: make_scene + render_csi for `n_frames` frames,
/// annotations rounded to float32, split 0.2 / 0.2 with `seed`.
wifipose::dataio::Dataset synthetic_dataset(std::size_t n_frames, std::uint64_t seed, double noise_sigma = 0.01);

/// Analytic vs central-difference gradients of the MSE loss of a tiny double
/// WPNet (training-mode batch norm, batch of 4) on `n_coords` sampled
/// trainable coordinates.
struct GradientComparison {
  std::vector<double> analytic, numeric;
  double max_relative_error = 0.0;
};
GradientComparison tiny_gradient_check(std::uint64_t seed, std::size_t n_coords);

/// Trains the tiny config on one fixed batch of 32 synthetic samples for
/// `steps` optimizer steps; returns the batch MSE before and after.
struct OverfitResult {
  double initial_loss = 0.0, final_loss = 0.0;
};
OverfitResult overfit_one_batch(std::size_t steps, double lr, std::uint64_t seed);

wifipose::pose::PoseLandmarks random_pose(std::mt19937_64& gen, double width = 640.0, double height = 480.0);

}  // namespace testsupport
