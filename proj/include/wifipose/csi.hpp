#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace wifipose::csi {

inline constexpr std::size_t kAntennas = 3;
inline constexpr std::size_t kSubcarriers = 114;
inline constexpr std::size_t kPacketsPerFrame = 32;
inline constexpr double kSpeedOfLight = 299'792'458.0;

/// One discrete multipath component of the channel impulse response.
struct PathComponent {
  double alpha = 0.0;  // attenuation, >= 0
  double phi = 0.0;    // phase offset [rad]
  double tau = 0.0;    // delay [s], >= 0
};

/// Complex channel estimate at a single subcarrier.
struct SubcarrierSample {
  double re = 0.0;
  double im = 0.0;

  SubcarrierSample& operator+=(const SubcarrierSample& o) {
    re += o.re;
    im += o.im;
    return *this;
  }
};

/// Magnitude of a complex channel sample.
double amplitude(const SubcarrierSample& h);

/// Phase of a complex channel sample. Not used by the amplitude-only pipeline.
double phase(const SubcarrierSample& h);

/// Frequency response of a discrete CIR at `freq_hz`:
///   H(f) = sum_l alpha_l * exp(j * (phi_l - 2*pi*f*tau_l))
/// Throws DomainError on an empty path list or non-positive frequency.
SubcarrierSample superpose(std::span<const PathComponent> paths, double freq_hz);

/// Amplitude tensor for one video frame, laid out [antenna][subcarrier][packet].
class CsiFrame {
 public:
  CsiFrame() : CsiFrame(kAntennas, kSubcarriers, kPacketsPerFrame) {}
  CsiFrame(std::size_t antennas, std::size_t subcarriers, std::size_t packets)
      : dims_{antennas, subcarriers, packets}, data_(antennas * subcarriers * packets, 0.0f) {}

  std::size_t antennas() const { return dims_[0]; }
  std::size_t subcarriers() const { return dims_[1]; }
  std::size_t packets() const { return dims_[2]; }
  std::array<std::size_t, 3> dims() const { return dims_; }

  float& at(std::size_t a, std::size_t s, std::size_t t) {
    return data_[(a * dims_[1] + s) * dims_[2] + t];
  }
  float at(std::size_t a, std::size_t s, std::size_t t) const {
    return data_[(a * dims_[1] + s) * dims_[2] + t];
  }

  std::span<float> values() { return data_; }
  std::span<const float> values() const { return data_; }

  bool operator==(const CsiFrame&) const = default;

 private:
  std::array<std::size_t, 3> dims_;
  std::vector<float> data_;
};

}  // namespace wifipose::csi
