#include "wifipose/csi.hpp"

#include <cmath>
#include <numbers>

#include "wifipose/errors.hpp"

namespace wifipose::csi {

double amplitude(const SubcarrierSample& h) { return std::sqrt(h.re * h.re + h.im * h.im); }

double phase(const SubcarrierSample& h) { return std::atan2(h.im, h.re); }

SubcarrierSample superpose(std::span<const PathComponent> paths, double freq_hz) {
  if (paths.empty()) throw DomainError("no propagation paths");
  if (!(freq_hz > 0.0)) throw DomainError("subcarrier frequency must be positive");

  SubcarrierSample acc;
  for (const auto& p : paths) {
    // Reduce 2*pi*f*tau modulo one cycle before the trig call; f*tau is O(10..100)
    // cycles and direct evaluation loses low bits of the phase.
    const double cycles = freq_hz * p.tau;
    const double frac = cycles - std::floor(cycles);
    const double theta = p.phi - 2.0 * std::numbers::pi * frac;
    acc.re += p.alpha * std::cos(theta);
    acc.im += p.alpha * std::sin(theta);
  }
  return acc;
}

}  // namespace wifipose::csi
