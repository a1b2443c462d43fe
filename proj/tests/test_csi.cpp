#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include "doctest.h"

#include "wifipose/csi.hpp"
#include "wifipose/errors.hpp"

using namespace wifipose;
using csi::PathComponent;

namespace {

std::complex<double> complex_oracle(const std::vector<PathComponent>& paths, double f) {
  std::complex<double> h{0.0, 0.0};
  for (const auto& p : paths) h += std::polar(p.alpha, p.phi - 2.0 * std::numbers::pi * f * p.tau);
  return h;
}

std::vector<PathComponent> random_paths(std::mt19937_64& gen, std::size_t n) {
  std::uniform_real_distribution<double> a(0.0, 1.0), ph(-std::numbers::pi, std::numbers::pi), tau(0.0, 100e-9);
  std::vector<PathComponent> p(n);
  for (auto& c : p) c = {a(gen), ph(gen), tau(gen)};
  return p;
}

}  // namespace

TEST_CASE("amplitude of known samples") {
  CHECK(csi::amplitude({3.0, 4.0}) == 5.0);
  CHECK(csi::amplitude({0.0, 0.0}) == 0.0);
}

TEST_CASE("amplitude agrees with hypot on random samples") {
  std::mt19937_64 gen(11);
  std::normal_distribution<double> d(0.0, 10.0);
  for (int i = 0; i < 100; ++i) {
    const csi::SubcarrierSample h{d(gen), d(gen)};
    const double ref = std::hypot(h.re, h.im);
    CHECK(std::abs(csi::amplitude(h) - ref) <= 1e-12 * ref);
  }
}

TEST_CASE("phase is atan2") {
  CHECK(csi::phase({0.0, 1.0}) == doctest::Approx(std::numbers::pi / 2));
  CHECK(csi::phase({-1.0, 0.0}) == doctest::Approx(std::numbers::pi));
}

TEST_CASE("superpose special cases") {
  const std::vector<PathComponent> unit{{1.0, 0.0, 0.0}};
  for (double f : {1.0, 2.4e9, 5.32e9}) {
    const auto h = csi::superpose(unit, f);
    CHECK(h.re == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(std::abs(h.im) < 1e-15);
  }
  const std::vector<PathComponent> cancel{{1.0, 0.0, 0.0}, {1.0, std::numbers::pi, 0.0}};
  const auto h = csi::superpose(cancel, 5.32e9);
  CHECK(std::abs(h.re) < 1e-12);
  CHECK(std::abs(h.im) < 1e-12);
}

TEST_CASE("superpose rejects empty path lists and bad frequencies") {
  CHECK_THROWS_WITH_AS(csi::superpose({}, 5e9), "no propagation paths", DomainError);
  const std::vector<PathComponent> one{{1.0, 0.0, 0.0}};
  CHECK_THROWS_AS(csi::superpose(one, 0.0), DomainError);
  CHECK_THROWS_AS(csi::superpose(one, -1.0), DomainError);
}

TEST_CASE("superpose matches a complex-arithmetic oracle") {
  std::mt19937_64 gen(5);
  for (int trial = 0; trial < 200; ++trial) {
    const auto paths = random_paths(gen, 3);
    const auto ref = complex_oracle(paths, 5.32e9);
    const auto h = csi::superpose(paths, 5.32e9);
    const double scale = std::max(std::abs(ref), 1e-3);
    CHECK(std::abs(h.re - ref.real()) <= 1e-10 * scale);
    CHECK(std::abs(h.im - ref.imag()) <= 1e-10 * scale);
  }
}

TEST_CASE("superpose invariants") {
  std::mt19937_64 gen(9);
  std::uniform_real_distribution<double> shift(-10.0, 10.0);
  for (int trial = 0; trial < 200; ++trial) {
    auto p1 = random_paths(gen, 1 + trial % 5);
    const auto p2 = random_paths(gen, 1 + trial % 3);
    const double f = 5.0e9 + 1e6 * trial;

    double alpha_sum = 0.0;
    for (const auto& p : p1) alpha_sum += p.alpha;
    CHECK(csi::amplitude(csi::superpose(p1, f)) <= alpha_sum + 1e-12);

    auto all = p1;
    all.insert(all.end(), p2.begin(), p2.end());
    auto sum = csi::superpose(p1, f);
    sum += csi::superpose(p2, f);
    const auto joint = csi::superpose(all, f);
    CHECK(std::abs(joint.re - sum.re) <= 1e-12);
    CHECK(std::abs(joint.im - sum.im) <= 1e-12);

    const double before = csi::amplitude(csi::superpose(p1, f));
    const double c = shift(gen);
    for (auto& p : p1) p.phi += c;
    CHECK(std::abs(csi::amplitude(csi::superpose(p1, f)) - before) <= 1e-10);
  }
}

TEST_CASE("CsiFrame layout") {
  csi::CsiFrame f;
  CHECK(f.dims() == std::array<std::size_t, 3>{3, 114, 32});
  CHECK(f.values().size() == 3u * 114 * 32);
  f.at(2, 5, 7) = 1.5f;
  CHECK(f.values()[(2 * 114 + 5) * 32 + 7] == 1.5f);
}
