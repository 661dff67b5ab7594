// License: Apache 2.0. See LICENSE file in root directory.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "depthcal/error_model.hpp"
#include "depthcal/errors.hpp"

using namespace depthcal;

TEST_CASE("bias_mean evaluates the quadratic") {
  CHECK(bias_mean(PixelBias{0, 0, 0}, 2.0) == 0.0);
  CHECK(bias_mean(PixelBias{0.01, -0.02, 0.005}, 2.0) ==
        doctest::Approx(0.005).epsilon(1e-12));
  CHECK(bias_mean(PixelBias{0, 1, 0}, 3.7) == doctest::Approx(3.7));
}

TEST_CASE("noise_sigma evaluates the quadratic with a floor") {
  NoiseModel constant{0, 0, 0.002, 1e-4};
  CHECK(noise_sigma(constant, 1.0) == doctest::Approx(0.002));

  NoiseModel quadratic{0.0007, 0, 0, 1e-4};
  CHECK(noise_sigma(quadratic, 2.0) == doctest::Approx(0.0028));

  NoiseModel dips{0.0, 0.0, -1.0, 1e-4};
  CHECK(noise_sigma(dips, 3.0) == 1e-4);
}

TEST_CASE("noise_sigma never goes below the floor") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> coeff(-0.01, 0.01);
  std::uniform_real_distribution<double> depth(0.1, 10.0);
  for (int i = 0; i < 1000; ++i) {
    NoiseModel model{coeff(rng), coeff(rng), coeff(rng), 1e-4};
    CHECK(noise_sigma(model, depth(rng)) >= model.sigma_floor);
  }
}

namespace {

DepthFrame make_frame(int w, int h, double z) {
  DepthFrame frame(w, h);
  for (double& d : frame.depths) d = z;
  return frame;
}

}  // namespace

TEST_CASE("compensate_frame with a zero map is the identity") {
  DepthFrame frame = make_frame(4, 3, 2.0);
  frame.set(1, 1, DepthFrame::kInvalidDepth);
  frame.set(2, 0, 3.25);
  const DepthFrame out = compensate_frame(frame, BiasMap(4, 3));
  CHECK(out.depths == frame.depths);  // bit-identical
}

TEST_CASE("compensate_frame subtracts the bias mean") {
  DepthFrame frame = make_frame(2, 2, 4.0);
  BiasMap map(2, 2);
  for (auto& c : map.coefficients) c = PixelBias{0, 0, 0.05};
  const DepthFrame out = compensate_frame(frame, map);
  for (double z : out.depths) CHECK(z == doctest::Approx(3.95).epsilon(1e-15));
}

TEST_CASE("compensate_frame invalidates non-positive results and keeps sentinels") {
  DepthFrame frame = make_frame(2, 1, 0.04);
  frame.set(1, 0, DepthFrame::kInvalidDepth);
  BiasMap map(2, 1);
  for (auto& c : map.coefficients) c = PixelBias{0, 0, 0.05};
  const DepthFrame out = compensate_frame(frame, map);
  CHECK(out.at(0, 0) == DepthFrame::kInvalidDepth);  // 0.04 - 0.05 <= 0
  CHECK(out.at(1, 0) == DepthFrame::kInvalidDepth);
}

TEST_CASE("compensate_frame rejects mismatched dimensions") {
  CHECK_THROWS_AS(compensate_frame(DepthFrame(4, 3), BiasMap(3, 4)),
                  DimensionMismatchError);
}

TEST_CASE("compensation is exactly z - bias_mean(z) per pixel") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> depth(0.5, 5.0);
  std::uniform_real_distribution<double> coeff(-0.005, 0.005);
  DepthFrame frame(8, 6);
  BiasMap map(8, 6);
  for (std::size_t i = 0; i < frame.depths.size(); ++i) {
    frame.depths[i] = depth(rng);
    map.coefficients[i] = PixelBias{coeff(rng), coeff(rng), coeff(rng)};
  }
  const DepthFrame out = compensate_frame(frame, map);
  for (std::size_t i = 0; i < frame.depths.size(); ++i) {
    const double expected =
        frame.depths[i] - bias_mean(map.coefficients[i], frame.depths[i]);
    CHECK(out.depths[i] == expected);  // bit-reproducible
  }
  // And never a non-sentinel value <= 0.
  for (double z : out.depths) CHECK((z == 0.0 || z > 0.0));
}
