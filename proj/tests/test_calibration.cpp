// License: Apache 2.0. See LICENSE file in root directory.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cmath>
#include <random>

#include "depthcal/calibration.hpp"
#include "depthcal/errors.hpp"

using namespace depthcal;

namespace {

const CameraIntrinsics kSmall{60.0, 60.0, 40.0, 30.0, 80, 60};

DepthFrame constant_frame(double z) {
  DepthFrame frame(kSmall.width, kSmall.height);
  for (double& d : frame.depths) d = z;
  return frame;
}

// Weighted objective of the per-pixel fit (for gradient / optimality checks).
double fit_objective(std::span<const DepthPair> pairs, const NoiseModel& noise,
                     const PixelBias& bias) {
  double obj = 0.0;
  for (const DepthPair& p : pairs) {
    const double sigma = noise_sigma(noise, p.measured);
    const double r = p.measured - p.reference - bias_mean(bias, p.measured);
    obj += r * r / (sigma * sigma);
  }
  return obj;
}

}  // namespace

TEST_CASE("accumulate_pairs on an all-sentinel frame changes nothing") {
  PairStore store(kSmall.width, kSmall.height);
  accumulate_pairs(DepthFrame(kSmall.width, kSmall.height),
                   PlaneHessian{Vec3{0, 0, 1}, 2.0}, kSmall, store, 5.0);
  CHECK(store.total_pairs() == 0);
}

TEST_CASE("accumulate_pairs on an exact fronto-parallel wall") {
  PairStore store(kSmall.width, kSmall.height);
  accumulate_pairs(constant_frame(2.0), PlaneHessian{Vec3{0, 0, 1}, 2.0},
                   kSmall, store, 5.0);
  CHECK(store.total_pairs() ==
        static_cast<std::int64_t>(kSmall.width) * kSmall.height);
  for (const auto& pairs : store.pixels) {
    REQUIRE(pairs.size() == 1);
    CHECK(pairs[0].measured == 2.0);
    CHECK(pairs[0].reference == doctest::Approx(2.0).epsilon(1e-15));
  }
}

TEST_CASE("accumulate_pairs records the injected bias") {
  DepthFrame frame = constant_frame(2.0);
  frame.set(5, 5, 2.03);
  PairStore store(kSmall.width, kSmall.height);
  accumulate_pairs(frame, PlaneHessian{Vec3{0, 0, 1}, 2.0}, kSmall, store, 5.0);
  const auto& pairs = store.pixels[store.index(5, 5)];
  REQUIRE(pairs.size() == 1);
  CHECK(pairs[0].measured == doctest::Approx(2.03));
  CHECK(pairs[0].reference == doctest::Approx(2.0));
}

TEST_CASE("accumulate_pairs drops out-of-range and gross-outlier pixels") {
  DepthFrame frame = constant_frame(2.0);
  frame.set(0, 0, 5.5);  // beyond max_range
  frame.set(1, 0, 2.9);  // |z - z*| = 0.9 > 0.5 gate
  PairStore store(kSmall.width, kSmall.height);
  accumulate_pairs(frame, PlaneHessian{Vec3{0, 0, 1}, 2.0}, kSmall, store, 5.0);
  CHECK(store.pixels[store.index(0, 0)].empty());
  CHECK(store.pixels[store.index(1, 0)].empty());
  CHECK(store.pixels[store.index(2, 0)].size() == 1);
}

TEST_CASE("bin_residuals splits pairs by measured depth") {
  PairStore store(1, 1);
  store.pixels[0] = {DepthPair{1.0, 0.99}, DepthPair{3.0, 2.95}};

  BinningConfig one_bin;
  one_bin.bin_centers = {1.0};
  one_bin.threshold = 0.5;
  ResidualBins bins = bin_residuals(store, one_bin);
  REQUIRE(bins.groups[0].size() == 1);
  REQUIRE(bins.groups[0][0].size() == 1);
  CHECK(bins.groups[0][0][0] == doctest::Approx(0.01));

  BinningConfig two_bins;
  two_bins.bin_centers = {1.0, 3.0};
  two_bins.threshold = 0.5;
  bins = bin_residuals(store, two_bins);
  CHECK(bins.groups[0][0][0] == doctest::Approx(0.01));
  CHECK(bins.groups[1][0][0] == doctest::Approx(0.05));
}

TEST_CASE("overlapping bins may share pairs") {
  PairStore store(1, 1);
  store.pixels[0] = {DepthPair{2.0, 1.98}};
  BinningConfig config;
  config.bin_centers = {1.9, 2.1};  // windows overlap at t = 0.3
  config.threshold = 0.3;
  const ResidualBins bins = bin_residuals(store, config);
  CHECK(bins.groups[0].size() == 1);
  CHECK(bins.groups[1].size() == 1);
}

TEST_CASE("uniform pairs spread evenly across bins") {
  // Counting oracle: measured depths uniform over [0.5, 4.5] land in each
  // non-overlapping bin in proportion to its window, within Poisson bounds.
  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> depth(0.5, 4.5);
  PairStore store(4, 4);
  const int kPairs = 40000;
  for (int i = 0; i < kPairs; ++i) {
    const double z = depth(rng);
    store.pixels[static_cast<std::size_t>(i % 16)].push_back(DepthPair{z, z});
  }
  const BinningConfig config = BinningConfig::regular(0.7, 4.3, 0.4);
  const ResidualBins bins = bin_residuals(store, config);
  // Interior windows [0.5, 4.5) are fully covered: expect kPairs / 10 each.
  const double expected = kPairs / 10.0;
  for (std::size_t b = 0; b < bins.centers.size(); ++b) {
    std::int64_t count = 0;
    for (const auto& g : bins.groups[b]) count += static_cast<std::int64_t>(g.size());
    CHECK(std::abs(count - expected) < 4.0 * std::sqrt(expected));
  }
}

TEST_CASE("pooled_sigma hand-checked example") {
  ResidualBins bins;
  bins.centers = {1.0};
  bins.groups = {{{0.01, 0.03}}};
  const auto sample = pooled_sigma(bins, 1.0, 1);
  REQUIRE(sample.has_value());
  // mean 0.02, deviations +-0.01: sigma^2 = 1e-4
  CHECK(sample->sigma == doctest::Approx(0.01).epsilon(1e-12));
  CHECK(sample->count == 2);
}

TEST_CASE("pooled_sigma removes per-pixel means") {
  // Constant residuals per pixel, different constants across pixels.
  ResidualBins bins;
  bins.centers = {2.0};
  bins.groups = {{{0.05, 0.05, 0.05}, {-0.12, -0.12}, {0.31, 0.31, 0.31, 0.31}}};
  const auto sample = pooled_sigma(bins, 2.0, 1);
  REQUIRE(sample.has_value());
  CHECK(sample->sigma == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("pooled_sigma reports insufficient data") {
  ResidualBins bins;
  bins.centers = {1.0};
  bins.groups = {{{0.01, 0.02}}};
  CHECK(!pooled_sigma(bins, 1.0, 3).has_value());
  CHECK_THROWS_AS(pooled_sigma(bins, 9.0, 1), InvalidArgumentError);
}

TEST_CASE("pooled_sigma is invariant to per-pixel offsets") {
  std::mt19937_64 rng(41);
  std::normal_distribution<double> noise(0.0, 0.01);
  ResidualBins base, shifted;
  base.centers = shifted.centers = {1.5};
  base.groups.resize(1);
  shifted.groups.resize(1);
  for (int g = 0; g < 20; ++g) {
    std::vector<double> set(5);
    for (double& r : set) r = noise(rng);
    base.groups[0].push_back(set);
    const double offset = g * 0.017 - 0.1;
    for (double& r : set) r += offset;
    shifted.groups[0].push_back(set);
  }
  const double s0 = pooled_sigma(base, 1.5, 1)->sigma;
  const double s1 = pooled_sigma(shifted, 1.5, 1)->sigma;
  CHECK(s1 == doctest::Approx(s0).epsilon(1e-9));
}

TEST_CASE("pooled_sigma scales with the residuals") {
  std::mt19937_64 rng(43);
  std::normal_distribution<double> noise(0.0, 0.01);
  ResidualBins base, scaled;
  base.centers = scaled.centers = {1.5};
  base.groups.resize(1);
  scaled.groups.resize(1);
  const double s = -3.7;
  for (int g = 0; g < 10; ++g) {
    std::vector<double> set(4);
    for (double& r : set) r = noise(rng);
    base.groups[0].push_back(set);
    for (double& r : set) r *= s;
    scaled.groups[0].push_back(set);
  }
  CHECK(pooled_sigma(scaled, 1.5, 1)->sigma ==
        doctest::Approx(std::abs(s) * pooled_sigma(base, 1.5, 1)->sigma)
            .epsilon(1e-12));
}

TEST_CASE("fit_sigma_quadratic interpolates exact samples") {
  std::vector<SigmaSample> samples;
  for (double k : {1.0, 2.0, 3.0, 4.0}) {
    samples.push_back(SigmaSample{k, 0.001 * k * k, 100});
  }
  const NoiseModel model = fit_sigma_quadratic(samples);
  CHECK(model.a == doctest::Approx(0.001).epsilon(1e-10));
  CHECK(std::abs(model.b) < 1e-10);
  CHECK(std::abs(model.c) < 1e-10);
}

TEST_CASE("fit_sigma_quadratic residuals are orthogonal to the design") {
  const std::vector<SigmaSample> samples = {
      {1.0, 0.003, 10}, {2.0, 0.006, 10}, {3.0, 0.011, 10}};
  const NoiseModel model = fit_sigma_quadratic(samples);
  double r_kk = 0.0, r_k = 0.0, r_1 = 0.0;
  for (const auto& s : samples) {
    const double r =
        s.sigma - ((model.a * s.bin_center + model.b) * s.bin_center + model.c);
    r_kk += r * s.bin_center * s.bin_center;
    r_k += r * s.bin_center;
    r_1 += r;
  }
  CHECK(std::abs(r_kk) < 1e-9);
  CHECK(std::abs(r_k) < 1e-9);
  CHECK(std::abs(r_1) < 1e-9);
}

TEST_CASE("fit_sigma_quadratic needs three distinct centers") {
  const std::vector<SigmaSample> two = {{1.0, 0.003, 10}, {2.0, 0.006, 10}};
  CHECK_THROWS_AS(fit_sigma_quadratic(two), DegenerateSystemError);
  const std::vector<SigmaSample> dup = {
      {1.0, 0.003, 10}, {1.0, 0.004, 10}, {2.0, 0.006, 10}};
  CHECK_THROWS_AS(fit_sigma_quadratic(dup), DegenerateSystemError);
}

TEST_CASE("fit_pixel_bias recovers an exact quadratic") {
  const PixelBias truth{0.01, -0.02, 0.005};
  std::vector<DepthPair> pairs;
  for (double z : {1.0, 1.3, 1.6, 1.9, 2.2, 2.5, 2.8, 3.0, 3.3, 3.6}) {
    pairs.push_back(DepthPair{z, z - bias_mean(truth, z)});
  }
  const NoiseModel noise{0, 0, 0, 1e-4};  // uniform weights at the floor
  const auto fitted = fit_pixel_bias(pairs, noise);
  REQUIRE(fitted.has_value());
  CHECK(fitted->a == doctest::Approx(truth.a).epsilon(1e-9));
  CHECK(fitted->b == doctest::Approx(truth.b).epsilon(1e-9));
  CHECK(fitted->c == doctest::Approx(truth.c).epsilon(1e-9));
}

TEST_CASE("fit_pixel_bias returns zero for zero residuals") {
  std::vector<DepthPair> pairs;
  for (int i = 0; i < 12; ++i) {
    const double z = 1.0 + 0.2 * i;
    pairs.push_back(DepthPair{z, z});
  }
  const auto fitted = fit_pixel_bias(pairs, NoiseModel{0, 0, 0.01, 1e-4});
  REQUIRE(fitted.has_value());
  CHECK(std::abs(fitted->a) < 1e-12);
  CHECK(std::abs(fitted->b) < 1e-12);
  CHECK(std::abs(fitted->c) < 1e-12);
}

TEST_CASE("fit_pixel_bias insufficiency gates") {
  const NoiseModel noise{0, 0, 0.01, 1e-4};
  std::vector<DepthPair> few;
  for (int i = 0; i < 9; ++i) few.push_back(DepthPair{1.0 + 0.2 * i, 1.0});
  CHECK(!fit_pixel_bias(few, noise).has_value());  // < min_pairs

  std::vector<DepthPair> narrow;
  for (int i = 0; i < 15; ++i) narrow.push_back(DepthPair{2.0 + 0.01 * i, 2.0});
  CHECK(!fit_pixel_bias(narrow, noise).has_value());  // span < 0.5 m
}

TEST_CASE("fit_pixel_bias Monte Carlo recovery under the noise model") {
  // 200 pairs spanning [0.5, 4.5]; recovered curve within
  // 3 sigma(z) / sqrt(200/3) on [1, 4] for >= 95% of trials.
  const PixelBias truth{0.004, -0.006, 0.02};
  const NoiseModel noise{0.0007, 0.0, 0.002, 1e-4};
  std::mt19937_64 rng(123);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double bound_scale = 3.0 / std::sqrt(200.0 / 3.0);

  int covered = 0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<DepthPair> pairs;
    for (int i = 0; i < 200; ++i) {
      const double z_star = 0.5 + 4.0 * i / 199.0;
      const double z = z_star + bias_mean(truth, z_star) +
                       gauss(rng) * noise_sigma(noise, z_star);
      pairs.push_back(DepthPair{z, z_star});
    }
    const auto fitted = fit_pixel_bias(pairs, noise);
    REQUIRE(fitted.has_value());
    bool ok = true;
    for (double z = 1.0; z <= 4.0; z += 0.05) {
      const double err = std::abs(bias_mean(*fitted, z) - bias_mean(truth, z));
      if (err >= bound_scale * noise_sigma(noise, z)) {
        ok = false;
        break;
      }
    }
    covered += ok ? 1 : 0;
  }
  CHECK(covered >= 95);
}

TEST_CASE("weighted objective gradient matches finite differences") {
  const NoiseModel noise{0.0007, 0.0, 0.002, 1e-4};
  std::mt19937_64 rng(7);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<DepthPair> pairs;
  for (int i = 0; i < 40; ++i) {
    const double z = 0.8 + 0.09 * i;
    pairs.push_back(DepthPair{z, z - 0.01 + 0.002 * gauss(rng)});
  }

  // Analytic gradient of sum w (r - mu)^2 at an arbitrary point:
  // 2 (N theta - rhs) with N, rhs the weighted normal system.
  const PixelBias at{0.002, -0.001, 0.004};
  Mat3 normal = Mat3::Zero();
  Vec3 rhs = Vec3::Zero();
  for (const DepthPair& p : pairs) {
    const double sigma = noise_sigma(noise, p.measured);
    const double w = 1.0 / (sigma * sigma);
    const Vec3 x{p.measured * p.measured, p.measured, 1.0};
    normal += w * x * x.transpose();
    rhs += w * x * (p.measured - p.reference);
  }
  const Vec3 analytic = 2.0 * (normal * Vec3{at.a, at.b, at.c} - rhs);

  const double h = 1e-7;
  std::array<PixelBias, 3> plus = {at, at, at};
  std::array<PixelBias, 3> minus = {at, at, at};
  plus[0].a += h;
  minus[0].a -= h;
  plus[1].b += h;
  minus[1].b -= h;
  plus[2].c += h;
  minus[2].c -= h;
  for (int i = 0; i < 3; ++i) {
    const double numeric = (fit_objective(pairs, noise, plus[i]) -
                            fit_objective(pairs, noise, minus[i])) /
                           (2.0 * h);
    CHECK(numeric ==
          doctest::Approx(analytic(i)).epsilon(1e-6));
  }
}

TEST_CASE("closed-form fit beats a local grid search") {
  std::mt19937_64 rng(55);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_int_distribution<int> count(10, 20);
  const NoiseModel noise{0.0005, 0.0, 0.003, 1e-4};
  for (int instance = 0; instance < 20; ++instance) {
    std::vector<DepthPair> pairs;
    const int n = count(rng);
    for (int i = 0; i < n; ++i) {
      const double z = 0.6 + 3.9 * i / (n - 1);
      pairs.push_back(DepthPair{z, z - 0.02 + 0.003 * gauss(rng)});
    }
    const auto fitted = fit_pixel_bias(pairs, noise);
    REQUIRE(fitted.has_value());
    const double best = fit_objective(pairs, noise, *fitted);
    for (int da = -2; da <= 2; ++da) {
      for (int db = -2; db <= 2; ++db) {
        for (int dc = -2; dc <= 2; ++dc) {
          PixelBias probe = *fitted;
          probe.a += 1e-4 * da;
          probe.b += 1e-4 * db;
          probe.c += 1e-4 * dc;
          CHECK(fit_objective(pairs, noise, probe) >= best - 1e-12);
        }
      }
    }
  }
}

namespace {

// Ten exact fronto-parallel walls between 1 m and 3.25 m, zero bias/noise.
std::vector<Observation> exact_dataset() {
  std::vector<Observation> observations;
  for (int i = 0; i < 10; ++i) {
    const double d = 1.0 + 0.25 * i;
    observations.push_back(
        Observation{constant_frame(d), PlaneHessian{Vec3{0, 0, 1}, d}});
  }
  return observations;
}

CalibrationOptions test_options() {
  CalibrationOptions options;
  // Offset centers so the 0.25-stepped wall depths sit inside bin windows,
  // away from the strict |z - k| < t boundaries.
  options.binning = BinningConfig::regular(0.875, 3.375, 0.5);
  options.binning.min_samples_per_bin = 10;
  return options;
}

}  // namespace

TEST_CASE("calibrate on a zero-bias zero-noise dataset") {
  const auto observations = exact_dataset();
  const CalibrationResult result =
      calibrate(observations, RigidTransform{}, kSmall, test_options());
  CHECK(result.report.valid_pixels ==
        static_cast<std::int64_t>(kSmall.width) * kSmall.height);
  for (std::size_t i = 0; i < result.bias_map.coefficients.size(); ++i) {
    CHECK(std::abs(result.bias_map.coefficients[i].a) < 1e-9);
    CHECK(std::abs(result.bias_map.coefficients[i].b) < 1e-9);
    CHECK(std::abs(result.bias_map.coefficients[i].c) < 1e-9);
  }
  // Noise model collapses to (near) zero; the floor takes over.
  CHECK(noise_sigma(result.noise, 2.0) == result.noise.sigma_floor);
}

TEST_CASE("calibrate rejects a single wall distance") {
  std::vector<Observation> observations;
  for (int i = 0; i < 5; ++i) {
    observations.push_back(
        Observation{constant_frame(2.0), PlaneHessian{Vec3{0, 0, 1}, 2.0}});
  }
  CHECK_THROWS_AS(
      calibrate(observations, RigidTransform{}, kSmall, test_options()),
      TooFewDistancesError);
}

TEST_CASE("calibrate rejects an empty dataset") {
  CHECK_THROWS_AS(calibrate(std::vector<Observation>{}, RigidTransform{},
                            kSmall, test_options()),
                  TooFewDistancesError);
}

TEST_CASE("calibrate is deterministic and order-stable") {
  auto observations = exact_dataset();
  // Perturb with a fixed bias so coefficients are nontrivial.
  for (auto& obs : observations) {
    for (double& z : obs.frame.depths) z += 0.01 + 0.002 * z;
  }
  const CalibrationResult a =
      calibrate(observations, RigidTransform{}, kSmall, test_options());
  const CalibrationResult b =
      calibrate(observations, RigidTransform{}, kSmall, test_options());
  REQUIRE(a.bias_map.coefficients.size() == b.bias_map.coefficients.size());
  for (std::size_t i = 0; i < a.bias_map.coefficients.size(); ++i) {
    CHECK(a.bias_map.coefficients[i].a == b.bias_map.coefficients[i].a);
    CHECK(a.bias_map.coefficients[i].b == b.bias_map.coefficients[i].b);
    CHECK(a.bias_map.coefficients[i].c == b.bias_map.coefficients[i].c);
  }

  // Reversing the observation order leaves the result unchanged (fits depend
  // on pair multisets only).
  std::vector<Observation> reversed(observations.rbegin(), observations.rend());
  const CalibrationResult c =
      calibrate(reversed, RigidTransform{}, kSmall, test_options());
  for (std::size_t i = 0; i < a.bias_map.coefficients.size(); ++i) {
    CHECK(a.bias_map.coefficients[i].a == c.bias_map.coefficients[i].a);
    CHECK(a.bias_map.coefficients[i].b == c.bias_map.coefficients[i].b);
    CHECK(a.bias_map.coefficients[i].c == c.bias_map.coefficients[i].c);
  }
}

TEST_CASE("calibrate report carries bin diagnostics") {
  const auto observations = exact_dataset();
  const CalibrationResult result =
      calibrate(observations, RigidTransform{}, kSmall, test_options());
  CHECK(result.report.total_pairs ==
        static_cast<std::int64_t>(kSmall.width) * kSmall.height * 10);
  std::int64_t pooled = 0;
  for (const BinReport& b : result.report.bins) pooled += b.pooled_count;
  CHECK(pooled == result.report.total_pairs);  // non-overlapping default bins
  for (const BinReport& b : result.report.bins) {
    if (b.used) CHECK(b.bessel_factor >= 1.0);
  }
}
