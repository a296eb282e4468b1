// Copyright 2026 The dptv Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "dptv/core.hpp"
#include "dptv/dp_mech.hpp"
#include "dptv/rng.hpp"

namespace {

using namespace dptv;

// Independently computed with 50-digit interval arithmetic, then rounded to
// the nearest double. Grid: sensitivity 1, eps 1.
struct DeltaPoint {
  double sigma;
  double delta;
};
constexpr DeltaPoint kDeltaGrid[] = {
    {0.5, 0.50986166005467015},
    {1.0, 0.12693673750664389},
    {2.0, 0.0068295949831145772},
    {4.0, 2.9242721048564364e-06},
    {8.0, 1.5530843865023931e-17},
};

// Same pipeline: smallest sigma with delta(eps; sigma) <= 1e-5 at
// sensitivity 1, for the acceptance-grid eps values.
struct SigmaPoint {
  double eps;
  double sigma;
};
constexpr SigmaPoint kSigmaGrid[] = {
    {0.1, 30.749566131977986},
    {0.5, 7.0318266755830336},
    {1.0, 3.7306316348167456},
    {2.0, 1.9938124456439255},
    {5.0, 0.89186826495206351},
};

}  // namespace

TEST_SUITE_BEGIN("dp_mech");

TEST_CASE("exact_gaussian_delta matches the frozen grid") {
  for (const DeltaPoint& p : kDeltaGrid) {
    CHECK(exact_gaussian_delta(p.sigma, 1.0, 1.0) ==
          doctest::Approx(p.delta).epsilon(1e-12).scale(0.0));
  }
}

TEST_CASE("exact_gaussian_delta is monotone and well-bounded") {
  double prev = 1.0;
  for (double sigma = 0.05; sigma < 20.0; sigma *= 1.3) {
    double d = exact_gaussian_delta(sigma, 1.0, 1.0);
    CHECK(d >= 0.0);
    CHECK(d <= 1.0);
    CHECK(d <= prev);
    prev = d;
  }
  // Scale invariance: delta depends on sigma/sensitivity only.
  for (double k : {0.25, 3.0, 17.5}) {
    CHECK(exact_gaussian_delta(2.0 * k, k, 0.7) ==
          doctest::Approx(exact_gaussian_delta(2.0, 1.0, 0.7))
              .epsilon(1e-13)
              .scale(0.0));
  }
}

TEST_CASE("analytic calibration matches the frozen sigma grid") {
  for (const SigmaPoint& p : kSigmaGrid) {
    GaussianCalibration cal = calibrate_analytic_gaussian(1.0, p.eps, 1e-5);
    CHECK(cal.sigma == doctest::Approx(p.sigma).epsilon(1e-10).scale(0.0));
    CHECK(cal.sensitivity == 1.0);
    CHECK(cal.eps == p.eps);
    CHECK(cal.delta == 1e-5);
  }
}

TEST_CASE("calibration is linear in sensitivity and tight") {
  GaussianCalibration unit = calibrate_analytic_gaussian(1.0, 1.0, 1e-5);
  for (double s : {0.01, 0.056568542494923803, 2.0, 40.0}) {
    GaussianCalibration cal = calibrate_analytic_gaussian(s, 1.0, 1e-5);
    CHECK(cal.sigma ==
          doctest::Approx(s * unit.sigma).epsilon(1e-9).scale(0.0));
  }
  // Round-trip: the returned sigma satisfies the target delta, while
  // 0.99 * sigma must violate it (otherwise the bisection was not tight).
  for (const SigmaPoint& p : kSigmaGrid) {
    GaussianCalibration cal = calibrate_analytic_gaussian(1.0, p.eps, 1e-5);
    CHECK(exact_gaussian_delta(cal.sigma, 1.0, p.eps) <= 1e-5);
    CHECK(exact_gaussian_delta(0.99 * cal.sigma, 1.0, p.eps) > 1e-5);
  }
  // Zero sensitivity never needs noise.
  CHECK(calibrate_analytic_gaussian(0.0, 1.0, 1e-5).sigma == 0.0);
}

TEST_CASE("classical sigma formula and analytic improvement") {
  double sigma = classical_gaussian_sigma(1.0, 1.0, 1e-5);
  CHECK(sigma ==
        doctest::Approx(4.844805262605389).epsilon(1e-12).scale(0.0));
  // The classical noise level already meets the exact curve with slack.
  double d = exact_gaussian_delta(sigma, 1.0, 1.0);
  CHECK(d ==
        doctest::Approx(4.1136919538185574e-08).epsilon(1e-9).scale(0.0));
  CHECK(d <= 1e-5);
  // For eps <= 1 the analytic calibration never exceeds the classical bound.
  for (double eps : {0.05, 0.1, 0.3, 0.5, 0.8, 1.0}) {
    for (double delta : {1e-7, 1e-5, 1e-3}) {
      double classical = classical_gaussian_sigma(1.0, eps, delta);
      double analytic = calibrate_analytic_gaussian(1.0, eps, delta).sigma;
      CHECK(analytic <= classical * (1.0 + 1e-12));
    }
  }
}

TEST_CASE("add_gaussian_noise determinism and sigma = 0 passthrough") {
  ActivationTensor t = make_tensor({0, 3}, 2, 4);
  RngStream fill(RandomSeed{5, "test/noise_fill"});
  for (double& v : t.values) v = fill.next_gaussian();

  ActivationTensor same = add_gaussian_noise(t, 0.0, RandomSeed{9, "x"});
  CHECK(same.values == t.values);

  RandomSeed seed{123, "test/noise"};
  ActivationTensor a = add_gaussian_noise(t, 2.5, seed);
  ActivationTensor b = add_gaussian_noise(t, 2.5, seed);
  CHECK(a.values == b.values);
  ActivationTensor c = add_gaussian_noise(t, 2.5, seed.derive("other"));
  CHECK(a.values != c.values);
  CHECK_THROWS_AS(add_gaussian_noise(t, -1.0, seed), std::invalid_argument);
}

TEST_CASE("add_gaussian_noise has the right first two moments") {
  // 40k iid coordinates: mean within 4 SE, variance within 5%.
  ActivationTensor t = make_tensor({0}, 200, 200);
  const double sigma = 0.7;
  ActivationTensor noisy = add_gaussian_noise(t, sigma, RandomSeed{77, "mc"});
  double sum = 0.0, sum_sq = 0.0;
  for (double v : noisy.values) {
    sum += v;
    sum_sq += v * v;
  }
  double n = static_cast<double>(noisy.values.size());
  double mean = sum / n;
  double var = sum_sq / n - mean * mean;
  CHECK(std::fabs(mean) <= 4.0 * sigma / std::sqrt(n));
  CHECK(var == doctest::Approx(sigma * sigma).epsilon(0.05));
}

TEST_CASE("gumbel_select scale = 0 is argmin with lowest-index ties") {
  RandomSeed seed{3, "test/gumbel0"};
  CHECK(gumbel_select({3.0, 1.0, 2.0}, 0.0, seed) == 1);
  CHECK(gumbel_select({5.0, 0.25, 0.25, 9.0}, 0.0, seed) == 1);
  CHECK(gumbel_select({-1.0}, 0.0, seed) == 0);
  CHECK_THROWS_AS(gumbel_select({}, 0.0, seed), std::invalid_argument);
  CHECK_THROWS_AS(gumbel_select({1.0}, -0.5, seed), std::invalid_argument);
}

TEST_CASE("gumbel_select winning law is softmax(-scores/scale)") {
  // Frozen two-point check: scores {0, 1}, scale 1 ->
  // P(index 0) = e / (1 + e).
  const int kTrials = 100000;
  RandomSeed base{2024, "test/gumbel_law"};
  int zero_wins = 0;
  for (int i = 0; i < kTrials; ++i) {
    if (gumbel_select({0.0, 1.0}, 1.0, base.derive(std::to_string(i))) == 0) {
      ++zero_wins;
    }
  }
  double p0 = static_cast<double>(zero_wins) / kTrials;
  CHECK(std::fabs(p0 - 0.7310585786300049) <= 0.01);

  // Three-point law, scores {0, 1, 2}: softmax(-s) frozen values.
  const double kWant[3] = {0.66524095577482178, 0.24472847105479764,
                           0.090030573170380462};
  int counts[3] = {0, 0, 0};
  RandomSeed tri{99, "test/gumbel_tri"};
  for (int i = 0; i < kTrials; ++i) {
    counts[gumbel_select({0.0, 1.0, 2.0}, 1.0,
                         tri.derive(std::to_string(i)))]++;
  }
  for (int j = 0; j < 3; ++j) {
    CHECK(static_cast<double>(counts[j]) / kTrials ==
          doctest::Approx(kWant[j]).epsilon(0.05).scale(0.0));
  }
}

TEST_CASE("gumbel_select equal scores are uniform") {
  const int kTrials = 50000;
  std::vector<double> scores(4, 1.5);
  int counts[4] = {0, 0, 0, 0};
  RandomSeed base{7, "test/gumbel_uniform"};
  for (int i = 0; i < kTrials; ++i) {
    counts[gumbel_select(scores, 2.0, base.derive(std::to_string(i)))]++;
  }
  for (int j = 0; j < 4; ++j) {
    CHECK(std::fabs(static_cast<double>(counts[j]) / kTrials - 0.25) <= 0.01);
  }
}

TEST_CASE("accountant composes exactly and never mutates its input") {
  PrivacyReceipt r;
  PrivacyReceipt one = accountant_charge(r, "gaussian_mean", 1.0, 1e-5);
  CHECK(r.entries.empty());
  CHECK(r.total_eps == 0.0);
  CHECK(one.entries.size() == 1);
  CHECK(one.entries[0].mechanism == "gaussian_mean");
  CHECK(one.total_eps == 1.0);
  CHECK(one.total_delta == 1e-5);

  PrivacyReceipt two = accountant_charge(one, "gumbel_selection", 0.5, 0.0);
  CHECK(two.entries.size() == 2);
  CHECK(two.total_eps == 1.5);  // exact in binary floating point
  CHECK(two.total_delta == 1e-5);
  CHECK(one.entries.size() == 1);

  PrivacyReceipt three = accountant_charge(two, "gaussian_mean", 0.25, 1e-5);
  CHECK(three.total_eps == 1.75);
  CHECK(three.total_delta == 2e-5);
}

TEST_SUITE_END();
