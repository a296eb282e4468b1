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

#ifndef DPTV_DP_MECH_HPP_
#define DPTV_DP_MECH_HPP_

#include <cstddef>
#include <string>
#include <vector>

#include "dptv/core.hpp"
#include "dptv/rng.hpp"

namespace dptv {

struct GaussianCalibration {
  double sensitivity = 0.0;
  double eps = 0.0;
  double delta = 0.0;
  double sigma = 0.0;
};

// Exact Gaussian privacy curve
//   delta(eps; sigma) = Phi(D/(2s) - eps*s/D) - e^eps * Phi(-D/(2s) - eps*s/D)
// with D the L2 sensitivity and Phi the standard normal CDF. Strictly
// decreasing in sigma; clamped to [0, 1].
double exact_gaussian_delta(double sigma, double sensitivity, double eps);

// Smallest sigma (within 1e-12 * sensitivity) with
// exact_gaussian_delta(sigma, sensitivity, eps) <= delta. Bracket grows
// exponentially, then monotone bisection. sensitivity = 0 -> sigma = 0.
GaussianCalibration calibrate_analytic_gaussian(double sensitivity, double eps,
                                                double delta);

// Classical closed-form sigma = D * sqrt(2 ln(1.25/delta)) / eps; the
// analytic calibration never exceeds it for eps <= 1.
double classical_gaussian_sigma(double sensitivity, double eps, double delta);

// Adds iid N(0, sigma^2) per coordinate. sigma = 0 is a bit-exact
// passthrough; output is deterministic for a fixed seed.
ActivationTensor add_gaussian_noise(const ActivationTensor& t, double sigma,
                                    const RandomSeed& seed);

// Report-noisy-min over scores: perturbs each score with independent
// Gumbel(0, scale) noise (subtracted, so the winning-index law is exactly
// softmax(-scores/scale)) and returns the argmin. scale = 0 degenerates to
// the plain argmin with lowest-index tie-breaking.
std::size_t gumbel_select(const std::vector<double>& scores, double scale,
                          const RandomSeed& seed);

// Appends one (mechanism, eps, delta) entry; totals by basic composition.
PrivacyReceipt accountant_charge(const PrivacyReceipt& receipt,
                                 const std::string& name, double eps,
                                 double delta);

}  // namespace dptv

#endif  // DPTV_DP_MECH_HPP_
