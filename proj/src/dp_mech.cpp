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

#include "dptv/dp_mech.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace dptv {

namespace {

double standard_normal_cdf(double x) {
  return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

}  // namespace

double exact_gaussian_delta(double sigma, double sensitivity, double eps) {
  if (sigma <= 0.0) throw std::invalid_argument("sigma must be > 0");
  if (sensitivity <= 0.0) {
    throw std::invalid_argument("sensitivity must be > 0");
  }
  if (eps < 0.0) throw std::invalid_argument("eps must be >= 0");
  double a = sensitivity / (2.0 * sigma);
  double b = eps * sigma / sensitivity;
  double d = standard_normal_cdf(a - b) -
             std::exp(eps) * standard_normal_cdf(-a - b);
  if (std::isnan(d)) return 0.0;  // extreme-parameter underflow regime
  if (d < 0.0) return 0.0;
  if (d > 1.0) return 1.0;
  return d;
}

double classical_gaussian_sigma(double sensitivity, double eps, double delta) {
  return sensitivity * std::sqrt(2.0 * std::log(1.25 / delta)) / eps;
}

GaussianCalibration calibrate_analytic_gaussian(double sensitivity, double eps,
                                                double delta) {
  if (sensitivity < 0.0) {
    throw std::invalid_argument("sensitivity must be >= 0");
  }
  if (eps <= 0.0) throw std::invalid_argument("eps must be > 0");
  if (!(delta > 0.0 && delta < 1.0)) {
    throw std::invalid_argument("delta must lie in (0, 1)");
  }
  GaussianCalibration cal{sensitivity, eps, delta, 0.0};
  if (sensitivity == 0.0) return cal;  // nothing to hide

  // Bracket [lo, hi] with delta(lo) > delta >= delta(hi), growing or
  // shrinking geometrically from an initial guess.
  double hi = sensitivity / eps;
  while (exact_gaussian_delta(hi, sensitivity, eps) > delta) hi *= 2.0;
  double lo = hi / 2.0;
  while (lo > std::numeric_limits<double>::min() &&
         exact_gaussian_delta(lo, sensitivity, eps) <= delta) {
    hi = lo;
    lo /= 2.0;
  }
  double tol = 1e-12 * sensitivity;
  for (int i = 0; i < 400 && hi - lo > tol; ++i) {
    double mid = 0.5 * (lo + hi);
    if (exact_gaussian_delta(mid, sensitivity, eps) <= delta) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  cal.sigma = hi;  // the feasible end of the bracket
  return cal;
}

ActivationTensor add_gaussian_noise(const ActivationTensor& t, double sigma,
                                    const RandomSeed& seed) {
  if (sigma < 0.0) throw std::invalid_argument("sigma must be >= 0");
  if (sigma == 0.0) return t;
  ActivationTensor out = t;
  RngStream rng(seed);
  for (double& v : out.values) v += sigma * rng.next_gaussian();
  return out;
}

std::size_t gumbel_select(const std::vector<double>& scores, double scale,
                          const RandomSeed& seed) {
  if (scores.empty()) throw std::invalid_argument("gumbel_select: no scores");
  if (scale < 0.0) throw std::invalid_argument("scale must be >= 0");
  std::size_t best = 0;
  if (scale == 0.0) {
    for (std::size_t i = 1; i < scores.size(); ++i) {
      if (scores[i] < scores[best]) best = i;
    }
    return best;
  }
  RngStream rng(seed);
  double best_noisy = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < scores.size(); ++i) {
    double noisy = scores[i] - rng.next_gumbel(scale);
    if (noisy < best_noisy) {
      best_noisy = noisy;
      best = i;
    }
  }
  return best;
}

PrivacyReceipt accountant_charge(const PrivacyReceipt& receipt,
                                 const std::string& name, double eps,
                                 double delta) {
  if (eps < 0.0 || delta < 0.0) {
    throw std::invalid_argument("privacy charges must be non-negative");
  }
  PrivacyReceipt out = receipt;
  out.entries.push_back(ReceiptEntry{name, eps, delta});
  out.total_eps += eps;
  out.total_delta += delta;
  return out;
}

}  // namespace dptv
