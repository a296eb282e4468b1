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

#ifndef DPTV_AUDIT_HPP_
#define DPTV_AUDIT_HPP_

#include <cstddef>
#include <string>
#include <vector>

#include "dptv/construction.hpp"
#include "dptv/core.hpp"
#include "dptv/rng.hpp"
#include "dptv/toy_model.hpp"

namespace dptv {

struct AuditReport {
  std::size_t trials = 0;
  double max_observed_distance = 0.0;
  double bound = 0.0;
  std::size_t violations = 0;  // observed > bound + 1e-9
  std::vector<std::string> notes;
};

// Floating-point slack for every bound comparison; never more than this.
inline constexpr double kAuditSlack = 1e-9;

struct MeanAuditConfig {
  std::size_t m = 10;
  std::size_t k = 4;
  double clip_c = 1.0;
  std::vector<int> layers;         // empty -> all model layers
  double adversarial_factor = 100.0;  // replacement feature scale, in units of C
  double bound_scale = 1.0;        // < 1 deliberately mis-sets the bound
};

// Replace-one stress test of the clipped-mean sensitivity: per trial, build a
// dataset, swap one uniformly chosen target or demonstration for an example
// whose raw activations have norm >= adversarial_factor * C, and compare the
// flat L2 distance of the two clipped means against sqrt(|S|) * C / m.
AuditReport audit_mean_sensitivity(const MeanAuditConfig& config,
                                   const ModelInterface& model,
                                   std::size_t trials, const RandomSeed& seed);
AuditReport audit_mean_sensitivity_serial(const MeanAuditConfig& config,
                                          const ModelInterface& model,
                                          std::size_t trials,
                                          const RandomSeed& seed);

// Replace-one stress test of the clipped score: swapping one validation
// example never moves score_mask by more than c_sel.
AuditReport audit_score_sensitivity(std::size_t trials, double c_sel,
                                    const RandomSeed& seed);

// Closed-form distribution checks for the DP primitives: Gumbel selection
// frequencies against softmax(-scores/scale) and Gaussian noise moments.
// Requires trials >= 10^4.
AuditReport audit_mechanism_distributions(std::size_t trials,
                                          const RandomSeed& seed);

}  // namespace dptv

#endif  // DPTV_AUDIT_HPP_
