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

#ifndef DPTV_CONSTRUCTION_HPP_
#define DPTV_CONSTRUCTION_HPP_

#include <cstdint>
#include <vector>

#include "dptv/core.hpp"
#include "dptv/dp_mech.hpp"
#include "dptv/rng.hpp"
#include "dptv/toy_model.hpp"

namespace dptv {

struct PartitionPlan {
  std::vector<Chunk> chunks;
  std::size_t m = 0;
  std::size_t k = 0;
  std::vector<std::uint64_t> unused;  // ids never placed in any chunk
};

// Seeded uniform assignment of m*(k+1) distinct examples into m chunks of
// one target plus k demonstrations; the remainder is recorded, not placed.
PartitionPlan partition_disjoint(const std::vector<Example>& dataset,
                                 std::size_t m, std::size_t k,
                                 const RandomSeed& seed);

// L2 sensitivity of the clipped chunk mean: sqrt(|S|) * c / m.
double sensitivity(std::size_t num_layers, double c, std::size_t m);

// Per-chunk extraction followed by per-layer clipping. The parallel version
// is bit-identical to the serial one: each chunk is written into its own
// preallocated slot.
std::vector<ActivationTensor> extract_clipped(const PartitionPlan& plan,
                                              const ModelInterface& model,
                                              const std::vector<int>& layers,
                                              double clip_c);
std::vector<ActivationTensor> extract_clipped_serial(
    const PartitionPlan& plan, const ModelInterface& model,
    const std::vector<int>& layers, double clip_c);

struct PrivateMeanResult {
  ActivationTensor tv;
  PrivacyReceipt receipt;
  double sigma = 0.0;
  double sensitivity = 0.0;
};

// Full construction: extract -> clip -> mean -> calibrate -> noise, charging
// ("gaussian_mean", eps_tv, delta) exactly once. With noise_disabled the
// clipped mean is returned bit-exactly and an infinite-epsilon sentinel is
// charged instead.
PrivateMeanResult compute_private_mean(const PartitionPlan& plan,
                                       const ModelInterface& model,
                                       const std::vector<int>& layers,
                                       const PrivacyParams& params,
                                       const RandomSeed& seed,
                                       const PrivacyReceipt& receipt,
                                       bool noise_disabled = false);

}  // namespace dptv

#endif  // DPTV_CONSTRUCTION_HPP_
