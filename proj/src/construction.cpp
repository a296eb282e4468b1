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

#include "dptv/construction.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <unordered_set>

namespace dptv {

PartitionPlan partition_disjoint(const std::vector<Example>& dataset,
                                 std::size_t m, std::size_t k,
                                 const RandomSeed& seed) {
  if (m == 0) throw std::invalid_argument("m must be >= 1");
  std::size_t needed = m * (k + 1);
  if (dataset.size() < needed) {
    throw std::invalid_argument(
        "dataset too small: need at least " + std::to_string(needed) +
        " examples for m=" + std::to_string(m) + ", K=" + std::to_string(k));
  }
  {
    std::unordered_set<std::uint64_t> ids;
    for (const Example& e : dataset) {
      if (!ids.insert(e.id).second) {
        throw std::invalid_argument("duplicate example id in dataset");
      }
    }
  }

  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  RngStream rng(seed);
  rng.shuffle(order);

  PartitionPlan plan;
  plan.m = m;
  plan.k = k;
  plan.chunks.reserve(m);
  std::size_t pos = 0;
  for (std::size_t i = 0; i < m; ++i) {
    Chunk c;
    c.target = dataset[order[pos++]];
    c.target.role = Role::kTarget;
    c.demos.reserve(k);
    for (std::size_t j = 0; j < k; ++j) {
      Example d = dataset[order[pos++]];
      d.role = Role::kDemonstration;
      c.demos.push_back(std::move(d));
    }
    plan.chunks.push_back(std::move(c));
  }
  for (; pos < dataset.size(); ++pos) {
    plan.unused.push_back(dataset[order[pos]].id);
  }
  return plan;
}

double sensitivity(std::size_t num_layers, double c, std::size_t m) {
  if (m == 0) throw std::invalid_argument("m must be >= 1");
  if (num_layers == 0 || c <= 0.0) {
    throw std::invalid_argument("sensitivity needs |S| >= 1 and c > 0");
  }
  return std::sqrt(static_cast<double>(num_layers)) * c /
         static_cast<double>(m);
}

std::vector<ActivationTensor> extract_clipped_serial(
    const PartitionPlan& plan, const ModelInterface& model,
    const std::vector<int>& layers, double clip_c) {
  std::vector<ActivationTensor> out(plan.chunks.size());
  for (std::size_t i = 0; i < plan.chunks.size(); ++i) {
    out[i] = clip_per_layer(model.extract(plan.chunks[i], layers), clip_c);
  }
  return out;
}

std::vector<ActivationTensor> extract_clipped(const PartitionPlan& plan,
                                              const ModelInterface& model,
                                              const std::vector<int>& layers,
                                              double clip_c) {
  std::vector<ActivationTensor> out(plan.chunks.size());
  std::int64_t n = static_cast<std::int64_t>(plan.chunks.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    out[i] = clip_per_layer(model.extract(plan.chunks[i], layers), clip_c);
  }
  return out;
}

PrivateMeanResult compute_private_mean(const PartitionPlan& plan,
                                       const ModelInterface& model,
                                       const std::vector<int>& layers,
                                       const PrivacyParams& params,
                                       const RandomSeed& seed,
                                       const PrivacyReceipt& receipt,
                                       bool noise_disabled) {
  if (layers.empty()) throw std::invalid_argument("layer set must be nonempty");
  if (plan.chunks.empty()) throw std::invalid_argument("empty partition plan");

  std::vector<ActivationTensor> clipped =
      extract_clipped(plan, model, layers, params.clip_c);
  ActivationTensor mean = mean_tensors(clipped);

  PrivateMeanResult res;
  res.sensitivity = sensitivity(layers.size(), params.clip_c, plan.m);
  if (noise_disabled) {
    res.tv = std::move(mean);
    res.sigma = 0.0;
    res.receipt =
        accountant_charge(receipt, "gaussian_mean_disabled",
                          std::numeric_limits<double>::infinity(), 0.0);
    return res;
  }
  GaussianCalibration cal = calibrate_analytic_gaussian(
      res.sensitivity, params.eps_tv, params.delta);
  res.sigma = cal.sigma;
  res.tv = add_gaussian_noise(mean, cal.sigma, seed.derive("gaussian_mean"));
  res.receipt =
      accountant_charge(receipt, "gaussian_mean", params.eps_tv, params.delta);
  return res;
}

}  // namespace dptv
