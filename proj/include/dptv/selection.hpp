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

#ifndef DPTV_SELECTION_HPP_
#define DPTV_SELECTION_HPP_

#include <cstddef>
#include <utility>
#include <vector>

#include "dptv/core.hpp"
#include "dptv/dp_mech.hpp"
#include "dptv/rng.hpp"
#include "dptv/toy_model.hpp"

namespace dptv {

// Bernoulli inclusion logits over (selected layers x heads), plus the
// policy-gradient hyperparameters.
struct MaskPolicy {
  std::vector<int> layer_ids;
  int num_heads = 0;
  std::vector<double> theta;  // |S| * H logits; probability = logistic(theta)

  double learning_rate = 0.1;
  double baseline = 0.0;        // exponential moving average of rewards
  double baseline_decay = 0.9;
  int iterations = 500;
  int minibatch = 8;

  double inclusion_probability(std::size_t i) const;
};

MaskPolicy make_policy(std::vector<int> layer_ids, int num_heads);

// Samples one mask from the policy, consuming |theta| uniforms in order.
HeadMask sample_mask(const MaskPolicy& policy, RngStream& rng);

struct CandidateSet {
  std::vector<HeadMask> masks;            // distinct, by descending frequency
  std::vector<std::size_t> frequencies;   // same order as masks
};

// Score-function gradient ascent on the injected-inference reward
// (negative mean minibatch loss) with a moving-average baseline.
// Deterministic for a fixed seed.
MaskPolicy reinforce_train(const std::vector<Example>& data,
                           const ModelInterface& model,
                           const ActivationTensor& tv,
                           const MaskPolicy& policy, const RandomSeed& seed);

// Draws num_samples masks and keeps the (up to) k_bar most frequent ones,
// ties broken by first occurrence.
CandidateSet sample_candidate_masks(const MaskPolicy& policy,
                                    std::size_t num_samples, std::size_t k_bar,
                                    const RandomSeed& seed);

// Sum over the validation set of min(per-example loss, c_sel);
// lies in [0, |val| * c_sel].
double score_mask(const HeadMask& mask, const ActivationTensor& tv,
                  const ModelInterface& model, const std::vector<Example>& val,
                  double c_sel);

// Gumbel selection over the candidate scores at scale clip_sel / eps_sel;
// charges ("gumbel_selection", eps_sel, 0) exactly once.
std::pair<HeadMask, PrivacyReceipt> select_mask_private(
    const CandidateSet& candidates, const std::vector<double>& scores,
    const PrivacyParams& params, const RandomSeed& seed,
    const PrivacyReceipt& receipt);

// Public-data variant: trains and selects entirely on public_data and picks
// the candidate with the lowest plain mean loss; the receipt is returned
// unchanged.
std::pair<HeadMask, PrivacyReceipt> select_mask_public(
    const std::vector<Example>& public_data, const ModelInterface& model,
    const ActivationTensor& tv, const MaskPolicy& policy_hyper,
    std::size_t num_samples, std::size_t k_bar, const RandomSeed& seed,
    const PrivacyReceipt& receipt);

}  // namespace dptv

#endif  // DPTV_SELECTION_HPP_
