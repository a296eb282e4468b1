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

#include "dptv/selection.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace dptv {

double MaskPolicy::inclusion_probability(std::size_t i) const {
  return 1.0 / (1.0 + std::exp(-theta[i]));
}

MaskPolicy make_policy(std::vector<int> layer_ids, int num_heads) {
  MaskPolicy p;
  p.layer_ids = std::move(layer_ids);
  p.num_heads = num_heads;
  p.theta.assign(p.layer_ids.size() * static_cast<std::size_t>(num_heads),
                 0.0);
  return p;
}

HeadMask sample_mask(const MaskPolicy& policy, RngStream& rng) {
  HeadMask m = make_mask(policy.layer_ids, policy.num_heads);
  for (std::size_t i = 0; i < policy.theta.size(); ++i) {
    m.bits[i] = rng.next_unit() < policy.inclusion_probability(i) ? 1 : 0;
  }
  return m;
}

MaskPolicy reinforce_train(const std::vector<Example>& data,
                           const ModelInterface& model,
                           const ActivationTensor& tv,
                           const MaskPolicy& policy, const RandomSeed& seed) {
  if (data.empty()) throw std::invalid_argument("reinforce: empty data");
  if (policy.theta.empty()) throw std::invalid_argument("reinforce: no heads");
  MaskPolicy out = policy;
  RngStream rng(seed);
  for (int it = 0; it < out.iterations; ++it) {
    HeadMask mask = sample_mask(out, rng);
    double loss_sum = 0.0;
    for (int b = 0; b < out.minibatch; ++b) {
      const Example& ex = data[rng.next_index(data.size())];
      loss_sum += example_loss(model, ex, &mask, &tv);
    }
    double reward = -loss_sum / out.minibatch;
    double advantage = reward - out.baseline;
    for (std::size_t i = 0; i < out.theta.size(); ++i) {
      double grad = static_cast<double>(mask.bits[i]) -
                    out.inclusion_probability(i);
      out.theta[i] += out.learning_rate * advantage * grad;
      // Keep inclusion probabilities strictly inside (0, 1).
      out.theta[i] = std::clamp(out.theta[i], -30.0, 30.0);
    }
    out.baseline = out.baseline_decay * out.baseline +
                   (1.0 - out.baseline_decay) * reward;
  }
  return out;
}

CandidateSet sample_candidate_masks(const MaskPolicy& policy,
                                    std::size_t num_samples, std::size_t k_bar,
                                    const RandomSeed& seed) {
  if (num_samples == 0) throw std::invalid_argument("num_samples must be >= 1");
  if (k_bar == 0) throw std::invalid_argument("k_bar must be >= 1");
  RngStream rng(seed);
  struct Tally {
    std::size_t count = 0;
    std::size_t first_seen = 0;
    HeadMask mask;
  };
  std::map<std::vector<std::uint8_t>, Tally> tallies;
  for (std::size_t i = 0; i < num_samples; ++i) {
    HeadMask m = sample_mask(policy, rng);
    auto [it, inserted] = tallies.try_emplace(m.bits);
    if (inserted) {
      it->second.first_seen = i;
      it->second.mask = std::move(m);
    }
    ++it->second.count;
  }
  std::vector<const Tally*> order;
  order.reserve(tallies.size());
  for (const auto& [bits, tally] : tallies) order.push_back(&tally);
  std::sort(order.begin(), order.end(), [](const Tally* a, const Tally* b) {
    if (a->count != b->count) return a->count > b->count;
    return a->first_seen < b->first_seen;
  });
  CandidateSet cs;
  for (const Tally* t : order) {
    if (cs.masks.size() == k_bar) break;
    cs.masks.push_back(t->mask);
    cs.frequencies.push_back(t->count);
  }
  return cs;
}

double score_mask(const HeadMask& mask, const ActivationTensor& tv,
                  const ModelInterface& model, const std::vector<Example>& val,
                  double c_sel) {
  if (val.empty()) throw std::invalid_argument("score_mask: empty validation");
  if (c_sel <= 0.0) throw std::invalid_argument("c_sel must be > 0");
  double score = 0.0;
  for (const Example& ex : val) {
    score += std::min(example_loss(model, ex, &mask, &tv), c_sel);
  }
  return score;
}

std::pair<HeadMask, PrivacyReceipt> select_mask_private(
    const CandidateSet& candidates, const std::vector<double>& scores,
    const PrivacyParams& params, const RandomSeed& seed,
    const PrivacyReceipt& receipt) {
  if (candidates.masks.size() != scores.size()) {
    throw std::invalid_argument("candidate/score count mismatch");
  }
  if (candidates.masks.empty()) {
    throw std::invalid_argument("empty candidate set");
  }
  if (params.eps_sel <= 0.0) {
    throw std::invalid_argument("private selection needs eps_sel > 0");
  }
  std::size_t idx =
      gumbel_select(scores, params.clip_sel / params.eps_sel, seed);
  PrivacyReceipt charged =
      accountant_charge(receipt, "gumbel_selection", params.eps_sel, 0.0);
  return {candidates.masks[idx], charged};
}

std::pair<HeadMask, PrivacyReceipt> select_mask_public(
    const std::vector<Example>& public_data, const ModelInterface& model,
    const ActivationTensor& tv, const MaskPolicy& policy_hyper,
    std::size_t num_samples, std::size_t k_bar, const RandomSeed& seed,
    const PrivacyReceipt& receipt) {
  if (public_data.empty()) {
    throw std::invalid_argument("public selection: empty public data");
  }
  MaskPolicy trained = reinforce_train(public_data, model, tv, policy_hyper,
                                       seed.derive("reinforce"));
  CandidateSet candidates = sample_candidate_masks(
      trained, num_samples, k_bar, seed.derive("mask_sampling"));
  std::size_t best = 0;
  double best_loss = 0.0;
  for (std::size_t i = 0; i < candidates.masks.size(); ++i) {
    double loss = 0.0;
    for (const Example& ex : public_data) {
      loss += example_loss(model, ex, &candidates.masks[i], &tv);
    }
    loss /= static_cast<double>(public_data.size());
    if (i == 0 || loss < best_loss) {
      best = i;
      best_loss = loss;
    }
  }
  // Zero privacy cost: nothing here reads private records.
  return {candidates.masks[best], receipt};
}

}  // namespace dptv
