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

#ifndef DPTV_CORE_HPP_
#define DPTV_CORE_HPP_

#include <cstdint>
#include <string>
#include <vector>

namespace dptv {

// Activations over (selected layers x heads x head-dim), stored row-major:
// values[(s * num_heads + h) * head_dim + k] for the s-th selected layer.
struct ActivationTensor {
  std::vector<int> layer_ids;  // strictly increasing subset of [0, L)
  int num_heads = 0;
  int head_dim = 0;
  std::vector<double> values;  // |layer_ids| * num_heads * head_dim

  std::size_t layer_offset(std::size_t s) const {
    return s * static_cast<std::size_t>(num_heads) * head_dim;
  }
  std::size_t slice_size() const {
    return static_cast<std::size_t>(num_heads) * head_dim;
  }
  double& at(std::size_t s, int h, int k) {
    return values[layer_offset(s) + static_cast<std::size_t>(h) * head_dim + k];
  }
  double at(std::size_t s, int h, int k) const {
    return values[layer_offset(s) + static_cast<std::size_t>(h) * head_dim + k];
  }
  // Index of `layer` within layer_ids; throws if absent.
  std::size_t slot_of(int layer) const;
  bool same_shape(const ActivationTensor& o) const {
    return layer_ids == o.layer_ids && num_heads == o.num_heads &&
           head_dim == o.head_dim;
  }
  // Throws if any invariant is broken (finiteness, sizes, layer ordering).
  void validate() const;
};

ActivationTensor make_tensor(std::vector<int> layer_ids, int num_heads,
                             int head_dim, double fill = 0.0);

// Binary injection sites over (selected layers x heads).
struct HeadMask {
  std::vector<int> layer_ids;
  int num_heads = 0;
  std::vector<std::uint8_t> bits;  // |layer_ids| * num_heads, each 0 or 1

  std::uint8_t& at(std::size_t s, int h) {
    return bits[s * static_cast<std::size_t>(num_heads) + h];
  }
  std::uint8_t at(std::size_t s, int h) const {
    return bits[s * static_cast<std::size_t>(num_heads) + h];
  }
  bool same_shape(const ActivationTensor& t) const {
    return layer_ids == t.layer_ids && num_heads == t.num_heads;
  }
  void validate() const;
  bool operator==(const HeadMask& o) const = default;
};

HeadMask make_mask(std::vector<int> layer_ids, int num_heads,
                   std::uint8_t fill = 0);

enum class Role { kTarget, kDemonstration };

// One toy-task record: a feature vector plus a binary answer.
struct Example {
  std::uint64_t id = 0;
  std::vector<double> features;
  int label = 0;  // class index in {0, 1}
  Role role = Role::kTarget;
};

// One target plus K demonstrations; the unit of disjoint partitioning.
struct Chunk {
  Example target;
  std::vector<Example> demos;

  // Throws if a duplicate id appears within the chunk.
  void validate() const;
};

struct PrivacyParams {
  double eps_tv = 1.0;    // budget for the Gaussian mean release
  double eps_sel = 0.0;   // budget for private head selection (0 = public)
  double delta = 1e-5;
  double clip_c = 1.0;    // per-layer activation clip C
  double clip_sel = 1.0;  // per-example score clip C_sel

  void validate(bool public_variant) const;
};

// Append-only (epsilon, delta) ledger; totals follow basic composition.
struct ReceiptEntry {
  std::string mechanism;
  double eps = 0.0;
  double delta = 0.0;
  bool operator==(const ReceiptEntry& o) const = default;
};

struct PrivacyReceipt {
  std::vector<ReceiptEntry> entries;
  double total_eps = 0.0;
  double total_delta = 0.0;
  bool operator==(const PrivacyReceipt& o) const = default;
};

// --- Tensor arithmetic -----------------------------------------------------

// L2 norm of the H x d slice at the given (global) layer id.
double layer_l2_norm(const ActivationTensor& t, int layer);

// Per-layer clip: slices with norm <= c pass through bit-identical; larger
// slices are rescaled onto the ball of radius c. Idempotent bit-exactly.
ActivationTensor clip_per_layer(const ActivationTensor& t, double c);

// Elementwise mean over a nonempty, shape-identical list. The summation
// order is canonicalized by tensor content, so any permutation of the input
// produces a bit-identical result.
ActivationTensor mean_tensors(const std::vector<ActivationTensor>& ts);

// || vec(a) - vec(b) ||_2 over identically shaped tensors.
double flat_l2_distance(const ActivationTensor& a, const ActivationTensor& b);

}  // namespace dptv

#endif  // DPTV_CORE_HPP_
