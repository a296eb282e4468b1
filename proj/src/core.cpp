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

#include "dptv/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <unordered_set>

namespace dptv {

std::size_t ActivationTensor::slot_of(int layer) const {
  for (std::size_t s = 0; s < layer_ids.size(); ++s) {
    if (layer_ids[s] == layer) return s;
  }
  throw std::invalid_argument("unknown layer index " + std::to_string(layer));
}

void ActivationTensor::validate() const {
  if (num_heads <= 0 || head_dim <= 0) {
    throw std::invalid_argument("tensor dims must be positive");
  }
  for (std::size_t s = 1; s < layer_ids.size(); ++s) {
    if (layer_ids[s] <= layer_ids[s - 1]) {
      throw std::invalid_argument("layer_ids must be strictly increasing");
    }
  }
  if (values.size() != layer_ids.size() * slice_size()) {
    throw std::invalid_argument("tensor value count does not match shape");
  }
  for (double v : values) {
    if (!std::isfinite(v)) {
      throw std::invalid_argument("tensor contains non-finite value");
    }
  }
}

ActivationTensor make_tensor(std::vector<int> layer_ids, int num_heads,
                             int head_dim, double fill) {
  ActivationTensor t;
  t.layer_ids = std::move(layer_ids);
  t.num_heads = num_heads;
  t.head_dim = head_dim;
  t.values.assign(t.layer_ids.size() * t.slice_size(), fill);
  return t;
}

void HeadMask::validate() const {
  if (bits.size() != layer_ids.size() * static_cast<std::size_t>(num_heads)) {
    throw std::invalid_argument("mask bit count does not match shape");
  }
  for (std::uint8_t b : bits) {
    if (b > 1) throw std::invalid_argument("mask entries must be 0 or 1");
  }
}

HeadMask make_mask(std::vector<int> layer_ids, int num_heads,
                   std::uint8_t fill) {
  HeadMask m;
  m.layer_ids = std::move(layer_ids);
  m.num_heads = num_heads;
  m.bits.assign(m.layer_ids.size() * static_cast<std::size_t>(num_heads), fill);
  return m;
}

void Chunk::validate() const {
  std::unordered_set<std::uint64_t> seen;
  seen.insert(target.id);
  for (const Example& e : demos) {
    if (!seen.insert(e.id).second) {
      throw std::invalid_argument("duplicate example id within chunk");
    }
  }
}

void PrivacyParams::validate(bool public_variant) const {
  if (eps_tv <= 0.0) throw std::invalid_argument("eps_tv must be > 0");
  if (eps_sel < 0.0) throw std::invalid_argument("eps_sel must be >= 0");
  if (eps_sel == 0.0 && !public_variant) {
    throw std::invalid_argument("eps_sel = 0 requires the public variant");
  }
  if (!(delta > 0.0 && delta < 1.0)) {
    throw std::invalid_argument("delta must lie in (0, 1)");
  }
  if (clip_c <= 0.0) throw std::invalid_argument("clip_c must be > 0");
  if (clip_sel <= 0.0) throw std::invalid_argument("clip_sel must be > 0");
}

namespace {

double slice_norm(const double* p, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += p[i] * p[i];
  return std::sqrt(s);
}

}  // namespace

double layer_l2_norm(const ActivationTensor& t, int layer) {
  std::size_t s = t.slot_of(layer);
  return slice_norm(t.values.data() + t.layer_offset(s), t.slice_size());
}

ActivationTensor clip_per_layer(const ActivationTensor& t, double c) {
  if (c <= 0.0) throw std::invalid_argument("clip threshold must be > 0");
  ActivationTensor out = t;
  std::size_t n = t.slice_size();
  for (std::size_t s = 0; s < t.layer_ids.size(); ++s) {
    double* p = out.values.data() + out.layer_offset(s);
    double norm = slice_norm(p, n);
    if (norm <= c) continue;  // includes the all-zero slice
    double scale = c / norm;
    for (std::size_t i = 0; i < n; ++i) p[i] *= scale;
    // A single rescale can land a few ulps above c; nudge down until the
    // recomputed norm is <= c so clipping is bit-exactly idempotent.
    while (slice_norm(p, n) > c) {
      for (std::size_t i = 0; i < n; ++i) {
        p[i] = std::nextafter(p[i], 0.0);
      }
    }
  }
  return out;
}

ActivationTensor mean_tensors(const std::vector<ActivationTensor>& ts) {
  if (ts.empty()) throw std::invalid_argument("mean over empty tensor list");
  for (const ActivationTensor& t : ts) {
    if (!t.same_shape(ts.front())) {
      throw std::invalid_argument("mean over mismatched tensor shapes");
    }
  }
  // Canonical summation order: sort indices by tensor content so the result
  // is independent of the caller's list order.
  std::vector<std::size_t> order(ts.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::lexicographical_compare(
        ts[a].values.begin(), ts[a].values.end(), ts[b].values.begin(),
        ts[b].values.end());
  });
  ActivationTensor out = ts.front();
  std::fill(out.values.begin(), out.values.end(), 0.0);
  for (std::size_t idx : order) {
    const std::vector<double>& v = ts[idx].values;
    for (std::size_t i = 0; i < v.size(); ++i) out.values[i] += v[i];
  }
  double inv = 1.0 / static_cast<double>(ts.size());
  for (double& v : out.values) v *= inv;
  return out;
}

double flat_l2_distance(const ActivationTensor& a, const ActivationTensor& b) {
  if (!a.same_shape(b)) {
    throw std::invalid_argument("distance over mismatched tensor shapes");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    double d = a.values[i] - b.values[i];
    s += d * d;
  }
  return std::sqrt(s);
}

}  // namespace dptv
