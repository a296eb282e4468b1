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

#include "dptv/toy_model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace dptv {

namespace {

// Per-head coordinate layout.
constexpr int kTaskCoord0 = 0;
constexpr int kTaskCoord1 = 1;
constexpr int kAnchorCoord = 2;
constexpr int kPatternCoordU = 4;
constexpr int kPatternCoordV = 5;
constexpr int kRestingCoord = 6;

// Stream salts for the id-derived pseudo-noise (independent of run seeds).
constexpr std::uint64_t kSaltMagnitude = 0x746d2d6d61676e75ull;
constexpr std::uint64_t kSaltTaskNoise = 0x746d2d7461736b6eull;
constexpr std::uint64_t kSaltNonTaskNoise = 0x746d2d6e6f6e746bull;
constexpr std::uint64_t kSaltInferNoise = 0x746d2d696e666572ull;

constexpr double kInvSqrt2 = 0.70710678118654752440;

void require_features(const Example& e) {
  if (e.features.size() < 2) {
    throw std::invalid_argument("example features need at least 2 dims");
  }
}

std::string fmt_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return std::string(buf);
}

}  // namespace

void ToyModelParams::finalize() {
  if (num_layers < 1 || num_heads < 2 || head_dim < 7) {
    throw std::invalid_argument("toy model needs L >= 1, H >= 2, d >= 7");
  }
  if (task_heads.empty()) {
    for (int l = 1; l < num_layers; ++l) {
      task_heads.emplace_back(l, l % num_heads);
    }
  }
  std::vector<int> per_layer(num_layers, 0);
  for (auto [l, h] : task_heads) {
    if (l < 0 || l >= num_layers || h < 0 || h >= num_heads) {
      throw std::invalid_argument("task head out of range");
    }
    ++per_layer[l];
  }
  for (int l = 0; l < num_layers; ++l) {
    if (per_layer[l] >= num_heads) {
      throw std::invalid_argument("each layer needs a non-task head");
    }
  }
  std::vector<std::pair<int, int>> sorted = task_heads;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw std::invalid_argument("duplicate task head");
  }
}

ToyModelParams bandit_model_params() {
  ToyModelParams p;
  p.num_layers = 1;
  p.num_heads = 2;
  p.head_dim = 8;
  p.task_heads = {{0, 0}};
  // One task head must carry the whole readout, and replacing the lone
  // non-task head must hurt decisively.
  p.readout_gain = 6.0;
  p.nontask_component = 0.3;
  p.consistency_gain = 4.0;
  return p;
}

SteerableToyModel::SteerableToyModel(ToyModelParams params)
    : params_(std::move(params)) {
  params_.finalize();
  task_head_grid_.assign(
      static_cast<std::size_t>(params_.num_layers) * params_.num_heads, 0);
  for (auto [l, h] : params_.task_heads) {
    task_head_grid_[static_cast<std::size_t>(l) * params_.num_heads + h] = 1;
  }
  std::ostringstream os;
  os << "toy-v1|L=" << params_.num_layers << "|H=" << params_.num_heads
     << "|d=" << params_.head_dim << "|th=";
  for (std::size_t i = 0; i < params_.task_heads.size(); ++i) {
    if (i) os << ",";
    os << params_.task_heads[i].first << ":" << params_.task_heads[i].second;
  }
  os << "|tau=" << fmt_real(params_.task_component)
     << "|nu=" << fmt_real(params_.nontask_component)
     << "|eta=" << fmt_real(params_.noise_level)
     << "|mag=" << fmt_real(params_.base_magnitude)
     << "|jit=" << fmt_real(params_.magnitude_jitter)
     << "|ref=" << fmt_real(params_.reference_feature_norm)
     << "|rest=" << fmt_real(params_.resting_strength)
     << "|bias=" << fmt_real(params_.readout_bias)
     << "|gain=" << fmt_real(params_.readout_gain)
     << "|cons=" << fmt_real(params_.consistency_gain)
     << "|orc=" << fmt_real(params_.oracle_signal_strength);
  fingerprint_ = os.str();
}

bool SteerableToyModel::is_task_head(int layer, int head) const {
  return task_head_grid_[static_cast<std::size_t>(layer) * params_.num_heads +
                         head] != 0;
}

int SteerableToyModel::anchor_head(int layer) const {
  for (int h = 0; h < params_.num_heads; ++h) {
    if (!is_task_head(layer, h)) return h;
  }
  throw std::logic_error("layer without non-task head");  // finalize() forbids
}

void SteerableToyModel::check_layers(const std::vector<int>& layers) const {
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (layers[i] < 0 || layers[i] >= params_.num_layers) {
      throw std::invalid_argument("layer out of range");
    }
    if (i > 0 && layers[i] <= layers[i - 1]) {
      throw std::invalid_argument("layers must be strictly increasing");
    }
  }
}

ActivationTensor SteerableToyModel::extract(
    const Chunk& chunk, const std::vector<int>& layers) const {
  check_layers(layers);
  chunk.validate();
  require_features(chunk.target);
  for (const Example& d : chunk.demos) require_features(d);

  double u = chunk.target.features[0];
  double v = chunk.target.features[1];
  double fnorm = std::hypot(u, v);

  // Demonstrated-mapping evidence in [-1, 1]: +1 when every demonstration
  // contradicts the zero-shot rule (flip), -1 when every one confirms it.
  double g = 0.0;
  if (!chunk.demos.empty()) {
    for (const Example& d : chunk.demos) {
      int zs = d.features[0] > 0.0 ? 1 : 0;
      g += (zs == d.label) ? -1.0 : 1.0;
    }
    g /= static_cast<double>(chunk.demos.size());
  }

  double zeta =
      1.0 + params_.magnitude_jitter *
                hash_to_signed_unit(hash_combine(chunk.target.id, kSaltMagnitude));
  double magnitude =
      params_.base_magnitude * zeta * fnorm / params_.reference_feature_norm;

  double noise_coord = params_.noise_level / std::sqrt(params_.head_dim);
  double pattern_scale =
      fnorm > 0.0 ? params_.nontask_component *
                        std::min(fnorm, params_.reference_feature_norm) /
                        params_.reference_feature_norm
                  : 0.0;

  ActivationTensor t = make_tensor(layers, params_.num_heads, params_.head_dim);
  for (std::size_t s = 0; s < layers.size(); ++s) {
    int l = layers[s];
    t.at(s, anchor_head(l), kAnchorCoord) = 1.0;
    for (int h = 0; h < params_.num_heads; ++h) {
      std::uint64_t key;
      if (is_task_head(l, h)) {
        t.at(s, h, kTaskCoord0) += params_.task_component * g * -kInvSqrt2;
        t.at(s, h, kTaskCoord1) += params_.task_component * g * kInvSqrt2;
        // Task-head noise may depend on the whole chunk.
        key = hash_combine(chunk.target.id, kSaltTaskNoise);
        for (const Example& d : chunk.demos) key = hash_combine(key, d.id);
      } else {
        if (fnorm > 0.0) {
          t.at(s, h, kPatternCoordU) += pattern_scale * u / fnorm;
          t.at(s, h, kPatternCoordV) += pattern_scale * v / fnorm;
        }
        // Non-task content depends on the target only, never the demos.
        key = hash_combine(chunk.target.id, kSaltNonTaskNoise);
      }
      key = hash_combine(key, static_cast<std::uint64_t>(l) * 1000 + h);
      for (int k = 0; k < params_.head_dim; ++k) {
        t.at(s, h, k) += noise_coord * hash_to_signed_unit(hash_combine(key, k));
      }
    }
    double* p = t.values.data() + t.layer_offset(s);
    for (std::size_t i = 0; i < t.slice_size(); ++i) p[i] *= magnitude;
  }
  return t;
}

void SteerableToyModel::own_inference_activations(const Example& query,
                                                  ActivationTensor* out) const {
  double u = query.features[0];
  double v = query.features[1];
  double fnorm = std::hypot(u, v);
  double zeta =
      1.0 + params_.magnitude_jitter *
                hash_to_signed_unit(hash_combine(query.id, kSaltMagnitude));
  double magnitude =
      params_.base_magnitude * zeta * fnorm / params_.reference_feature_norm;
  double noise_coord = params_.noise_level / std::sqrt(params_.head_dim);
  double pattern_scale =
      fnorm > 0.0 ? params_.nontask_component *
                        std::min(fnorm, params_.reference_feature_norm) /
                        params_.reference_feature_norm
                  : 0.0;

  for (std::size_t s = 0; s < out->layer_ids.size(); ++s) {
    int l = out->layer_ids[s];
    out->at(s, anchor_head(l), kAnchorCoord) = 1.0;
    for (int h = 0; h < params_.num_heads; ++h) {
      if (is_task_head(l, h)) {
        out->at(s, h, kRestingCoord) += params_.resting_strength;
      } else if (fnorm > 0.0) {
        out->at(s, h, kPatternCoordU) += pattern_scale * u / fnorm;
        out->at(s, h, kPatternCoordV) += pattern_scale * v / fnorm;
      }
      std::uint64_t key = hash_combine(query.id, kSaltInferNoise);
      key = hash_combine(key, static_cast<std::uint64_t>(l) * 1000 + h);
      for (int k = 0; k < params_.head_dim; ++k) {
        out->at(s, h, k) +=
            noise_coord * hash_to_signed_unit(hash_combine(key, k));
      }
    }
    double* p = out->values.data() + out->layer_offset(s);
    for (std::size_t i = 0; i < out->slice_size(); ++i) p[i] *= magnitude;
  }
}

std::vector<double> SteerableToyModel::class_scores(
    const Example& query, const HeadMask* mask,
    const ActivationTensor* tv) const {
  require_features(query);
  if ((mask == nullptr) != (tv == nullptr)) {
    throw std::invalid_argument("mask and task vector must come together");
  }
  if (mask != nullptr) {
    if (!mask->same_shape(*tv)) {
      throw std::invalid_argument("mask shape does not match task vector");
    }
    if (tv->num_heads != params_.num_heads ||
        tv->head_dim != params_.head_dim) {
      throw std::invalid_argument("task vector shape does not match model");
    }
    check_layers(tv->layer_ids);
  }

  double u = query.features[0];
  double v = query.features[1];
  double fnorm = std::hypot(u, v);

  std::vector<int> all_layers(params_.num_layers);
  for (int l = 0; l < params_.num_layers; ++l) all_layers[l] = l;
  ActivationTensor own =
      make_tensor(all_layers, params_.num_heads, params_.head_dim);
  own_inference_activations(query, &own);

  auto mask_slot = [&](int layer) -> int {
    if (mask == nullptr) return -1;
    for (std::size_t s = 0; s < mask->layer_ids.size(); ++s) {
      if (mask->layer_ids[s] == layer) return static_cast<int>(s);
    }
    return -1;
  };

  double decision = params_.readout_bias * u;
  for (auto [l, h] : params_.task_heads) {
    int ms = mask_slot(l);
    bool injected = ms >= 0 && mask->at(static_cast<std::size_t>(ms), h) != 0;
    const ActivationTensor& src = injected ? *tv : own;
    std::size_t slot = injected ? static_cast<std::size_t>(ms)
                                : static_cast<std::size_t>(l);
    decision += params_.readout_gain * (src.at(slot, h, kTaskCoord0) * u +
                                        src.at(slot, h, kTaskCoord1) * v);
  }
  if (mask != nullptr && fnorm > 0.0) {
    // Consistency penalty: replaced non-task activations are compared with
    // what the model would have produced itself.
    for (std::size_t s = 0; s < mask->layer_ids.size(); ++s) {
      int l = mask->layer_ids[s];
      for (int h = 0; h < params_.num_heads; ++h) {
        if (mask->at(s, h) == 0 || is_task_head(l, h)) continue;
        std::size_t os = static_cast<std::size_t>(l);
        double du = tv->at(s, h, kPatternCoordU) - own.at(os, h, kPatternCoordU);
        double dv = tv->at(s, h, kPatternCoordV) - own.at(os, h, kPatternCoordV);
        decision += params_.consistency_gain * (du * u + dv * v) / fnorm;
      }
    }
  }
  return {-0.5 * decision, 0.5 * decision};
}

ActivationTensor SteerableToyModel::used_activations(
    const Example& query, const HeadMask& mask,
    const ActivationTensor& tv) const {
  if (!mask.same_shape(tv)) {
    throw std::invalid_argument("mask shape does not match task vector");
  }
  std::vector<int> all_layers(params_.num_layers);
  for (int l = 0; l < params_.num_layers; ++l) all_layers[l] = l;
  ActivationTensor own =
      make_tensor(all_layers, params_.num_heads, params_.head_dim);
  own_inference_activations(query, &own);

  ActivationTensor used = tv;
  for (std::size_t s = 0; s < tv.layer_ids.size(); ++s) {
    std::size_t os = static_cast<std::size_t>(tv.layer_ids[s]);
    for (int h = 0; h < params_.num_heads; ++h) {
      if (mask.at(s, h) != 0) continue;
      for (int k = 0; k < params_.head_dim; ++k) {
        used.at(s, h, k) = own.at(os, h, k);
      }
    }
  }
  return used;
}

ActivationTensor extract(const ModelInterface& model, const Chunk& chunk,
                         const std::vector<int>& layers) {
  return model.extract(chunk, layers);
}

int infer_injected(const ModelInterface& model, const Example& query,
                   const HeadMask& mask, const ActivationTensor& tv) {
  std::vector<double> s = model.class_scores(query, &mask, &tv);
  return s[1] > s[0] ? 1 : 0;
}

int infer_zero_shot(const ModelInterface& model, const Example& query) {
  std::vector<double> s = model.class_scores(query, nullptr, nullptr);
  return s[1] > s[0] ? 1 : 0;
}

double example_loss(const ModelInterface& model, const Example& query,
                    const HeadMask* mask, const ActivationTensor* tv) {
  std::vector<double> s = model.class_scores(query, mask, tv);
  double m = std::max(s[0], s[1]);
  double lse = m + std::log(std::exp(s[0] - m) + std::exp(s[1] - m));
  return lse - s[query.label ? 1 : 0];
}

ActivationTensor make_oracle_tv(const SteerableToyModel& model,
                                const std::vector<int>& layers, int cls) {
  if (cls != 0 && cls != 1) throw std::invalid_argument("class must be 0 or 1");
  ActivationTensor t =
      make_tensor(layers, model.num_heads(), model.head_dim());
  double sign = cls == 1 ? 1.0 : -1.0;
  double s = model.params().oracle_signal_strength;
  for (auto [l, h] : model.params().task_heads) {
    for (std::size_t slot = 0; slot < layers.size(); ++slot) {
      if (layers[slot] != l) continue;
      t.at(slot, h, kTaskCoord0) = sign * s * -kInvSqrt2;
      t.at(slot, h, kTaskCoord1) = sign * s * kInvSqrt2;
    }
  }
  return t;
}

HeadMask make_oracle_mask(const SteerableToyModel& model,
                          const std::vector<int>& layers) {
  HeadMask m = make_mask(layers, model.num_heads());
  for (auto [l, h] : model.params().task_heads) {
    for (std::size_t slot = 0; slot < layers.size(); ++slot) {
      if (layers[slot] == l) m.at(slot, h) = 1;
    }
  }
  return m;
}

TaskKind task_from_name(const std::string& name) {
  if (name == "flip") return TaskKind::kFlip;
  if (name == "identity") return TaskKind::kIdentity;
  throw std::invalid_argument("unknown task '" + name + "'");
}

std::string task_name(TaskKind task) {
  return task == TaskKind::kFlip ? "flip" : "identity";
}

std::vector<Example> make_train_set(TaskKind task, std::size_t n,
                                    const RandomSeed& seed,
                                    std::uint64_t id_base) {
  RngStream rng(seed);
  std::vector<Example> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    double umag = 0.8 + 0.4 * rng.next_unit();
    double vmag = 0.8 + 0.4 * rng.next_unit();
    bool bit = (rng.next_u64() & 1) != 0;
    Example e;
    e.id = id_base + i;
    e.role = Role::kDemonstration;
    if (task == TaskKind::kFlip) {
      double v = bit ? vmag : -vmag;
      // Salient channel anti-aligned with the label: zero-shot is always
      // wrong here, so the flip mapping is demonstrated unambiguously.
      double u = bit ? -umag : umag;
      e.features = {u, v};
      e.label = v > 0.0 ? 1 : 0;
    } else {
      double u = bit ? umag : -umag;
      bool bit2 = (rng.next_u64() & 1) != 0;
      double v = bit2 ? vmag : -vmag;
      e.features = {u, v};
      e.label = u > 0.0 ? 1 : 0;
    }
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<Example> make_eval_set(TaskKind task, std::size_t n,
                                   const RandomSeed& seed,
                                   std::uint64_t id_base) {
  if (n == 0 || n % 4 != 0) {
    throw std::invalid_argument("eval size must be a positive multiple of 4");
  }
  RngStream rng(seed);
  std::vector<Example> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    double umag = 0.8 + 0.4 * rng.next_unit();
    double vmag = 0.8 + 0.4 * rng.next_unit();
    bool su = (i % 4) < 2;        // + + - -
    bool sv = (i % 2) == 0;       // + - + -
    Example e;
    e.id = id_base + i;
    e.role = Role::kTarget;
    e.features = {su ? umag : -umag, sv ? vmag : -vmag};
    e.label = task == TaskKind::kFlip ? (sv ? 1 : 0) : (su ? 1 : 0);
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace dptv
