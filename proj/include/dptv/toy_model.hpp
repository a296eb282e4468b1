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

#ifndef DPTV_TOY_MODEL_HPP_
#define DPTV_TOY_MODEL_HPP_

#include <string>
#include <utility>
#include <vector>

#include "dptv/core.hpp"
#include "dptv/rng.hpp"

namespace dptv {

// Abstract model contract: deterministic activation extraction plus
// class-score inference with optional activation replacement.
class ModelInterface {
 public:
  virtual ~ModelInterface() = default;
  virtual int num_layers() const = 0;
  virtual int num_heads() const = 0;
  virtual int head_dim() const = 0;
  virtual std::string fingerprint() const = 0;

  // Final-position activations for one chunk, restricted to `layers`.
  virtual ActivationTensor extract(const Chunk& chunk,
                                   const std::vector<int>& layers) const = 0;

  // Class scores for a query. When mask/tv are non-null, every (l, h) with a
  // set mask bit uses tv's activation downstream instead of the model's own.
  virtual std::vector<double> class_scores(const Example& query,
                                           const HeadMask* mask,
                                           const ActivationTensor* tv)
      const = 0;
};

// Hand-constructed attention-style model. Activations are affine in the
// demonstrated input->label mapping plus bounded id-derived pseudo-noise, so
// steering works measurably and every acceptance property is enumerable.
//
// Geometry: each extracted layer slice is magnitude * (anchor + dev) with a
// fixed unit anchor per layer and ||dev|| well below 0.5. All slice
// directions therefore stay inside a 30-degree cone, which caps the L2
// distance between any two clipped slices at the clip threshold itself --
// the property the mean-sensitivity audit exercises adversarially.
//
// Per-head coordinates: 0,1 carry the task signal (prototype channel),
// 2 carries the anchor, 4,5 carry a query-dependent pattern, 6 is the
// resting channel; pseudo-noise spreads across all d coordinates.
struct ToyModelParams {
  int num_layers = 4;
  int num_heads = 4;
  int head_dim = 8;
  // Heads whose activations encode the demonstrated mapping.
  std::vector<std::pair<int, int>> task_heads;  // empty -> default pattern

  double task_component = 0.26;     // prototype weight inside dev
  double nontask_component = 0.19;  // pattern weight inside dev
  double noise_level = 0.02;        // per-head pseudo-noise norm cap
  double base_magnitude = 3.0;      // raw slice scale before clipping
  double magnitude_jitter = 0.15;   // id-derived relative magnitude spread
  double reference_feature_norm = 1.45;  // typical ||(u, v)||
  double resting_strength = 0.05;   // task-head activation without demos

  double readout_bias = 0.7;        // salient-channel weight (zero-shot rule)
  double readout_gain = 2.0;        // task-head readout weight
  double consistency_gain = 1.05;   // replaced-vs-own penalty weight

  double oracle_signal_strength = 0.25;  // prototype scale for oracle tensors

  // Fills task_heads with the default {(l, l mod H) : l = 1..L-1} pattern
  // when empty, then checks ranges.
  void finalize();
};

// Small two-head configuration with one helpful and one harmful injection
// site; the REINFORCE sanity target.
ToyModelParams bandit_model_params();

class SteerableToyModel : public ModelInterface {
 public:
  explicit SteerableToyModel(ToyModelParams params);

  int num_layers() const override { return params_.num_layers; }
  int num_heads() const override { return params_.num_heads; }
  int head_dim() const override { return params_.head_dim; }
  std::string fingerprint() const override { return fingerprint_; }

  ActivationTensor extract(const Chunk& chunk,
                           const std::vector<int>& layers) const override;
  std::vector<double> class_scores(const Example& query, const HeadMask* mask,
                                   const ActivationTensor* tv) const override;

  // The activations actually consumed downstream for one query, after any
  // mask-directed replacement; instrumentation for the injection contract.
  ActivationTensor used_activations(const Example& query, const HeadMask& mask,
                                    const ActivationTensor& tv) const;

  const ToyModelParams& params() const { return params_; }
  bool is_task_head(int layer, int head) const;

 private:
  ToyModelParams params_;
  std::string fingerprint_;
  std::vector<std::uint8_t> task_head_grid_;  // L x H lookup

  int anchor_head(int layer) const;
  void own_inference_activations(const Example& query,
                                 ActivationTensor* out) const;
  void check_layers(const std::vector<int>& layers) const;
};

// --- Interface-level operations ---------------------------------------------

ActivationTensor extract(const ModelInterface& model, const Chunk& chunk,
                         const std::vector<int>& layers);

int infer_injected(const ModelInterface& model, const Example& query,
                   const HeadMask& mask, const ActivationTensor& tv);

int infer_zero_shot(const ModelInterface& model, const Example& query);

// Cross-entropy of the model's class scores against the query label.
double example_loss(const ModelInterface& model, const Example& query,
                    const HeadMask* mask, const ActivationTensor* tv);

// Idealized release for a demonstrated mapping class: prototype signal at
// every task head inside `layers`, zero elsewhere.
ActivationTensor make_oracle_tv(const SteerableToyModel& model,
                                const std::vector<int>& layers, int cls);
HeadMask make_oracle_mask(const SteerableToyModel& model,
                          const std::vector<int>& layers);

// --- Synthetic datasets ------------------------------------------------------

enum class TaskKind { kFlip, kIdentity };

TaskKind task_from_name(const std::string& name);  // "flip" | "identity"
std::string task_name(TaskKind task);

// Demonstration/training pool. Every example exhibits its task unambiguously:
// for the flip task the salient channel is anti-aligned with the label, so
// zero-shot inference is always wrong on these records.
std::vector<Example> make_train_set(TaskKind task, std::size_t n,
                                    const RandomSeed& seed,
                                    std::uint64_t id_base = 0);

// Evaluation set, exactly balanced over (salient sign, latent sign) so the
// zero-shot rule scores exactly 1/2 on the flip task. n must be a multiple
// of 4.
std::vector<Example> make_eval_set(TaskKind task, std::size_t n,
                                   const RandomSeed& seed,
                                   std::uint64_t id_base = 1000000000ull);

}  // namespace dptv

#endif  // DPTV_TOY_MODEL_HPP_
