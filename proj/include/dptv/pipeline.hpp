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

#ifndef DPTV_PIPELINE_HPP_
#define DPTV_PIPELINE_HPP_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "dptv/construction.hpp"
#include "dptv/inference.hpp"
#include "dptv/selection.hpp"
#include "dptv/toy_model.hpp"

namespace dptv {

// One experiment: model shape, data sizes, privacy budget, selection
// hyperparameters. Field names double as config-file keys.
struct ExperimentConfig {
  // Model shape.
  int num_layers = 4;
  int num_heads = 4;
  int head_dim = 8;
  std::vector<int> layers;  // target layer set; empty means all layers

  // Data.
  std::string task = "flip";      // "flip" | "identity"
  std::size_t num_chunks = 100;   // m
  std::size_t shots = 8;          // demonstrations per chunk (K)
  std::size_t public_pool = 100;  // public validation examples (B)
  std::size_t eval_size = 200;    // evaluation queries, multiple of 4
  std::size_t dataset_size = 0;   // 0 means m*(K+1) plus a validation reserve

  // Privacy.
  double clip_c = 1.0;
  double clip_sel = 1.0;
  double eps_tv = 1.0;
  double eps_sel = 0.5;
  double delta = 1e-5;
  std::string variant = "public";  // "public" | "private"
  bool noise_disabled = false;     // debug/baseline mode: skip all DP noise

  // Head selection.
  std::string mask_mode = "selected";  // "selected" | "oracle" | "zero"
  std::size_t k_bar = 12;
  std::size_t num_mask_samples = 2000;
  int reinforce_iterations = 400;
  int reinforce_minibatch = 8;
  double learning_rate = 0.1;

  std::uint64_t seed = 1;

  std::vector<int> resolved_layers() const;
  ToyModelParams model_params() const;
  PrivacyParams privacy_params() const;
  TaskKind task_kind() const;
  std::size_t resolved_dataset_size() const;
  void validate() const;
};

// Applies "key value" overrides; throws std::invalid_argument on unknown
// keys or unparseable values. Keys are the ExperimentConfig field names.
void apply_kv_overrides(ExperimentConfig& cfg,
                        const std::map<std::string, std::string>& kv);

// Seeded synthetic pools. Training ids start at 0, evaluation ids at 10^9,
// public ids at 2*10^9, so the three never collide.
std::vector<Example> make_pipeline_dataset(const ExperimentConfig& cfg);
std::vector<Example> make_public_pool(const ExperimentConfig& cfg);
std::vector<Example> make_eval_pool(const ExperimentConfig& cfg);

struct ConstructionResult {
  TaskVectorArtifact artifact;
  double sigma = 0.0;        // 0 when noise is disabled
  double sensitivity = 0.0;  // delta_2 used for calibration
};

// partition -> private mean -> head selection -> artifact. Deterministic
// for a fixed config; the overload without pools generates them itself.
ConstructionResult run_construct(const ExperimentConfig& cfg,
                                 const SteerableToyModel& model,
                                 const std::vector<Example>& dataset,
                                 const std::vector<Example>& public_data);
ConstructionResult run_construct(const ExperimentConfig& cfg);

// Fraction of queries the zero-shot (no-injection) rule answers correctly.
double zero_shot_accuracy(const ModelInterface& model,
                          const std::vector<Example>& queries);

// Privacy-utility sweep. One data row per (eps, seed) plus one seed-averaged
// row per eps; columns are fixed: eps, seed, variant, accuracy,
// zero_shot_accuracy, non_private_accuracy, sigma, total_eps, total_delta.
// Seeds are base.seed .. base.seed + num_seeds - 1.
std::string run_eps_sweep(const ExperimentConfig& base,
                          const std::vector<double>& eps_list,
                          std::size_t num_seeds);

// Ablation over one axis: param is "clip" (C), "chunks" (m) or "shots" (K);
// same row structure with the eps column replaced by param and value.
std::string run_ablation(const ExperimentConfig& base, const std::string& param,
                         const std::vector<double>& values,
                         std::size_t num_seeds);

}  // namespace dptv

#endif  // DPTV_PIPELINE_HPP_
