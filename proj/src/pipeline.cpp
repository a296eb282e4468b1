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

#include "dptv/pipeline.hpp"

#include <algorithm>
#include <cstdlib>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include "dptv/io.hpp"
#include "dptv/rng.hpp"

namespace dptv {

namespace {

// Examples kept out of every chunk double as the private validation pool.
constexpr std::size_t kValidationReserve = 64;

constexpr std::uint64_t kEvalIdBase = 1000000000ull;
constexpr std::uint64_t kPublicIdBase = 2000000000ull;

// CSV cells stay readable ("0.5" rather than its 17-digit expansion).
std::string csv_real(double v) { return format_real_short(v); }

long long parse_int(const std::string& key, const std::string& value) {
  char* end = nullptr;
  long long v = std::strtoll(value.c_str(), &end, 10);
  if (value.empty() || end == nullptr || *end != '\0') {
    throw std::invalid_argument("config key '" + key + "': bad integer '" +
                                value + "'");
  }
  return v;
}

double parse_double(const std::string& key, const std::string& value) {
  char* end = nullptr;
  double v = std::strtod(value.c_str(), &end);
  if (value.empty() || end == nullptr || *end != '\0') {
    throw std::invalid_argument("config key '" + key + "': bad real '" +
                                value + "'");
  }
  return v;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "1" || value == "true") return true;
  if (value == "0" || value == "false") return false;
  throw std::invalid_argument("config key '" + key + "': bad bool '" + value +
                              "'");
}

std::vector<int> parse_layer_list(const std::string& value) {
  std::string spaced = value;
  std::replace(spaced.begin(), spaced.end(), ',', ' ');
  std::istringstream in(spaced);
  std::vector<int> out;
  int l = 0;
  while (in >> l) out.push_back(l);
  return out;
}

std::vector<Example> resolve_validation_pool(
    const std::vector<Example>& dataset, const PartitionPlan& plan) {
  std::unordered_set<std::uint64_t> unused(plan.unused.begin(),
                                           plan.unused.end());
  std::vector<Example> val;
  for (const Example& e : dataset) {
    if (unused.count(e.id) != 0) val.push_back(e);
  }
  if (val.empty()) {
    // Nothing was held out; fall back to the chunk targets.
    for (const Chunk& c : plan.chunks) val.push_back(c.target);
  }
  return val;
}

std::size_t argmin_index(const std::vector<double>& scores) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] < scores[best]) best = i;
  }
  return best;
}

struct SweepCell {
  double accuracy = 0.0;
  double zero_shot = 0.0;
  double non_private = 0.0;
  double sigma = 0.0;
  double total_eps = 0.0;
  double total_delta = 0.0;
};

// Everything one seed contributes to a sweep: pools, the noise-free
// baseline, then one cell per swept setting.
std::vector<SweepCell> sweep_cells_for_seed(
    const ExperimentConfig& seeded, const SteerableToyModel& model,
    const std::vector<ExperimentConfig>& settings) {
  std::vector<Example> dataset = make_pipeline_dataset(seeded);
  std::vector<Example> public_data = make_public_pool(seeded);
  std::vector<Example> eval_data = make_eval_pool(seeded);

  ExperimentConfig baseline_cfg = seeded;
  baseline_cfg.noise_disabled = true;
  ConstructionResult baseline =
      run_construct(baseline_cfg, model, dataset, public_data);
  double non_private = evaluate(baseline.artifact, model, eval_data);
  double zero_shot = zero_shot_accuracy(model, eval_data);

  std::vector<SweepCell> cells;
  cells.reserve(settings.size());
  for (const ExperimentConfig& setting : settings) {
    ExperimentConfig cfg = setting;
    cfg.seed = seeded.seed;
    ConstructionResult out = run_construct(cfg, model, dataset, public_data);
    SweepCell cell;
    cell.accuracy = evaluate(out.artifact, model, eval_data);
    cell.zero_shot = zero_shot;
    cell.non_private = non_private;
    cell.sigma = out.sigma;
    cell.total_eps = out.artifact.receipt.total_eps;
    cell.total_delta = out.artifact.receipt.total_delta;
    cells.push_back(cell);
  }
  return cells;
}

void append_cell_row(std::ostringstream& os, const std::string& key_cols,
                     const std::string& seed_col, const std::string& variant,
                     const SweepCell& c) {
  os << key_cols << "," << seed_col << "," << variant << ","
     << csv_real(c.accuracy) << "," << csv_real(c.zero_shot) << ","
     << csv_real(c.non_private) << "," << csv_real(c.sigma) << ","
     << csv_real(c.total_eps) << "," << csv_real(c.total_delta) << "\n";
}

SweepCell mean_cell(const std::vector<std::vector<SweepCell>>& per_seed,
                    std::size_t setting_index) {
  SweepCell m;
  for (const auto& cells : per_seed) {
    const SweepCell& c = cells[setting_index];
    m.accuracy += c.accuracy;
    m.zero_shot += c.zero_shot;
    m.non_private += c.non_private;
    m.sigma += c.sigma;
    m.total_eps += c.total_eps;
    m.total_delta += c.total_delta;
  }
  double n = static_cast<double>(per_seed.size());
  m.accuracy /= n;
  m.zero_shot /= n;
  m.non_private /= n;
  m.sigma /= n;
  m.total_eps /= n;
  m.total_delta /= n;
  return m;
}

}  // namespace

std::vector<int> ExperimentConfig::resolved_layers() const {
  if (!layers.empty()) return layers;
  std::vector<int> all(static_cast<std::size_t>(num_layers));
  for (int l = 0; l < num_layers; ++l) all[static_cast<std::size_t>(l)] = l;
  return all;
}

ToyModelParams ExperimentConfig::model_params() const {
  ToyModelParams p;
  p.num_layers = num_layers;
  p.num_heads = num_heads;
  p.head_dim = head_dim;
  p.finalize();
  return p;
}

PrivacyParams ExperimentConfig::privacy_params() const {
  PrivacyParams p;
  p.eps_tv = eps_tv;
  p.eps_sel = eps_sel;
  p.delta = delta;
  p.clip_c = clip_c;
  p.clip_sel = clip_sel;
  return p;
}

TaskKind ExperimentConfig::task_kind() const { return task_from_name(task); }

std::size_t ExperimentConfig::resolved_dataset_size() const {
  if (dataset_size != 0) return dataset_size;
  return num_chunks * (shots + 1) + kValidationReserve;
}

void ExperimentConfig::validate() const {
  if (variant != "public" && variant != "private") {
    throw std::invalid_argument("variant must be 'public' or 'private'");
  }
  if (mask_mode != "selected" && mask_mode != "oracle" && mask_mode != "zero") {
    throw std::invalid_argument(
        "mask_mode must be 'selected', 'oracle' or 'zero'");
  }
  task_from_name(task);  // throws on unknown task names
  if (num_chunks == 0) throw std::invalid_argument("num_chunks must be > 0");
  if (shots == 0) throw std::invalid_argument("shots must be > 0");
  if (eval_size == 0 || eval_size % 4 != 0) {
    throw std::invalid_argument("eval_size must be a positive multiple of 4");
  }
  if (mask_mode == "selected" && public_pool == 0) {
    throw std::invalid_argument("selection needs a nonempty public pool");
  }
  if (mask_mode == "selected" &&
      (k_bar == 0 || num_mask_samples == 0 || reinforce_iterations <= 0 ||
       reinforce_minibatch <= 0)) {
    throw std::invalid_argument("selection hyperparameters must be positive");
  }
  std::size_t need = num_chunks * (shots + 1);
  if (resolved_dataset_size() < need) {
    throw std::invalid_argument("dataset_size below m*(K+1)");
  }
  privacy_params().validate(variant == "public");
  ToyModelParams p = model_params();  // validates the model shape
  std::vector<int> ls = resolved_layers();
  for (std::size_t i = 0; i < ls.size(); ++i) {
    if (ls[i] < 0 || ls[i] >= p.num_layers) {
      throw std::invalid_argument("layer id out of range");
    }
    if (i > 0 && ls[i] <= ls[i - 1]) {
      throw std::invalid_argument("layers must be strictly increasing");
    }
  }
}

void apply_kv_overrides(ExperimentConfig& cfg,
                        const std::map<std::string, std::string>& kv) {
  for (const auto& [key, value] : kv) {
    if (key == "num_layers") {
      cfg.num_layers = static_cast<int>(parse_int(key, value));
    } else if (key == "num_heads") {
      cfg.num_heads = static_cast<int>(parse_int(key, value));
    } else if (key == "head_dim") {
      cfg.head_dim = static_cast<int>(parse_int(key, value));
    } else if (key == "layers") {
      cfg.layers = parse_layer_list(value);
    } else if (key == "task") {
      cfg.task = value;
    } else if (key == "num_chunks") {
      cfg.num_chunks = static_cast<std::size_t>(parse_int(key, value));
    } else if (key == "shots") {
      cfg.shots = static_cast<std::size_t>(parse_int(key, value));
    } else if (key == "public_pool") {
      cfg.public_pool = static_cast<std::size_t>(parse_int(key, value));
    } else if (key == "eval_size") {
      cfg.eval_size = static_cast<std::size_t>(parse_int(key, value));
    } else if (key == "dataset_size") {
      cfg.dataset_size = static_cast<std::size_t>(parse_int(key, value));
    } else if (key == "clip_c") {
      cfg.clip_c = parse_double(key, value);
    } else if (key == "clip_sel") {
      cfg.clip_sel = parse_double(key, value);
    } else if (key == "eps_tv") {
      cfg.eps_tv = parse_double(key, value);
    } else if (key == "eps_sel") {
      cfg.eps_sel = parse_double(key, value);
    } else if (key == "delta") {
      cfg.delta = parse_double(key, value);
    } else if (key == "variant") {
      cfg.variant = value;
    } else if (key == "noise_disabled") {
      cfg.noise_disabled = parse_bool(key, value);
    } else if (key == "mask_mode") {
      cfg.mask_mode = value;
    } else if (key == "k_bar") {
      cfg.k_bar = static_cast<std::size_t>(parse_int(key, value));
    } else if (key == "num_mask_samples") {
      cfg.num_mask_samples = static_cast<std::size_t>(parse_int(key, value));
    } else if (key == "reinforce_iterations") {
      cfg.reinforce_iterations = static_cast<int>(parse_int(key, value));
    } else if (key == "reinforce_minibatch") {
      cfg.reinforce_minibatch = static_cast<int>(parse_int(key, value));
    } else if (key == "learning_rate") {
      cfg.learning_rate = parse_double(key, value);
    } else if (key == "seed") {
      cfg.seed = static_cast<std::uint64_t>(parse_int(key, value));
    } else {
      throw std::invalid_argument("unknown config key '" + key + "'");
    }
  }
}

std::vector<Example> make_pipeline_dataset(const ExperimentConfig& cfg) {
  RandomSeed root{cfg.seed, "dptv"};
  return make_train_set(cfg.task_kind(), cfg.resolved_dataset_size(),
                        root.derive("train_data"), 0);
}

std::vector<Example> make_public_pool(const ExperimentConfig& cfg) {
  RandomSeed root{cfg.seed, "dptv"};
  return make_train_set(cfg.task_kind(), cfg.public_pool,
                        root.derive("public_data"), kPublicIdBase);
}

std::vector<Example> make_eval_pool(const ExperimentConfig& cfg) {
  RandomSeed root{cfg.seed, "dptv"};
  return make_eval_set(cfg.task_kind(), cfg.eval_size,
                       root.derive("eval_data"), kEvalIdBase);
}

ConstructionResult run_construct(const ExperimentConfig& cfg,
                                 const SteerableToyModel& model,
                                 const std::vector<Example>& dataset,
                                 const std::vector<Example>& public_data) {
  cfg.validate();
  const std::vector<int> layers = cfg.resolved_layers();
  const RandomSeed root{cfg.seed, "dptv"};
  const PrivacyParams privacy = cfg.privacy_params();

  PartitionPlan plan =
      partition_disjoint(dataset, cfg.num_chunks, cfg.shots,
                         root.derive("partition"));
  PrivateMeanResult mean = compute_private_mean(
      plan, model, layers, privacy, root, PrivacyReceipt{},
      cfg.noise_disabled);
  PrivacyReceipt receipt = mean.receipt;

  HeadMask mask;
  if (cfg.mask_mode == "zero") {
    mask = make_mask(layers, cfg.num_heads);
  } else if (cfg.mask_mode == "oracle") {
    mask = make_oracle_mask(model, layers);
  } else if (cfg.variant == "public") {
    MaskPolicy hyper = make_policy(layers, cfg.num_heads);
    hyper.learning_rate = cfg.learning_rate;
    hyper.iterations = cfg.reinforce_iterations;
    hyper.minibatch = cfg.reinforce_minibatch;
    auto [selected, charged] = select_mask_public(
        public_data, model, mean.tv, hyper, cfg.num_mask_samples, cfg.k_bar,
        root.derive("select_public"), receipt);
    mask = selected;
    receipt = charged;
  } else {
    // Private variant: candidates come from public data, scores from the
    // held-out private pool, and the pick is noised.
    const RandomSeed sel = root.derive("select_private");
    MaskPolicy hyper = make_policy(layers, cfg.num_heads);
    hyper.learning_rate = cfg.learning_rate;
    hyper.iterations = cfg.reinforce_iterations;
    hyper.minibatch = cfg.reinforce_minibatch;
    MaskPolicy trained =
        reinforce_train(public_data, model, mean.tv, hyper,
                        sel.derive("reinforce"));
    CandidateSet candidates = sample_candidate_masks(
        trained, cfg.num_mask_samples, cfg.k_bar, sel.derive("mask_sampling"));
    std::vector<Example> val = resolve_validation_pool(dataset, plan);
    std::vector<double> scores;
    scores.reserve(candidates.masks.size());
    for (const HeadMask& candidate : candidates.masks) {
      scores.push_back(
          score_mask(candidate, mean.tv, model, val, cfg.clip_sel));
    }
    if (cfg.noise_disabled) {
      mask = candidates.masks[argmin_index(scores)];
    } else {
      auto [selected, charged] = select_mask_private(
          candidates, scores, privacy, sel.derive("gumbel_selection"),
          receipt);
      mask = selected;
      receipt = charged;
    }
  }

  ConstructionResult out;
  out.artifact.format_version = 1;
  out.artifact.model_fingerprint = model.fingerprint();
  out.artifact.variant = cfg.variant;
  out.artifact.tv = std::move(mean.tv);
  out.artifact.mask = std::move(mask);
  out.artifact.receipt = std::move(receipt);
  out.sigma = mean.sigma;
  out.sensitivity = mean.sensitivity;
  out.artifact.validate();
  return out;
}

ConstructionResult run_construct(const ExperimentConfig& cfg) {
  cfg.validate();
  SteerableToyModel model(cfg.model_params());
  return run_construct(cfg, model, make_pipeline_dataset(cfg),
                       make_public_pool(cfg));
}

double zero_shot_accuracy(const ModelInterface& model,
                          const std::vector<Example>& queries) {
  if (queries.empty()) throw std::invalid_argument("empty query set");
  std::size_t hits = 0;
  for (const Example& q : queries) {
    if (infer_zero_shot(model, q) == q.label) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(queries.size());
}

std::string run_eps_sweep(const ExperimentConfig& base,
                          const std::vector<double>& eps_list,
                          std::size_t num_seeds) {
  if (eps_list.empty()) throw std::invalid_argument("empty eps list");
  for (double e : eps_list) {
    if (!(e > 0.0)) throw std::invalid_argument("eps values must be > 0");
  }
  if (num_seeds == 0) throw std::invalid_argument("num_seeds must be > 0");
  base.validate();

  std::vector<ExperimentConfig> settings;
  settings.reserve(eps_list.size());
  for (double e : eps_list) {
    ExperimentConfig cfg = base;
    cfg.eps_tv = e;
    cfg.noise_disabled = false;
    settings.push_back(cfg);
  }

  SteerableToyModel model(base.model_params());
  std::vector<std::vector<SweepCell>> per_seed(num_seeds);
  const long long n = static_cast<long long>(num_seeds);
#pragma omp parallel for schedule(dynamic)
  for (long long s = 0; s < n; ++s) {
    ExperimentConfig seeded = base;
    seeded.seed = base.seed + static_cast<std::uint64_t>(s);
    per_seed[static_cast<std::size_t>(s)] =
        sweep_cells_for_seed(seeded, model, settings);
  }

  std::ostringstream os;
  os << "eps,seed,variant,accuracy,zero_shot_accuracy,non_private_accuracy,"
        "sigma,total_eps,total_delta\n";
  for (std::size_t e = 0; e < eps_list.size(); ++e) {
    for (std::size_t s = 0; s < num_seeds; ++s) {
      append_cell_row(os, csv_real(eps_list[e]),
                      std::to_string(base.seed + s), base.variant,
                      per_seed[s][e]);
    }
    append_cell_row(os, csv_real(eps_list[e]), "mean", base.variant,
                    mean_cell(per_seed, e));
  }
  return os.str();
}

std::string run_ablation(const ExperimentConfig& base, const std::string& param,
                         const std::vector<double>& values,
                         std::size_t num_seeds) {
  if (values.empty()) throw std::invalid_argument("empty ablation value list");
  if (num_seeds == 0) throw std::invalid_argument("num_seeds must be > 0");
  if (param != "clip" && param != "chunks" && param != "shots") {
    throw std::invalid_argument("param must be 'clip', 'chunks' or 'shots'");
  }

  std::vector<ExperimentConfig> settings;
  settings.reserve(values.size());
  for (double v : values) {
    ExperimentConfig cfg = base;
    if (param == "clip") {
      cfg.clip_c = v;
    } else if (param == "chunks") {
      if (v <= 0.0 || v != static_cast<double>(static_cast<std::size_t>(v))) {
        throw std::invalid_argument("chunks values must be positive integers");
      }
      cfg.num_chunks = static_cast<std::size_t>(v);
    } else {
      if (v <= 0.0 || v != static_cast<double>(static_cast<std::size_t>(v))) {
        throw std::invalid_argument("shots values must be positive integers");
      }
      cfg.shots = static_cast<std::size_t>(v);
    }
    cfg.validate();
    settings.push_back(cfg);
  }

  SteerableToyModel model(base.model_params());
  // Each swept value changes the dataset shape, so pools are rebuilt per
  // (value, seed) pair; cells are independent and run in parallel over seeds.
  std::vector<std::vector<SweepCell>> per_value_seed(
      values.size(), std::vector<SweepCell>(num_seeds));
  for (std::size_t v = 0; v < values.size(); ++v) {
    std::vector<ExperimentConfig> one{settings[v]};
    const long long n = static_cast<long long>(num_seeds);
#pragma omp parallel for schedule(dynamic)
    for (long long s = 0; s < n; ++s) {
      ExperimentConfig seeded = settings[v];
      seeded.seed = base.seed + static_cast<std::uint64_t>(s);
      per_value_seed[v][static_cast<std::size_t>(s)] =
          sweep_cells_for_seed(seeded, model, one)[0];
    }
  }

  std::ostringstream os;
  os << "param,value,seed,variant,accuracy,zero_shot_accuracy,"
        "non_private_accuracy,sigma,total_eps,total_delta\n";
  for (std::size_t v = 0; v < values.size(); ++v) {
    const std::string key = param + "," + csv_real(values[v]);
    for (std::size_t s = 0; s < num_seeds; ++s) {
      append_cell_row(os, key, std::to_string(base.seed + s), base.variant,
                      per_value_seed[v][s]);
    }
    std::vector<std::vector<SweepCell>> transposed;
    transposed.reserve(num_seeds);
    for (std::size_t s = 0; s < num_seeds; ++s) {
      transposed.push_back({per_value_seed[v][s]});
    }
    append_cell_row(os, key, "mean", base.variant, mean_cell(transposed, 0));
  }
  return os.str();
}

}  // namespace dptv
