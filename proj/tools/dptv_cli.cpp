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
//
// Command-line driver. Exit codes: 0 success, 1 usage/config error,
// 2 audit violation, 3 artifact integrity error.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dptv/audit.hpp"
#include "dptv/io.hpp"
#include "dptv/pipeline.hpp"

namespace {

using dptv::ExperimentConfig;
using dptv::format_real_short;
using dptv::RandomSeed;

// Every ExperimentConfig field is also a flag; flags override the file.
struct ConfigFlags {
  std::string path;
  std::map<std::string, std::string> values;
};

void add_config_flags(CLI::App* sub, ConfigFlags& cf) {
  sub->add_option("--config", cf.path,
                  "key-value config file ('#' starts a comment)");
  static const std::vector<std::pair<std::string, std::string>> keys = {
      {"num_layers", "model depth L"},
      {"num_heads", "heads per layer H"},
      {"head_dim", "dimensions per head d"},
      {"layers", "target layer ids, comma separated (default: all)"},
      {"task", "synthetic task: flip | identity"},
      {"num_chunks", "disjoint chunks m"},
      {"shots", "demonstrations per chunk K"},
      {"public_pool", "public validation examples B"},
      {"eval_size", "evaluation queries (multiple of 4)"},
      {"dataset_size", "private pool size (0: m*(K+1) + reserve)"},
      {"clip_c", "per-layer clipping threshold C"},
      {"clip_sel", "score clipping threshold C_sel"},
      {"eps_tv", "budget for the task-vector mean"},
      {"eps_sel", "budget for private head selection"},
      {"delta", "target delta"},
      {"variant", "head selection data: public | private"},
      {"noise_disabled", "true/false: skip all DP noise (baseline mode)"},
      {"mask_mode", "selected | oracle | zero"},
      {"k_bar", "candidate masks scored"},
      {"num_mask_samples", "policy samples drawn for candidates"},
      {"reinforce_iterations", "policy-gradient steps"},
      {"reinforce_minibatch", "examples per policy-gradient step"},
      {"learning_rate", "policy-gradient step size"},
      {"seed", "root seed; every command is deterministic given it"},
  };
  for (const auto& [key, help] : keys) {
    sub->add_option("--" + key, cf.values[key], help);
  }
}

ExperimentConfig build_config(const ConfigFlags& cf) {
  ExperimentConfig cfg;
  if (!cf.path.empty()) {
    dptv::apply_kv_overrides(cfg, dptv::read_kv_config(cf.path));
  }
  std::map<std::string, std::string> flags;
  for (const auto& [key, value] : cf.values) {
    if (!value.empty()) flags[key] = value;
  }
  dptv::apply_kv_overrides(cfg, flags);
  return cfg;
}

std::vector<double> parse_real_list(const std::string& text) {
  std::vector<double> out;
  std::string item;
  std::stringstream in(text);
  while (std::getline(in, item, ',')) {
    char* end = nullptr;
    double v = std::strtod(item.c_str(), &end);
    if (item.empty() || end == nullptr || *end != '\0') {
      throw std::invalid_argument("bad number in list: '" + item + "'");
    }
    out.push_back(v);
  }
  if (out.empty()) throw std::invalid_argument("empty number list");
  return out;
}

void write_text_atomic(const std::string& path, const std::string& text) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + tmp + "'");
    out << text;
    if (!out) throw std::runtime_error("write failed for '" + tmp + "'");
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    throw std::runtime_error("cannot rename '" + tmp + "' to '" + path + "'");
  }
}

int do_construct(const ConfigFlags& cf, const std::string& out_path,
                 const std::string& data_path) {
  ExperimentConfig cfg = build_config(cf);
  cfg.validate();
  dptv::SteerableToyModel model(cfg.model_params());
  std::vector<dptv::Example> dataset;
  if (!data_path.empty()) {
    std::string file_task;
    dataset = dptv::read_dataset(data_path, &file_task);
    if (!file_task.empty()) cfg.task = file_task;
  } else {
    dataset = dptv::make_pipeline_dataset(cfg);
  }
  dptv::ConstructionResult res =
      dptv::run_construct(cfg, model, dataset, dptv::make_public_pool(cfg));
  write_text_atomic(out_path, dptv::artifact_to_text(res.artifact));
  std::cout << "artifact " << out_path << "\n"
            << "variant " << res.artifact.variant << "\n"
            << "sigma " << format_real_short(res.sigma) << "\n"
            << "sensitivity " << format_real_short(res.sensitivity) << "\n"
            << "total_eps " << format_real_short(res.artifact.receipt.total_eps)
            << "\n"
            << "total_delta "
            << format_real_short(res.artifact.receipt.total_delta) << "\n";
  return 0;
}

int do_infer(const ConfigFlags& cf, const std::string& artifact_path,
             const std::string& data_path) {
  ExperimentConfig cfg = build_config(cf);
  dptv::TaskVectorArtifact artifact = dptv::read_artifact(artifact_path);
  dptv::SteerableToyModel model(cfg.model_params());
  if (artifact.model_fingerprint != model.fingerprint()) {
    std::cerr << "error: artifact was built for a different model\n"
              << "  artifact: " << artifact.model_fingerprint << "\n"
              << "  model:    " << model.fingerprint() << "\n";
    return 3;
  }
  std::vector<dptv::Example> queries;
  if (!data_path.empty()) {
    queries = dptv::read_dataset(data_path, nullptr);
  } else {
    queries = dptv::make_eval_pool(cfg);
  }
  double accuracy = dptv::evaluate(artifact, model, queries);
  double zero_shot = dptv::zero_shot_accuracy(model, queries);
  std::cout << "queries " << queries.size() << "\n"
            << "accuracy " << format_real_short(accuracy) << "\n"
            << "zero_shot_accuracy " << format_real_short(zero_shot) << "\n"
            << "total_eps " << format_real_short(artifact.receipt.total_eps)
            << "\n"
            << "total_delta "
            << format_real_short(artifact.receipt.total_delta) << "\n";
  return 0;
}

int do_sweep(const ConfigFlags& cf, const std::string& eps_text,
             std::size_t seeds, const std::string& out_path,
             const std::string& ablate, const std::string& values_text) {
  ExperimentConfig cfg = build_config(cf);
  std::string csv;
  if (!ablate.empty()) {
    std::vector<double> values;
    if (!values_text.empty()) {
      values = parse_real_list(values_text);
    } else if (ablate == "clip") {
      values = {0.25, 0.5, 1.0, 2.0, 4.0};
    } else if (ablate == "chunks") {
      values = {50, 100, 500, 1000};
    } else {
      values = {2, 8, 16};
    }
    csv = dptv::run_ablation(cfg, ablate, values, seeds);
  } else {
    csv = dptv::run_eps_sweep(cfg, parse_real_list(eps_text), seeds);
  }
  if (out_path.empty()) {
    std::cout << csv;
  } else {
    write_text_atomic(out_path, csv);
    std::cout << "csv " << out_path << "\n";
  }
  return 0;
}

void print_report(const std::string& name, const dptv::AuditReport& report) {
  std::cout << "suite " << name << "\n"
            << "  trials " << report.trials << "\n"
            << "  max_observed " << format_real_short(report.max_observed_distance)
            << "\n"
            << "  bound " << format_real_short(report.bound) << "\n"
            << "  violations " << report.violations << "\n";
  for (const std::string& note : report.notes) {
    std::cout << "  note " << note << "\n";
  }
}

int do_audit(const std::string& suite, long long trials, std::uint64_t seed,
             double bound_scale, std::size_t m, std::size_t k, double clip_c,
             double adversarial_factor, double clip_sel) {
  if (trials == 0) {
    throw std::invalid_argument("trials must be > 0");
  }
  bool violated = false;
  if (suite == "all" || suite == "mean") {
    dptv::MeanAuditConfig mc;
    mc.m = m;
    mc.k = k;
    mc.clip_c = clip_c;
    mc.adversarial_factor = adversarial_factor;
    mc.bound_scale = bound_scale;
    dptv::ToyModelParams params;
    params.finalize();
    dptv::SteerableToyModel model(params);
    std::size_t t = trials < 0 ? 1000 : static_cast<std::size_t>(trials);
    dptv::AuditReport r = dptv::audit_mean_sensitivity(
        mc, model, t, RandomSeed{seed, "audit/mean"});
    print_report("mean_sensitivity", r);
    violated = violated || r.violations > 0;
  }
  if (suite == "all" || suite == "score") {
    std::size_t t = trials < 0 ? 1000 : static_cast<std::size_t>(trials);
    dptv::AuditReport r = dptv::audit_score_sensitivity(
        t, clip_sel, RandomSeed{seed, "audit/score"});
    print_report("score_sensitivity", r);
    violated = violated || r.violations > 0;
  }
  if (suite == "all" || suite == "mechanism") {
    std::size_t t = trials < 0 ? 100000 : static_cast<std::size_t>(trials);
    dptv::AuditReport r = dptv::audit_mechanism_distributions(
        t, RandomSeed{seed, "audit/mechanism"});
    print_report("mechanism_distributions", r);
    violated = violated || r.violations > 0;
  }
  return violated ? 2 : 0;
}

int do_gen_data(const std::string& task, std::size_t count, std::uint64_t seed,
                const std::string& out_path, bool eval) {
  if (count == 0) throw std::invalid_argument("count must be > 0");
  dptv::TaskKind kind = dptv::task_from_name(task);
  RandomSeed root{seed, "dptv"};
  std::vector<dptv::Example> examples =
      eval ? dptv::make_eval_set(kind, count, root.derive("eval_data"))
           : dptv::make_train_set(kind, count, root.derive("train_data"));
  dptv::write_dataset(out_path, task, examples);
  std::cout << "dataset " << out_path << "\n"
            << "examples " << examples.size() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "dptv: differentially private task vectors over a synthetic "
      "steerable model"};
  app.require_subcommand(1);

  ConfigFlags construct_cf;
  std::string construct_out = "artifact.dptv";
  std::string construct_data;
  CLI::App* construct =
      app.add_subcommand("construct", "Build a private task-vector artifact");
  add_config_flags(construct, construct_cf);
  construct->add_option("--out", construct_out, "artifact file to write");
  construct->add_option("--data", construct_data,
                        "private dataset file (otherwise synthetic)");

  ConfigFlags infer_cf;
  std::string infer_artifact;
  std::string infer_data;
  CLI::App* infer =
      app.add_subcommand("infer", "Evaluate an artifact on queries");
  add_config_flags(infer, infer_cf);
  infer->add_option("--artifact", infer_artifact, "artifact file")->required();
  infer->add_option("--data", infer_data,
                    "query dataset file (otherwise synthetic eval set)");

  ConfigFlags sweep_cf;
  std::string sweep_eps = "0.1,0.5,1,2,5";
  std::size_t sweep_seeds = 3;
  std::string sweep_out;
  std::string sweep_ablate;
  std::string sweep_values;
  CLI::App* sweep =
      app.add_subcommand("sweep", "Privacy-utility sweep, CSV output");
  add_config_flags(sweep, sweep_cf);
  sweep->add_option("--eps", sweep_eps, "comma-separated eps list");
  sweep->add_option("--seeds", sweep_seeds, "seeds per setting");
  sweep->add_option("--out", sweep_out, "CSV file (default: stdout)");
  sweep->add_option("--ablate", sweep_ablate, "sweep this axis instead of eps")
      ->check(CLI::IsMember({"clip", "chunks", "shots"}));
  sweep->add_option("--values", sweep_values,
                    "comma-separated ablation values (default per axis)");

  std::string audit_suite = "all";
  long long audit_trials = -1;
  std::uint64_t audit_seed = 1;
  double audit_bound_scale = 1.0;
  std::size_t audit_m = 10;
  std::size_t audit_k = 4;
  double audit_clip = 1.0;
  double audit_factor = 100.0;
  double audit_clip_sel = 1.0;
  CLI::App* audit =
      app.add_subcommand("audit", "Empirical checks of the privacy claims");
  audit->add_option("--suite", audit_suite, "mean | score | mechanism | all")
      ->check(CLI::IsMember({"all", "mean", "score", "mechanism"}));
  audit->add_option("--trials", audit_trials, "trial count (>0)");
  audit->add_option("--seed", audit_seed, "root seed");
  audit->add_option("--bound-scale", audit_bound_scale,
                    "multiply the mean bound (use <1 to self-test the audit)");
  audit->add_option("--chunks", audit_m, "chunks m for the mean audit");
  audit->add_option("--shots", audit_k, "demonstrations K for the mean audit");
  audit->add_option("--clip", audit_clip, "clipping threshold C");
  audit->add_option("--adversarial-factor", audit_factor,
                    "replacement magnitude, in units of C");
  audit->add_option("--clip-sel", audit_clip_sel, "score clip C_sel");

  std::string gen_task = "flip";
  std::size_t gen_count = 964;
  std::uint64_t gen_seed = 1;
  std::string gen_out = "dataset.dptv";
  bool gen_eval = false;
  CLI::App* gen =
      app.add_subcommand("gen-data", "Write a synthetic dataset file");
  gen->add_option("--task", gen_task, "flip | identity");
  gen->add_option("--count", gen_count, "number of examples");
  gen->add_option("--seed", gen_seed, "root seed");
  gen->add_option("--out", gen_out, "output file");
  gen->add_flag("--eval", gen_eval,
                "balanced evaluation set instead of a training pool");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (construct->parsed()) {
      return do_construct(construct_cf, construct_out, construct_data);
    }
    if (infer->parsed()) {
      return do_infer(infer_cf, infer_artifact, infer_data);
    }
    if (sweep->parsed()) {
      return do_sweep(sweep_cf, sweep_eps, sweep_seeds, sweep_out, sweep_ablate,
                      sweep_values);
    }
    if (audit->parsed()) {
      return do_audit(audit_suite, audit_trials, audit_seed, audit_bound_scale,
                      audit_m, audit_k, audit_clip, audit_factor,
                      audit_clip_sel);
    }
    if (gen->parsed()) {
      return do_gen_data(gen_task, gen_count, gen_seed, gen_out, gen_eval);
    }
  } catch (const dptv::ArtifactError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
