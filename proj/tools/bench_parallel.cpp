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
// Times the OpenMP kernels against their serial twins and verifies the
// results are bit-identical.

#include <chrono>
#include <cstdio>
#include <functional>

#include "dptv/audit.hpp"
#include "dptv/construction.hpp"
#include "dptv/inference.hpp"
#include "dptv/pipeline.hpp"

namespace {

double time_best_ms(const std::function<void()>& fn, int reps = 3) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    auto t0 = std::chrono::steady_clock::now();
    fn();
    auto t1 = std::chrono::steady_clock::now();
    double ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    if (ms < best) best = ms;
  }
  return best;
}

void report(const char* name, double serial_ms, double parallel_ms,
            bool identical) {
  std::printf("%-24s serial %9.2f ms   parallel %9.2f ms   speedup %5.2fx   "
              "identical %s\n",
              name, serial_ms, parallel_ms, serial_ms / parallel_ms,
              identical ? "yes" : "NO");
}

}  // namespace

int main() {
  using namespace dptv;

  ToyModelParams params;
  params.num_layers = 6;
  params.num_heads = 8;
  params.head_dim = 16;
  params.finalize();
  SteerableToyModel model(params);
  std::vector<int> layers;
  for (int l = 0; l < params.num_layers; ++l) layers.push_back(l);

  // Chunk extraction + clipping.
  const std::size_t m = 3000, k = 8;
  std::vector<Example> pool =
      make_train_set(TaskKind::kFlip, m * (k + 1), RandomSeed{7, "bench/data"});
  PartitionPlan plan =
      partition_disjoint(pool, m, k, RandomSeed{7, "bench/partition"});
  std::vector<ActivationTensor> serial_out, parallel_out;
  double s_ms = time_best_ms(
      [&] { serial_out = extract_clipped_serial(plan, model, layers, 1.0); });
  double p_ms = time_best_ms(
      [&] { parallel_out = extract_clipped(plan, model, layers, 1.0); });
  bool same = serial_out.size() == parallel_out.size();
  for (std::size_t i = 0; same && i < serial_out.size(); ++i) {
    same = serial_out[i].values == parallel_out[i].values;
  }
  report("extract_clipped", s_ms, p_ms, same);

  // Batch evaluation.
  TaskVectorArtifact artifact;
  artifact.model_fingerprint = model.fingerprint();
  artifact.variant = "public";
  artifact.tv = make_oracle_tv(model, layers, 1);
  artifact.mask = make_oracle_mask(model, layers);
  std::vector<Example> queries =
      make_eval_set(TaskKind::kFlip, 100000, RandomSeed{7, "bench/eval"});
  double acc_serial = 0.0, acc_parallel = 0.0;
  s_ms = time_best_ms(
      [&] { acc_serial = evaluate_serial(artifact, model, queries); });
  p_ms = time_best_ms(
      [&] { acc_parallel = evaluate(artifact, model, queries); });
  report("evaluate", s_ms, p_ms, acc_serial == acc_parallel);

  // Replace-one sensitivity audit.
  MeanAuditConfig mc;
  AuditReport r_serial, r_parallel;
  ToyModelParams audit_params;
  audit_params.finalize();
  SteerableToyModel audit_model(audit_params);
  s_ms = time_best_ms([&] {
    r_serial = audit_mean_sensitivity_serial(mc, audit_model, 400,
                                             RandomSeed{7, "bench/audit"});
  });
  p_ms = time_best_ms([&] {
    r_parallel = audit_mean_sensitivity(mc, audit_model, 400,
                                        RandomSeed{7, "bench/audit"});
  });
  report("audit_mean_sensitivity", s_ms, p_ms,
         r_serial.max_observed_distance == r_parallel.max_observed_distance &&
             r_serial.violations == r_parallel.violations);
  return 0;
}
