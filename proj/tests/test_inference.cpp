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

#include <limits>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "dptv/core.hpp"
#include "dptv/dp_mech.hpp"
#include "dptv/inference.hpp"
#include "dptv/rng.hpp"
#include "dptv/toy_model.hpp"

namespace {

using namespace dptv;

const std::vector<int> kAllLayers = {0, 1, 2, 3};

TaskVectorArtifact oracle_artifact(const SteerableToyModel& model, int cls) {
  TaskVectorArtifact a;
  a.model_fingerprint = model.fingerprint();
  a.variant = "none";
  a.tv = make_oracle_tv(model, kAllLayers, cls);
  a.mask = make_oracle_mask(model, kAllLayers);
  a.receipt = accountant_charge(PrivacyReceipt{}, "gaussian_mean", 1.0, 1e-5);
  a.validate();
  return a;
}

}  // namespace

TEST_SUITE_BEGIN("inference");

TEST_CASE("artifact validation catches shape mismatches") {
  SteerableToyModel model{ToyModelParams{}};
  TaskVectorArtifact a = oracle_artifact(model, 1);
  CHECK_NOTHROW(a.validate());
  a.mask = make_mask({0, 1}, 4);
  CHECK_THROWS_AS(a.validate(), std::invalid_argument);
  a = oracle_artifact(model, 1);
  a.tv.values[3] = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(a.validate(), std::invalid_argument);
}

TEST_CASE("fingerprint mismatch is rejected loudly") {
  SteerableToyModel model{ToyModelParams{}};
  ToyModelParams other_params;
  other_params.num_layers = 5;
  SteerableToyModel other{other_params};

  TaskVectorArtifact a = oracle_artifact(model, 1);
  Example q = make_eval_set(TaskKind::kFlip, 4, RandomSeed{1, "inf/fp"})[0];
  CHECK_NOTHROW(serve_query(a, model, q));
  CHECK_THROWS_AS(serve_query(a, other, q), std::runtime_error);
  std::vector<Example> pool =
      make_eval_set(TaskKind::kFlip, 8, RandomSeed{1, "inf/fp2"});
  CHECK_THROWS_AS(evaluate(a, other, pool), std::runtime_error);
  CHECK_THROWS_AS(evaluate_serial(a, other, pool), std::runtime_error);
}

TEST_CASE("1000 queries never touch the receipt") {
  SteerableToyModel model{ToyModelParams{}};
  TaskVectorArtifact a = oracle_artifact(model, 1);
  PrivacyReceipt before = a.receipt;
  std::vector<Example> pool =
      make_eval_set(TaskKind::kFlip, 1000, RandomSeed{2, "inf/receipt"});
  for (const Example& q : pool) (void)serve_query(a, model, q);
  (void)evaluate(a, model, pool);
  CHECK(a.receipt == before);
  CHECK(a.receipt.total_eps == before.total_eps);
  CHECK(a.receipt.total_delta == before.total_delta);
}

TEST_CASE("serving is deterministic per (artifact, query)") {
  SteerableToyModel model{ToyModelParams{}};
  TaskVectorArtifact a = oracle_artifact(model, 1);
  std::vector<Example> pool =
      make_eval_set(TaskKind::kFlip, 20, RandomSeed{3, "inf/det"});
  for (const Example& q : pool) {
    int first = serve_query(a, model, q);
    for (int rep = 0; rep < 5; ++rep) CHECK(serve_query(a, model, q) == first);
  }
}

TEST_CASE("all-zero mask artifact serves zero-shot answers") {
  SteerableToyModel model{ToyModelParams{}};
  TaskVectorArtifact a = oracle_artifact(model, 1);
  a.mask = make_mask(kAllLayers, 4);  // nothing injected
  std::vector<Example> pool =
      make_eval_set(TaskKind::kFlip, 200, RandomSeed{4, "inf/zero"});
  for (const Example& q : pool) {
    CHECK(serve_query(a, model, q) == infer_zero_shot(model, q));
  }
  CHECK(evaluate(a, model, pool) == 0.5);  // quadrant-balanced split
}

TEST_CASE("evaluate endpoints: certain hit, certain miss, oracle") {
  SteerableToyModel model{ToyModelParams{}};
  TaskVectorArtifact a = oracle_artifact(model, 1);
  std::vector<Example> pool =
      make_eval_set(TaskKind::kFlip, 200, RandomSeed{5, "inf/ends"});

  CHECK(evaluate(a, model, pool) == 1.0);
  CHECK(evaluate(a, model, pool) >= 0.95);  // oracle non-private bar

  std::vector<Example> inverted = pool;
  for (Example& q : inverted) q.label = 1 - q.label;
  CHECK(evaluate(a, model, inverted) == 0.0);

  CHECK(evaluate(a, model, pool) == evaluate_serial(a, model, pool));
  CHECK_THROWS_AS(evaluate(a, model, {}), std::invalid_argument);
  CHECK_THROWS_AS(evaluate_serial(a, model, {}), std::invalid_argument);
}

TEST_SUITE_END();
