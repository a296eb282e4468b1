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

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "dptv/core.hpp"
#include "dptv/rng.hpp"
#include "dptv/toy_model.hpp"

namespace {

using namespace dptv;

const std::vector<int> kAllLayers = {0, 1, 2, 3};

Chunk make_chunk(const std::vector<Example>& pool, std::size_t target,
                 std::size_t first_demo, std::size_t k) {
  Chunk c;
  c.target = pool[target];
  c.target.role = Role::kTarget;
  for (std::size_t i = 0; i < k; ++i) {
    Example d = pool[first_demo + i];
    d.role = Role::kDemonstration;
    c.demos.push_back(d);
  }
  c.validate();
  return c;
}

double eval_accuracy(const SteerableToyModel& model,
                     const std::vector<Example>& pool, const HeadMask* mask,
                     const ActivationTensor* tv) {
  std::size_t correct = 0;
  for (const Example& q : pool) {
    int pred = (mask != nullptr) ? infer_injected(model, q, *mask, *tv)
                                 : infer_zero_shot(model, q);
    if (pred == q.label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(pool.size());
}

}  // namespace

TEST_SUITE_BEGIN("toy_model");

TEST_CASE("extraction and inference are deterministic") {
  SteerableToyModel model{ToyModelParams{}};
  std::vector<Example> pool =
      make_train_set(TaskKind::kFlip, 12, RandomSeed{3, "toy/det"});
  Chunk c = make_chunk(pool, 0, 1, 8);

  ActivationTensor a = extract(model, c, kAllLayers);
  ActivationTensor b = extract(model, c, kAllLayers);
  CHECK(a.values == b.values);
  CHECK(a.layer_ids == kAllLayers);
  CHECK(a.num_heads == 4);
  CHECK(a.head_dim == 8);
  CHECK_NOTHROW(a.validate());

  std::vector<double> s1 = model.class_scores(pool[9], nullptr, nullptr);
  std::vector<double> s2 = model.class_scores(pool[9], nullptr, nullptr);
  CHECK(s1 == s2);
  CHECK(s1.size() == 2);
}

TEST_CASE("opposite demonstrated mappings give opposed task signals") {
  SteerableToyModel model{ToyModelParams{}};
  std::vector<Example> flip =
      make_train_set(TaskKind::kFlip, 12, RandomSeed{5, "toy/flip"});
  std::vector<Example> ident =
      make_train_set(TaskKind::kIdentity, 12, RandomSeed{5, "toy/ident"}, 500);

  // Same target, opposite demo mappings.
  Chunk cf = make_chunk(flip, 0, 1, 8);
  Chunk ci = cf;
  ci.demos.clear();
  for (std::size_t i = 1; i <= 8; ++i) {
    Example d = ident[i];
    d.role = Role::kDemonstration;
    ci.demos.push_back(d);
  }
  ActivationTensor af = extract(model, cf, kAllLayers);
  ActivationTensor ai = extract(model, ci, kAllLayers);

  int inspected = 0;
  for (int l = 0; l < 4; ++l) {
    for (int h = 0; h < 4; ++h) {
      if (!model.is_task_head(l, h)) continue;
      std::size_t s = af.slot_of(l);
      double dot = af.at(s, h, 0) * ai.at(s, h, 0) +
                   af.at(s, h, 1) * ai.at(s, h, 1);
      CHECK(dot < 0.0);
      ++inspected;
    }
  }
  CHECK(inspected == 3);  // default pattern: one task head per layer 1..3
}

TEST_CASE("non-task heads ignore the demonstrations bit-exactly") {
  SteerableToyModel model{ToyModelParams{}};
  std::vector<Example> pool =
      make_train_set(TaskKind::kFlip, 24, RandomSeed{8, "toy/nt"});
  Chunk a = make_chunk(pool, 0, 1, 8);
  Chunk b = make_chunk(pool, 0, 12, 8);  // same target, fresh demos

  ActivationTensor ta = extract(model, a, kAllLayers);
  ActivationTensor tb = extract(model, b, kAllLayers);
  bool task_changed = false;
  for (int l = 0; l < 4; ++l) {
    std::size_t s = ta.slot_of(l);
    for (int h = 0; h < 4; ++h) {
      for (int k = 0; k < 8; ++k) {
        if (model.is_task_head(l, h)) {
          if (ta.at(s, h, k) != tb.at(s, h, k)) task_changed = true;
        } else {
          CHECK(ta.at(s, h, k) == tb.at(s, h, k));
        }
      }
    }
  }
  CHECK(task_changed);
}

TEST_CASE("zero-shot accuracy: exactly 1/2 on flip, exactly 1 on identity") {
  SteerableToyModel model{ToyModelParams{}};
  std::vector<Example> flip_eval =
      make_eval_set(TaskKind::kFlip, 200, RandomSeed{11, "toy/ev_f"});
  std::vector<Example> ident_eval =
      make_eval_set(TaskKind::kIdentity, 200, RandomSeed{11, "toy/ev_i"});
  CHECK(eval_accuracy(model, flip_eval, nullptr, nullptr) == 0.5);
  CHECK(eval_accuracy(model, ident_eval, nullptr, nullptr) == 1.0);

  // Training records demonstrate the flip unambiguously: the zero-shot rule
  // is wrong on every one of them.
  std::vector<Example> train =
      make_train_set(TaskKind::kFlip, 64, RandomSeed{11, "toy/tr"});
  for (const Example& e : train) {
    CHECK(infer_zero_shot(model, e) != e.label);
  }
}

TEST_CASE("an all-zero mask reproduces zero-shot scores bit-exactly") {
  SteerableToyModel model{ToyModelParams{}};
  HeadMask zero_mask = make_mask(kAllLayers, 4);
  ActivationTensor tv = make_tensor(kAllLayers, 4, 8, 0.25);
  std::vector<Example> pool =
      make_eval_set(TaskKind::kFlip, 40, RandomSeed{13, "toy/zm"});
  for (const Example& q : pool) {
    std::vector<double> plain = model.class_scores(q, nullptr, nullptr);
    std::vector<double> masked = model.class_scores(q, &zero_mask, &tv);
    CHECK(plain == masked);
    CHECK(infer_injected(model, q, zero_mask, tv) == infer_zero_shot(model, q));
  }
}

TEST_CASE("oracle task vectors steer every query to the demonstrated map") {
  SteerableToyModel model{ToyModelParams{}};
  HeadMask mask = make_oracle_mask(model, kAllLayers);
  ActivationTensor flip_tv = make_oracle_tv(model, kAllLayers, 1);
  ActivationTensor ident_tv = make_oracle_tv(model, kAllLayers, 0);

  std::vector<Example> flip_eval =
      make_eval_set(TaskKind::kFlip, 200, RandomSeed{17, "toy/oracle_f"});
  std::vector<Example> ident_eval =
      make_eval_set(TaskKind::kIdentity, 200, RandomSeed{17, "toy/oracle_i"});

  CHECK(eval_accuracy(model, flip_eval, &mask, &flip_tv) == 1.0);
  CHECK(eval_accuracy(model, ident_eval, &mask, &ident_tv) == 1.0);
  // Steering toward the wrong mapping follows it instead: the identity
  // tensor on the quadrant-balanced flip split scores exactly 1/2 ...
  CHECK(eval_accuracy(model, flip_eval, &mask, &ident_tv) == 0.5);
  // ... and against complemented labels the right tensor is always wrong.
  std::vector<Example> complemented = flip_eval;
  for (Example& q : complemented) q.label = 1 - q.label;
  CHECK(eval_accuracy(model, complemented, &mask, &flip_tv) == 0.0);
}

TEST_CASE("used_activations honors the mask bit-exactly") {
  SteerableToyModel model{ToyModelParams{}};
  HeadMask mask = make_mask(kAllLayers, 4);
  mask.at(1, 1) = 1;
  mask.at(2, 0) = 1;
  RngStream rng(RandomSeed{19, "toy/used"});
  ActivationTensor tv = make_tensor(kAllLayers, 4, 8);
  for (double& v : tv.values) v = rng.next_unit() - 0.5;

  Example q = make_eval_set(TaskKind::kFlip, 4, RandomSeed{19, "toy/q"})[2];
  ActivationTensor used = model.used_activations(q, mask, tv);
  HeadMask none = make_mask(kAllLayers, 4);
  ActivationTensor own = model.used_activations(q, none, tv);

  for (std::size_t s = 0; s < 4; ++s) {
    for (int h = 0; h < 4; ++h) {
      for (int k = 0; k < 8; ++k) {
        double want = mask.at(s, h) ? tv.at(s, h, k) : own.at(s, h, k);
        CHECK(used.at(s, h, k) == want);
      }
    }
  }
}

TEST_CASE("task vector entries at unmasked heads are inert") {
  SteerableToyModel model{ToyModelParams{}};
  HeadMask mask = make_oracle_mask(model, kAllLayers);
  ActivationTensor tv = make_oracle_tv(model, kAllLayers, 1);
  ActivationTensor perturbed = tv;
  for (std::size_t s = 0; s < 4; ++s) {
    for (int h = 0; h < 4; ++h) {
      if (mask.at(s, h)) continue;
      for (int k = 0; k < 8; ++k) perturbed.at(s, h, k) += 17.0;
    }
  }
  std::vector<Example> pool =
      make_eval_set(TaskKind::kFlip, 40, RandomSeed{23, "toy/inert"});
  for (const Example& q : pool) {
    CHECK(model.class_scores(q, &mask, &tv) ==
          model.class_scores(q, &mask, &perturbed));
  }
}

TEST_CASE("example_loss is the cross-entropy of class_scores") {
  SteerableToyModel model{ToyModelParams{}};
  HeadMask mask = make_oracle_mask(model, kAllLayers);
  ActivationTensor tv = make_oracle_tv(model, kAllLayers, 1);
  std::vector<Example> pool =
      make_eval_set(TaskKind::kFlip, 8, RandomSeed{29, "toy/loss"});
  for (const Example& q : pool) {
    std::vector<double> s = model.class_scores(q, &mask, &tv);
    double m = std::max(s[0], s[1]);
    double lse = m + std::log(std::exp(s[0] - m) + std::exp(s[1] - m));
    double want = lse - s[q.label];
    CHECK(example_loss(model, q, &mask, &tv) ==
          doctest::Approx(want).epsilon(1e-12));
    CHECK(example_loss(model, q, &mask, &tv) >= 0.0);
  }
}

TEST_CASE("class_scores rejects half-specified or mismatched injection") {
  SteerableToyModel model{ToyModelParams{}};
  Example q = make_eval_set(TaskKind::kFlip, 4, RandomSeed{37, "toy/guard"})[0];
  HeadMask mask = make_mask(kAllLayers, 4);
  ActivationTensor tv = make_tensor(kAllLayers, 4, 8);

  CHECK_THROWS_AS(model.class_scores(q, &mask, nullptr),
                  std::invalid_argument);
  CHECK_THROWS_AS(model.class_scores(q, nullptr, &tv), std::invalid_argument);

  HeadMask narrow = make_mask({0, 1}, 4);
  CHECK_THROWS_AS(model.class_scores(q, &narrow, &tv), std::invalid_argument);
  ActivationTensor wrong_dim = make_tensor(kAllLayers, 4, 9);
  HeadMask wide = make_mask(kAllLayers, 4);
  CHECK_THROWS_AS(model.class_scores(q, &wide, &wrong_dim),
                  std::invalid_argument);
}

TEST_CASE("task names round-trip and reject unknowns") {
  CHECK(task_from_name("flip") == TaskKind::kFlip);
  CHECK(task_from_name("identity") == TaskKind::kIdentity);
  CHECK(task_name(TaskKind::kFlip) == "flip");
  CHECK(task_name(TaskKind::kIdentity) == "identity");
  CHECK_THROWS_AS(task_from_name("reverse"), std::invalid_argument);
}

TEST_CASE("dataset generators: determinism, ids, and shape guards") {
  RandomSeed seed{31, "toy/gen"};
  std::vector<Example> a = make_train_set(TaskKind::kFlip, 10, seed, 100);
  std::vector<Example> b = make_train_set(TaskKind::kFlip, 10, seed, 100);
  REQUIRE(a.size() == 10);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].id == b[i].id);
    CHECK(a[i].id == 100 + i);
    CHECK(a[i].label == b[i].label);
    CHECK(a[i].features == b[i].features);
  }
  CHECK_THROWS_AS(make_eval_set(TaskKind::kFlip, 10, seed),
                  std::invalid_argument);
  std::vector<Example> ev = make_eval_set(TaskKind::kFlip, 8, seed);
  CHECK(ev.size() == 8);
  CHECK(ev[0].id == 1000000000ull);
}

TEST_CASE("bandit configuration exposes one helpful and one harmful site") {
  ToyModelParams p = bandit_model_params();
  SteerableToyModel model{p};
  CHECK(model.num_layers() == 1);
  CHECK(model.num_heads() == 2);
  CHECK(model.is_task_head(0, 0));
  CHECK_FALSE(model.is_task_head(0, 1));
}

TEST_CASE("fingerprints identify the model configuration") {
  SteerableToyModel a{ToyModelParams{}};
  SteerableToyModel b{ToyModelParams{}};
  CHECK(a.fingerprint() == b.fingerprint());
  CHECK_FALSE(a.fingerprint().empty());

  ToyModelParams other;
  other.num_layers = 5;
  SteerableToyModel c{other};
  CHECK(a.fingerprint() != c.fingerprint());
  SteerableToyModel d{bandit_model_params()};
  CHECK(a.fingerprint() != d.fingerprint());
}

TEST_SUITE_END();
