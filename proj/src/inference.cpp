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

#include "dptv/inference.hpp"

#include <stdexcept>

namespace dptv {

void TaskVectorArtifact::validate() const {
  tv.validate();
  mask.validate();
  if (!mask.same_shape(tv)) {
    throw std::invalid_argument("artifact mask/tensor shape mismatch");
  }
}

int serve_query(const TaskVectorArtifact& artifact, const ModelInterface& model,
                const Example& query) {
  if (artifact.model_fingerprint != model.fingerprint()) {
    throw std::runtime_error("artifact fingerprint does not match model: '" +
                             artifact.model_fingerprint + "' vs '" +
                             model.fingerprint() + "'");
  }
  return infer_injected(model, query, artifact.mask, artifact.tv);
}

double evaluate_serial(const TaskVectorArtifact& artifact,
                       const ModelInterface& model,
                       const std::vector<Example>& eval_set) {
  if (eval_set.empty()) throw std::invalid_argument("empty eval set");
  std::size_t correct = 0;
  for (const Example& q : eval_set) {
    if (serve_query(artifact, model, q) == q.label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(eval_set.size());
}

double evaluate(const TaskVectorArtifact& artifact, const ModelInterface& model,
                const std::vector<Example>& eval_set) {
  if (eval_set.empty()) throw std::invalid_argument("empty eval set");
  // Fingerprint check once up front so the parallel loop cannot throw.
  if (artifact.model_fingerprint != model.fingerprint()) {
    throw std::runtime_error("artifact fingerprint does not match model: '" +
                             artifact.model_fingerprint + "' vs '" +
                             model.fingerprint() + "'");
  }
  std::vector<std::uint8_t> hit(eval_set.size(), 0);
  std::int64_t n = static_cast<std::int64_t>(eval_set.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    hit[i] = infer_injected(model, eval_set[i], artifact.mask, artifact.tv) ==
                     eval_set[i].label
                 ? 1
                 : 0;
  }
  std::size_t correct = 0;
  for (std::uint8_t h : hit) correct += h;
  return static_cast<double>(correct) / static_cast<double>(eval_set.size());
}

}  // namespace dptv
