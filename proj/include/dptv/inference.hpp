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

#ifndef DPTV_INFERENCE_HPP_
#define DPTV_INFERENCE_HPP_

#include <string>
#include <vector>

#include "dptv/core.hpp"
#include "dptv/toy_model.hpp"

namespace dptv {

// The released object: private mean activations, injection mask, and the
// receipt frozen at release time. Inference reads it, never writes it.
struct TaskVectorArtifact {
  int format_version = 1;
  std::string model_fingerprint;
  std::string variant = "public";  // public | private | none
  ActivationTensor tv;
  HeadMask mask;
  PrivacyReceipt receipt;

  void validate() const;  // shape agreement + tensor/mask invariants
};

// Post-processing only: injected inference for one query. Rejects artifacts
// whose fingerprint does not match the model.
int serve_query(const TaskVectorArtifact& artifact, const ModelInterface& model,
                const Example& query);

// Fraction of queries answered with the query's label. The parallel version
// is bit-identical to the serial one (integer per-query outcomes).
double evaluate(const TaskVectorArtifact& artifact, const ModelInterface& model,
                const std::vector<Example>& eval_set);
double evaluate_serial(const TaskVectorArtifact& artifact,
                       const ModelInterface& model,
                       const std::vector<Example>& eval_set);

}  // namespace dptv

#endif  // DPTV_INFERENCE_HPP_
