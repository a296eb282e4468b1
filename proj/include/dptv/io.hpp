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

#ifndef DPTV_IO_HPP_
#define DPTV_IO_HPP_

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "dptv/core.hpp"
#include "dptv/inference.hpp"

namespace dptv {

// Corrupt, truncated, or version-mismatched files; the message names the
// offending field. Mapped to its own process exit code by the CLI.
class ArtifactError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kArtifactFormatVersion = 1;

// Versioned structured text. All reals use 17 significant digits so a
// write -> read round-trip is bit-exact for 64-bit floats.
std::string artifact_to_text(const TaskVectorArtifact& artifact);
TaskVectorArtifact artifact_from_text(const std::string& text);
void write_artifact(const std::string& path,
                    const TaskVectorArtifact& artifact);
TaskVectorArtifact read_artifact(const std::string& path);

// Dataset files for gen-data and the --data overrides.
void write_dataset(const std::string& path, const std::string& task,
                   const std::vector<Example>& examples);
std::vector<Example> read_dataset(const std::string& path, std::string* task);

// Plain "key value" configuration lines; '#' starts a comment.
std::map<std::string, std::string> read_kv_config(const std::string& path);

// Decimal text for a double that parses back to the identical bits.
std::string format_real(double v);

// Shortest decimal that still round-trips; used for CSV cells and console
// output ("0.5" rather than its 17-digit expansion).
std::string format_real_short(double v);

}  // namespace dptv

#endif  // DPTV_IO_HPP_
