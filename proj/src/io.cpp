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

#include "dptv/io.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace dptv {

namespace {

constexpr char kArtifactMagic[] = "dptv-artifact";
constexpr char kDatasetMagic[] = "dptv-dataset";

// Token-stream reader with field-aware error messages.
class Scanner {
 public:
  explicit Scanner(const std::string& text) : in_(text) {}

  std::string word(const std::string& field) {
    std::string w;
    if (!(in_ >> w)) {
      throw ArtifactError("artifact field '" + field + "': unexpected end");
    }
    return w;
  }

  void expect(const std::string& field, const std::string& literal) {
    std::string w = word(field);
    if (w != literal) {
      throw ArtifactError("artifact field '" + field + "': expected '" +
                          literal + "', got '" + w + "'");
    }
  }

  long long integer(const std::string& field) {
    std::string w = word(field);
    char* end = nullptr;
    long long v = std::strtoll(w.c_str(), &end, 10);
    if (end == nullptr || *end != '\0') {
      throw ArtifactError("artifact field '" + field + "': bad integer '" +
                          w + "'");
    }
    return v;
  }

  double real(const std::string& field) {
    std::string w = word(field);
    char* end = nullptr;
    double v = std::strtod(w.c_str(), &end);
    if (end == nullptr || *end != '\0') {
      throw ArtifactError("artifact field '" + field + "': bad real '" + w +
                          "'");
    }
    return v;
  }

  bool at_end() {
    std::string w;
    return !(in_ >> w);
  }

 private:
  std::istringstream in_;
};

void require_token(const std::string& field, const std::string& value) {
  if (value.empty() ||
      value.find_first_of(" \t\r\n") != std::string::npos) {
    throw ArtifactError("artifact field '" + field +
                        "': must be a nonempty single token");
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArtifactError("cannot open '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << text;
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

}  // namespace

std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return std::string(buf);
}

std::string format_real_short(double v) {
  char buf[40];
  // Integers up to 2^53 print without an exponent ("50", not "5e+01").
  if (std::isfinite(v) && v == std::floor(v) && std::fabs(v) <= 9.007e15) {
    std::snprintf(buf, sizeof buf, "%.0f", v);
    return std::string(buf);
  }
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return std::string(buf);
}

std::string artifact_to_text(const TaskVectorArtifact& artifact) {
  artifact.validate();
  require_token("model_fingerprint", artifact.model_fingerprint);
  require_token("variant", artifact.variant);
  std::ostringstream os;
  os << kArtifactMagic << " " << artifact.format_version << "\n";
  os << "model_fingerprint " << artifact.model_fingerprint << "\n";
  os << "variant " << artifact.variant << "\n";
  os << "layers";
  for (int l : artifact.tv.layer_ids) os << " " << l;
  os << "\n";
  os << "num_heads " << artifact.tv.num_heads << "\n";
  os << "head_dim " << artifact.tv.head_dim << "\n";
  os << "mask\n";
  for (std::size_t s = 0; s < artifact.mask.layer_ids.size(); ++s) {
    for (int h = 0; h < artifact.mask.num_heads; ++h) {
      os << (h ? " " : "") << static_cast<int>(artifact.mask.at(s, h));
    }
    os << "\n";
  }
  os << "tv\n";
  for (std::size_t s = 0; s < artifact.tv.layer_ids.size(); ++s) {
    const double* p = artifact.tv.values.data() + artifact.tv.layer_offset(s);
    for (std::size_t i = 0; i < artifact.tv.slice_size(); ++i) {
      os << (i ? " " : "") << format_real(p[i]);
    }
    os << "\n";
  }
  os << "receipt " << artifact.receipt.entries.size() << "\n";
  for (const ReceiptEntry& e : artifact.receipt.entries) {
    require_token("receipt mechanism", e.mechanism);
    os << e.mechanism << " " << format_real(e.eps) << " "
       << format_real(e.delta) << "\n";
  }
  os << "totals " << format_real(artifact.receipt.total_eps) << " "
     << format_real(artifact.receipt.total_delta) << "\n";
  os << "end\n";
  return os.str();
}

TaskVectorArtifact artifact_from_text(const std::string& text) {
  Scanner sc(text);
  sc.expect("magic", kArtifactMagic);
  TaskVectorArtifact a;
  long long ver = sc.integer("format_version");
  if (ver != kArtifactFormatVersion) {
    throw ArtifactError("artifact field 'format_version': unsupported version " +
                        std::to_string(ver));
  }
  a.format_version = static_cast<int>(ver);

  sc.expect("model_fingerprint", "model_fingerprint");
  a.model_fingerprint = sc.word("model_fingerprint");
  sc.expect("variant", "variant");
  a.variant = sc.word("variant");

  sc.expect("layers", "layers");
  std::vector<int> layers;
  std::string tok = sc.word("layers");
  while (tok != "num_heads") {
    char* end = nullptr;
    long long l = std::strtoll(tok.c_str(), &end, 10);
    if (end == nullptr || *end != '\0') {
      throw ArtifactError("artifact field 'layers': bad layer id '" + tok +
                          "'");
    }
    layers.push_back(static_cast<int>(l));
    tok = sc.word("layers");
  }
  if (layers.empty()) {
    throw ArtifactError("artifact field 'layers': empty layer set");
  }
  long long heads = sc.integer("num_heads");
  sc.expect("head_dim", "head_dim");
  long long dim = sc.integer("head_dim");
  if (heads <= 0 || dim <= 0) {
    throw ArtifactError("artifact field 'num_heads/head_dim': non-positive");
  }

  sc.expect("mask", "mask");
  a.mask = make_mask(layers, static_cast<int>(heads));
  for (std::size_t i = 0; i < a.mask.bits.size(); ++i) {
    long long b = sc.integer("mask");
    if (b != 0 && b != 1) {
      throw ArtifactError("artifact field 'mask': bit must be 0 or 1");
    }
    a.mask.bits[i] = static_cast<std::uint8_t>(b);
  }

  sc.expect("tv", "tv");
  a.tv = make_tensor(layers, static_cast<int>(heads), static_cast<int>(dim));
  for (std::size_t i = 0; i < a.tv.values.size(); ++i) {
    double v = sc.real("tv");
    if (!std::isfinite(v)) {
      throw ArtifactError("artifact field 'tv': non-finite value");
    }
    a.tv.values[i] = v;
  }

  sc.expect("receipt", "receipt");
  long long entries = sc.integer("receipt");
  if (entries < 0) throw ArtifactError("artifact field 'receipt': bad count");
  double sum_eps = 0.0, sum_delta = 0.0;
  for (long long i = 0; i < entries; ++i) {
    ReceiptEntry e;
    e.mechanism = sc.word("receipt entry");
    e.eps = sc.real("receipt entry eps");
    e.delta = sc.real("receipt entry delta");
    sum_eps += e.eps;
    sum_delta += e.delta;
    a.receipt.entries.push_back(std::move(e));
  }
  sc.expect("totals", "totals");
  a.receipt.total_eps = sc.real("totals eps");
  a.receipt.total_delta = sc.real("totals delta");
  if (a.receipt.total_eps != sum_eps || a.receipt.total_delta != sum_delta) {
    throw ArtifactError(
        "artifact field 'totals': does not equal the sum of receipt entries");
  }
  sc.expect("end", "end");
  if (!sc.at_end()) {
    throw ArtifactError("artifact field 'end': trailing content");
  }
  try {
    a.validate();
  } catch (const std::exception& e) {
    throw ArtifactError(std::string("artifact invariant: ") + e.what());
  }
  return a;
}

void write_artifact(const std::string& path,
                    const TaskVectorArtifact& artifact) {
  write_file(path, artifact_to_text(artifact));
}

TaskVectorArtifact read_artifact(const std::string& path) {
  return artifact_from_text(read_file(path));
}

void write_dataset(const std::string& path, const std::string& task,
                   const std::vector<Example>& examples) {
  std::ostringstream os;
  os << kDatasetMagic << " 1\n";
  os << "task " << task << "\n";
  os << "count " << examples.size() << "\n";
  for (const Example& e : examples) {
    os << e.id << " " << e.label << " "
       << (e.role == Role::kTarget ? "t" : "d") << " " << e.features.size();
    for (double f : e.features) os << " " << format_real(f);
    os << "\n";
  }
  os << "end\n";
  write_file(path, os.str());
}

std::vector<Example> read_dataset(const std::string& path, std::string* task) {
  Scanner sc(read_file(path));
  sc.expect("magic", kDatasetMagic);
  long long ver = sc.integer("dataset version");
  if (ver != 1) throw ArtifactError("dataset version unsupported");
  sc.expect("task", "task");
  std::string t = sc.word("task");
  if (task != nullptr) *task = t;
  sc.expect("count", "count");
  long long count = sc.integer("count");
  if (count < 0) throw ArtifactError("dataset field 'count': negative");
  std::vector<Example> out;
  out.reserve(static_cast<std::size_t>(count));
  for (long long i = 0; i < count; ++i) {
    Example e;
    e.id = static_cast<std::uint64_t>(sc.integer("example id"));
    long long label = sc.integer("example label");
    if (label != 0 && label != 1) {
      throw ArtifactError("dataset field 'label': must be 0 or 1");
    }
    e.label = static_cast<int>(label);
    std::string role = sc.word("example role");
    if (role == "t") {
      e.role = Role::kTarget;
    } else if (role == "d") {
      e.role = Role::kDemonstration;
    } else {
      throw ArtifactError("dataset field 'role': must be 't' or 'd'");
    }
    long long nf = sc.integer("example feature count");
    if (nf < 0 || nf > 1000000) {
      throw ArtifactError("dataset field 'features': bad count");
    }
    e.features.resize(static_cast<std::size_t>(nf));
    for (long long k = 0; k < nf; ++k) {
      e.features[static_cast<std::size_t>(k)] = sc.real("example feature");
    }
    out.push_back(std::move(e));
  }
  sc.expect("end", "end");
  return out;
}

std::map<std::string, std::string> read_kv_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config '" + path + "'");
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string key;
    if (!(ls >> key)) continue;
    std::string value, tok;
    while (ls >> tok) {
      if (!value.empty()) value += " ";
      value += tok;
    }
    kv[key] = value;
  }
  return kv;
}

}  // namespace dptv
