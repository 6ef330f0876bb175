// Copyright 2026 The rosskit Authors
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

#ifndef ROSSKIT_IO_H_
#define ROSSKIT_IO_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "rosskit/basescores.h"
#include "rosskit/numerics.h"
#include "rosskit/refmodel.h"

namespace rosskit {

// On-disk container: a directory holding manifest.json plus one raw
// row-major little-endian float32 file per named tensor. See
// docs/container_format.md.

struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<float> values;

  std::size_t element_count() const;
};

struct TensorContainer {
  nlohmann::json manifest;  // everything except "tensor_files"
  std::map<std::string, Tensor> tensors;
};

// Writes into a sibling temporary directory, then renames over `dir`.
void SaveContainer(const TensorContainer& container,
                   const std::filesystem::path& dir);

// Validates that every file exists, has exactly prod(shape) * 4 bytes, and
// holds only finite values.
TensorContainer LoadContainer(const std::filesystem::path& dir);

enum class DataKind { kImages, kFeatures, kLogits };
enum class DataRole { kId, kOodNear, kOodFar };

std::string_view DataKindName(DataKind k);
DataKind ParseDataKind(std::string_view s);
std::string_view DataRoleName(DataRole r);
DataRole ParseDataRole(std::string_view s);

struct DatasetManifest {
  std::string name;
  DataKind kind = DataKind::kFeatures;
  DataRole role = DataRole::kId;
  std::vector<std::size_t> shape;  // shape of the "data" tensor
  std::optional<std::uint64_t> seed;
  std::string provenance;
  nlohmann::json metadata = nlohmann::json::object();
};

// Tensors: "data" (count x dim) is required; "labels" (count) and
// "features" are optional.
struct Dataset {
  DatasetManifest manifest;
  std::map<std::string, Tensor> tensors;

  std::size_t size() const;
  std::size_t dim() const;
  std::vector<Vector> Rows(const std::string& tensor = "data") const;
  std::vector<int> Labels() const;
  bool has_labels() const { return tensors.count("labels") > 0; }
};

Tensor TensorFromRows(std::span<const Vector> rows);
Tensor TensorFromLabels(std::span<const int> labels);

void SaveDataset(const Dataset& dataset, const std::filesystem::path& dir);
Dataset LoadDataset(const std::filesystem::path& dir);

// Attack paths need raw inputs and a model; logits datasets only support
// clean scoring. Throws Error(kInvalidArgument) for kind == kLogits.
void RequireAttackable(const Dataset& dataset);

// Model checkpoint: tensors W<i>/b<i> per layer, manifest with layer_dims.
void SaveModel(const RefModel& model, const std::filesystem::path& dir,
               const nlohmann::json& provenance = nlohmann::json::object());
RefModel LoadModel(const std::filesystem::path& dir);

// fDBD sidecar: class_weights (C x D), class_biases (C), mu_train (D).
void SaveFdbdContext(const FdbdContext& ctx, const std::filesystem::path& dir);
FdbdContext LoadFdbdContext(const std::filesystem::path& dir);

// Canonical JSON text (sorted keys, 2-space indent, trailing newline).
std::string CanonicalDump(const nlohmann::json& doc);
void WriteTextFile(const std::filesystem::path& path, std::string_view text);
std::string ReadTextFile(const std::filesystem::path& path);

// FNV-1a 64 over the manifest and tensor bytes, hex encoded.
std::string DatasetHash(const Dataset& dataset);

}  // namespace rosskit

#endif  // ROSSKIT_IO_H_
