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

#include "rosskit/io.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <functional>
#include <iterator>
#include <numeric>
#include <random>
#include <sstream>
#include <system_error>

#include "rosskit/error.h"

namespace rosskit {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kManifestFile = "manifest.json";
constexpr const char* kFormatTag = "rosskit-container";
constexpr int kFormatVersion = 1;
constexpr const char* kDtype = "f32le";

std::uint32_t ToLittleEndian(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    return ((v & 0xffu) << 24) | ((v & 0xff00u) << 8) | ((v >> 8) & 0xff00u) |
           (v >> 24);
  }
}

std::string EncodeFloats(const std::vector<float>& values) {
  std::string bytes(values.size() * 4, '\0');
  for (std::size_t i = 0; i < values.size(); ++i) {
    const std::uint32_t le = ToLittleEndian(std::bit_cast<std::uint32_t>(values[i]));
    std::memcpy(bytes.data() + i * 4, &le, 4);
  }
  return bytes;
}

std::vector<float> DecodeFloats(const std::string& bytes) {
  std::vector<float> values(bytes.size() / 4);
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::uint32_t le;
    std::memcpy(&le, bytes.data() + i * 4, 4);
    values[i] = std::bit_cast<float>(ToLittleEndian(le));
  }
  return values;
}

std::size_t ShapeProduct(const std::vector<std::size_t>& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

std::string ReadBinary(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::kNotFound, "missing file " + path.string());
  }
  return std::string(std::istreambuf_iterator<char>(in), {});
}

void WriteBinary(const fs::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIo, "failed to write " + path.string());
}

fs::path TempSibling(const fs::path& dir) {
  std::random_device rd;
  std::ostringstream name;
  name << dir.filename().string() << ".tmp-" << std::hex << rd() << rd();
  return dir.parent_path() / name.str();
}

bool SafeFilename(const std::string& name) {
  return !name.empty() && name.find('/') == std::string::npos &&
         name.find('\\') == std::string::npos && name != "." && name != "..";
}

}  // namespace

std::size_t Tensor::element_count() const { return ShapeProduct(shape); }

void SaveContainer(const TensorContainer& container, const fs::path& dir) {
  json manifest = container.manifest;
  manifest["format"] = kFormatTag;
  manifest["version"] = kFormatVersion;
  manifest["dtype"] = kDtype;
  json files = json::object();
  for (const auto& [name, tensor] : container.tensors) {
    if (!SafeFilename(name)) {
      throw Error(ErrorCode::kInvalidArgument, "bad tensor name '" + name + "'");
    }
    if (tensor.element_count() != tensor.values.size()) {
      throw Error(ErrorCode::kCorruptTensor,
                  "corrupt tensor: shape of '" + name +
                      "' does not match its value count");
    }
    files[name] = {{"filename", name + ".bin"}, {"shape", tensor.shape}};
  }
  manifest["tensor_files"] = files;

  const fs::path abs = fs::absolute(dir);
  if (!abs.parent_path().empty()) fs::create_directories(abs.parent_path());
  const fs::path tmp = TempSibling(abs);
  fs::create_directories(tmp);
  try {
    for (const auto& [name, tensor] : container.tensors) {
      WriteBinary(tmp / (name + ".bin"), EncodeFloats(tensor.values));
    }
    WriteTextFile(tmp / kManifestFile, CanonicalDump(manifest));
    std::error_code ec;
    fs::remove_all(abs, ec);
    fs::rename(tmp, abs);
  } catch (...) {
    std::error_code ec;
    fs::remove_all(tmp, ec);
    throw;
  }
}

TensorContainer LoadContainer(const fs::path& dir) {
  const fs::path manifest_path = dir / kManifestFile;
  if (!fs::exists(manifest_path)) {
    throw Error(ErrorCode::kNotFound,
                "missing manifest " + manifest_path.string());
  }
  TensorContainer out;
  json manifest;
  try {
    manifest = json::parse(ReadTextFile(manifest_path));
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kInvalidArgument,
                "manifest is not valid JSON: " + std::string(e.what()));
  }
  if (manifest.value("dtype", std::string(kDtype)) != kDtype) {
    throw Error(ErrorCode::kInvalidArgument, "unsupported dtype");
  }
  if (!manifest.contains("tensor_files") ||
      !manifest["tensor_files"].is_object()) {
    throw Error(ErrorCode::kInvalidArgument, "manifest lacks tensor_files");
  }
  for (const auto& [name, entry] : manifest["tensor_files"].items()) {
    Tensor t;
    std::string filename;
    try {
      filename = entry.at("filename").get<std::string>();
      t.shape = entry.at("shape").get<std::vector<std::size_t>>();
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kInvalidArgument,
                  "bad tensor entry '" + name + "': " + e.what());
    }
    if (!SafeFilename(filename)) {
      throw Error(ErrorCode::kInvalidArgument, "bad tensor filename");
    }
    const std::string bytes = ReadBinary(dir / filename);
    if (bytes.size() % 4 != 0 || bytes.size() / 4 != ShapeProduct(t.shape)) {
      throw Error(ErrorCode::kCorruptTensor,
                  "corrupt tensor: '" + name + "' has " +
                      std::to_string(bytes.size()) + " bytes, shape needs " +
                      std::to_string(ShapeProduct(t.shape) * 4));
    }
    t.values = DecodeFloats(bytes);
    if (!std::all_of(t.values.begin(), t.values.end(),
                     [](float v) { return std::isfinite(v); })) {
      throw Error(ErrorCode::kNonFiniteData,
                  "non-finite data in tensor '" + name + "'");
    }
    out.tensors.emplace(name, std::move(t));
  }
  manifest.erase("tensor_files");
  out.manifest = std::move(manifest);
  return out;
}

std::string_view DataKindName(DataKind k) {
  switch (k) {
    case DataKind::kImages: return "images";
    case DataKind::kFeatures: return "features";
    case DataKind::kLogits: return "logits";
  }
  return "unknown";
}

DataKind ParseDataKind(std::string_view s) {
  if (s == "images") return DataKind::kImages;
  if (s == "features") return DataKind::kFeatures;
  if (s == "logits") return DataKind::kLogits;
  throw Error(ErrorCode::kInvalidArgument, "unknown kind '" + std::string(s) + "'");
}

std::string_view DataRoleName(DataRole r) {
  switch (r) {
    case DataRole::kId: return "id";
    case DataRole::kOodNear: return "ood-near";
    case DataRole::kOodFar: return "ood-far";
  }
  return "unknown";
}

DataRole ParseDataRole(std::string_view s) {
  if (s == "id") return DataRole::kId;
  if (s == "ood-near") return DataRole::kOodNear;
  if (s == "ood-far") return DataRole::kOodFar;
  throw Error(ErrorCode::kInvalidArgument, "unknown role '" + std::string(s) + "'");
}

std::size_t Dataset::size() const {
  const Tensor& t = tensors.at("data");
  return t.shape.empty() ? 0 : t.shape[0];
}

std::size_t Dataset::dim() const {
  const Tensor& t = tensors.at("data");
  return t.shape.size() < 2 ? 1 : t.element_count() / std::max<std::size_t>(t.shape[0], 1);
}

std::vector<Vector> Dataset::Rows(const std::string& tensor) const {
  const auto it = tensors.find(tensor);
  if (it == tensors.end()) {
    throw Error(ErrorCode::kNotFound, "dataset has no tensor '" + tensor + "'");
  }
  const Tensor& t = it->second;
  const std::size_t n = t.shape.empty() ? 0 : t.shape[0];
  const std::size_t d = n == 0 ? 0 : t.values.size() / n;
  std::vector<Vector> rows(n, Vector(d));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) rows[i][j] = t.values[i * d + j];
  }
  return rows;
}

std::vector<int> Dataset::Labels() const {
  const auto it = tensors.find("labels");
  if (it == tensors.end()) {
    throw Error(ErrorCode::kNotFound, "dataset has no labels");
  }
  std::vector<int> labels;
  labels.reserve(it->second.values.size());
  for (float v : it->second.values) labels.push_back(static_cast<int>(std::lround(v)));
  return labels;
}

Tensor TensorFromRows(std::span<const Vector> rows) {
  Tensor t;
  const std::size_t d = rows.empty() ? 0 : rows[0].size();
  t.shape = {rows.size(), d};
  t.values.reserve(rows.size() * d);
  for (const Vector& r : rows) {
    if (r.size() != d) {
      throw Error(ErrorCode::kDimensionMismatch, "ragged rows");
    }
    for (double v : r) t.values.push_back(static_cast<float>(v));
  }
  return t;
}

Tensor TensorFromLabels(std::span<const int> labels) {
  Tensor t;
  t.shape = {labels.size()};
  for (int l : labels) t.values.push_back(static_cast<float>(l));
  return t;
}

namespace {

void ValidateDataset(const Dataset& d) {
  const auto it = d.tensors.find("data");
  if (it == d.tensors.end()) {
    throw Error(ErrorCode::kInvalidArgument, "dataset lacks a 'data' tensor");
  }
  if (it->second.shape != d.manifest.shape) {
    throw Error(ErrorCode::kCorruptTensor,
                "corrupt tensor: manifest shape disagrees with 'data'");
  }
  if (d.manifest.shape.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "dataset shape is empty");
  }
  if (d.manifest.kind == DataKind::kLogits && d.manifest.shape.size() != 2) {
    throw Error(ErrorCode::kInvalidArgument,
                "logits datasets must have shape [count, C]");
  }
  const auto labels = d.tensors.find("labels");
  if (labels != d.tensors.end() &&
      labels->second.shape != std::vector<std::size_t>{d.manifest.shape[0]}) {
    throw Error(ErrorCode::kCorruptTensor,
                "corrupt tensor: labels do not match row count");
  }
}

}  // namespace

void SaveDataset(const Dataset& dataset, const fs::path& dir) {
  ValidateDataset(dataset);
  TensorContainer c;
  const DatasetManifest& m = dataset.manifest;
  c.manifest = {{"name", m.name},
                {"kind", std::string(DataKindName(m.kind))},
                {"role", std::string(DataRoleName(m.role))},
                {"shape", m.shape},
                {"provenance", m.provenance},
                {"metadata", m.metadata}};
  if (m.seed) c.manifest["seed"] = *m.seed;
  c.tensors = dataset.tensors;
  SaveContainer(c, dir);
}

Dataset LoadDataset(const fs::path& dir) {
  TensorContainer c = LoadContainer(dir);
  Dataset d;
  try {
    d.manifest.name = c.manifest.at("name").get<std::string>();
    d.manifest.kind = ParseDataKind(c.manifest.at("kind").get<std::string>());
    d.manifest.role = ParseDataRole(c.manifest.at("role").get<std::string>());
    d.manifest.shape = c.manifest.at("shape").get<std::vector<std::size_t>>();
    d.manifest.provenance = c.manifest.value("provenance", std::string());
    if (c.manifest.contains("seed")) {
      d.manifest.seed = c.manifest["seed"].get<std::uint64_t>();
    }
    d.manifest.metadata = c.manifest.value("metadata", json::object());
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument,
                "bad dataset manifest in " + dir.string() + ": " + e.what());
  }
  d.tensors = std::move(c.tensors);
  ValidateDataset(d);
  return d;
}

void RequireAttackable(const Dataset& dataset) {
  if (dataset.manifest.kind == DataKind::kLogits) {
    throw Error(ErrorCode::kInvalidArgument,
                "dataset '" + dataset.manifest.name +
                    "' holds logits; attacks need images or features and a "
                    "model");
  }
}

void SaveModel(const RefModel& model, const fs::path& dir,
               const json& provenance) {
  TensorContainer c;
  c.manifest = {{"kind", "model"},
                {"layer_dims", model.layer_dims()},
                {"activation", "relu"},
                {"provenance", provenance}};
  const auto& layers = model.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    Tensor w;
    w.shape = {layers[l].out, layers[l].in};
    for (double v : layers[l].weights) w.values.push_back(static_cast<float>(v));
    Tensor b;
    b.shape = {layers[l].out};
    for (double v : layers[l].bias) b.values.push_back(static_cast<float>(v));
    c.tensors.emplace("W" + std::to_string(l), std::move(w));
    c.tensors.emplace("b" + std::to_string(l), std::move(b));
  }
  SaveContainer(c, dir);
}

RefModel LoadModel(const fs::path& dir) {
  const TensorContainer c = LoadContainer(dir);
  if (c.manifest.value("kind", std::string()) != "model") {
    throw Error(ErrorCode::kInvalidArgument,
                dir.string() + " is not a model checkpoint");
  }
  const auto dims = c.manifest.at("layer_dims").get<std::vector<std::size_t>>();
  if (dims.size() < 2) {
    throw Error(ErrorCode::kInvalidArgument, "layer_dims too short");
  }
  std::vector<DenseLayer> layers;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const auto w = c.tensors.find("W" + std::to_string(l));
    const auto b = c.tensors.find("b" + std::to_string(l));
    if (w == c.tensors.end() || b == c.tensors.end()) {
      throw Error(ErrorCode::kNotFound,
                  "checkpoint lacks layer " + std::to_string(l));
    }
    if (w->second.shape != std::vector<std::size_t>{dims[l + 1], dims[l]} ||
        b->second.shape != std::vector<std::size_t>{dims[l + 1]}) {
      throw Error(ErrorCode::kCorruptTensor,
                  "corrupt tensor: layer " + std::to_string(l) +
                      " disagrees with layer_dims");
    }
    DenseLayer layer;
    layer.in = dims[l];
    layer.out = dims[l + 1];
    layer.weights.assign(w->second.values.begin(), w->second.values.end());
    layer.bias.assign(b->second.values.begin(), b->second.values.end());
    layers.push_back(std::move(layer));
  }
  return RefModel(std::move(layers));
}

void SaveFdbdContext(const FdbdContext& ctx, const fs::path& dir) {
  TensorContainer c;
  c.manifest = {{"kind", "fdbd-context"}};
  c.tensors.emplace("class_weights", TensorFromRows(ctx.class_weights()));
  Tensor b;
  b.shape = {ctx.num_classes()};
  for (double v : ctx.class_biases()) b.values.push_back(static_cast<float>(v));
  c.tensors.emplace("class_biases", std::move(b));
  Tensor mu;
  mu.shape = {ctx.feature_dim()};
  for (double v : ctx.mu_train()) mu.values.push_back(static_cast<float>(v));
  c.tensors.emplace("mu_train", std::move(mu));
  SaveContainer(c, dir);
}

FdbdContext LoadFdbdContext(const fs::path& dir) {
  TensorContainer c = LoadContainer(dir);
  for (const char* name : {"class_weights", "class_biases", "mu_train"}) {
    if (!c.tensors.count(name)) {
      throw Error(ErrorCode::kNotFound,
                  std::string("fDBD sidecar lacks '") + name + "'");
    }
  }
  Dataset view;
  view.tensors.emplace("data", c.tensors.at("class_weights"));
  const auto& b = c.tensors.at("class_biases").values;
  const auto& mu = c.tensors.at("mu_train").values;
  return FdbdContext(view.Rows(), Vector(b.begin(), b.end()),
                     Vector(mu.begin(), mu.end()));
}

std::string CanonicalDump(const json& doc) { return doc.dump(2) + "\n"; }

void WriteTextFile(const fs::path& path, std::string_view text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  WriteBinary(path, text);
}

std::string ReadTextFile(const fs::path& path) { return ReadBinary(path); }

std::string DatasetHash(const Dataset& dataset) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](std::string_view bytes) {
    for (unsigned char c : bytes) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
  };
  mix(dataset.manifest.name);
  mix(DataKindName(dataset.manifest.kind));
  mix(DataRoleName(dataset.manifest.role));
  for (const auto& [name, t] : dataset.tensors) {
    mix(name);
    mix(EncodeFloats(t.values));
  }
  std::ostringstream out;
  out << std::hex << h;
  std::string s = out.str();
  return std::string(16 - s.size(), '0') + s;
}

}  // namespace rosskit
