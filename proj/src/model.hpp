// Copyright 2026 The UniVSE Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// The complete parameter set, a named-tensor view over it and the UVCK
// checkpoint container.

#ifndef UNIVSE_MODEL_HPP_
#define UNIVSE_MODEL_HPP_

#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "common.hpp"
#include "composer.hpp"
#include "vision.hpp"

namespace univse {

struct ModelDims {
  int d = 64;
  int d_basic = 32;
  int d_modif = 16;

  void validate() const;
};

struct ModelParams {
  TextParams text;
  ProjectionParams projection;

  int dim() const { return text.fusion.output_dim(); }
  int vocab_size() const { return static_cast<int>(text.words.basic.rows()); }
  int feature_depth() const { return projection.input_dim(); }
};

ModelParams init_model(const ModelDims& dims, int vocab_size, int feature_depth, std::mt19937_64& rng);
ModelParams zeros_like(const ModelParams& p);

// A named, contiguous tensor inside ModelParams. Names are "group.tensor"
// or a bare group name; the group is the part before the first '.'.
template <typename T>
struct BasicTensorView {
  std::string name;
  T* data = nullptr;
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;  // 0 for vectors

  Eigen::Index size() const { return cols == 0 ? rows : rows * cols; }
  std::string group() const { return name.substr(0, name.find('.')); }
  std::span<T> values() const { return {data, static_cast<std::size_t>(size())}; }
};
using TensorView = BasicTensorView<double>;
using ConstTensorView = BasicTensorView<const double>;

// Fixed order: basic, modifier, fusion.*, combiner.*, projection.*.
std::vector<TensorView> tensor_views(ModelParams& p);
std::vector<ConstTensorView> tensor_views(const ModelParams& p);

// Distinct group names in tensor order.
std::vector<std::string> parameter_groups(const ModelParams& p);

std::size_t parameter_count(const ModelParams& p);

// dst += scale * src, tensor by tensor.
void add_scaled(ModelParams& dst, const ModelParams& src, double scale);

struct NamedTensor {
  std::string name;
  std::vector<std::uint32_t> dims;  // {n} or {rows, cols}
  std::vector<double> data;

  bool operator==(const NamedTensor&) const = default;
};

// UVCK v1, little-endian:
//   "UVCK" u32 version u32 count
//   count x { u16 name_len, name, u32 ndim, ndim x u32, prod(dims) x f64 }
struct Checkpoint {
  std::vector<NamedTensor> tensors;

  const NamedTensor* find(const std::string& name) const;
  const NamedTensor& at(const std::string& name) const;  // throws Error(kFormat)
  void put(NamedTensor t);                               // replaces an existing name
  bool operator==(const Checkpoint&) const = default;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ck);
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Model tensors as checkpoint entries, and back. prefix is prepended to
// every name, so optimizer moments can share the container.
void store_params(const ModelParams& p, Checkpoint& ck, const std::string& prefix = {});
ModelParams params_from_checkpoint(const Checkpoint& ck, const std::string& prefix = {});

// Reads a tensor into a same-shaped parameter set.
void load_params_into(const Checkpoint& ck, ModelParams& p, const std::string& prefix = {});

NamedTensor scalar_tensor(const std::string& name, double value);

}  // namespace univse

#endif  // UNIVSE_MODEL_HPP_
