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

// Region feature maps: the UVSE container, the 1x1 projection into the
// joint space and mean pooling to a whole-image vector.

#ifndef UNIVSE_VISION_HPP_
#define UNIVSE_VISION_HPP_

#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "common.hpp"

namespace univse {

struct RawFeatureMap {
  std::string image_id;
  std::uint32_t rows = 0;
  std::uint32_t cols = 0;
  std::uint32_t depth = 0;
  std::vector<float> data;  // rows * cols * depth, row-major, depth fastest

  std::size_t regions() const { return static_cast<std::size_t>(rows) * cols; }
  std::span<const float> region(std::size_t i) const { return {data.data() + i * depth, depth}; }
  bool operator==(const RawFeatureMap&) const = default;
};

struct ProjectionParams {
  Matrix weight;  // d x D_in
  Vector bias;    // d

  int output_dim() const { return static_cast<int>(weight.rows()); }
  int input_dim() const { return static_cast<int>(weight.cols()); }
};

ProjectionParams init_projection(int d, int depth, std::mt19937_64& rng);
ProjectionParams zeros_like(const ProjectionParams& p);

struct ProjectedMap {
  std::uint32_t rows = 0;
  std::uint32_t cols = 0;
  Matrix regions;  // (rows * cols) x d, one row per region; not normalized
  Vector pooled;   // Norm(mean of regions)
};

struct ProjectionTrace {
  Matrix raw;  // (rows * cols) x D_in
  Vector mean;
  double norm = 0.0;
};

// Throws Error(kInvalidArgument) when the map depth differs from the
// projection input size, Error(kNumeric) when pooling is degenerate.
ProjectedMap project(const RawFeatureMap& raw, const ProjectionParams& p, ProjectionTrace* trace = nullptr);

// d_regions may be empty (treated as zero).
void project_backward(const ProjectionTrace& trace, const ProjectedMap& out, const Matrix& d_regions,
                      const Vector& d_pooled, ProjectionParams& grad);

// UVSE v1 container, little-endian:
//   "UVSE" u32 version u32 count
//   count x { u16 id_len, id bytes, u32 R, u32 C, u32 D, R*C*D f32 }
inline constexpr std::uint32_t kUvseVersion = 1;

std::vector<RawFeatureMap> decode_feature_file(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_feature_file(std::span<const RawFeatureMap> maps);

std::vector<RawFeatureMap> load_feature_file(const std::filesystem::path& path);
void write_feature_file(const std::filesystem::path& path, std::span<const RawFeatureMap> maps);

}  // namespace univse

#endif  // UNIVSE_VISION_HPP_
