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

#include "vision.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>

namespace univse {

static_assert(std::endian::native == std::endian::little, "UVSE I/O assumes a little-endian host");

namespace {

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  template <typename T>
  T read(const char* what) {
    T value;
    need(sizeof(T), what);
    std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }

  void read_into(void* dst, std::size_t n, const char* what) {
    need(n, what);
    std::memcpy(dst, bytes_.data() + pos_, n);
    pos_ += n;
  }

  std::size_t pos() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n, const char* what) const {
    if (remaining() < n) throw FormatError(pos_, std::string("truncated file while reading ") + what);
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

template <typename T>
void append(std::vector<std::uint8_t>& out, T value) {
  const auto* p = reinterpret_cast<const std::uint8_t*>(&value);
  out.insert(out.end(), p, p + sizeof(T));
}

}  // namespace

ProjectionParams init_projection(int d, int depth, std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(depth));
  std::uniform_real_distribution<double> dist(-bound, bound);
  ProjectionParams p{Matrix(d, depth), Vector(d)};
  for (Eigen::Index i = 0; i < p.weight.size(); ++i) p.weight.data()[i] = dist(rng);
  for (Eigen::Index i = 0; i < p.bias.size(); ++i) p.bias[i] = dist(rng);
  return p;
}

ProjectionParams zeros_like(const ProjectionParams& p) {
  return {Matrix::Zero(p.weight.rows(), p.weight.cols()), Vector::Zero(p.bias.size())};
}

ProjectedMap project(const RawFeatureMap& raw, const ProjectionParams& p, ProjectionTrace* trace) {
  if (raw.depth != static_cast<std::uint32_t>(p.input_dim())) {
    throw Error(ErrorKind::kInvalidArgument, "feature map '" + raw.image_id + "' has depth " +
                                                 std::to_string(raw.depth) + ", projection expects " +
                                                 std::to_string(p.input_dim()));
  }
  const auto n = static_cast<Eigen::Index>(raw.regions());
  if (n == 0 || raw.data.size() != raw.regions() * raw.depth) {
    throw Error(ErrorKind::kInvalidArgument, "feature map '" + raw.image_id + "' has inconsistent shape");
  }
  Matrix x = Eigen::Map<const Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
                 raw.data.data(), n, raw.depth)
                 .cast<double>();
  ProjectedMap out;
  out.rows = raw.rows;
  out.cols = raw.cols;
  out.regions = x * p.weight.transpose();
  out.regions.rowwise() += p.bias.transpose();
  const Vector mean = out.regions.colwise().mean().transpose();
  const double norm = mean.norm();
  if (!(norm >= kMinNorm)) throw Error(ErrorKind::kNumeric, "pooled image vector is degenerate");
  out.pooled = mean / norm;
  if (trace) {
    trace->raw = std::move(x);
    trace->mean = mean;
    trace->norm = norm;
  }
  return out;
}

void project_backward(const ProjectionTrace& trace, const ProjectedMap& out, const Matrix& d_regions,
                      const Vector& d_pooled, ProjectionParams& grad) {
  const auto n = static_cast<double>(trace.raw.rows());
  const Vector d_mean = normalize_backward(out.pooled, trace.norm, d_pooled) / n;
  // Pooling spreads d_mean evenly over the regions.
  grad.weight.noalias() += d_mean * trace.raw.colwise().sum();
  grad.bias += d_mean * n;
  if (d_regions.size() > 0) {
    grad.weight.noalias() += d_regions.transpose() * trace.raw;
    grad.bias += d_regions.colwise().sum().transpose();
  }
}

std::vector<RawFeatureMap> decode_feature_file(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  char magic[4];
  r.read_into(magic, 4, "magic");
  if (std::memcmp(magic, "UVSE", 4) != 0) throw FormatError(0, "bad magic, expected UVSE");
  const std::size_t version_at = r.pos();
  const auto version = r.read<std::uint32_t>("version");
  if (version != kUvseVersion) throw FormatError(version_at, "unsupported version " + std::to_string(version));
  const auto count = r.read<std::uint32_t>("record count");

  std::vector<RawFeatureMap> maps;
  for (std::uint32_t k = 0; k < count; ++k) {
    RawFeatureMap m;
    const auto id_len = r.read<std::uint16_t>("id length");
    m.image_id.resize(id_len);
    r.read_into(m.image_id.data(), id_len, "image id");
    const std::size_t shape_at = r.pos();
    m.rows = r.read<std::uint32_t>("rows");
    m.cols = r.read<std::uint32_t>("cols");
    m.depth = r.read<std::uint32_t>("depth");
    if (m.rows == 0 || m.cols == 0 || m.depth == 0) throw FormatError(shape_at, "zero-sized feature map");
    const std::uint64_t values = std::uint64_t{m.rows} * m.cols * m.depth;
    if (values > r.remaining() / sizeof(float)) {
      throw FormatError(r.pos(), "record '" + m.image_id + "' needs " + std::to_string(values * 4) +
                                     " bytes, file has " + std::to_string(r.remaining()));
    }
    const std::size_t data_at = r.pos();
    m.data.resize(values);
    r.read_into(m.data.data(), values * sizeof(float), "feature values");
    for (std::size_t i = 0; i < m.data.size(); ++i) {
      if (!std::isfinite(m.data[i])) throw FormatError(data_at + 4 * i, "non-finite feature value");
    }
    maps.push_back(std::move(m));
  }
  if (r.remaining() != 0) throw FormatError(r.pos(), "trailing bytes after last record");
  return maps;
}

std::vector<std::uint8_t> encode_feature_file(std::span<const RawFeatureMap> maps) {
  std::vector<std::uint8_t> out = {'U', 'V', 'S', 'E'};
  append<std::uint32_t>(out, kUvseVersion);
  append<std::uint32_t>(out, static_cast<std::uint32_t>(maps.size()));
  for (const auto& m : maps) {
    if (m.image_id.size() > std::numeric_limits<std::uint16_t>::max()) {
      throw Error(ErrorKind::kInvalidArgument, "image id too long");
    }
    if (m.data.size() != m.regions() * m.depth) {
      throw Error(ErrorKind::kInvalidArgument, "feature map '" + m.image_id + "' has inconsistent shape");
    }
    append<std::uint16_t>(out, static_cast<std::uint16_t>(m.image_id.size()));
    out.insert(out.end(), m.image_id.begin(), m.image_id.end());
    append(out, m.rows);
    append(out, m.cols);
    append(out, m.depth);
    const auto* p = reinterpret_cast<const std::uint8_t*>(m.data.data());
    out.insert(out.end(), p, p + m.data.size() * sizeof(float));
  }
  return out;
}

std::vector<RawFeatureMap> load_feature_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_feature_file(bytes);
}

void write_feature_file(const std::filesystem::path& path, std::span<const RawFeatureMap> maps) {
  const auto bytes = encode_feature_file(maps);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace univse
