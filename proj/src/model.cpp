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

#include "model.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>

namespace univse {

static_assert(std::endian::native == std::endian::little, "UVCK I/O assumes a little-endian host");

namespace {

template <typename T, typename P>
std::vector<BasicTensorView<T>> views_of(P& p) {
  std::vector<BasicTensorView<T>> out;
  auto mat = [&](const char* name, auto& m) { out.push_back({name, m.data(), m.rows(), m.cols()}); };
  auto vec = [&](const char* name, auto& v) { out.push_back({name, v.data(), v.size(), 0}); };
  mat("basic", p.text.words.basic);
  mat("modifier", p.text.words.modifier);
  mat("fusion.w_gate", p.text.fusion.w_gate);
  vec("fusion.b_gate", p.text.fusion.b_gate);
  mat("fusion.w_value", p.text.fusion.w_value);
  vec("fusion.b_value", p.text.fusion.b_value);
  auto& c = p.text.combiner;
  mat("combiner.w_update", c.w_update);
  mat("combiner.w_reset", c.w_reset);
  mat("combiner.w_cand", c.w_cand);
  mat("combiner.u_update", c.u_update);
  mat("combiner.u_reset", c.u_reset);
  mat("combiner.u_cand", c.u_cand);
  vec("combiner.b_update", c.b_update);
  vec("combiner.b_reset", c.b_reset);
  vec("combiner.b_cand", c.b_cand);
  mat("projection.weight", p.projection.weight);
  vec("projection.bias", p.projection.bias);
  return out;
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  template <typename T>
  T read(const char* what) {
    T value;
    read_into(&value, sizeof(T), what);
    return value;
  }

  void read_into(void* dst, std::size_t n, const char* what) {
    if (remaining() < n) throw FormatError(pos_, std::string("truncated checkpoint while reading ") + what);
    std::memcpy(dst, bytes_.data() + pos_, n);
    pos_ += n;
  }

  std::size_t pos() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

template <typename T>
void append(std::vector<std::uint8_t>& out, T value) {
  const auto* p = reinterpret_cast<const std::uint8_t*>(&value);
  out.insert(out.end(), p, p + sizeof(T));
}

std::vector<std::uint32_t> dims_of(const ConstTensorView& v) {
  if (v.cols == 0) return {static_cast<std::uint32_t>(v.rows)};
  return {static_cast<std::uint32_t>(v.rows), static_cast<std::uint32_t>(v.cols)};
}

}  // namespace

void ModelDims::validate() const {
  if (d <= 0 || d_basic <= 0 || d_modif <= 0) throw Error(ErrorKind::kConfig, "model dimensions must be > 0");
}

ModelParams init_model(const ModelDims& dims, int vocab_size, int feature_depth, std::mt19937_64& rng) {
  dims.validate();
  if (vocab_size < 1 || feature_depth < 1) throw Error(ErrorKind::kInvalidArgument, "empty vocabulary or feature depth");
  ModelParams p;
  p.text.words = init_word_embeddings(vocab_size, dims.d_basic, dims.d_modif, rng);
  p.text.fusion = init_fusion(dims.d, dims.d_basic + dims.d_modif, rng);
  p.text.combiner = init_combiner(dims.d, rng);
  p.projection = init_projection(dims.d, feature_depth, rng);
  return p;
}

ModelParams zeros_like(const ModelParams& p) { return {zeros_like(p.text), zeros_like(p.projection)}; }

std::vector<TensorView> tensor_views(ModelParams& p) { return views_of<double>(p); }
std::vector<ConstTensorView> tensor_views(const ModelParams& p) { return views_of<const double>(p); }

std::vector<std::string> parameter_groups(const ModelParams& p) {
  std::vector<std::string> groups;
  for (const auto& v : tensor_views(p)) {
    if (groups.empty() || groups.back() != v.group()) groups.push_back(v.group());
  }
  return groups;
}

std::size_t parameter_count(const ModelParams& p) {
  std::size_t n = 0;
  for (const auto& v : tensor_views(p)) n += static_cast<std::size_t>(v.size());
  return n;
}

void add_scaled(ModelParams& dst, const ModelParams& src, double scale) {
  auto d = tensor_views(dst);
  const auto s = tensor_views(src);
  for (std::size_t t = 0; t < d.size(); ++t) {
    if (d[t].size() != s[t].size()) throw Error(ErrorKind::kInvalidArgument, "shape mismatch in " + d[t].name);
    for (Eigen::Index i = 0; i < d[t].size(); ++i) d[t].data[i] += scale * s[t].data[i];
  }
}

const NamedTensor* Checkpoint::find(const std::string& name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

const NamedTensor& Checkpoint::at(const std::string& name) const {
  const auto* t = find(name);
  if (!t) throw Error(ErrorKind::kFormat, "checkpoint has no tensor '" + name + "'");
  return *t;
}

void Checkpoint::put(NamedTensor t) {
  for (auto& existing : tensors) {
    if (existing.name == t.name) {
      existing = std::move(t);
      return;
    }
  }
  tensors.push_back(std::move(t));
}

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ck) {
  std::vector<std::uint8_t> out = {'U', 'V', 'C', 'K'};
  append<std::uint32_t>(out, kCheckpointVersion);
  append<std::uint32_t>(out, static_cast<std::uint32_t>(ck.tensors.size()));
  for (const auto& t : ck.tensors) {
    if (t.name.size() > std::numeric_limits<std::uint16_t>::max()) {
      throw Error(ErrorKind::kInvalidArgument, "tensor name too long");
    }
    std::size_t n = 1;
    for (auto d : t.dims) n *= d;
    if (n != t.data.size()) throw Error(ErrorKind::kInvalidArgument, "tensor '" + t.name + "' has inconsistent shape");
    append<std::uint16_t>(out, static_cast<std::uint16_t>(t.name.size()));
    out.insert(out.end(), t.name.begin(), t.name.end());
    append<std::uint32_t>(out, static_cast<std::uint32_t>(t.dims.size()));
    for (auto d : t.dims) append(out, d);
    const auto* p = reinterpret_cast<const std::uint8_t*>(t.data.data());
    out.insert(out.end(), p, p + t.data.size() * sizeof(double));
  }
  return out;
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  char magic[4];
  r.read_into(magic, 4, "magic");
  if (std::memcmp(magic, "UVCK", 4) != 0) throw FormatError(0, "bad magic, expected UVCK");
  const std::size_t version_at = r.pos();
  const auto version = r.read<std::uint32_t>("version");
  if (version != kCheckpointVersion) throw FormatError(version_at, "unsupported version " + std::to_string(version));
  const auto count = r.read<std::uint32_t>("tensor count");
  Checkpoint ck;
  for (std::uint32_t k = 0; k < count; ++k) {
    NamedTensor t;
    t.name.resize(r.read<std::uint16_t>("name length"));
    r.read_into(t.name.data(), t.name.size(), "tensor name");
    const std::size_t ndim_at = r.pos();
    const auto ndim = r.read<std::uint32_t>("rank");
    if (ndim == 0 || ndim > 2) throw FormatError(ndim_at, "unsupported rank " + std::to_string(ndim));
    std::uint64_t n = 1;
    for (std::uint32_t i = 0; i < ndim; ++i) {
      t.dims.push_back(r.read<std::uint32_t>("dimension"));
      n *= t.dims.back();
    }
    if (n > r.remaining() / sizeof(double)) {
      throw FormatError(r.pos(), "tensor '" + t.name + "' exceeds the file size");
    }
    t.data.resize(n);
    r.read_into(t.data.data(), n * sizeof(double), "tensor data");
    ck.tensors.push_back(std::move(t));
  }
  if (r.remaining() != 0) throw FormatError(r.pos(), "trailing bytes after last tensor");
  return ck;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
  const auto bytes = encode_checkpoint(ck);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::kIo, "write failed for " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

void store_params(const ModelParams& p, Checkpoint& ck, const std::string& prefix) {
  for (const auto& v : tensor_views(p)) {
    ck.put({prefix + v.name, dims_of(v), std::vector<double>(v.data, v.data + v.size())});
  }
}

void load_params_into(const Checkpoint& ck, ModelParams& p, const std::string& prefix) {
  for (auto& v : tensor_views(p)) {
    const auto& t = ck.at(prefix + v.name);
    if (t.dims != dims_of(ConstTensorView{v.name, v.data, v.rows, v.cols})) {
      throw Error(ErrorKind::kFormat, "tensor '" + t.name + "' has an unexpected shape");
    }
    std::copy(t.data.begin(), t.data.end(), v.data);
  }
}

ModelParams params_from_checkpoint(const Checkpoint& ck, const std::string& prefix) {
  auto dim = [&](const std::string& name, std::size_t i) -> int {
    const auto& t = ck.at(prefix + name);
    if (t.dims.size() != 2) throw Error(ErrorKind::kFormat, "tensor '" + t.name + "' must be a matrix");
    return static_cast<int>(t.dims[i]);
  };
  const int vocab = dim("basic", 0);
  const int d_basic = dim("basic", 1);
  const int d_modif = dim("modifier", 1);
  const int d = dim("fusion.w_gate", 0);
  const int depth = dim("projection.weight", 1);
  ModelParams p;
  p.text.words = {Matrix::Zero(vocab, d_basic), Matrix::Zero(vocab, d_modif)};
  p.text.fusion = {Matrix::Zero(d, d_basic + d_modif), Vector::Zero(d), Matrix::Zero(d, d_basic + d_modif),
                   Vector::Zero(d)};
  p.text.combiner.w_update = Matrix::Zero(d, d);
  p.text.combiner = zeros_like(p.text.combiner);
  p.projection = {Matrix::Zero(d, depth), Vector::Zero(d)};
  load_params_into(ck, p, prefix);
  return p;
}

NamedTensor scalar_tensor(const std::string& name, double value) { return {name, {1}, {value}}; }

}  // namespace univse
