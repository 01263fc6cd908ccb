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

// Shared numeric types, the error hierarchy and a small deterministic
// parallel-for used by the encoders and the trainer.

#ifndef UNIVSE_COMMON_HPP_
#define UNIVSE_COMMON_HPP_

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>

namespace univse {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Error categories mirror the status codes of the C API.
enum class ErrorKind {
  kInvalidArgument = 1,
  kIo = 2,
  kFormat = 3,
  kParse = 4,
  kConfig = 5,
  kNumeric = 6,
  kData = 7,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

// Raised by the caption parser; carries the offending token (0-based).
class ParseError : public Error {
 public:
  ParseError(int token_index, const std::string& message)
      : Error(ErrorKind::kParse, "token " + std::to_string(token_index) + ": " + message),
        token_index_(token_index) {}
  int token_index() const { return token_index_; }

 private:
  int token_index_;
};

// Raised by binary readers; carries the byte offset where decoding failed.
class FormatError : public Error {
 public:
  FormatError(std::size_t offset, const std::string& message)
      : Error(ErrorKind::kFormat, message + " at byte offset " + std::to_string(offset)),
        offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

// Norms below this are treated as degenerate by every normalizing op.
inline constexpr double kMinNorm = 1e-12;

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Backward of y = x / |x| given y, |x| and dL/dy.
inline Vector normalize_backward(const Vector& y, double norm, const Vector& dy) {
  return (dy - y * y.dot(dy)) / norm;
}

// Independent generator for (seed, stream), mixed through std::seed_seq.
std::mt19937_64 stream_rng(std::uint64_t seed, std::uint64_t stream);

// Number of workers: hardware concurrency capped by UNIVSE_THREADS.
int worker_count();

// Runs fn(i) for i in [0, n). Each index is handled exactly once; callers
// write results into per-index slots so the outcome does not depend on
// the number of workers.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace univse

#endif  // UNIVSE_COMMON_HPP_
