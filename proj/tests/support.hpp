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


// Fixtures shared by the unit tests and the acceptance suite.

#ifndef UNIVSE_TESTS_SUPPORT_HPP_
#define UNIVSE_TESTS_SUPPORT_HPP_

#include <cstdlib>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "objective.hpp"
#include "semparse.hpp"

namespace testing {

inline univse::Vector random_vector(int d, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  univse::Vector v(d);
  for (int i = 0; i < d; ++i) v[i] = g(rng);
  return v;
}

inline univse::Vector random_unit(int d, std::mt19937_64& rng) { return random_vector(d, rng).normalized(); }

inline univse::Matrix random_matrix(int rows, int cols, std::mt19937_64& rng) {
  univse::Matrix m(rows, cols);
  for (int r = 0; r < rows; ++r) m.row(r) = random_vector(cols, rng).transpose();
  return m;
}

inline int uniform(int lo, int hi, std::mt19937_64& rng) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

// A random embedded batch of 2..max_size pairs: repeated groups, pairs
// without components, components without negatives all occur.
inline univse::EmbeddedBatch random_batch(int d, int max_size, std::mt19937_64& rng) {
  const int n = uniform(2, max_size, rng);
  univse::EmbeddedBatch batch(n);
  for (int i = 0; i < n; ++i) {
    auto& p = batch[i];
    p.group = uniform(0, n - 1, rng);
    p.regions = random_matrix(4, d, rng);
    p.image = random_unit(d, rng);
    p.sentence = random_unit(d, rng);
    if (uniform(0, 4, rng) > 0) p.components = random_unit(d, rng);
    for (int k = uniform(0, 3, rng); k > 0; --k) {
      univse::ComponentSample s{random_unit(d, rng), {}};
      for (int j = uniform(0, 3, rng); j > 0; --j) s.negatives.push_back(random_unit(d, rng));
      p.local.push_back(s);
    }
    for (int k = uniform(0, 2, rng); k > 0; --k) {
      univse::ComponentSample s{random_unit(d, rng), {}};
      for (int j = uniform(0, 3, rng); j > 0; --j) s.negatives.push_back(random_unit(d, rng));
      p.relations.push_back(s);
    }
  }
  return batch;
}

// Every scalar of an embedded batch, in a fixed order.
inline std::vector<double*> batch_scalars(univse::EmbeddedBatch& b) {
  std::vector<double*> out;
  auto add = [&](auto& x) {
    for (Eigen::Index i = 0; i < x.size(); ++i) out.push_back(x.data() + i);
  };
  for (auto& p : b) {
    add(p.regions);
    add(p.image);
    add(p.sentence);
    add(p.components);
    for (auto& s : p.local) {
      add(s.positive);
      for (auto& n : s.negatives) add(n);
    }
    for (auto& s : p.relations) {
      add(s.positive);
      for (auto& n : s.negatives) add(n);
    }
  }
  return out;
}

// "A white clock on the wall is above a wooden table", annotated by hand
// in the Universal Dependencies style (copular predicate as root).
inline std::vector<univse::AnnotatedToken> clock_sentence() {
  return {
      univse::make_token("A", "a", univse::PosTag::kDet, 2, "det", "DET"),
      univse::make_token("white", "white", univse::PosTag::kAdj, 2, "amod", "ADJ"),
      univse::make_token("clock", "clock", univse::PosTag::kNoun, 10, "nsubj", "NOUN"),
      univse::make_token("on", "on", univse::PosTag::kAdp, 5, "case", "ADP"),
      univse::make_token("the", "the", univse::PosTag::kDet, 5, "det", "DET"),
      univse::make_token("wall", "wall", univse::PosTag::kNoun, 2, "nmod", "NOUN"),
      univse::make_token("is", "be", univse::PosTag::kOther, 10, "cop", "AUX"),
      univse::make_token("above", "above", univse::PosTag::kAdp, 10, "case", "ADP"),
      univse::make_token("a", "a", univse::PosTag::kDet, 10, "det", "DET"),
      univse::make_token("wooden", "wooden", univse::PosTag::kAdj, 10, "amod", "ADJ"),
      univse::make_token("table", "table", univse::PosTag::kNoun, univse::kRootHead, "root", "NOUN"),
  };
}

inline double rel_error(double a, double b) { return std::abs(a - b) / std::max(1e-8, std::abs(a) + std::abs(b)); }

// A fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("univse-" + tag + "-" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace testing

#endif  // UNIVSE_TESTS_SUPPORT_HPP_
