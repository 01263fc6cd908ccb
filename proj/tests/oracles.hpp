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


// Brute-force reference implementations of the alignment losses. They
// share no code with the library: plain vectors, explicit loops, the
// definitions written out term by term.

#ifndef UNIVSE_TESTS_ORACLES_HPP_
#define UNIVSE_TESTS_ORACLES_HPP_

#include <algorithm>
#include <cmath>
#include <vector>

#include "objective.hpp"

namespace oracle {

using Vec = std::vector<double>;

inline Vec vec(const univse::Vector& v) { return Vec(v.data(), v.data() + v.size()); }

inline std::vector<Vec> rows(const univse::Matrix& m) {
  std::vector<Vec> out;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Vec row;
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    out.push_back(row);
  }
  return out;
}

inline double cos(const Vec& a, const Vec& b) {
  double ab = 0, aa = 0, bb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  return ab / (std::sqrt(aa) * std::sqrt(bb));
}

inline double relu(double x) { return x > 0 ? x : 0; }

// F: hardest violation, or the average hinge over every negative.
inline double F(const Vec& hinges, bool hard) {
  if (hinges.empty()) return 0;
  if (hard) {
    double best = 0;
    for (double h : hinges) best = std::max(best, relu(h));
    return best;
  }
  double sum = 0;
  for (double h : hinges) sum += relu(h);
  return sum / static_cast<double>(hinges.size());
}

inline double ranking(const std::vector<Vec>& caps, const std::vector<Vec>& imgs, const std::vector<int>& groups,
                      double margin, bool hard) {
  double total = 0;
  const std::size_t n = caps.size();
  for (std::size_t i = 0; i < n; ++i) {
    Vec to_images, to_captions;
    for (std::size_t j = 0; j < n; ++j) {
      if (groups[j] == groups[i]) continue;
      to_images.push_back(margin + cos(caps[i], imgs[j]) - cos(caps[i], imgs[i]));
      to_captions.push_back(margin + cos(caps[j], imgs[i]) - cos(caps[i], imgs[i]));
    }
    total += F(to_images, hard) + F(to_captions, hard);
  }
  return total;
}

inline Vec relevance(const Vec& u, const std::vector<Vec>& regions, double tau) {
  Vec m;
  double z = 0;
  for (const auto& r : regions) {
    m.push_back(std::exp(cos(u, r) / tau));
    z += m.back();
  }
  for (double& x : m) x /= z;
  return m;
}

inline double obj(const Vec& pos, const Vec& neg, const std::vector<Vec>& regions, double margin, double tau) {
  const Vec m = relevance(pos, regions, tau);
  double total = 0;
  for (std::size_t i = 0; i < regions.size(); ++i) total += m[i] * relu(margin + cos(neg, regions[i]) - cos(pos, regions[i]));
  return total;
}

struct Losses {
  double sent = 0, comp = 0, rel = 0, obj = 0;
};

inline Losses all(const univse::EmbeddedBatch& batch, const univse::LossConfig& cfg) {
  Losses out;
  std::vector<Vec> caps, imgs, comps, comp_imgs;
  std::vector<int> groups, comp_groups;
  for (const auto& p : batch) {
    caps.push_back(vec(p.sentence));
    imgs.push_back(vec(p.image));
    groups.push_back(p.group);
    if (p.components.size() > 0) {
      comps.push_back(vec(p.components));
      comp_imgs.push_back(vec(p.image));
      comp_groups.push_back(p.group);
    }
    const Vec v = vec(p.image);
    for (const auto& r : p.relations) {
      Vec h;
      for (const auto& n : r.negatives) h.push_back(cfg.margin + cos(vec(n), v) - cos(vec(r.positive), v));
      out.rel += F(h, cfg.hard_mining);
    }
    const auto regions = rows(p.regions);
    for (const auto& l : p.local) {
      Vec per_negative;
      for (const auto& n : l.negatives) per_negative.push_back(obj(vec(l.positive), vec(n), regions, cfg.margin, cfg.tau));
      out.obj += F(per_negative, cfg.hard_mining);
    }
  }
  out.sent = ranking(caps, imgs, groups, cfg.margin, cfg.hard_mining);
  out.comp = comps.size() < 2 ? 0 : ranking(comps, comp_imgs, comp_groups, cfg.margin, cfg.hard_mining);
  return out;
}

}  // namespace oracle

#endif  // UNIVSE_TESTS_ORACLES_HPP_
