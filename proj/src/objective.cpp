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

#include "objective.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <array>
#include <cmath>

namespace univse {

namespace {

// F over per-negative hinge values: returns the loss and fills the weight
// each negative's hinge contributes with (0 for inactive ones).
double mine(std::span<const double> hinges, bool hard, std::vector<double>& weights) {
  weights.assign(hinges.size(), 0.0);
  if (hinges.empty()) return 0.0;
  if (hard) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < hinges.size(); ++k) {
      if (hinges[k] > hinges[best]) best = k;
    }
    if (hinges[best] <= 0.0) return 0.0;
    weights[best] = 1.0;
    return hinges[best];
  }
  const double inv = 1.0 / static_cast<double>(hinges.size());
  double sum = 0.0;
  for (std::size_t k = 0; k < hinges.size(); ++k) {
    if (hinges[k] > 0.0) {
      sum += hinges[k];
      weights[k] = inv;
    }
  }
  return sum * inv;
}

template <typename T>
const T& pick(const std::vector<T>& pool, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> dist(0, pool.size() - 1);
  return pool[dist(rng)];
}

Vector zeros_sized(const Vector& v) { return Vector::Zero(v.size()); }

double sentence_level_loss(const EmbeddedBatch& batch, const LossConfig& cfg, EmbeddedBatch* grad, double scale,
                           bool use_components) {
  std::vector<Vector> captions, images;
  std::vector<int> groups;
  std::vector<std::size_t> owner;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const Vector& u = use_components ? batch[i].components : batch[i].sentence;
    if (u.size() == 0) continue;
    captions.push_back(u);
    images.push_back(batch[i].image);
    groups.push_back(batch[i].group);
    owner.push_back(i);
  }
  if (captions.size() < 2) {
    if (batch.size() < 2) throw Error(ErrorKind::kInvalidArgument, "no negatives available");
    return 0.0;
  }
  RankingGrad rg;
  const double loss = ranking_loss_bidirectional(captions, images, groups, cfg, grad ? &rg : nullptr);
  if (grad) {
    for (std::size_t k = 0; k < owner.size(); ++k) {
      auto& g = (*grad)[owner[k]];
      (use_components ? g.components : g.sentence) += scale * rg.d_captions[k];
      g.image += scale * rg.d_images[k];
    }
  }
  return loss;
}

double relation_loss(const EmbeddedBatch& batch, const LossConfig& cfg, EmbeddedBatch* grad, double scale) {
  double total = 0.0;
  std::vector<double> hinges, weights;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& pair = batch[i];
    for (std::size_t t = 0; t < pair.relations.size(); ++t) {
      const auto& sample = pair.relations[t];
      if (sample.negatives.empty()) continue;
      const double pos = cosine(sample.positive, pair.image);
      hinges.clear();
      for (const auto& neg : sample.negatives) hinges.push_back(cfg.margin + cosine(neg, pair.image) - pos);
      total += mine(hinges, cfg.hard_mining, weights);
      if (!grad) continue;
      auto& g = (*grad)[i];
      for (std::size_t k = 0; k < weights.size(); ++k) {
        if (weights[k] == 0.0) continue;
        const double w = scale * weights[k];
        cosine_backward(sample.negatives[k], pair.image, w, g.relations[t].negatives[k], g.image);
        cosine_backward(sample.positive, pair.image, -w, g.relations[t].positive, g.image);
      }
    }
  }
  return total;
}

double region_loss(const EmbeddedBatch& batch, const LossConfig& cfg, EmbeddedBatch* grad, double scale) {
  double total = 0.0;
  std::vector<double> losses, weights;
  std::vector<RegionLossGrad> grads;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& pair = batch[i];
    for (std::size_t c = 0; c < pair.local.size(); ++c) {
      const auto& sample = pair.local[c];
      if (sample.negatives.empty()) continue;
      losses.clear();
      grads.assign(sample.negatives.size(), RegionLossGrad{});
      for (std::size_t k = 0; k < sample.negatives.size(); ++k) {
        losses.push_back(obj_loss(sample.positive, sample.negatives[k], pair.regions, cfg, grad ? &grads[k] : nullptr));
      }
      total += mine(losses, cfg.hard_mining, weights);
      if (!grad) continue;
      auto& g = (*grad)[i];
      for (std::size_t k = 0; k < weights.size(); ++k) {
        if (weights[k] == 0.0) continue;
        const double w = scale * weights[k];
        g.local[c].positive += w * grads[k].d_positive;
        g.local[c].negatives[k] += w * grads[k].d_negative;
        g.regions += w * grads[k].d_regions;
      }
    }
  }
  return total;
}

}  // namespace

void LossConfig::validate() const {
  if (!(margin > 0.0)) throw Error(ErrorKind::kConfig, "loss.margin must be > 0");
  if (!(tau > 0.0)) throw Error(ErrorKind::kConfig, "loss.tau must be > 0");
  if (w_sent < 0 || w_comp < 0 || w_rel < 0 || w_obj < 0) throw Error(ErrorKind::kConfig, "loss weights must be >= 0");
  if (neg_per_object < 0 || neg_per_attr < 0 || neg_rel_substitute < 0 || neg_rel_foreign < 0) {
    throw Error(ErrorKind::kConfig, "negative counts must be >= 0");
  }
}

double cosine(const Vector& u, const Vector& v) {
  const double nu = u.norm();
  const double nv = v.norm();
  if (nu < kMinNorm || nv < kMinNorm) throw Error(ErrorKind::kInvalidArgument, "cosine of a zero vector");
  return u.dot(v) / (nu * nv);
}

void cosine_backward(const Vector& u, const Vector& v, double scale, Vector& du, Vector& dv) {
  const double nu = u.norm();
  const double nv = v.norm();
  const double s = u.dot(v) / (nu * nv);
  du += scale * (v / (nu * nv) - s * u / (nu * nu));
  dv += scale * (u / (nu * nv) - s * v / (nv * nv));
}

double ranking_loss_bidirectional(std::span<const Vector> captions, std::span<const Vector> images,
                                  std::span<const int> groups, const LossConfig& cfg, RankingGrad* grad) {
  const std::size_t n = captions.size();
  if (images.size() != n || (!groups.empty() && groups.size() != n)) {
    throw Error(ErrorKind::kInvalidArgument, "ranking loss inputs differ in length");
  }
  if (n < 2) throw Error(ErrorKind::kInvalidArgument, "no negatives available");
  auto negative = [&](std::size_t i, std::size_t j) {
    return i != j && (groups.empty() || groups[i] != groups[j]);
  };

  Matrix sim(n, n);  // sim(i, j) = s(caption i, image j)
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) sim(i, j) = cosine(captions[i], images[j]);
  }
  Matrix d_sim = Matrix::Zero(n, n);

  double total = 0.0;
  std::vector<double> hinges, weights;
  std::vector<std::size_t> index;
  for (int direction = 0; direction < 2; ++direction) {
    for (std::size_t i = 0; i < n; ++i) {
      hinges.clear();
      index.clear();
      for (std::size_t j = 0; j < n; ++j) {
        if (!negative(i, j)) continue;
        // direction 0: caption i against negative images; 1: image i against negative captions.
        const double s_neg = direction == 0 ? sim(i, j) : sim(j, i);
        hinges.push_back(cfg.margin + s_neg - sim(i, i));
        index.push_back(j);
      }
      total += mine(hinges, cfg.hard_mining, weights);
      for (std::size_t k = 0; k < weights.size(); ++k) {
        if (weights[k] == 0.0) continue;
        const std::size_t j = index[k];
        (direction == 0 ? d_sim(i, j) : d_sim(j, i)) += weights[k];
        d_sim(i, i) -= weights[k];
      }
    }
  }

  if (grad) {
    grad->d_captions.assign(n, Vector::Zero(captions[0].size()));
    grad->d_images.assign(n, Vector::Zero(images[0].size()));
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (d_sim(i, j) != 0.0) {
          cosine_backward(captions[i], images[j], d_sim(i, j), grad->d_captions[i], grad->d_images[j]);
        }
      }
    }
  }
  return total;
}

Vector relevance_map(const Vector& u, const Matrix& regions, double tau) {
  if (regions.rows() == 0) throw Error(ErrorKind::kInvalidArgument, "empty region grid");
  Vector logits(regions.rows());
  for (Eigen::Index i = 0; i < regions.rows(); ++i) logits[i] = cosine(u, regions.row(i).transpose()) / tau;
  const double top = logits.maxCoeff();
  Vector m = (logits.array() - top).exp().matrix();
  return m / m.sum();
}

double obj_loss(const Vector& positive, const Vector& negative, const Matrix& regions, const LossConfig& cfg,
                RegionLossGrad* grad) {
  const Eigen::Index n = regions.rows();
  const Vector m = relevance_map(positive, regions, cfg.tau);
  Vector s_pos(n), hinge(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vector region = regions.row(i).transpose();
    s_pos[i] = cosine(positive, region);
    hinge[i] = std::max(0.0, cfg.margin + cosine(negative, region) - s_pos[i]);
  }
  const double loss = m.dot(hinge);
  if (!grad) return loss;

  grad->d_positive = Vector::Zero(positive.size());
  grad->d_negative = Vector::Zero(negative.size());
  grad->d_regions = Matrix::Zero(n, regions.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vector region = regions.row(i).transpose();
    Vector d_region = Vector::Zero(region.size());
    // Through the softmax weights: dL/dlogit_i = M_i (hinge_i - L), logit = s_pos / tau.
    double d_s_pos = m[i] * (hinge[i] - loss) / cfg.tau;
    if (hinge[i] > 0.0) {
      d_s_pos -= m[i];
      cosine_backward(negative, region, m[i], grad->d_negative, d_region);
    }
    cosine_backward(positive, region, d_s_pos, grad->d_positive, d_region);
    grad->d_regions.row(i) = d_region.transpose();
  }
  return loss;
}

EmbeddedBatch zeros_like(const EmbeddedBatch& batch) {
  EmbeddedBatch z(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& p = batch[i];
    auto& q = z[i];
    q.group = p.group;
    q.regions = Matrix::Zero(p.regions.rows(), p.regions.cols());
    q.image = zeros_sized(p.image);
    q.sentence = zeros_sized(p.sentence);
    q.components = zeros_sized(p.components);
    auto copy_samples = [](const std::vector<ComponentSample>& from, std::vector<ComponentSample>& to) {
      to.resize(from.size());
      for (std::size_t k = 0; k < from.size(); ++k) {
        to[k].positive = zeros_sized(from[k].positive);
        to[k].negatives.clear();
        for (const auto& n : from[k].negatives) to[k].negatives.push_back(zeros_sized(n));
      }
    };
    copy_samples(p.local, q.local);
    copy_samples(p.relations, q.relations);
  }
  return z;
}

GlobalLosses global_alignment_losses(const EmbeddedBatch& batch, const LossConfig& cfg, EmbeddedBatch* grad) {
  GlobalLosses out;
  out.rel = relation_loss(batch, cfg, grad, 1.0);
  out.comp = sentence_level_loss(batch, cfg, grad, 1.0, true);
  out.sent = sentence_level_loss(batch, cfg, grad, 1.0, false);
  return out;
}

double local_alignment_loss(const EmbeddedBatch& batch, const LossConfig& cfg, EmbeddedBatch* grad) {
  return region_loss(batch, cfg, grad, 1.0);
}

LossBreakdown total_loss(const EmbeddedBatch& batch, const LossConfig& cfg, EmbeddedBatch* grad) {
  LossBreakdown out;
  out.sent = sentence_level_loss(batch, cfg, grad, cfg.w_sent, false);
  out.comp = sentence_level_loss(batch, cfg, grad, cfg.w_comp, true);
  out.rel = relation_loss(batch, cfg, grad, cfg.w_rel);
  out.obj = region_loss(batch, cfg, grad, cfg.w_obj);
  out.total = cfg.w_sent * out.sent + cfg.w_comp * out.comp + cfg.w_rel * out.rel + cfg.w_obj * out.obj;
  return out;
}

void ImageContext::add(std::span<const int> caption_words, const CaptionComponents& comps) {
  words.insert(caption_words.begin(), caption_words.end());
  for (const auto& o : comps.objects) words.insert(o.noun);
  for (const auto& a : comps.attrs) attr_pairs.emplace(a.adj, a.noun);
  for (const auto& r : comps.rels) triples.emplace(r.subject, r.relation, r.object);
}

Negatives sample_negatives(const CaptionComponents& positive, const ImageContext& image, const NegativePools& pools,
                           const LossConfig& cfg, std::mt19937_64& rng) {
  Negatives out;
  out.objects.resize(positive.objects.size());
  out.attrs.resize(positive.attrs.size());
  out.rels.resize(positive.rels.size());

  std::vector<int> absent_nouns;
  for (int n : pools.nouns) {
    if (!image.words.count(n)) absent_nouns.push_back(n);
  }
  if (!positive.objects.empty() && cfg.neg_per_object > 0) {
    if (absent_nouns.empty()) {
      spdlog::warn("negative sampling: no noun absent from the image captions, skipping noun negatives");
      ++out.skipped_families;
    } else {
      for (auto& negs : out.objects) {
        for (int k = 0; k < cfg.neg_per_object; ++k) negs.push_back({pick(absent_nouns, rng)});
      }
    }
  }

  std::bernoulli_distribution coin(0.5);
  bool attr_warned = false;
  for (std::size_t a = 0; a < positive.attrs.size(); ++a) {
    const auto pos = positive.attrs[a];
    std::vector<AttributeComponent> by_adj, by_noun;
    for (int adj : pools.adjectives) {
      if (adj != pos.adj && !image.attr_pairs.count({adj, pos.noun})) by_adj.push_back({adj, pos.noun});
    }
    for (int noun : pools.nouns) {
      if (noun != pos.noun && !image.attr_pairs.count({pos.adj, noun})) by_noun.push_back({pos.adj, noun});
    }
    for (int k = 0; k < cfg.neg_per_attr; ++k) {
      const bool adjective_first = coin(rng);
      const auto& first = adjective_first ? by_adj : by_noun;
      const auto& second = adjective_first ? by_noun : by_adj;
      if (!first.empty()) {
        out.attrs[a].push_back(pick(first, rng));
      } else if (!second.empty()) {
        out.attrs[a].push_back(pick(second, rng));
      } else if (!attr_warned) {
        spdlog::warn("negative sampling: no substitute for an attribute pair, skipping");
        ++out.skipped_families;
        attr_warned = true;
      }
    }
  }

  std::vector<RelationComponent> foreign;
  if (cfg.neg_rel_foreign > 0 && !positive.rels.empty()) {
    for (const auto& t : pools.triples) {
      if (!image.triples.count({t.subject, t.relation, t.object})) foreign.push_back(t);
    }
  }
  for (std::size_t r = 0; r < positive.rels.size(); ++r) {
    const auto pos = positive.rels[r];
    std::array<std::vector<RelationComponent>, 3> by_slot;
    auto consider = [&](RelationComponent c, int slot) {
      if (!image.triples.count({c.subject, c.relation, c.object})) by_slot[slot].push_back(c);
    };
    for (int n : pools.nouns) {
      if (n != pos.subject) consider({n, pos.relation, pos.object}, 0);
      if (n != pos.object) consider({pos.subject, pos.relation, n}, 2);
    }
    for (int w : pools.relations) {
      if (w != pos.relation) consider({pos.subject, w, pos.object}, 1);
    }
    std::uniform_int_distribution<int> slot_dist(0, 2);
    for (int k = 0; k < cfg.neg_rel_substitute; ++k) {
      const int start = slot_dist(rng);
      for (int step = 0; step < 3; ++step) {
        const auto& pool = by_slot[(start + step) % 3];
        if (!pool.empty()) {
          out.rels[r].push_back(pick(pool, rng));
          break;
        }
      }
    }
    if (!foreign.empty()) {
      for (int k = 0; k < cfg.neg_rel_foreign; ++k) out.rels[r].push_back(pick(foreign, rng));
    }
  }
  return out;
}

}  // namespace univse
