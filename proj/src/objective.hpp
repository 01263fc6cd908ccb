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

// Alignment losses over embeddings and the factorized negative sampler.
//
// Every loss here works on already-encoded vectors and, when asked,
// returns dL/d(embedding) in a structure shaped like its input. The
// trainer chains these into the encoder backward passes.

#ifndef UNIVSE_OBJECTIVE_HPP_
#define UNIVSE_OBJECTIVE_HPP_

#include <random>
#include <set>
#include <span>
#include <tuple>
#include <vector>

#include "common.hpp"
#include "composer.hpp"

namespace univse {

struct LossConfig {
  double margin = 0.2;
  double tau = 1.0;  // relevance-map temperature used by the region loss
  double w_sent = 1.0;
  double w_comp = 1.0;
  double w_rel = 1.0;
  double w_obj = 1.0;
  bool hard_mining = true;

  // Negatives drawn per positive component.
  int neg_per_object = 1;
  int neg_per_attr = 1;
  int neg_rel_substitute = 2;
  int neg_rel_foreign = 1;

  void validate() const;
};

// Throws Error(kInvalidArgument) on a zero vector.
double cosine(const Vector& u, const Vector& v);

// Adds scale * ds/du to du and scale * ds/dv to dv.
void cosine_backward(const Vector& u, const Vector& v, double scale, Vector& du, Vector& dv);

struct RankingGrad {
  std::vector<Vector> d_captions;
  std::vector<Vector> d_images;
};

// Bidirectional hinge loss over an in-batch similarity matrix; caption i
// matches image i. Pairs with equal group ids are never used as each
// other's negatives. Hard mining takes the max hinge over negatives, else
// the mean. Throws Error(kInvalidArgument, "no negatives available") for
// fewer than two pairs.
double ranking_loss_bidirectional(std::span<const Vector> captions, std::span<const Vector> images,
                                  std::span<const int> groups, const LossConfig& cfg,
                                  RankingGrad* grad = nullptr);

// Softmax over cosine(u, region_i) / tau. regions: one row per region.
Vector relevance_map(const Vector& u, const Matrix& regions, double tau);

struct RegionLossGrad {
  Vector d_positive;
  Vector d_negative;
  Matrix d_regions;
};

// sum_i M_i * |margin + s(neg, V_i) - s(pos, V_i)|_+ with M = relevance_map(pos, V, cfg.tau).
double obj_loss(const Vector& positive, const Vector& negative, const Matrix& regions, const LossConfig& cfg,
                RegionLossGrad* grad = nullptr);

// A positive component embedding with its sampled negatives.
struct ComponentSample {
  Vector positive;
  std::vector<Vector> negatives;
};

struct EmbeddedPair {
  int group = 0;   // image identity; equal groups are not negatives
  Matrix regions;  // projected regions, one row each
  Vector image;    // pooled
  Vector sentence;
  Vector components;                     // empty when the caption has none
  std::vector<ComponentSample> local;      // nouns and attribute pairs
  std::vector<ComponentSample> relations;  // triples
};

using EmbeddedBatch = std::vector<EmbeddedPair>;

// Same shapes, all zeros.
EmbeddedBatch zeros_like(const EmbeddedBatch& batch);

struct LossBreakdown {
  double sent = 0.0;
  double comp = 0.0;
  double rel = 0.0;
  double obj = 0.0;
  double total = 0.0;
};

struct GlobalLosses {
  double rel = 0.0;
  double comp = 0.0;
  double sent = 0.0;
};

// Relation, bag-of-components and sentence alignment with pooled images.
// Relations only see textual negatives. Gradients (unweighted) are added
// into grad, which must be zeros_like(batch) or a running sum of that shape.
GlobalLosses global_alignment_losses(const EmbeddedBatch& batch, const LossConfig& cfg,
                                     EmbeddedBatch* grad = nullptr);

// Region-weighted loss summed over every noun and attribute-pair sample.
double local_alignment_loss(const EmbeddedBatch& batch, const LossConfig& cfg, EmbeddedBatch* grad = nullptr);

LossBreakdown total_loss(const EmbeddedBatch& batch, const LossConfig& cfg, EmbeddedBatch* grad = nullptr);

// Everything the captions of one image mention.
struct ImageContext {
  std::set<int> words;
  std::set<std::pair<int, int>> attr_pairs;           // (adj, noun)
  std::set<std::tuple<int, int, int>> triples;        // (subject, relation, object)

  void add(std::span<const int> caption_words, const CaptionComponents& comps);
};

struct NegativePools {
  std::vector<int> nouns, adjectives, relations;  // vocabulary ids by class
  std::vector<RelationComponent> triples;        // every triple in the corpus
};

struct Negatives {
  std::vector<std::vector<ObjectComponent>> objects;  // parallel to CaptionComponents::objects
  std::vector<std::vector<AttributeComponent>> attrs;
  std::vector<std::vector<RelationComponent>> rels;
  int skipped_families = 0;
};

// Nouns come from nouns absent from every caption of the image; attribute
// pairs and triples substitute exactly one slot and must not occur in the
// image's captions; foreign triples are whole triples of other images.
Negatives sample_negatives(const CaptionComponents& positive, const ImageContext& image, const NegativePools& pools,
                           const LossConfig& cfg, std::mt19937_64& rng);

}  // namespace univse

#endif  // UNIVSE_OBJECTIVE_HPP_
