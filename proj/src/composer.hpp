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

// Recurrent combiner over fused word embeddings, and the relation,
// sentence, bag-of-components and caption encodings built on it.

#ifndef UNIVSE_COMPOSER_HPP_
#define UNIVSE_COMPOSER_HPP_

#include <random>
#include <span>
#include <string>
#include <vector>

#include "common.hpp"
#include "semparse.hpp"
#include "vocab_embed.hpp"

namespace univse {

// GRU cell with hidden size equal to the embedding size:
//   z = sigmoid(W_z x + U_z h + b_z)
//   r = sigmoid(W_r x + U_r h + b_r)
//   c = tanh(W_c x + U_c (r * h) + b_c)
//   h' = (1 - z) * h + z * c
struct CombinerParams {
  Matrix w_update, w_reset, w_cand;
  Matrix u_update, u_reset, u_cand;
  Vector b_update, b_reset, b_cand;

  int dim() const { return static_cast<int>(w_update.rows()); }
};

CombinerParams init_combiner(int d, std::mt19937_64& rng);
CombinerParams zeros_like(const CombinerParams& p);

struct GruStep {
  Vector input, h_prev, update, reset, cand;
};

struct SequenceTrace {
  std::vector<GruStep> steps;
  Vector h_last;
  double norm = 0.0;
  Vector output;
};

// Runs the cell from a zero state and returns the normalized last state.
Vector combine_sequence(std::span<const Vector> inputs, const CombinerParams& p, SequenceTrace* trace = nullptr);

// Accumulates into grad; returns dL/d input for every step.
std::vector<Vector> combine_sequence_backward(const SequenceTrace& trace, const Vector& d_output,
                                              const CombinerParams& p, CombinerParams& grad);

// Everything the text side owns. The same fusion and combiner weights are
// used for every semantic level.
struct TextParams {
  WordEmbeddings words;
  FusionParams fusion;
  CombinerParams combiner;
};

TextParams zeros_like(const TextParams& p);

struct WordTrace {
  int basic_row = 0;
  int modifier_row = 0;
  FuseTrace fuse;
};

// phi over basic(basic_row) ++ modifier(modifier_row).
Vector encode_word(const TextParams& p, int basic_row, int modifier_row, WordTrace* trace = nullptr);
void encode_word_backward(const WordTrace& trace, const Vector& d_output, const TextParams& p, TextParams& grad);

struct ObjectComponent {
  int noun = 0;
};
struct AttributeComponent {
  int adj = 0;
  int noun = 0;
};
struct RelationComponent {
  int subject = 0;
  int relation = 0;
  int object = 0;
};

inline Vector encode_object(const TextParams& p, ObjectComponent c, WordTrace* trace = nullptr) {
  return encode_word(p, c.noun, c.noun, trace);
}
inline Vector encode_attribute(const TextParams& p, AttributeComponent c, WordTrace* trace = nullptr) {
  return encode_word(p, c.noun, c.adj, trace);
}

struct RelationTrace {
  WordTrace words[3];
  SequenceTrace sequence;
};

Vector encode_relation(const TextParams& p, RelationComponent c, RelationTrace* trace = nullptr);
Vector encode_relation(const Vocabulary& vocab, const TextParams& p, const std::string& subject,
                       const std::string& relation, const std::string& object);
void encode_relation_backward(const RelationTrace& trace, const Vector& d_output, const TextParams& p,
                              TextParams& grad);

struct SentenceTrace {
  std::vector<WordTrace> words;
  SequenceTrace sequence;
};

// Throws Error(kInvalidArgument) on an empty word list.
Vector encode_sentence(const TextParams& p, std::span<const int> words, SentenceTrace* trace = nullptr);
Vector encode_sentence(const Vocabulary& vocab, const TextParams& p, const std::vector<std::string>& words);
void encode_sentence_backward(const SentenceTrace& trace, const Vector& d_output, const TextParams& p,
                              TextParams& grad);

struct AggregateTrace {
  double norm = 0.0;
  Vector output;
};

// Norm(sum objects + sum attrs + sum rels), summed in exactly that order.
// Throws Error(kInvalidArgument, "no components") when all lists are empty
// and Error(kNumeric) when the sum cancels to a near-zero vector.
Vector aggregate_components(std::span<const Vector> objects, std::span<const Vector> attrs,
                            std::span<const Vector> rels, AggregateTrace* trace = nullptr);

// dL/d(component); identical for every summed component.
inline Vector aggregate_backward(const AggregateTrace& trace, const Vector& d_output) {
  return normalize_backward(trace.output, trace.norm, d_output);
}

// alpha * u_sent + (1 - alpha) * u_comp; alpha must lie in [0, 1].
Vector encode_caption(const Vector& u_sent, const Vector& u_comp, double alpha);

// Components of a graph as vocabulary ids, in the canonical summation
// order: objects, attribute pairs and triples each sorted lexically.
struct CaptionComponents {
  std::vector<ObjectComponent> objects;
  std::vector<AttributeComponent> attrs;
  std::vector<RelationComponent> rels;

  bool empty() const { return objects.empty() && attrs.empty() && rels.empty(); }
};

CaptionComponents canonical_components(const SemanticGraph& graph, const Vocabulary& vocab);

// Which families enter u_comp.
struct ComponentMask {
  bool objects = true;
  bool attrs = true;
  bool rels = true;

  bool any() const { return objects || attrs || rels; }
};

struct CaptionEncoding {
  Vector u_sent;
  Vector u_comp;  // empty when the selected families have no members
  Vector u_cap;
  std::vector<Vector> obj_embs, attr_embs, rel_embs;
  double alpha = 1.0;
};

// Full inference-time encoding of one caption. When no selected component
// exists u_cap falls back to u_sent.
CaptionEncoding encode_full_caption(const TextParams& p, std::span<const int> words,
                                    const CaptionComponents& comps, double alpha,
                                    ComponentMask mask = {});

}  // namespace univse

#endif  // UNIVSE_COMPOSER_HPP_
