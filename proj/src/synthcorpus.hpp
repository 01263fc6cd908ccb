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

// Fully labeled synthetic scenes: grid layouts, region features built from
// class signatures, template captions with gold dependency annotations,
// and attachment-ambiguity cases.

#ifndef UNIVSE_SYNTHCORPUS_HPP_
#define UNIVSE_SYNTHCORPUS_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "corpus.hpp"

namespace univse {

struct SynthConfig {
  int rows = 4;
  int cols = 4;
  int depth = 32;
  int n_objects = 12;
  int n_attributes = 6;
  int n_relations = 4;
  int train_scenes = 200;
  int test_scenes = 50;
  double sigma = 0.05;
  int min_objects = 2;
  int max_objects = 2;
  int captions_per_scene = 5;
  double attribute_scale = 0.5;  // norm of an attribute offset; signatures have unit norm
  std::uint64_t seed = 1;

  // Throws Error(kConfig); a grid smaller than max_objects is reported as
  // "grid too small for requested object count".
  void validate() const;
};

struct Lexicon {
  std::vector<std::string> nouns, adjectives, relations;
};

// Leading entries of fixed word lists. Relations are drawn from
// {on, above, below, left-of} in that order.
Lexicon make_lexicon(const SynthConfig& cfg);

// Function words used by the templates and by appended attack material.
const std::vector<std::string>& function_words();

// Vocabulary over the lexicon plus function words.
Vocabulary lexicon_vocabulary(const Lexicon& lex);

struct SynthWorld {
  Lexicon lexicon;
  std::vector<Vector> object_signatures;  // unit norm, length depth
  std::vector<Vector> attribute_offsets;  // norm attribute_scale
};

SynthWorld make_world(const SynthConfig& cfg);

// Spatial facts between two placed objects (indices into objects).
std::vector<SceneFact> derive_facts(const std::vector<SceneObject>& objects, const Lexicon& lex);

// Raw map: signature(object) + offset(attribute) + N(0, sigma^2) per
// occupied cell, pure noise elsewhere.
RawFeatureMap render_scene(const SceneRecord& scene, const SynthWorld& world, const SynthConfig& cfg,
                           std::mt19937_64& rng);

enum class CaptionTemplate {
  kBothAttributes,    // "a ADJ N REL a ADJ N"
  kSubjectAttribute,  // "a ADJ N REL a N"
  kObjectAttribute,   // "a N REL a ADJ N"
  kCopular,           // "the ADJ N is REL the ADJ N"
  kBothDefinite,      // "the ADJ N REL the ADJ N"
  kCopularIndefinite, // "a ADJ N is REL a ADJ N"
};

// The templates generate_corpus draws from. Every one names both
// attributes, so a caption pins down both objects it mentions.
const std::vector<CaptionTemplate>& corpus_templates();

// Gold-annotated caption for one fact; also returns its generating graph.
std::vector<AnnotatedToken> realize_caption(const SceneRecord& scene, const SceneFact& fact, CaptionTemplate tmpl,
                                            SemanticGraph* gold = nullptr);

// Scenes, captions (parsed and gold), features and vocabulary.
Corpus generate_corpus(const SynthConfig& cfg);

struct DisambiguationCase {
  std::string image_id;
  std::string caption_id;
  std::vector<std::string> entities;
  std::vector<std::string> attributes;  // unattached adjectives
  std::vector<std::string> relations;   // unattached relation words
  SemanticGraph gold;
};

// Word bags of up to n captions with >= 2 entities from the split, chosen
// by a seeded shuffle; attachments are kept only in `gold`.
std::vector<DisambiguationCase> generate_ambiguity_cases(const Corpus& corpus, int n, std::uint64_t seed,
                                                         const std::string& split = "test");

}  // namespace univse

#endif  // UNIVSE_SYNTHCORPUS_HPP_
