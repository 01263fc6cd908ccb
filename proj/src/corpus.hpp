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

// On-disk corpus layout and its id-level index.
//
// A corpus directory holds
//   captions.jsonl      {"id","image_id","split","caption","graph"} per line
//   annotations.conllu  one sentence per caption, sent_id = caption id
//   features.uvse       one feature map per image id
//   scenes.json         optional scene layouts (synthetic corpora only)
//   vocab.tsv           optional vocabulary

#ifndef UNIVSE_CORPUS_HPP_
#define UNIVSE_CORPUS_HPP_

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "composer.hpp"
#include "objective.hpp"
#include "semparse.hpp"
#include "vision.hpp"
#include "vocab_embed.hpp"

namespace univse {

struct CaptionRecord {
  std::string id;
  std::string image_id;
  std::string split;
  std::string text;
  std::vector<AnnotatedToken> tokens;
  SemanticGraph parsed;               // parse_caption(tokens)
  std::optional<SemanticGraph> gold;  // generating graph, when known
};

struct SceneObject {
  int row = 0;
  int col = 0;
  std::string noun;
  std::string adjective;
  bool operator==(const SceneObject&) const = default;
};

// subject and object index SceneRecord::objects.
struct SceneFact {
  int subject = 0;
  std::string relation;
  int object = 0;
  bool operator==(const SceneFact&) const = default;
};

struct SceneRecord {
  std::string image_id;
  std::string split;
  int rows = 0;
  int cols = 0;
  std::vector<SceneObject> objects;
  std::vector<SceneFact> facts;
  bool operator==(const SceneRecord&) const = default;
};

struct Corpus {
  std::vector<CaptionRecord> captions;
  std::vector<SceneRecord> scenes;  // may be empty
  std::vector<RawFeatureMap> features;
  std::optional<Vocabulary> vocab;

  const SceneRecord* scene(const std::string& image_id) const;
};

nlohmann::json graph_to_json(const SemanticGraph& g);
SemanticGraph graph_from_json(const nlohmann::json& j);

// Throws Error(kIo) for missing files and Error(kData) when a caption has no
// annotation.
Corpus load_corpus(const std::filesystem::path& dir);
void save_corpus(const std::filesystem::path& dir, const Corpus& corpus);

// Nouns, adjectives and relation words from the parsed graphs; every other
// lemma as kOther. Words are added in first-seen order.
Vocabulary build_vocabulary(const Corpus& corpus);

struct Example {
  std::size_t caption = 0;  // index into Corpus::captions
  int image = 0;            // index into Corpus::features
  std::vector<int> words;
  CaptionComponents comps;
};

// Id-level view of a corpus for one vocabulary.
struct Dataset {
  std::vector<Example> examples;                 // parallel to Corpus::captions
  std::vector<std::string> image_split;          // per feature map
  std::vector<std::vector<std::size_t>> image_examples;  // captions per image
  std::vector<ImageContext> contexts;            // per feature map
  NegativePools pools;
  std::map<std::string, int> image_index;

  std::vector<std::size_t> examples_in(const std::string& split) const;
  std::vector<int> images_in(const std::string& split) const;
};

// Throws Error(kData) listing every caption image id without features.
Dataset index_corpus(const Corpus& corpus, const Vocabulary& vocab);

std::vector<int> word_ids(const Vocabulary& vocab, const std::vector<std::string>& words);

}  // namespace univse

#endif  // UNIVSE_CORPUS_HPP_
