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

// Text-domain adversarial captions: one object, attribute or relation slot
// is swapped for, or extended with, a word the source image never mentions.

#ifndef UNIVSE_ADVERSARY_HPP_
#define UNIVSE_ADVERSARY_HPP_

#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "corpus.hpp"
#include "semparse.hpp"
#include "vocab_embed.hpp"

namespace univse {

enum class AttackFamily { kObject, kAttribute, kRelation };
enum class AttackMode { kReplace, kAppend };

const char* family_name(AttackFamily f);
const char* mode_name(AttackMode m);
AttackFamily parse_family(std::string_view name);

struct AttackSpec {
  std::vector<AttackFamily> families = {AttackFamily::kObject, AttackFamily::kAttribute, AttackFamily::kRelation};
  int n_per_caption = 5;
  std::uint64_t seed = 1;

  void validate() const;
};

// What one source image already mentions, plus the candidate word pools.
struct AttackContext {
  std::set<std::string> image_words;  // lemmas of every caption of the image
  std::set<std::string> image_texts;  // caption texts of the image, lowercased
  std::vector<std::string> nouns, adjectives, relations;

  static AttackContext from_vocabulary(const Vocabulary& vocab);
};

struct Attack {
  std::vector<AnnotatedToken> tokens;
  AttackMode mode = AttackMode::kReplace;
};

// Each throws Error(kInvalidArgument) when no applicable slot or no
// irrelevant word exists. The mode is drawn 50/50 among feasible modes.
Attack attack_object(const std::vector<AnnotatedToken>& tokens, const SemanticGraph& graph, const AttackContext& ctx,
                     std::mt19937_64& rng);
Attack attack_attribute(const std::vector<AnnotatedToken>& tokens, const SemanticGraph& graph,
                        const AttackContext& ctx, std::mt19937_64& rng);
Attack attack_relation(const std::vector<AnnotatedToken>& tokens, const SemanticGraph& graph, const AttackContext& ctx,
                       std::mt19937_64& rng);

struct AdversarialCaption {
  std::size_t original = 0;  // index into Corpus::captions
  std::string original_id;
  AttackFamily family = AttackFamily::kObject;
  AttackMode mode = AttackMode::kReplace;
  std::vector<AnnotatedToken> tokens;
  std::string text;
};

struct AttackSuite {
  std::vector<AdversarialCaption> items;
  std::map<AttackFamily, int> skipped;  // failed attempts by family
  std::size_t originals = 0;

  std::size_t pool_size() const { return originals + items.size(); }
};

// n_per_caption adversarials for every caption of the split ("" = all);
// each one uses a family drawn uniformly from spec.families among those
// that apply. Deterministic in spec.seed.
AttackSuite build_attack_suite(const Corpus& corpus, const Vocabulary& vocab, const AttackSpec& spec,
                               const std::string& split = {});

}  // namespace univse

#endif  // UNIVSE_ADVERSARY_HPP_
