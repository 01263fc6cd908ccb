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

// Rule-based extraction of objects, attribute-noun pairs and relational
// triples from a dependency-annotated caption, plus CoNLL-U reading and
// writing.

#ifndef UNIVSE_SEMPARSE_HPP_
#define UNIVSE_SEMPARSE_HPP_

#include <array>
#include <filesystem>
#include <iosfwd>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace univse {

enum class PosTag { kNoun, kAdj, kVerb, kAdp, kDet, kOther };

const char* pos_name(PosTag tag);

// Maps a Universal Dependencies UPOS label onto the coarse tag set.
PosTag coarse_pos(const std::string& upos);

inline constexpr int kRootHead = -1;

struct AnnotatedToken {
  std::string surface;
  std::string lemma;
  PosTag pos_tag = PosTag::kOther;
  int head_index = kRootHead;  // 0-based, kRootHead for the root
  std::string dep_label;
  std::string upos;  // original UPOS label, kept so written files round-trip

  bool operator==(const AnnotatedToken&) const = default;
};

// Builds a token; upos defaults to the canonical name of the coarse tag.
AnnotatedToken make_token(std::string surface, std::string lemma, PosTag tag, int head,
                          std::string dep, std::string upos = {});

using AttrPair = std::pair<std::string, std::string>;             // (adjective, noun)
using RelTriple = std::array<std::string, 3>;                      // (subject, relation, object)

struct SemanticGraph {
  std::set<std::string> objects;
  std::set<AttrPair> attr_pairs;
  std::vector<RelTriple> rel_triples;  // ordered by position of the relation word

  bool operator==(const SemanticGraph&) const = default;
  bool closed() const;
};

// Throws ParseError naming the offending token for cycles, bad heads,
// self loops, or a root count other than one.
void validate_tree(const std::vector<AnnotatedToken>& tokens);

SemanticGraph parse_caption(const std::vector<AnnotatedToken>& tokens);

struct ConllSentence {
  std::string id;
  std::vector<AnnotatedToken> tokens;
};

// Sentence ids come from "# sent_id = ..." comments, else "sent-<n>".
std::vector<ConllSentence> read_conllu(std::istream& in);
std::vector<ConllSentence> load_conllu(const std::filesystem::path& path);
void write_conllu(std::ostream& out, const std::vector<ConllSentence>& sentences);

// Surface forms joined by single spaces.
std::string caption_text(const std::vector<AnnotatedToken>& tokens);

// Lowercased lemmas in token order; the word sequence the sentence encoder reads.
std::vector<std::string> lemma_sequence(const std::vector<AnnotatedToken>& tokens);

}  // namespace univse

#endif  // UNIVSE_SEMPARSE_HPP_
