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

#include "adversary.hpp"

#include <algorithm>
#include <cctype>
#include <optional>
#include <unordered_map>

namespace univse {

namespace {

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

template <typename T>
const T& pick(const std::vector<T>& v, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> dist(0, v.size() - 1);
  return v[dist(rng)];
}

bool coin(std::mt19937_64& rng) { return std::bernoulli_distribution(0.5)(rng); }

std::vector<std::string> irrelevant(const std::vector<std::string>& pool, const AttackContext& ctx) {
  std::vector<std::string> out;
  for (const auto& w : pool) {
    if (!ctx.image_words.count(w)) out.push_back(w);
  }
  return out;
}

void set_word(AnnotatedToken& t, const std::string& lemma) {
  const bool capital = !t.surface.empty() && std::isupper(static_cast<unsigned char>(t.surface[0]));
  t.lemma = lemma;
  t.surface = lemma;
  if (capital && !t.surface.empty()) t.surface[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(t.surface[0])));
}

int root_of(const std::vector<AnnotatedToken>& tokens) {
  for (int i = 0; i < static_cast<int>(tokens.size()); ++i) {
    if (tokens[i].head_index == kRootHead) return i;
  }
  throw Error(ErrorKind::kInvalidArgument, "caption has no root");
}

// Index before trailing punctuation, where appended material goes.
int append_position(const std::vector<AnnotatedToken>& tokens) {
  int p = static_cast<int>(tokens.size());
  while (p > 0 && tokens[p - 1].upos == "PUNCT") --p;
  return p;
}

// Inserts `added` at position p. Heads of `added` are given in the final
// indexing; existing heads are shifted past the insertion.
std::vector<AnnotatedToken> insert_tokens(const std::vector<AnnotatedToken>& tokens, int p,
                                          const std::vector<AnnotatedToken>& added) {
  const int m = static_cast<int>(added.size());
  std::vector<AnnotatedToken> out;
  out.reserve(tokens.size() + added.size());
  for (int i = 0; i < static_cast<int>(tokens.size()); ++i) {
    if (i == p) out.insert(out.end(), added.begin(), added.end());
    AnnotatedToken t = tokens[i];
    if (t.head_index != kRootHead && t.head_index >= p) t.head_index += m;
    out.push_back(std::move(t));
  }
  if (p == static_cast<int>(tokens.size())) out.insert(out.end(), added.begin(), added.end());
  return out;
}

int shifted(int index, int p, int m) { return index >= p ? index + m : index; }

std::vector<int> tokens_with(const std::vector<AnnotatedToken>& tokens, PosTag tag) {
  std::vector<int> out;
  for (int i = 0; i < static_cast<int>(tokens.size()); ++i) {
    if (tokens[i].pos_tag == tag) out.push_back(i);
  }
  return out;
}

int find_token(const std::vector<AnnotatedToken>& tokens, const std::string& lemma, std::initializer_list<PosTag> tags) {
  for (int i = 0; i < static_cast<int>(tokens.size()); ++i) {
    if (lower(tokens[i].lemma) != lemma) continue;
    for (auto tag : tags) {
      if (tokens[i].pos_tag == tag) return i;
    }
  }
  return -1;
}

AnnotatedToken det(const std::string& word, int head) { return make_token(word, word, PosTag::kDet, head, "det"); }

}  // namespace

const char* family_name(AttackFamily f) {
  switch (f) {
    case AttackFamily::kObject: return "object";
    case AttackFamily::kAttribute: return "attribute";
    case AttackFamily::kRelation: return "relation";
  }
  return "object";
}

const char* mode_name(AttackMode m) { return m == AttackMode::kReplace ? "replace" : "append"; }

AttackFamily parse_family(std::string_view name) {
  if (name == "object") return AttackFamily::kObject;
  if (name == "attribute") return AttackFamily::kAttribute;
  if (name == "relation") return AttackFamily::kRelation;
  throw Error(ErrorKind::kInvalidArgument, "unknown attack family '" + std::string(name) + "'");
}

void AttackSpec::validate() const {
  if (n_per_caption < 1) throw Error(ErrorKind::kConfig, "attack.n must be >= 1");
  if (families.empty()) throw Error(ErrorKind::kConfig, "no attack family selected");
}

AttackContext AttackContext::from_vocabulary(const Vocabulary& vocab) {
  AttackContext ctx;
  for (int id : vocab.ids_of_class(WordClass::kNoun)) ctx.nouns.push_back(vocab.word(id));
  for (int id : vocab.ids_of_class(WordClass::kAdjective)) ctx.adjectives.push_back(vocab.word(id));
  for (int id : vocab.ids_of_class(WordClass::kRelation)) ctx.relations.push_back(vocab.word(id));
  return ctx;
}

Attack attack_object(const std::vector<AnnotatedToken>& tokens, const SemanticGraph& graph, const AttackContext& ctx,
                     std::mt19937_64& rng) {
  const auto nouns = irrelevant(ctx.nouns, ctx);
  if (nouns.empty()) throw Error(ErrorKind::kInvalidArgument, "no irrelevant noun for the image");
  const auto slots = tokens_with(tokens, PosTag::kNoun);
  const bool can_replace = !slots.empty() && !graph.objects.empty();
  const std::string& noun = pick(nouns, rng);
  Attack out;
  if (can_replace && coin(rng)) {
    out.mode = AttackMode::kReplace;
    out.tokens = tokens;
    set_word(out.tokens[pick(slots, rng)], noun);
    return out;
  }
  // "... and a X", X conjoined to the root.
  out.mode = AttackMode::kAppend;
  const int p = append_position(tokens);
  const int root = shifted(root_of(tokens), p, 3);
  out.tokens = insert_tokens(tokens, p,
                             {make_token("and", "and", PosTag::kOther, p + 2, "cc", "CCONJ"), det("a", p + 2),
                              make_token(noun, noun, PosTag::kNoun, root, "conj")});
  return out;
}

Attack attack_attribute(const std::vector<AnnotatedToken>& tokens, const SemanticGraph&, const AttackContext& ctx,
                        std::mt19937_64& rng) {
  const auto adjectives = irrelevant(ctx.adjectives, ctx);
  if (adjectives.empty()) throw Error(ErrorKind::kInvalidArgument, "no irrelevant adjective for the image");
  const auto adj_slots = tokens_with(tokens, PosTag::kAdj);
  std::vector<int> bare;
  for (int n : tokens_with(tokens, PosTag::kNoun)) {
    bool modified = false;
    for (int a : adj_slots) {
      const int h = tokens[a].head_index;
      // Attributive modifier, or the noun is the subject of a predicative adjective.
      if (h == n || (tokens[n].head_index == a)) modified = true;
    }
    if (!modified) bare.push_back(n);
  }
  if (adj_slots.empty() && bare.empty()) throw Error(ErrorKind::kInvalidArgument, "no adjective slot and no bare noun");
  const std::string& adj = pick(adjectives, rng);
  const bool replace = bare.empty() || (!adj_slots.empty() && coin(rng));
  Attack out;
  if (replace) {
    out.mode = AttackMode::kReplace;
    out.tokens = tokens;
    set_word(out.tokens[pick(adj_slots, rng)], adj);
    return out;
  }
  out.mode = AttackMode::kAppend;
  const int noun = pick(bare, rng);
  out.tokens = insert_tokens(tokens, noun, {make_token(adj, adj, PosTag::kAdj, noun + 1, "amod")});
  return out;
}

Attack attack_relation(const std::vector<AnnotatedToken>& tokens, const SemanticGraph& graph, const AttackContext& ctx,
                       std::mt19937_64& rng) {
  const auto nouns = irrelevant(ctx.nouns, ctx);
  const auto relations = irrelevant(ctx.relations, ctx);

  // Replacement candidates: (token, replacement pool) per slot of one triple.
  std::vector<std::pair<int, const std::vector<std::string>*>> slots;
  if (!graph.rel_triples.empty()) {
    const auto& t = pick(graph.rel_triples, rng);
    if (!nouns.empty()) {
      if (int i = find_token(tokens, t[0], {PosTag::kNoun}); i >= 0) slots.push_back({i, &nouns});
      if (int i = find_token(tokens, t[2], {PosTag::kNoun}); i >= 0) slots.push_back({i, &nouns});
    }
    if (!relations.empty()) {
      if (int i = find_token(tokens, t[1], {PosTag::kAdp, PosTag::kVerb}); i >= 0) slots.push_back({i, &relations});
    }
  }
  const bool can_append = !nouns.empty() && !graph.objects.empty() && !ctx.relations.empty();
  if (slots.empty() && !can_append) throw Error(ErrorKind::kInvalidArgument, "no relation slot to attack");

  Attack out;
  if (!slots.empty() && (!can_append || coin(rng))) {
    out.mode = AttackMode::kReplace;
    out.tokens = tokens;
    const auto& [index, pool] = pick(slots, rng);
    set_word(out.tokens[index], pick(*pool, rng));
    return out;
  }

  out.mode = AttackMode::kAppend;
  std::vector<std::string> entities(graph.objects.begin(), graph.objects.end());
  const std::string& entity = pick(entities, rng);
  const std::string& relation = pick(relations.empty() ? ctx.relations : relations, rng);
  const std::string& noun = pick(nouns, rng);
  const int p = append_position(tokens);
  const int root = shifted(root_of(tokens), p, 6);
  // Entity as subject: "and the E R a X"; as object: "and a X R the E".
  // Positions p..p+5: and, det, N1, R, det, N2; N1 is conjoined to the root
  // and N2 attaches to N1 with R as its case marker.
  const bool entity_first = coin(rng);
  const std::string& first = entity_first ? entity : noun;
  const std::string& second = entity_first ? noun : entity;
  out.tokens = insert_tokens(tokens, p,
                             {make_token("and", "and", PosTag::kOther, p + 2, "cc", "CCONJ"),
                              det(entity_first ? "the" : "a", p + 2), make_token(first, first, PosTag::kNoun, root, "conj"),
                              make_token(relation, relation, PosTag::kAdp, p + 5, "case"),
                              det(entity_first ? "a" : "the", p + 5),
                              make_token(second, second, PosTag::kNoun, p + 2, "nmod")});
  return out;
}

AttackSuite build_attack_suite(const Corpus& corpus, const Vocabulary& vocab, const AttackSpec& spec,
                               const std::string& split) {
  spec.validate();
  const AttackContext base = AttackContext::from_vocabulary(vocab);
  std::unordered_map<std::string, AttackContext> contexts;
  for (const auto& c : corpus.captions) {
    auto [it, fresh] = contexts.try_emplace(c.image_id, base);
    for (const auto& w : lemma_sequence(c.tokens)) it->second.image_words.insert(w);
    it->second.image_texts.insert(lower(caption_text(c.tokens)));
  }

  AttackSuite suite;
  for (std::size_t ci = 0; ci < corpus.captions.size(); ++ci) {
    const auto& cap = corpus.captions[ci];
    if (!split.empty() && cap.split != split) continue;
    ++suite.originals;
    const auto& ctx = contexts.at(cap.image_id);
    auto rng = stream_rng(spec.seed, ci);
    std::vector<AttackFamily> usable = spec.families;
    std::set<std::string> produced;
    for (int k = 0; k < spec.n_per_caption && !usable.empty(); ++k) {
      std::optional<AdversarialCaption> fallback;
      for (int attempt = 0; attempt < 20 && !usable.empty(); ++attempt) {
        const auto family = pick(usable, rng);
        Attack a;
        try {
          switch (family) {
            case AttackFamily::kObject: a = attack_object(cap.tokens, cap.parsed, ctx, rng); break;
            case AttackFamily::kAttribute: a = attack_attribute(cap.tokens, cap.parsed, ctx, rng); break;
            case AttackFamily::kRelation: a = attack_relation(cap.tokens, cap.parsed, ctx, rng); break;
          }
        } catch (const Error&) {
          ++suite.skipped[family];
          usable.erase(std::find(usable.begin(), usable.end(), family));
          continue;
        }
        AdversarialCaption adv{ci, cap.id, family, a.mode, std::move(a.tokens), {}};
        adv.text = caption_text(adv.tokens);
        const auto key = lower(adv.text);
        if (ctx.image_texts.count(key)) continue;
        if (produced.count(key)) {
          if (!fallback) fallback = std::move(adv);
          continue;
        }
        produced.insert(key);
        fallback = std::move(adv);
        break;
      }
      if (fallback) suite.items.push_back(std::move(*fallback));
    }
  }
  return suite;
}

}  // namespace univse
