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

#include "synthcorpus.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <numeric>
#include <set>

namespace univse {

namespace {

const std::vector<std::string> kNouns = {
    "clock", "table", "wall",   "shelf", "lamp",   "chair",  "cup",    "book",   "vase",   "plant", "bottle", "bowl",
    "box",   "bag",   "basket", "mug",   "pillow", "candle", "mirror", "kettle", "teapot", "radio", "phone",  "sign"};
const std::vector<std::string> kAdjectives = {"white", "black", "red",   "wooden", "blue",    "small",
                                              "green", "large", "round", "metal",  "striped", "yellow"};
const std::vector<std::string> kRelations = {"on", "above", "below", "left-of"};

std::vector<std::string> head(const std::vector<std::string>& v, int n) { return {v.begin(), v.begin() + n}; }

Vector gaussian_vector(int n, double scale, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  Vector v(n);
  for (int i = 0; i < n; ++i) v[i] = dist(rng);
  return v * (scale / v.norm());
}

std::string capitalized(std::string s) {
  if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  return s;
}

int index_of(const std::vector<std::string>& v, const std::string& w) {
  const auto it = std::find(v.begin(), v.end(), w);
  if (it == v.end()) throw Error(ErrorKind::kInvalidArgument, "word '" + w + "' is not in the lexicon");
  return static_cast<int>(it - v.begin());
}

std::string scene_id(const std::string& split, int i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "syn-%s-%04d", split.c_str(), i);
  return buf;
}

}  // namespace

void SynthConfig::validate() const {
  if (rows < 1 || cols < 1 || depth < 1) throw Error(ErrorKind::kConfig, "synth grid and depth must be >= 1");
  if (n_objects < 2 || n_attributes < 2 || n_relations < 2) {
    throw Error(ErrorKind::kConfig, "synth lexicon sizes must be >= 2 per class");
  }
  if (n_objects > static_cast<int>(kNouns.size()) || n_attributes > static_cast<int>(kAdjectives.size()) ||
      n_relations > static_cast<int>(kRelations.size())) {
    throw Error(ErrorKind::kConfig, "synth lexicon sizes exceed the built-in word lists");
  }
  if (min_objects < 2 || max_objects < min_objects) throw Error(ErrorKind::kConfig, "synth needs 2 <= min_objects <= max_objects");
  if (max_objects > rows * cols) throw Error(ErrorKind::kConfig, "grid too small for requested object count");
  if (max_objects > n_objects || max_objects > n_attributes) {
    throw Error(ErrorKind::kConfig, "synth object count exceeds the object or attribute classes");
  }
  if (train_scenes < 0 || test_scenes < 0 || captions_per_scene < 1) throw Error(ErrorKind::kConfig, "bad synth counts");
  if (!(sigma >= 0.0) || !(attribute_scale >= 0.0)) throw Error(ErrorKind::kConfig, "synth sigma must be >= 0");
}

Lexicon make_lexicon(const SynthConfig& cfg) {
  return {head(kNouns, cfg.n_objects), head(kAdjectives, cfg.n_attributes), head(kRelations, cfg.n_relations)};
}

const std::vector<std::string>& function_words() {
  static const std::vector<std::string> words = {"a", "the", "be", "and"};
  return words;
}

Vocabulary lexicon_vocabulary(const Lexicon& lex) {
  Vocabulary v;
  for (const auto& w : function_words()) v.add(w, WordClass::kOther);
  for (const auto& w : lex.relations) v.add(w, WordClass::kRelation);
  for (const auto& w : lex.adjectives) v.add(w, WordClass::kAdjective);
  for (const auto& w : lex.nouns) v.add(w, WordClass::kNoun);
  return v;
}

SynthWorld make_world(const SynthConfig& cfg) {
  cfg.validate();
  SynthWorld w;
  w.lexicon = make_lexicon(cfg);
  auto rng = stream_rng(cfg.seed, 0);
  for (int i = 0; i < cfg.n_objects; ++i) w.object_signatures.push_back(gaussian_vector(cfg.depth, 1.0, rng));
  for (int i = 0; i < cfg.n_attributes; ++i) {
    w.attribute_offsets.push_back(gaussian_vector(cfg.depth, cfg.attribute_scale, rng));
  }
  return w;
}

std::vector<SceneFact> derive_facts(const std::vector<SceneObject>& objects, const Lexicon& lex) {
  auto has = [&](const char* r) { return std::find(lex.relations.begin(), lex.relations.end(), r) != lex.relations.end(); };
  std::vector<SceneFact> facts;
  const int n = static_cast<int>(objects.size());
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      const auto& oa = objects[a];
      const auto& ob = objects[b];
      if (oa.row == ob.row) {
        const int left = oa.col < ob.col ? a : b;
        if (has("left-of")) facts.push_back({left, "left-of", left == a ? b : a});
        continue;
      }
      const int upper = oa.row < ob.row ? a : b;
      const int lower = upper == a ? b : a;
      if (objects[upper].col == objects[lower].col && objects[lower].row - objects[upper].row == 1 && has("on")) {
        facts.push_back({upper, "on", lower});
      }
      if (has("above")) facts.push_back({upper, "above", lower});
      if (has("below")) facts.push_back({lower, "below", upper});
    }
  }
  return facts;
}

RawFeatureMap render_scene(const SceneRecord& scene, const SynthWorld& world, const SynthConfig& cfg,
                           std::mt19937_64& rng) {
  RawFeatureMap m;
  m.image_id = scene.image_id;
  m.rows = static_cast<std::uint32_t>(scene.rows);
  m.cols = static_cast<std::uint32_t>(scene.cols);
  m.depth = static_cast<std::uint32_t>(cfg.depth);
  Matrix cells = Matrix::Zero(scene.rows * scene.cols, cfg.depth);
  for (const auto& o : scene.objects) {
    cells.row(o.row * scene.cols + o.col) =
        (world.object_signatures[index_of(world.lexicon.nouns, o.noun)] +
         world.attribute_offsets[index_of(world.lexicon.adjectives, o.adjective)])
            .transpose();
  }
  std::normal_distribution<double> noise(0.0, 1.0);
  m.data.resize(static_cast<std::size_t>(cells.size()));
  for (Eigen::Index i = 0; i < cells.size(); ++i) {
    // sigma = 0 leaves cells exact (no 0 * noise rounding surprises).
    const double eps = cfg.sigma > 0.0 ? cfg.sigma * noise(rng) : 0.0;
    m.data[static_cast<std::size_t>(i)] = static_cast<float>(cells.data()[i] + eps);
  }
  return m;
}

std::vector<AnnotatedToken> realize_caption(const SceneRecord& scene, const SceneFact& fact, CaptionTemplate tmpl,
                                            SemanticGraph* gold) {
  const auto& s = scene.objects.at(fact.subject);
  const auto& o = scene.objects.at(fact.object);
  const bool subj_adj = tmpl != CaptionTemplate::kObjectAttribute;
  const bool obj_adj = tmpl != CaptionTemplate::kSubjectAttribute;
  const bool copular = tmpl == CaptionTemplate::kCopular || tmpl == CaptionTemplate::kCopularIndefinite;
  const bool definite = tmpl == CaptionTemplate::kCopular || tmpl == CaptionTemplate::kBothDefinite;
  const std::string det = definite ? "the" : "a";

  // Subject phrase: det [adj] noun.
  std::vector<AnnotatedToken> t;
  const int subj = subj_adj ? 2 : 1;
  const int after_subj = subj + 1 + (copular ? 1 : 0);  // index of the relation word
  const int obj = after_subj + 2 + (obj_adj ? 1 : 0);
  const int subj_head = copular ? obj : kRootHead;
  t.push_back(make_token(det, det, PosTag::kDet, subj, "det"));
  if (subj_adj) t.push_back(make_token(s.adjective, s.adjective, PosTag::kAdj, subj, "amod"));
  t.push_back(make_token(s.noun, s.noun, PosTag::kNoun, subj_head, copular ? "nsubj" : "root"));
  if (copular) t.push_back(make_token("is", "be", PosTag::kOther, obj, "cop", "AUX"));
  t.push_back(make_token(fact.relation, fact.relation, PosTag::kAdp, obj, "case"));
  t.push_back(make_token(det, det, PosTag::kDet, obj, "det"));
  if (obj_adj) t.push_back(make_token(o.adjective, o.adjective, PosTag::kAdj, obj, "amod"));
  t.push_back(make_token(o.noun, o.noun, PosTag::kNoun, copular ? kRootHead : subj, copular ? "root" : "nmod"));
  t[0].surface = capitalized(t[0].surface);

  if (gold) {
    *gold = SemanticGraph{};
    gold->objects = {s.noun, o.noun};
    if (subj_adj) gold->attr_pairs.emplace(s.adjective, s.noun);
    if (obj_adj) gold->attr_pairs.emplace(o.adjective, o.noun);
    gold->rel_triples.push_back({s.noun, fact.relation, o.noun});
  }
  return t;
}

const std::vector<CaptionTemplate>& corpus_templates() {
  static const std::vector<CaptionTemplate> kTemplates = {CaptionTemplate::kBothAttributes, CaptionTemplate::kCopular,
                                                          CaptionTemplate::kBothDefinite,
                                                          CaptionTemplate::kCopularIndefinite};
  return kTemplates;
}

Corpus generate_corpus(const SynthConfig& cfg) {
  const SynthWorld world = make_world(cfg);
  const Lexicon& lex = world.lexicon;
  auto rng = stream_rng(cfg.seed, 1);
  Corpus corpus;
  corpus.vocab = lexicon_vocabulary(lex);

  const std::vector<std::pair<std::string, int>> splits = {{"train", cfg.train_scenes}, {"test", cfg.test_scenes}};
  for (const auto& [split, count] : splits) {
    for (int i = 0; i < count; ++i) {
      SceneRecord scene;
      scene.image_id = scene_id(split, i);
      scene.split = split;
      scene.rows = cfg.rows;
      scene.cols = cfg.cols;
      const int k = std::uniform_int_distribution<int>(cfg.min_objects, cfg.max_objects)(rng);
      std::vector<int> cells(cfg.rows * cfg.cols), nouns(cfg.n_objects), adjs(cfg.n_attributes);
      std::iota(cells.begin(), cells.end(), 0);
      std::iota(nouns.begin(), nouns.end(), 0);
      std::iota(adjs.begin(), adjs.end(), 0);
      std::shuffle(cells.begin(), cells.end(), rng);
      std::shuffle(nouns.begin(), nouns.end(), rng);
      std::shuffle(adjs.begin(), adjs.end(), rng);
      std::vector<std::pair<int, int>> placed;  // (cell, slot)
      for (int j = 0; j < k; ++j) placed.push_back({cells[j], j});
      std::sort(placed.begin(), placed.end());
      for (const auto& [cell, slot] : placed) {
        scene.objects.push_back({cell / cfg.cols, cell % cfg.cols, lex.nouns[nouns[slot]], lex.adjectives[adjs[slot]]});
      }
      scene.facts = derive_facts(scene.objects, lex);

      std::vector<std::pair<int, CaptionTemplate>> options;
      for (int f = 0; f < static_cast<int>(scene.facts.size()); ++f) {
        for (auto tmpl : corpus_templates()) {
          options.push_back({f, tmpl});
        }
      }
      std::shuffle(options.begin(), options.end(), rng);
      std::set<std::string> texts;
      int made = 0;
      for (const auto& [f, tmpl] : options) {
        if (made == cfg.captions_per_scene) break;
        CaptionRecord rec;
        SemanticGraph gold;
        rec.tokens = realize_caption(scene, scene.facts[f], tmpl, &gold);
        rec.text = caption_text(rec.tokens);
        if (!texts.insert(rec.text).second) continue;
        rec.id = scene.image_id + "-c" + std::to_string(made);
        rec.image_id = scene.image_id;
        rec.split = split;
        rec.parsed = parse_caption(rec.tokens);
        rec.gold = std::move(gold);
        corpus.captions.push_back(std::move(rec));
        ++made;
      }
      if (made < cfg.captions_per_scene) {
        spdlog::debug("scene {} supports only {} distinct captions", scene.image_id, made);
      }
      corpus.features.push_back(render_scene(scene, world, cfg, rng));
      corpus.scenes.push_back(std::move(scene));
    }
  }
  return corpus;
}

std::vector<DisambiguationCase> generate_ambiguity_cases(const Corpus& corpus, int n, std::uint64_t seed,
                                                         const std::string& split) {
  std::vector<std::size_t> eligible;
  for (std::size_t i = 0; i < corpus.captions.size(); ++i) {
    const auto& c = corpus.captions[i];
    const SemanticGraph& g = c.gold ? *c.gold : c.parsed;
    if ((split.empty() || c.split == split) && g.objects.size() >= 2) eligible.push_back(i);
  }
  auto rng = stream_rng(seed, 2);
  std::shuffle(eligible.begin(), eligible.end(), rng);
  if (n >= 0 && static_cast<std::size_t>(n) < eligible.size()) eligible.resize(static_cast<std::size_t>(n));

  std::vector<DisambiguationCase> cases;
  for (std::size_t i : eligible) {
    const auto& c = corpus.captions[i];
    DisambiguationCase dc;
    dc.image_id = c.image_id;
    dc.caption_id = c.id;
    dc.gold = c.gold ? *c.gold : c.parsed;
    dc.entities.assign(dc.gold.objects.begin(), dc.gold.objects.end());
    for (const auto& [adj, noun] : dc.gold.attr_pairs) dc.attributes.push_back(adj);
    for (const auto& t : dc.gold.rel_triples) dc.relations.push_back(t[1]);
    cases.push_back(std::move(dc));
  }
  return cases;
}

}  // namespace univse
