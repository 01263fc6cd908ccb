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


#include "doctest.h"
#include "support.hpp"
#include "synthcorpus.hpp"

using namespace univse;

namespace {

SynthConfig small_config() {
  SynthConfig cfg;
  cfg.train_scenes = 12;
  cfg.test_scenes = 6;
  return cfg;
}

}  // namespace

TEST_CASE("configuration checks") {
  SynthConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.rows = 1;
  cfg.cols = 1;
  try {
    cfg.validate();
    FAIL("expected a config error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kConfig);
    CHECK(std::string(e.what()) == "grid too small for requested object count");
  }
  cfg = SynthConfig{};
  cfg.n_objects = 99;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = SynthConfig{};
  cfg.min_objects = 3;
  cfg.max_objects = 2;
  CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("noise-free single object renders exactly its signature sum") {
  SynthConfig cfg;
  cfg.sigma = 0.0;
  const SynthWorld world = make_world(cfg);
  SceneRecord scene{"one", "train", 4, 4, {{1, 2, "lamp", "red"}}, {}};
  std::mt19937_64 rng(1);
  const RawFeatureMap m = render_scene(scene, world, cfg, rng);
  const Vector expected = world.object_signatures[4] + world.attribute_offsets[2];
  int nonzero = 0;
  for (std::size_t cell = 0; cell < m.regions(); ++cell) {
    const auto r = m.region(cell);
    bool any = false;
    for (float f : r) any = any || f != 0.0f;
    if (!any) continue;
    ++nonzero;
    CHECK(cell == 1 * 4 + 2);
    for (int k = 0; k < cfg.depth; ++k) CHECK(r[k] == static_cast<float>(expected[k]));
  }
  CHECK(nonzero == 1);
}

TEST_CASE("spatial facts") {
  const Lexicon lex = make_lexicon(SynthConfig{});
  SUBCASE("same row") {
    const auto f = derive_facts({{0, 3, "cup", "red"}, {0, 1, "box", "blue"}}, lex);
    REQUIRE(f.size() == 1);
    CHECK(f[0] == SceneFact{1, "left-of", 0});
  }
  SUBCASE("directly stacked") {
    const auto f = derive_facts({{2, 1, "cup", "red"}, {1, 1, "box", "blue"}}, lex);
    CHECK(std::find(f.begin(), f.end(), SceneFact{1, "on", 0}) != f.end());
    CHECK(std::find(f.begin(), f.end(), SceneFact{1, "above", 0}) != f.end());
  }
}

TEST_CASE("corpus generation") {
  const SynthConfig cfg = small_config();
  const Corpus a = generate_corpus(cfg);
  const Corpus b = generate_corpus(cfg);
  CHECK(a.scenes == b.scenes);
  CHECK(a.features == b.features);
  REQUIRE(a.captions.size() == b.captions.size());
  for (std::size_t i = 0; i < a.captions.size(); ++i) CHECK(a.captions[i].text == b.captions[i].text);

  SynthConfig other = cfg;
  other.seed = 2;
  CHECK_FALSE(generate_corpus(other).features == a.features);

  CHECK(a.scenes.size() == 18);
  CHECK(a.features.size() == 18);
  CHECK(a.vocab.has_value());
  CHECK(a.vocab->size() == 1 + 4 + 4 + 6 + 12);
  for (const auto& s : a.scenes) {
    CHECK(s.objects.size() == 2);
    CHECK_FALSE(s.facts.empty());
  }
  std::map<std::string, int> per_image;
  for (const auto& c : a.captions) {
    ++per_image[c.image_id];
    REQUIRE(c.gold.has_value());
    CHECK(c.parsed == *c.gold);
    CHECK(c.gold->attr_pairs.size() == 2);
    CHECK(c.gold->rel_triples.size() == 1);
    const SceneRecord* s = a.scene(c.image_id);
    REQUIRE(s != nullptr);
    CHECK(s->split == c.split);
  }
  for (const auto& [id, n] : per_image) CHECK(n <= cfg.captions_per_scene);
}

TEST_CASE("ambiguity cases") {
  const Corpus c = generate_corpus(small_config());
  const auto cases = generate_ambiguity_cases(c, 10, 7);
  CHECK(cases.size() == 10);
  const auto again = generate_ambiguity_cases(c, 10, 7);
  for (std::size_t i = 0; i < cases.size(); ++i) CHECK(cases[i].caption_id == again[i].caption_id);
  for (const auto& dc : cases) {
    CHECK(dc.entities.size() >= 2);
    CHECK(c.scene(dc.image_id)->split == "test");
    // The gold attachment is always one of the enumerated candidates.
    for (const auto& t : dc.gold.rel_triples) {
      int matches = 0;
      for (const auto& s : dc.entities) {
        for (const auto& o : dc.entities) {
          if (s != o && s == t[0] && o == t[2]) ++matches;
        }
      }
      CHECK(matches == 1);
      CHECK(std::find(dc.relations.begin(), dc.relations.end(), t[1]) != dc.relations.end());
    }
    for (const auto& [adj, noun] : dc.gold.attr_pairs) {
      CHECK(std::find(dc.entities.begin(), dc.entities.end(), noun) != dc.entities.end());
      CHECK(std::find(dc.attributes.begin(), dc.attributes.end(), adj) != dc.attributes.end());
    }
  }
  CHECK(generate_ambiguity_cases(c, -1, 7, "").size() == c.captions.size());
}
