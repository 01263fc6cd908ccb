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


#include <fstream>

#include "doctest.h"
#include "evalkit.hpp"
#include "support.hpp"

using namespace univse;

namespace {

// AP written from its definition: mean over gold items of the precision
// at that item's rank.
double brute_ap(const std::vector<std::size_t>& ranking, const std::set<std::size_t>& gold) {
  double sum = 0;
  for (std::size_t g : gold) {
    const auto at = std::find(ranking.begin(), ranking.end(), g) - ranking.begin();
    int above = 0;
    for (std::ptrdiff_t i = 0; i <= at; ++i) above += gold.count(ranking[static_cast<std::size_t>(i)]) ? 1 : 0;
    sum += static_cast<double>(above) / static_cast<double>(at + 1);
  }
  return sum / static_cast<double>(gold.size());
}

struct World {
  Corpus corpus;
  Vocabulary vocab;
  Dataset ds;
  ModelParams params;
};

const World& world() {
  static const World w = [] {
    SynthConfig cfg;
    cfg.train_scenes = 6;
    cfg.test_scenes = 8;
    World out;
    out.corpus = generate_corpus(cfg);
    out.vocab = *out.corpus.vocab;
    out.ds = index_corpus(out.corpus, out.vocab);
    std::mt19937_64 rng(3);
    out.params = init_model(ModelDims{16, 12, 6}, out.vocab.size(), cfg.depth, rng);
    return out;
  }();
  return w;
}

}  // namespace

TEST_CASE("candidate ranking") {
  std::mt19937_64 rng(1);
  std::vector<Vector> cands;
  for (int i = 0; i < 7; ++i) cands.push_back(testing::random_vector(5, rng));
  const Vector q = cands[3];
  cands.push_back(-q);
  const auto order = rank_candidates(q, cands);
  CHECK(order.front() == 3);
  CHECK(order.back() == 7);

  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Vector> c;
    for (int i = 0; i < 12; ++i) c.push_back(testing::random_vector(4, rng));
    const Vector query = testing::random_vector(4, rng);
    std::vector<std::pair<double, std::size_t>> brute;
    for (std::size_t i = 0; i < c.size(); ++i) brute.push_back({-query.dot(c[i]) / (query.norm() * c[i].norm()), i});
    std::sort(brute.begin(), brute.end());
    const auto got = rank_candidates(query, c);
    for (std::size_t i = 0; i < c.size(); ++i) CHECK(got[i] == brute[i].second);
  }

  const std::vector<double> ties = {0.5, 0.9, 0.5, 0.9};
  CHECK(rank_by_score(ties) == std::vector<std::size_t>{1, 3, 0, 2});
}

TEST_CASE("recall at k") {
  const std::vector<std::vector<std::size_t>> r = {{0, 1, 2}, {2, 1, 0}, {1, 0, 2}};
  CHECK(recall_at_k(r, {{0}, {2}, {1}}, 1) == 1.0);
  CHECK(recall_at_k(r, {{2}, {0}, {2}}, 2) == 0.0);
  // Hand-computed: query 0 hits at rank 1, query 1 at rank 2, query 2 at rank 3.
  const std::vector<std::set<std::size_t>> gold = {{0}, {1}, {2}};
  CHECK(recall_at_k(r, gold, 1) == doctest::Approx(1.0 / 3.0));
  CHECK(recall_at_k(r, gold, 2) == doctest::Approx(2.0 / 3.0));
  CHECK(recall_at_k(r, gold, 3) == 1.0);
  CHECK_THROWS_AS(recall_at_k(r, gold, 4), Error);
}

TEST_CASE("average precision") {
  CHECK(average_precision({4, 1, 2}, {4}) == 1.0);
  CHECK(average_precision({0, 1}, {1}) == 0.5);
  CHECK(average_precision({0, 1}, {}) == 0.0);
  const std::vector<std::vector<std::size_t>> rankings = {
      {3, 0, 1, 2, 4}, {0, 1, 2, 3, 4}, {4, 3, 2, 1, 0}, {2, 4, 0, 3, 1}};
  const std::vector<std::set<std::size_t>> gold = {{0, 2}, {0, 1, 2}, {0}, {1, 3, 4}};
  double total = 0;
  for (std::size_t q = 0; q < 4; ++q) {
    CHECK(average_precision(rankings[q], gold[q]) == doctest::Approx(brute_ap(rankings[q], gold[q])));
    total += brute_ap(rankings[q], gold[q]);
  }
  const RetrievalReport rep = retrieval_report("i2t", rankings, gold);
  CHECK(rep.map_score == doctest::Approx(total / 4));
  CHECK(rep.rsum == doctest::Approx(100 * (rep.r1 + rep.r5 + rep.r10)));
  CHECK(rep.r5 == 1.0);  // cutoffs clamp to the 5 candidates
  CHECK(rep.candidates == 5);
}

TEST_CASE("retrieval on a synthetic split") {
  const World& w = world();
  const auto a = evaluate_retrieval(w.params, w.corpus, w.ds, "test", 0.75);
  const auto b = evaluate_retrieval(w.params, w.corpus, w.ds, "test", 0.75);
  CHECK(a.t2i.r1 == b.t2i.r1);
  CHECK(a.i2t.map_score == b.i2t.map_score);
  CHECK(a.t2i.queries == w.ds.examples_in("test").size());
  CHECK(a.i2t.queries == 8);
  CHECK(a.t2i.candidates == 8);

  // At alpha = 1 the caption is its sentence embedding, bit for bit.
  for (std::size_t e : w.ds.examples_in("test")) {
    const auto& ex = w.ds.examples[e];
    CHECK(caption_embedding(w.params, ex.words, ex.comps, 1.0) == encode_sentence(w.params.text, ex.words));
  }
}

TEST_CASE("adversarial retrieval without adversarials is plain image-to-text retrieval") {
  const World& w = world();
  const AttackSuite empty;
  const auto adv = adversarial_eval(w.params, w.vocab, w.corpus, w.ds, empty, "test", 0.75);
  const auto plain = evaluate_retrieval(w.params, w.corpus, w.ds, "test", 0.75).i2t;
  CHECK(adv.r1 == plain.r1);
  CHECK(adv.r10 == plain.r10);
  CHECK(adv.map_score == plain.map_score);

  AttackSpec spec;
  const AttackSuite suite = build_attack_suite(w.corpus, w.vocab, spec, "test");
  const auto full = adversarial_eval(w.params, w.vocab, w.corpus, w.ds, suite, "test", 0.75);
  CHECK(full.candidates == suite.pool_size());
  const auto rel = adversarial_eval(w.params, w.vocab, w.corpus, w.ds, suite, "test", 0.75, {}, {AttackFamily::kRelation});
  std::size_t rel_items = 0;
  for (const auto& a : suite.items) rel_items += a.family == AttackFamily::kRelation;
  CHECK(rel.candidates == suite.originals + rel_items);
}

TEST_CASE("unified retrieval") {
  const World& w = world();
  std::vector<int> images;
  auto queries = build_unified_queries(w.corpus, w.ds, w.vocab, "test", &images);
  CHECK(images.size() == 8);
  std::set<std::string> kinds;
  for (const auto& q : queries) {
    kinds.insert(query_kind_name(q.kind));
    CHECK_FALSE(q.positives.empty());
  }
  CHECK(kinds == std::set<std::string>{"attr", "obj", "obj_det", "rel", "sentence"});
  queries.push_back({QueryKind::kObject, "nothing", {1}, {}, {}});
  const auto maps = encode_images(w.params, w.corpus, images);
  const UnifiedReport r = unified_retrieval_map(w.params, maps, queries);
  CHECK(r.excluded == 1);
  for (const auto& [kind, m] : r.map_by_kind) {
    CHECK(m > 0.0);
    CHECK(m <= 1.0);
  }
}

TEST_CASE("query parsing and relevance export") {
  const World& w = world();
  CHECK(parse_query("the clock", w.vocab).kind == ComponentKind::kObject);
  const auto attr = parse_query("A white clock.", w.vocab);
  CHECK(attr.kind == ComponentKind::kAttribute);
  CHECK(attr.words == std::vector<std::string>{"white", "clock"});
  CHECK(parse_query("clock left-of table", w.vocab).kind == ComponentKind::kRelation);
  CHECK_THROWS_AS(parse_query("clock table", w.vocab), Error);
  CHECK_THROWS_AS(parse_query("zebra", w.vocab), Error);

  const RawFeatureMap& img = w.corpus.features.front();
  const RelevanceGrid g = query_relevance(w.params, w.vocab, img, "white clock");
  CHECK(g.rows * g.cols == g.values.size());
  double sum = 0;
  for (double v : g.values) sum += v;
  CHECK(sum == doctest::Approx(1.0));
  CHECK(g.tau == 0.1);
  const auto j = to_json(g);
  CHECK(j["map"].size() == g.rows);

  RawFeatureMap flat = img;
  std::fill(flat.data.begin(), flat.data.end(), 0.25f);
  for (double v : query_relevance(w.params, w.vocab, flat, "clock").values) {
    CHECK(v == doctest::Approx(1.0 / static_cast<double>(flat.regions())));
  }

  testing::TempDir dir("ppm");
  write_ppm(dir / "m.ppm", g, 2);
  std::ifstream in(dir / "m.ppm", std::ios::binary);
  std::string magic;
  int width = 0, height = 0, maxv = 0;
  in >> magic >> width >> height >> maxv;
  CHECK(magic == "P6");
  CHECK(width == static_cast<int>(g.cols) * 2);
  CHECK(height == static_cast<int>(g.rows) * 2);
  CHECK(maxv == 255);
  in.get();
  const std::string body((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  CHECK(body.size() == static_cast<std::size_t>(width * height * 3));
}

TEST_CASE("dependency resolution") {
  const World& w = world();
  const ProjectedMap img = project(w.corpus.features.front(), w.params.projection);
  SUBCASE("one entity forces the correct attachment") {
    DisambiguationCase c;
    c.entities = {"clock"};
    c.attributes = {"white"};
    c.gold.objects = {"clock"};
    c.gold.attr_pairs = {{"white", "clock"}};
    const Resolution r = resolve_with_visual_cues(c, w.vocab, w.params, img);
    CHECK(r.attr_correct == 1);
  }
  SUBCASE("relations need two entities") {
    DisambiguationCase c;
    c.entities = {"clock"};
    c.relations = {"on"};
    CHECK_THROWS_AS(resolve_with_visual_cues(c, w.vocab, w.params, img), Error);
  }
  SUBCASE("predictions are legal attachments") {
    DisambiguationCase c;
    c.entities = {"clock", "table", "wall"};
    c.relations = {"on", "above"};
    c.attributes = {"white"};
    const Resolution r = resolve_with_visual_cues(c, w.vocab, w.params, img);
    REQUIRE(r.rels.size() == 2);
    for (const auto& t : r.rels) CHECK(t[0] != t[2]);
  }
  SUBCASE("report and random baseline on two-entity cases") {
    const auto cases = generate_ambiguity_cases(w.corpus, -1, 1);
    const auto rep = evaluate_disambiguation(w.params, w.vocab, w.corpus, cases, 1, 2000);
    CHECK(rep.cases == cases.size());
    CHECK(rep.skipped == 0);
    CHECK(rep.attr_decisions == 2 * cases.size());
    CHECK(rep.rel_decisions == cases.size());
    CHECK(rep.random_attr == doctest::Approx(0.5).epsilon(0.05));
    CHECK(rep.random_rel == doctest::Approx(0.5).epsilon(0.05));
    const auto again = evaluate_disambiguation(w.params, w.vocab, w.corpus, cases, 1, 2000);
    CHECK(again.accuracy == rep.accuracy);
    CHECK(again.random_accuracy == rep.random_accuracy);
  }
}

TEST_CASE("grounding report counts every placed object") {
  const World& w = world();
  const GroundingReport g = evaluate_grounding(w.params, w.vocab, w.corpus, "test");
  CHECK(g.queries == 16);
  CHECK(g.hits <= g.queries);
}
