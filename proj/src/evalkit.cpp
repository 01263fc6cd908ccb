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

#include "evalkit.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <numeric>
#include <sstream>

#include "objective.hpp"

namespace univse {

namespace {

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

double max_region_cosine(const Vector& u, const Matrix& regions) {
  double best = -2.0;
  for (Eigen::Index r = 0; r < regions.rows(); ++r) best = std::max(best, cosine(u, regions.row(r).transpose()));
  return best;
}

double mean(double sum, std::size_t n) { return n == 0 ? 0.0 : sum / static_cast<double>(n); }

}  // namespace

std::vector<std::size_t> rank_by_score(std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return order;
}

std::vector<std::size_t> rank_candidates(const Vector& query, std::span<const Vector> candidates) {
  std::vector<double> scores;
  scores.reserve(candidates.size());
  for (const auto& c : candidates) scores.push_back(cosine(query, c));
  return rank_by_score(scores);
}

double recall_at_k(const std::vector<std::vector<std::size_t>>& rankings,
                   const std::vector<std::set<std::size_t>>& gold, std::size_t k) {
  if (rankings.size() != gold.size()) throw Error(ErrorKind::kInvalidArgument, "rankings and gold sets differ in count");
  if (rankings.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t q = 0; q < rankings.size(); ++q) {
    if (k > rankings[q].size()) {
      throw Error(ErrorKind::kInvalidArgument, "k = " + std::to_string(k) + " exceeds the " +
                                                   std::to_string(rankings[q].size()) + " candidates");
    }
    for (std::size_t i = 0; i < k; ++i) {
      if (gold[q].count(rankings[q][i])) {
        ++hits;
        break;
      }
    }
  }
  return static_cast<double>(hits) / static_cast<double>(rankings.size());
}

double average_precision(const std::vector<std::size_t>& ranking, const std::set<std::size_t>& gold) {
  if (gold.empty()) return 0.0;
  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < ranking.size(); ++i) {
    if (gold.count(ranking[i])) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(i + 1);
    }
  }
  return sum / static_cast<double>(gold.size());
}

RetrievalReport retrieval_report(const std::string& direction, const std::vector<std::vector<std::size_t>>& rankings,
                                 const std::vector<std::set<std::size_t>>& gold) {
  RetrievalReport r;
  r.direction = direction;
  r.queries = rankings.size();
  if (rankings.empty()) return r;
  r.candidates = rankings.front().size();
  auto cut = [&](std::size_t k) { return std::min(k, r.candidates); };
  r.r1 = recall_at_k(rankings, gold, cut(1));
  r.r5 = recall_at_k(rankings, gold, cut(5));
  r.r10 = recall_at_k(rankings, gold, cut(10));
  r.rsum = 100.0 * (r.r1 + r.r5 + r.r10);
  double ap = 0.0;
  for (std::size_t q = 0; q < rankings.size(); ++q) ap += average_precision(rankings[q], gold[q]);
  r.map_score = mean(ap, rankings.size());
  return r;
}

nlohmann::json to_json(const RetrievalReport& r) {
  return {{"direction", r.direction}, {"r1", r.r1},   {"r5", r.r5},           {"r10", r.r10},
          {"rsum", r.rsum},           {"map", r.map_score}, {"queries", r.queries}, {"candidates", r.candidates}};
}

std::vector<ProjectedMap> encode_images(const ModelParams& p, const Corpus& corpus, std::span<const int> images) {
  std::vector<ProjectedMap> out(images.size());
  parallel_for(images.size(), [&](std::size_t i) { out[i] = project(corpus.features.at(images[i]), p.projection); });
  return out;
}

Vector caption_embedding(const ModelParams& p, std::span<const int> words, const CaptionComponents& comps,
                         double alpha, ComponentMask mask) {
  return encode_full_caption(p.text, words, comps, alpha, mask).u_cap;
}

RetrievalResult evaluate_retrieval(const ModelParams& p, const Corpus& corpus, const Dataset& ds,
                                   const std::string& split, double alpha, ComponentMask mask) {
  const auto images = ds.images_in(split);
  const auto maps = encode_images(p, corpus, images);
  const auto captions = ds.examples_in(split);
  std::vector<Vector> caps(captions.size());
  parallel_for(captions.size(), [&](std::size_t i) {
    const auto& ex = ds.examples[captions[i]];
    caps[i] = caption_embedding(p, ex.words, ex.comps, alpha, mask);
  });
  std::map<int, std::size_t> image_pos;
  for (std::size_t i = 0; i < images.size(); ++i) image_pos[images[i]] = i;
  std::vector<Vector> pooled;
  for (const auto& m : maps) pooled.push_back(m.pooled);

  std::vector<std::vector<std::size_t>> t2i(captions.size()), i2t(images.size());
  std::vector<std::set<std::size_t>> t2i_gold(captions.size()), i2t_gold(images.size());
  parallel_for(captions.size(), [&](std::size_t i) { t2i[i] = rank_candidates(caps[i], pooled); });
  for (std::size_t i = 0; i < captions.size(); ++i) {
    const std::size_t img = image_pos.at(ds.examples[captions[i]].image);
    t2i_gold[i] = {img};
    i2t_gold[img].insert(i);
  }
  parallel_for(images.size(), [&](std::size_t i) { i2t[i] = rank_candidates(pooled[i], caps); });
  return {retrieval_report("t2i", t2i, t2i_gold), retrieval_report("i2t", i2t, i2t_gold)};
}

RetrievalReport adversarial_eval(const ModelParams& p, const Vocabulary& vocab, const Corpus& corpus,
                                 const Dataset& ds, const AttackSuite& suite, const std::string& split, double alpha,
                                 ComponentMask mask, std::vector<AttackFamily> families) {
  if (families.empty()) families = {AttackFamily::kObject, AttackFamily::kAttribute, AttackFamily::kRelation};
  const auto images = ds.images_in(split);
  const auto maps = encode_images(p, corpus, images);
  std::map<int, std::size_t> image_pos;
  for (std::size_t i = 0; i < images.size(); ++i) image_pos[images[i]] = i;

  struct Candidate {
    std::vector<int> words;
    CaptionComponents comps;
    int image = -1;  // gold image for originals, -1 for adversarials
  };
  // Adversarials go first: ranking is stable, so an exact tie between an
  // original and its perturbation counts against the model.
  std::vector<Candidate> cands;
  for (const auto& adv : suite.items) {
    if (std::find(families.begin(), families.end(), adv.family) == families.end()) continue;
    if (!split.empty() && corpus.captions.at(adv.original).split != split) continue;
    cands.push_back({word_ids(vocab, lemma_sequence(adv.tokens)),
                     canonical_components(parse_caption(adv.tokens), vocab), -1});
  }
  for (std::size_t e : ds.examples_in(split)) {
    const auto& ex = ds.examples[e];
    cands.push_back({ex.words, ex.comps, ex.image});
  }
  std::vector<Vector> embs(cands.size());
  parallel_for(cands.size(), [&](std::size_t i) {
    embs[i] = caption_embedding(p, cands[i].words, cands[i].comps, alpha, mask);
  });
  std::vector<std::vector<std::size_t>> rankings(images.size());
  std::vector<std::set<std::size_t>> gold(images.size());
  for (std::size_t c = 0; c < cands.size(); ++c) {
    if (cands[c].image >= 0) gold[image_pos.at(cands[c].image)].insert(c);
  }
  parallel_for(images.size(), [&](std::size_t i) { rankings[i] = rank_candidates(maps[i].pooled, embs); });
  return retrieval_report("i2t", rankings, gold);
}

const char* query_kind_name(QueryKind k) {
  switch (k) {
    case QueryKind::kObject: return "obj";
    case QueryKind::kAttribute: return "attr";
    case QueryKind::kRelation: return "rel";
    case QueryKind::kSentence: return "sentence";
    case QueryKind::kObjectDet: return "obj_det";
  }
  return "obj";
}

std::vector<UnifiedQuery> build_unified_queries(const Corpus& corpus, const Dataset& ds, const Vocabulary& vocab,
                                                const std::string& split, std::vector<int>* images_out) {
  const auto images = ds.images_in(split);
  if (images_out) *images_out = images;
  std::map<std::vector<int>, std::set<std::size_t>> objects, attrs, rels;
  std::map<std::string, std::set<std::size_t>> texts;
  for (std::size_t i = 0; i < images.size(); ++i) {
    for (std::size_t e : ds.image_examples[images[i]]) {
      const auto& comps = ds.examples[e].comps;
      for (const auto& o : comps.objects) objects[{o.noun}].insert(i);
      for (const auto& a : comps.attrs) attrs[{a.adj, a.noun}].insert(i);
      for (const auto& r : comps.rels) rels[{r.subject, r.relation, r.object}].insert(i);
      texts[lower(caption_text(corpus.captions[ds.examples[e].caption].tokens))].insert(i);
    }
  }
  auto text_of = [&](const std::vector<int>& ids) {
    std::string s;
    for (int id : ids) s += (s.empty() ? "" : " ") + vocab.word(id);
    return s;
  };
  std::vector<UnifiedQuery> out;
  for (const auto& [ids, pos] : objects) out.push_back({QueryKind::kObject, text_of(ids), ids, {}, pos});
  for (const auto& [ids, pos] : attrs) out.push_back({QueryKind::kAttribute, text_of(ids), ids, {}, pos});
  for (const auto& [ids, pos] : rels) out.push_back({QueryKind::kRelation, text_of(ids), ids, {}, pos});
  for (std::size_t i = 0; i < images.size(); ++i) {
    for (std::size_t e : ds.image_examples[images[i]]) {
      const auto& ex = ds.examples[e];
      const auto text = lower(caption_text(corpus.captions[ex.caption].tokens));
      out.push_back({QueryKind::kSentence, text, ex.words, ex.comps, texts.at(text)});
    }
  }
  std::map<int, std::set<std::size_t>> detected;
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (const auto* scene = corpus.scene(corpus.features[images[i]].image_id)) {
      for (const auto& o : scene->objects) detected[vocab.id(o.noun)].insert(i);
    }
  }
  for (const auto& [noun, pos] : detected) out.push_back({QueryKind::kObjectDet, vocab.word(noun), {noun}, {}, pos});
  return out;
}

UnifiedReport unified_retrieval_map(const ModelParams& p, std::span<const ProjectedMap> images,
                                    std::span<const UnifiedQuery> queries, double alpha) {
  std::vector<double> ap(queries.size(), -1.0);
  parallel_for(queries.size(), [&](std::size_t q) {
    const auto& query = queries[q];
    if (query.positives.empty()) return;
    Vector u;
    bool regional = false;
    switch (query.kind) {
      case QueryKind::kObject:
      case QueryKind::kObjectDet:
        u = encode_object(p.text, {query.words.at(0)});
        regional = true;
        break;
      case QueryKind::kAttribute:
        u = encode_attribute(p.text, {query.words.at(0), query.words.at(1)});
        regional = true;
        break;
      case QueryKind::kRelation:
        u = encode_relation(p.text, {query.words.at(0), query.words.at(1), query.words.at(2)});
        break;
      case QueryKind::kSentence:
        u = caption_embedding(p, query.words, query.comps, alpha);
        break;
    }
    std::vector<double> scores;
    for (const auto& img : images) scores.push_back(regional ? max_region_cosine(u, img.regions) : cosine(u, img.pooled));
    ap[q] = average_precision(rank_by_score(scores), query.positives);
  });
  UnifiedReport report;
  std::map<std::string, double> sums;
  for (std::size_t q = 0; q < queries.size(); ++q) {
    if (ap[q] < 0.0) {
      ++report.excluded;
      continue;
    }
    const std::string kind = query_kind_name(queries[q].kind);
    sums[kind] += ap[q];
    ++report.queries_by_kind[kind];
  }
  for (const auto& [kind, sum] : sums) report.map_by_kind[kind] = mean(sum, report.queries_by_kind[kind]);
  return report;
}

ParsedQuery parse_query(const std::string& text, const Vocabulary& vocab) {
  std::istringstream in(lower(text));
  std::vector<std::string> content;
  std::vector<WordClass> classes;
  std::string w;
  while (in >> w) {
    while (!w.empty() && std::ispunct(static_cast<unsigned char>(w.back())) && w.back() != '-') w.pop_back();
    if (w.empty()) continue;
    if (!vocab.contains(w)) throw Error(ErrorKind::kParse, "query word '" + w + "' is not in the vocabulary");
    const auto cls = vocab.word_class(vocab.id(w));
    if (cls == WordClass::kOther) continue;
    content.push_back(w);
    classes.push_back(cls);
  }
  using C = WordClass;
  if (classes == std::vector<C>{C::kNoun}) return {ComponentKind::kObject, content};
  if (classes == std::vector<C>{C::kAdjective, C::kNoun}) return {ComponentKind::kAttribute, content};
  if (classes == std::vector<C>{C::kNoun, C::kRelation, C::kNoun}) return {ComponentKind::kRelation, content};
  throw Error(ErrorKind::kParse, "query '" + text + "' is not a noun, an adjective-noun pair or a relation triple");
}

Vector encode_query(const ModelParams& p, const Vocabulary& vocab, const ParsedQuery& q) {
  switch (q.kind) {
    case ComponentKind::kObject: return encode_object(p.text, {vocab.id(q.words[0])});
    case ComponentKind::kAttribute: return encode_attribute(p.text, {vocab.id(q.words[0]), vocab.id(q.words[1])});
    case ComponentKind::kRelation:
      return encode_relation(p.text, {vocab.id(q.words[0]), vocab.id(q.words[1]), vocab.id(q.words[2])});
  }
  throw Error(ErrorKind::kInvalidArgument, "unknown query kind");
}

RelevanceGrid query_relevance(const ModelParams& p, const Vocabulary& vocab, const RawFeatureMap& image,
                              const std::string& query, double tau) {
  if (!(tau > 0.0)) throw Error(ErrorKind::kInvalidArgument, "tau must be > 0");
  const auto parsed = parse_query(query, vocab);
  const Vector u = encode_query(p, vocab, parsed);
  const auto map = project(image, p.projection);
  const Vector m = relevance_map(u, map.regions, tau);
  RelevanceGrid g;
  g.rows = map.rows;
  g.cols = map.cols;
  g.tau = tau;
  g.image_id = image.image_id;
  g.query = query;
  g.values.assign(m.data(), m.data() + m.size());
  return g;
}

nlohmann::json to_json(const RelevanceGrid& g) {
  nlohmann::json grid = nlohmann::json::array();
  for (std::uint32_t r = 0; r < g.rows; ++r) {
    grid.push_back(std::vector<double>(g.values.begin() + r * g.cols, g.values.begin() + (r + 1) * g.cols));
  }
  return {{"image_id", g.image_id}, {"query", g.query}, {"tau", g.tau},
          {"rows", g.rows},         {"cols", g.cols},   {"map", grid}};
}

void write_ppm(const std::filesystem::path& path, const RelevanceGrid& g, int scale) {
  if (scale < 1) throw Error(ErrorKind::kInvalidArgument, "ppm scale must be >= 1");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  const double top = g.values.empty() ? 1.0 : *std::max_element(g.values.begin(), g.values.end());
  out << "P6\n" << g.cols * scale << ' ' << g.rows * scale << "\n255\n";
  for (std::uint32_t y = 0; y < g.rows * static_cast<std::uint32_t>(scale); ++y) {
    for (std::uint32_t x = 0; x < g.cols * static_cast<std::uint32_t>(scale); ++x) {
      const double v = g.values[(y / scale) * g.cols + x / scale] / top;
      const auto c = static_cast<unsigned char>(std::clamp(v, 0.0, 1.0) * 255.0 + 0.5);
      out.put(static_cast<char>(c)).put(static_cast<char>(c)).put(static_cast<char>(c));
    }
  }
}

GroundingReport evaluate_grounding(const ModelParams& p, const Vocabulary& vocab, const Corpus& corpus,
                                   const std::string& split) {
  std::vector<const SceneRecord*> scenes;
  for (const auto& s : corpus.scenes) {
    if (split.empty() || s.split == split) scenes.push_back(&s);
  }
  std::map<std::string, const RawFeatureMap*> features;
  for (const auto& f : corpus.features) features[f.image_id] = &f;
  std::vector<std::size_t> hits(scenes.size()), counts(scenes.size());
  parallel_for(scenes.size(), [&](std::size_t i) {
    const auto& scene = *scenes[i];
    const auto it = features.find(scene.image_id);
    if (it == features.end()) throw Error(ErrorKind::kData, "no features for image " + scene.image_id);
    const auto map = project(*it->second, p.projection);
    for (const auto& o : scene.objects) {
      const Vector m = relevance_map(encode_object(p.text, {vocab.id(o.noun)}), map.regions, 1.0);
      Eigen::Index best = 0;
      m.maxCoeff(&best);
      ++counts[i];
      if (best == o.row * scene.cols + o.col) ++hits[i];
    }
  });
  GroundingReport r;
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    r.queries += counts[i];
    r.hits += hits[i];
  }
  r.accuracy = r.queries == 0 ? 0.0 : static_cast<double>(r.hits) / static_cast<double>(r.queries);
  return r;
}

Resolution resolve_with_visual_cues(const DisambiguationCase& c, const Vocabulary& vocab, const ModelParams& p,
                                    const ProjectedMap& image) {
  if (c.entities.empty()) throw Error(ErrorKind::kInvalidArgument, "case has no entities");
  if (!c.relations.empty() && c.entities.size() < 2) {
    throw Error(ErrorKind::kInvalidArgument, "relation needs at least two entities");
  }
  Resolution out;
  for (const auto& adj : c.attributes) {
    double best = -3.0;
    std::string choice;
    for (const auto& e : c.entities) {
      const double s = max_region_cosine(encode_attribute(p.text, {vocab.id(adj), vocab.id(e)}), image.regions);
      if (s > best) {
        best = s;
        choice = e;
      }
    }
    out.attrs.push_back({adj, choice});
    if (c.gold.attr_pairs.count(out.attrs.back())) ++out.attr_correct;
  }
  for (const auto& rel : c.relations) {
    double best = -3.0;
    RelTriple choice;
    for (const auto& s : c.entities) {
      for (const auto& o : c.entities) {
        if (s == o) continue;
        const double score = cosine(encode_relation(p.text, {vocab.id(s), vocab.id(rel), vocab.id(o)}), image.pooled);
        if (score > best) {
          best = score;
          choice = {s, rel, o};
        }
      }
    }
    out.rels.push_back(choice);
    if (std::find(c.gold.rel_triples.begin(), c.gold.rel_triples.end(), choice) != c.gold.rel_triples.end()) {
      ++out.rel_correct;
    }
  }
  return out;
}

DisambiguationReport evaluate_disambiguation(const ModelParams& p, const Vocabulary& vocab, const Corpus& corpus,
                                             std::span<const DisambiguationCase> cases, std::uint64_t seed,
                                             int simulations) {
  std::map<std::string, const RawFeatureMap*> features;
  for (const auto& f : corpus.features) features[f.image_id] = &f;
  std::vector<Resolution> results(cases.size());
  std::vector<char> ok(cases.size(), 0);
  parallel_for(cases.size(), [&](std::size_t i) {
    const auto it = features.find(cases[i].image_id);
    if (it == features.end()) throw Error(ErrorKind::kData, "no features for image " + cases[i].image_id);
    try {
      results[i] = resolve_with_visual_cues(cases[i], vocab, p, project(*it->second, p.projection));
      ok[i] = 1;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kInvalidArgument) throw;
    }
  });

  DisambiguationReport r;
  std::size_t attr_hits = 0, rel_hits = 0;
  std::vector<std::size_t> used;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    if (!ok[i]) {
      ++r.skipped;
      continue;
    }
    used.push_back(i);
    ++r.cases;
    r.attr_decisions += cases[i].attributes.size();
    r.rel_decisions += cases[i].relations.size();
    attr_hits += static_cast<std::size_t>(results[i].attr_correct);
    rel_hits += static_cast<std::size_t>(results[i].rel_correct);
  }
  const auto total = r.attr_decisions + r.rel_decisions;
  r.attr_accuracy = mean(static_cast<double>(attr_hits), r.attr_decisions);
  r.rel_accuracy = mean(static_cast<double>(rel_hits), r.rel_decisions);
  r.accuracy = mean(static_cast<double>(attr_hits + rel_hits), total);

  // Random baseline: uniform choice among the same candidates.
  auto rng = stream_rng(seed, 3);
  double rand_attr = 0.0, rand_rel = 0.0;
  for (int s = 0; s < simulations; ++s) {
    for (std::size_t i : used) {
      const auto& c = cases[i];
      std::uniform_int_distribution<std::size_t> entity(0, c.entities.size() - 1);
      for (const auto& adj : c.attributes) {
        if (c.gold.attr_pairs.count({adj, c.entities[entity(rng)]})) rand_attr += 1.0;
      }
      for (const auto& rel : c.relations) {
        const std::size_t a = entity(rng);
        std::size_t b = std::uniform_int_distribution<std::size_t>(0, c.entities.size() - 2)(rng);
        if (b >= a) ++b;
        const RelTriple t = {c.entities[a], rel, c.entities[b]};
        if (std::find(c.gold.rel_triples.begin(), c.gold.rel_triples.end(), t) != c.gold.rel_triples.end()) {
          rand_rel += 1.0;
        }
      }
    }
  }
  const double sims = std::max(1, simulations);
  r.random_attr = mean(rand_attr / sims, r.attr_decisions);
  r.random_rel = mean(rand_rel / sims, r.rel_decisions);
  r.random_accuracy = mean((rand_attr + rand_rel) / sims, total);
  return r;
}

}  // namespace univse
