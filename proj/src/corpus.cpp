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

#include "corpus.hpp"

#include <fstream>
#include <set>
#include <unordered_map>

namespace univse {

namespace {

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  return out;
}

nlohmann::json scene_to_json(const SceneRecord& s) {
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& o : s.objects) {
    cells.push_back({{"row", o.row}, {"col", o.col}, {"object", o.noun}, {"attribute", o.adjective}});
  }
  nlohmann::json facts = nlohmann::json::array();
  for (const auto& f : s.facts) facts.push_back({f.subject, f.relation, f.object});
  return {{"image_id", s.image_id}, {"split", s.split}, {"rows", s.rows}, {"cols", s.cols},
          {"cells", cells},         {"relations", facts}};
}

SceneRecord scene_from_json(const nlohmann::json& j) {
  SceneRecord s;
  s.image_id = j.at("image_id").get<std::string>();
  s.split = j.at("split").get<std::string>();
  s.rows = j.at("rows").get<int>();
  s.cols = j.at("cols").get<int>();
  for (const auto& c : j.at("cells")) {
    s.objects.push_back({c.at("row").get<int>(), c.at("col").get<int>(), c.at("object").get<std::string>(),
                         c.at("attribute").get<std::string>()});
  }
  for (const auto& f : j.at("relations")) {
    s.facts.push_back({f.at(0).get<int>(), f.at(1).get<std::string>(), f.at(2).get<int>()});
  }
  return s;
}

}  // namespace

const SceneRecord* Corpus::scene(const std::string& image_id) const {
  for (const auto& s : scenes) {
    if (s.image_id == image_id) return &s;
  }
  return nullptr;
}

nlohmann::json graph_to_json(const SemanticGraph& g) {
  nlohmann::json attrs = nlohmann::json::array();
  for (const auto& [a, n] : g.attr_pairs) attrs.push_back({a, n});
  nlohmann::json rels = nlohmann::json::array();
  for (const auto& t : g.rel_triples) rels.push_back({t[0], t[1], t[2]});
  return {{"objects", g.objects}, {"attrs", attrs}, {"rels", rels}};
}

SemanticGraph graph_from_json(const nlohmann::json& j) {
  SemanticGraph g;
  for (const auto& o : j.at("objects")) g.objects.insert(o.get<std::string>());
  for (const auto& a : j.at("attrs")) g.attr_pairs.emplace(a.at(0).get<std::string>(), a.at(1).get<std::string>());
  for (const auto& r : j.at("rels")) {
    g.rel_triples.push_back({r.at(0).get<std::string>(), r.at(1).get<std::string>(), r.at(2).get<std::string>()});
  }
  return g;
}

Corpus load_corpus(const std::filesystem::path& dir) {
  Corpus corpus;
  std::unordered_map<std::string, std::vector<AnnotatedToken>> annotations;
  for (auto& s : load_conllu(dir / "annotations.conllu")) annotations.emplace(s.id, std::move(s.tokens));

  auto in = open_in(dir / "captions.jsonl");
  std::string line;
  int line_no = 0;
  std::vector<std::string> missing;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    CaptionRecord rec;
    try {
      const auto j = nlohmann::json::parse(line);
      rec.id = j.at("id").get<std::string>();
      rec.image_id = j.at("image_id").get<std::string>();
      rec.split = j.value("split", std::string("train"));
      rec.text = j.value("caption", std::string());
      if (j.contains("graph")) rec.gold = graph_from_json(j.at("graph"));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::kFormat, "captions.jsonl line " + std::to_string(line_no) + ": " + e.what());
    }
    auto it = annotations.find(rec.id);
    if (it == annotations.end()) {
      missing.push_back(rec.id);
      continue;
    }
    rec.tokens = it->second;
    rec.parsed = parse_caption(rec.tokens);
    corpus.captions.push_back(std::move(rec));
  }
  if (!missing.empty()) {
    std::string list;
    for (const auto& id : missing) list += (list.empty() ? "" : ", ") + id;
    throw Error(ErrorKind::kData, "captions without annotation: " + list);
  }

  corpus.features = load_feature_file(dir / "features.uvse");
  if (std::filesystem::exists(dir / "scenes.json")) {
    auto sin = open_in(dir / "scenes.json");
    try {
      const auto j = nlohmann::json::parse(sin);
      for (const auto& s : j.at("scenes")) corpus.scenes.push_back(scene_from_json(s));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::kFormat, std::string("scenes.json: ") + e.what());
    }
  }
  if (std::filesystem::exists(dir / "vocab.tsv")) corpus.vocab = Vocabulary::load(dir / "vocab.tsv");
  return corpus;
}

void save_corpus(const std::filesystem::path& dir, const Corpus& corpus) {
  std::filesystem::create_directories(dir);
  {
    auto out = open_out(dir / "captions.jsonl");
    for (const auto& c : corpus.captions) {
      nlohmann::json j = {{"id", c.id}, {"image_id", c.image_id}, {"split", c.split}, {"caption", c.text}};
      j["graph"] = graph_to_json(c.gold ? *c.gold : c.parsed);
      out << j.dump() << '\n';
    }
  }
  {
    std::vector<ConllSentence> sentences;
    for (const auto& c : corpus.captions) sentences.push_back({c.id, c.tokens});
    auto out = open_out(dir / "annotations.conllu");
    write_conllu(out, sentences);
  }
  write_feature_file(dir / "features.uvse", corpus.features);
  if (!corpus.scenes.empty()) {
    nlohmann::json scenes = nlohmann::json::array();
    for (const auto& s : corpus.scenes) scenes.push_back(scene_to_json(s));
    auto out = open_out(dir / "scenes.json");
    out << nlohmann::json{{"scenes", scenes}}.dump(1) << '\n';
  }
  if (corpus.vocab) corpus.vocab->save(dir / "vocab.tsv");
}

Vocabulary build_vocabulary(const Corpus& corpus) {
  Vocabulary vocab;
  for (const auto& c : corpus.captions) {
    for (const auto& o : c.parsed.objects) vocab.add(o, WordClass::kNoun);
    for (const auto& [a, n] : c.parsed.attr_pairs) vocab.add(a, WordClass::kAdjective);
    for (const auto& t : c.parsed.rel_triples) vocab.add(t[1], WordClass::kRelation);
    for (const auto& w : lemma_sequence(c.tokens)) vocab.add(w, WordClass::kOther);
  }
  return vocab;
}

std::vector<int> word_ids(const Vocabulary& vocab, const std::vector<std::string>& words) {
  std::vector<int> ids;
  ids.reserve(words.size());
  for (const auto& w : words) ids.push_back(vocab.id(w));
  return ids;
}

std::vector<std::size_t> Dataset::examples_in(const std::string& split) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    if (image_split[examples[i].image] == split) out.push_back(i);
  }
  return out;
}

std::vector<int> Dataset::images_in(const std::string& split) const {
  std::vector<int> out;
  for (int i = 0; i < static_cast<int>(image_split.size()); ++i) {
    if (image_split[i] == split && !image_examples[i].empty()) out.push_back(i);
  }
  return out;
}

Dataset index_corpus(const Corpus& corpus, const Vocabulary& vocab) {
  Dataset ds;
  for (int i = 0; i < static_cast<int>(corpus.features.size()); ++i) {
    if (!ds.image_index.emplace(corpus.features[i].image_id, i).second) {
      throw Error(ErrorKind::kData, "duplicate feature map for image " + corpus.features[i].image_id);
    }
  }
  const auto n_images = corpus.features.size();
  ds.image_split.assign(n_images, "");
  ds.image_examples.assign(n_images, {});
  ds.contexts.assign(n_images, {});

  std::vector<std::string> missing;
  std::set<std::string> seen_missing;
  for (std::size_t c = 0; c < corpus.captions.size(); ++c) {
    const auto& rec = corpus.captions[c];
    auto it = ds.image_index.find(rec.image_id);
    if (it == ds.image_index.end()) {
      if (seen_missing.insert(rec.image_id).second) missing.push_back(rec.image_id);
      continue;
    }
    Example ex;
    ex.caption = c;
    ex.image = it->second;
    ex.words = word_ids(vocab, lemma_sequence(rec.tokens));
    ex.comps = canonical_components(rec.parsed, vocab);
    if (ds.image_split[ex.image].empty()) ds.image_split[ex.image] = rec.split;
    ds.image_examples[ex.image].push_back(ds.examples.size());
    ds.contexts[ex.image].add(ex.words, ex.comps);
    ds.examples.push_back(std::move(ex));
  }
  if (!missing.empty()) {
    std::string list;
    for (const auto& id : missing) list += (list.empty() ? "" : ", ") + id;
    throw Error(ErrorKind::kData, "no features for image ids: " + list);
  }

  ds.pools.nouns = vocab.ids_of_class(WordClass::kNoun);
  ds.pools.adjectives = vocab.ids_of_class(WordClass::kAdjective);
  ds.pools.relations = vocab.ids_of_class(WordClass::kRelation);
  std::set<std::tuple<int, int, int>> triples;
  for (const auto& ex : ds.examples) {
    if (ds.image_split[ex.image] != "train") continue;
    for (const auto& r : ex.comps.rels) {
      if (triples.emplace(r.subject, r.relation, r.object).second) ds.pools.triples.push_back(r);
    }
  }
  return ds;
}

}  // namespace univse
