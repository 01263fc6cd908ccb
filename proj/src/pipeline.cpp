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


#include "pipeline.hpp"

#include <algorithm>
#include <fstream>

#include "evalkit.hpp"

namespace univse {

namespace {

void require_path(const std::string& value, const char* key) {
  if (value.empty()) throw Error(ErrorKind::kConfig, std::string(key) + " is not set");
  if (!std::filesystem::exists(value)) throw Error(ErrorKind::kIo, std::string(key) + " not found: " + value);
}

nlohmann::json graph_summary(const std::string& id, const SemanticGraph& g) {
  nlohmann::json j = graph_to_json(g);
  j["id"] = id;
  return j;
}

struct Loaded {
  Corpus corpus;
  Vocabulary vocab;
  ModelParams params;
  Dataset ds;
};

Loaded load_for_eval(const RunConfig& cfg) {
  require_path(cfg.paths.corpus, "paths.corpus");
  require_path(cfg.paths.checkpoint, "paths.checkpoint");
  Loaded l;
  l.corpus = load_corpus(cfg.paths.corpus);
  l.vocab = resolve_vocabulary(cfg.paths.checkpoint, l.corpus);
  l.params = params_from_checkpoint(load_checkpoint(cfg.paths.checkpoint));
  if (l.params.vocab_size() != l.vocab.size()) {
    throw Error(ErrorKind::kData, "checkpoint has " + std::to_string(l.params.vocab_size()) +
                                      " word rows, vocabulary has " + std::to_string(l.vocab.size()));
  }
  l.ds = index_corpus(l.corpus, l.vocab);
  return l;
}

nlohmann::json retrieval_json(const RetrievalResult& r) { return {{"t2i", to_json(r.t2i)}, {"i2t", to_json(r.i2t)}}; }

}  // namespace

Vocabulary resolve_vocabulary(const std::filesystem::path& checkpoint, const Corpus& corpus) {
  const auto beside = checkpoint.parent_path() / "vocab.tsv";
  if (std::filesystem::exists(beside)) return Vocabulary::load(beside);
  if (corpus.vocab) return *corpus.vocab;
  return build_vocabulary(corpus);
}

nlohmann::json run_synth(const RunConfig& cfg) {
  if (cfg.paths.out.empty()) throw Error(ErrorKind::kConfig, "paths.out is not set");
  const Corpus corpus = generate_corpus(cfg.synth);
  save_corpus(cfg.paths.out, corpus);
  write_config(std::filesystem::path(cfg.paths.out) / "config.ini", cfg);
  std::size_t train = 0, test_captions = 0;
  for (const auto& s : corpus.scenes) train += s.split == "train";
  for (const auto& c : corpus.captions) test_captions += c.split == "test";
  return {{"out", cfg.paths.out},
          {"scenes", corpus.scenes.size()},
          {"train_scenes", train},
          {"test_scenes", corpus.scenes.size() - train},
          {"captions", corpus.captions.size()},
          {"test_captions", test_captions},
          {"vocabulary", corpus.vocab->size()}};
}

nlohmann::json run_parse(const std::filesystem::path& conllu) {
  if (!std::filesystem::exists(conllu)) throw Error(ErrorKind::kIo, "file not found: " + conllu.string());
  nlohmann::json out = nlohmann::json::array();
  for (const auto& sentence : load_conllu(conllu)) out.push_back(graph_summary(sentence.id, parse_caption(sentence.tokens)));
  return out;
}

nlohmann::json run_train(const RunConfig& cfg, bool resume) {
  require_path(cfg.paths.corpus, "paths.corpus");
  if (cfg.paths.out.empty()) throw Error(ErrorKind::kConfig, "paths.out is not set");
  if (!cfg.paths.pretrained.empty()) require_path(cfg.paths.pretrained, "paths.pretrained");
  const Corpus corpus = load_corpus(cfg.paths.corpus);
  const Vocabulary vocab = corpus.vocab ? *corpus.vocab : build_vocabulary(corpus);
  TrainOptions opts;
  opts.dims = cfg.model;
  opts.optim = cfg.optim;
  opts.out_dir = cfg.paths.out;
  opts.pretrained = cfg.paths.pretrained;
  opts.val_split = cfg.val_split;
  opts.resume = resume;
  const TrainResult r = train(corpus, vocab, opts);
  write_config(std::filesystem::path(cfg.paths.out) / "config.ini", cfg);
  nlohmann::json epochs = nlohmann::json::array();
  for (const auto& e : r.epochs) {
    epochs.push_back({{"epoch", e.epoch}, {"loss", e.loss.total}, {"r1_val", e.r1_val}});
  }
  return {{"out", cfg.paths.out}, {"best_epoch", r.best_epoch}, {"best_r1_val", r.best_r1}, {"epochs", epochs}};
}

nlohmann::json run_eval(const RunConfig& cfg, const std::string& task) {
  static const std::vector<std::string> kTasks = {"retrieval", "adversarial", "unified", "disambiguate", "relevance"};
  if (std::find(kTasks.begin(), kTasks.end(), task) == kTasks.end()) {
    throw Error(ErrorKind::kInvalidArgument, "unknown eval task '" + task + "'");
  }
  const Loaded l = load_for_eval(cfg);
  const auto& split = cfg.eval.split;
  const double alpha = cfg.optim.alpha;
  const auto& mask = cfg.optim.components;
  nlohmann::json report = {{"task", task}, {"split", split}, {"alpha", alpha}, {"seed", cfg.seed}};

  if (task == "retrieval") {
    report["retrieval"] = retrieval_json(evaluate_retrieval(l.params, l.corpus, l.ds, split, alpha, mask));
  } else if (task == "adversarial") {
    const AttackSuite suite = build_attack_suite(l.corpus, l.vocab, cfg.attack, split);
    report["pool_size"] = suite.pool_size();
    report["all"] = to_json(adversarial_eval(l.params, l.vocab, l.corpus, l.ds, suite, split, alpha, mask));
    for (auto f : cfg.attack.families) {
      report[family_name(f)] = to_json(adversarial_eval(l.params, l.vocab, l.corpus, l.ds, suite, split, alpha, mask, {f}));
    }
    nlohmann::json skipped = nlohmann::json::object();
    for (const auto& [f, n] : suite.skipped) skipped[family_name(f)] = n;
    report["skipped"] = skipped;
  } else if (task == "unified") {
    std::vector<int> images;
    const auto queries = build_unified_queries(l.corpus, l.ds, l.vocab, split, &images);
    const auto maps = encode_images(l.params, l.corpus, images);
    const UnifiedReport u = unified_retrieval_map(l.params, maps, queries, alpha);
    report["map"] = u.map_by_kind;
    report["queries"] = u.queries_by_kind;
    report["excluded"] = u.excluded;
  } else if (task == "disambiguate") {
    const auto cases = generate_ambiguity_cases(l.corpus, cfg.eval.cases, cfg.seed, split);
    const auto d = evaluate_disambiguation(l.params, l.vocab, l.corpus, cases, cfg.seed, cfg.eval.simulations);
    report["cases"] = d.cases;
    report["skipped"] = d.skipped;
    report["accuracy"] = {{"attr", d.attr_accuracy}, {"rel", d.rel_accuracy}, {"all", d.accuracy}};
    report["random"] = {{"attr", d.random_attr}, {"rel", d.random_rel}, {"all", d.random_accuracy}};
    report["decisions"] = {{"attr", d.attr_decisions}, {"rel", d.rel_decisions}};
  } else {
    const auto g = evaluate_grounding(l.params, l.vocab, l.corpus, split);
    report["grounding"] = {{"queries", g.queries}, {"hits", g.hits}, {"accuracy", g.accuracy}};
  }
  return report;
}

nlohmann::json run_attack(const RunConfig& cfg, const std::filesystem::path& out) {
  require_path(cfg.paths.corpus, "paths.corpus");
  const Corpus corpus = load_corpus(cfg.paths.corpus);
  const Vocabulary vocab = corpus.vocab ? *corpus.vocab : build_vocabulary(corpus);
  const std::string split = cfg.eval.split == "all" ? std::string() : cfg.eval.split;
  const AttackSuite suite = build_attack_suite(corpus, vocab, cfg.attack, split);
  std::ofstream os(out);
  if (!os) throw Error(ErrorKind::kIo, "cannot write " + out.string());
  for (const auto& a : suite.items) {
    os << nlohmann::json{{"original_id", a.original_id}, {"text", a.text}, {"family", family_name(a.family)},
                         {"mode", mode_name(a.mode)}}
              .dump()
       << '\n';
  }
  nlohmann::json skipped = nlohmann::json::object();
  for (const auto& [f, n] : suite.skipped) skipped[family_name(f)] = n;
  return {{"out", out.string()}, {"originals", suite.originals}, {"adversarials", suite.items.size()},
          {"skipped", skipped}};
}

nlohmann::json run_relevance(const RunConfig& cfg, const std::string& image_id, const std::string& query,
                             const std::filesystem::path& ppm) {
  const Loaded l = load_for_eval(cfg);
  const auto it = l.ds.image_index.find(image_id);
  if (it == l.ds.image_index.end()) throw Error(ErrorKind::kData, "unknown image id '" + image_id + "'");
  const RelevanceGrid g =
      query_relevance(l.params, l.vocab, l.corpus.features.at(it->second), query, cfg.eval.relevance_tau);
  if (!ppm.empty()) write_ppm(ppm, g);
  return to_json(g);
}

nlohmann::json inspect_features(const std::filesystem::path& uvse) {
  if (!std::filesystem::exists(uvse)) throw Error(ErrorKind::kIo, "file not found: " + uvse.string());
  nlohmann::json records = nlohmann::json::array();
  for (const auto& m : load_feature_file(uvse)) {
    records.push_back({{"id", m.image_id}, {"rows", m.rows}, {"cols", m.cols}, {"depth", m.depth}});
  }
  return {{"file", uvse.string()}, {"count", records.size()}, {"records", records}};
}

}  // namespace univse
