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

// Ranking metrics and the model-level evaluations built on them:
// cross-modal retrieval, retrieval under adversarial captions, unified
// text-to-image retrieval, grounding, relevance export and dependency
// resolution from visual cues.

#ifndef UNIVSE_EVALKIT_HPP_
#define UNIVSE_EVALKIT_HPP_

#include <filesystem>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "adversary.hpp"
#include "corpus.hpp"
#include "model.hpp"
#include "synthcorpus.hpp"

namespace univse {

// ---- metrics ----

// Candidate indices by descending cosine; ties go to the lower index.
std::vector<std::size_t> rank_candidates(const Vector& query, std::span<const Vector> candidates);
std::vector<std::size_t> rank_by_score(std::span<const double> scores);

// Fraction of queries with a gold item in the top k. Throws
// Error(kInvalidArgument) when k exceeds a ranking's length.
double recall_at_k(const std::vector<std::vector<std::size_t>>& rankings,
                   const std::vector<std::set<std::size_t>>& gold, std::size_t k);

// Mean of precision@rank over the ranks of the gold items; 0 without gold.
double average_precision(const std::vector<std::size_t>& ranking, const std::set<std::size_t>& gold);

struct RetrievalReport {
  std::string direction;  // "t2i" or "i2t"
  double r1 = 0.0, r5 = 0.0, r10 = 0.0;
  double rsum = 0.0;  // 100 * (r1 + r5 + r10)
  double map_score = 0.0;
  std::size_t queries = 0;
  std::size_t candidates = 0;
};

// Recall cutoffs larger than the candidate count are clamped to it.
RetrievalReport retrieval_report(const std::string& direction, const std::vector<std::vector<std::size_t>>& rankings,
                                 const std::vector<std::set<std::size_t>>& gold);

nlohmann::json to_json(const RetrievalReport& r);

// ---- model-level encoders ----

std::vector<ProjectedMap> encode_images(const ModelParams& p, const Corpus& corpus, std::span<const int> images);

// u_cap of a caption at the given mix; mask selects the u_comp families.
Vector caption_embedding(const ModelParams& p, std::span<const int> words, const CaptionComponents& comps,
                         double alpha, ComponentMask mask = {});

struct RetrievalResult {
  RetrievalReport t2i;
  RetrievalReport i2t;
};

// Images of the split against their captions.
RetrievalResult evaluate_retrieval(const ModelParams& p, const Corpus& corpus, const Dataset& ds,
                                   const std::string& split, double alpha, ComponentMask mask = {});

// Image-to-sentence retrieval over the split's captions plus the suite's
// adversarial captions of the chosen families (all when empty). Gold
// items are the image's original captions.
RetrievalReport adversarial_eval(const ModelParams& p, const Vocabulary& vocab, const Corpus& corpus,
                                 const Dataset& ds, const AttackSuite& suite, const std::string& split, double alpha,
                                 ComponentMask mask = {}, std::vector<AttackFamily> families = {});

// ---- unified text-to-image retrieval ----

enum class QueryKind { kObject, kAttribute, kRelation, kSentence, kObjectDet };
const char* query_kind_name(QueryKind k);

struct UnifiedQuery {
  QueryKind kind = QueryKind::kObject;
  std::string text;
  std::vector<int> words;  // sentence word ids, or the component's ids
  CaptionComponents comps;  // sentence queries only
  std::set<std::size_t> positives;  // indices into the image list
};

// Component queries from the split's parsed captions, one sentence query
// per caption, and object-detection queries from scene layouts.
std::vector<UnifiedQuery> build_unified_queries(const Corpus& corpus, const Dataset& ds, const Vocabulary& vocab,
                                                const std::string& split, std::vector<int>* images);

struct UnifiedReport {
  std::map<std::string, double> map_by_kind;
  std::map<std::string, std::size_t> queries_by_kind;
  std::size_t excluded = 0;  // queries without positives
};

// Objects and attribute pairs score by max region cosine, relations and
// sentences (u_cap at alpha) by cosine with the pooled vector.
UnifiedReport unified_retrieval_map(const ModelParams& p, std::span<const ProjectedMap> images,
                                    std::span<const UnifiedQuery> queries, double alpha = 0.75);

// ---- relevance maps and grounding ----

enum class ComponentKind { kObject, kAttribute, kRelation };

struct ParsedQuery {
  ComponentKind kind = ComponentKind::kObject;
  std::vector<std::string> words;  // noun | adj noun | subject relation object
};

// Drops function words, then expects N, A N or N R N by vocabulary class.
// Throws Error(kParse) otherwise.
ParsedQuery parse_query(const std::string& text, const Vocabulary& vocab);

Vector encode_query(const ModelParams& p, const Vocabulary& vocab, const ParsedQuery& q);

struct RelevanceGrid {
  std::uint32_t rows = 0;
  std::uint32_t cols = 0;
  double tau = 0.1;
  std::string image_id;
  std::string query;
  std::vector<double> values;  // row-major, sums to 1
};

RelevanceGrid query_relevance(const ModelParams& p, const Vocabulary& vocab, const RawFeatureMap& image,
                              const std::string& query, double tau = 0.1);

nlohmann::json to_json(const RelevanceGrid& g);
// Binary P6 heatmap, `scale` pixels per cell, brightness relative to the max.
void write_ppm(const std::filesystem::path& path, const RelevanceGrid& g, int scale = 32);

struct GroundingReport {
  std::size_t queries = 0;
  std::size_t hits = 0;
  double accuracy = 0.0;
};

// For every object of every scene in the split: is the relevance argmax
// the object's cell?
GroundingReport evaluate_grounding(const ModelParams& p, const Vocabulary& vocab, const Corpus& corpus,
                                   const std::string& split);

// ---- dependency resolution from visual cues ----

struct Resolution {
  std::vector<AttrPair> attrs;
  std::vector<RelTriple> rels;
  int attr_correct = 0;
  int rel_correct = 0;
};

// Each attribute goes to the entity with the highest max-region cosine,
// each relation word to the ordered entity pair with the highest pooled
// cosine. Throws Error(kInvalidArgument) when a relation has fewer than
// two entities to choose from.
Resolution resolve_with_visual_cues(const DisambiguationCase& c, const Vocabulary& vocab, const ModelParams& p,
                                    const ProjectedMap& image);

struct DisambiguationReport {
  std::size_t cases = 0;
  std::size_t skipped = 0;
  std::size_t attr_decisions = 0, rel_decisions = 0;
  double attr_accuracy = 0.0, rel_accuracy = 0.0, accuracy = 0.0;
  double random_attr = 0.0, random_rel = 0.0, random_accuracy = 0.0;
};

DisambiguationReport evaluate_disambiguation(const ModelParams& p, const Vocabulary& vocab, const Corpus& corpus,
                                             std::span<const DisambiguationCase> cases, std::uint64_t seed,
                                             int simulations = 1000);

}  // namespace univse

#endif  // UNIVSE_EVALKIT_HPP_
