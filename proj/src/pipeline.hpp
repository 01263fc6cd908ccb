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


// One entry point per CLI subcommand. Each takes a finalized RunConfig,
// writes its artifacts and returns a JSON summary.

#ifndef UNIVSE_PIPELINE_HPP_
#define UNIVSE_PIPELINE_HPP_

#include <filesystem>
#include <string>

#include "config.hpp"
#include "json.hpp"

namespace univse {

// Corpus written to paths.out (captions, CoNLL-U, features, scenes, vocab).
nlohmann::json run_synth(const RunConfig& cfg);

// One object per sentence: {"id", "objects", "attrs", "rels"}.
nlohmann::json run_parse(const std::filesystem::path& conllu);

// Trains on paths.corpus into paths.out; resume continues from last.uvck.
nlohmann::json run_train(const RunConfig& cfg, bool resume = false);

// task: retrieval | adversarial | unified | disambiguate | relevance.
nlohmann::json run_eval(const RunConfig& cfg, const std::string& task);

// Adversarial captions of eval.split as JSON lines at `out`.
nlohmann::json run_attack(const RunConfig& cfg, const std::filesystem::path& out);

// Relevance map of one query over one image of paths.corpus.
nlohmann::json run_relevance(const RunConfig& cfg, const std::string& image_id, const std::string& query,
                             const std::filesystem::path& ppm = {});

nlohmann::json inspect_features(const std::filesystem::path& uvse);

// The vocabulary a checkpoint was trained with: vocab.tsv next to it, else
// the corpus vocabulary, else one rebuilt from the corpus.
Vocabulary resolve_vocabulary(const std::filesystem::path& checkpoint, const Corpus& corpus);

}  // namespace univse

#endif  // UNIVSE_PIPELINE_HPP_
