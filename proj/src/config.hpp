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


// Run configuration: an INI document ("key = value" under [sections])
// whose every key can also be overridden as "section.key=value".

#ifndef UNIVSE_CONFIG_HPP_
#define UNIVSE_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "adversary.hpp"
#include "model.hpp"
#include "synthcorpus.hpp"
#include "trainkit.hpp"

namespace univse {

struct PathsConfig {
  std::string corpus;      // corpus directory
  std::string checkpoint;  // model checkpoint file
  std::string out;         // output directory
  std::string pretrained;  // optional word-vector text file
};

struct EvalConfig {
  std::string split = "test";
  double relevance_tau = 0.1;
  int cases = 200;        // ambiguity cases
  int simulations = 1000;  // random-baseline draws
};

struct RunConfig {
  std::uint64_t seed = 1;  // every RNG stream derives from this
  PathsConfig paths;
  ModelDims model;
  OptimConfig optim;
  std::string val_split = "test";
  SynthConfig synth;
  AttackSpec attack;
  EvalConfig eval;

  // Copies seed into the per-module configs, then validates each.
  // Throws Error(kConfig).
  void finalize();
};

// Throws Error(kConfig) for unknown keys or unparsable values.
void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value);
std::string get_config_value(const RunConfig& cfg, const std::string& key);
std::vector<std::string> config_keys();

// "key=value" with key "section.key".
void apply_override(RunConfig& cfg, const std::string& assignment);

RunConfig parse_config(const std::string& ini_text);
RunConfig load_config(const std::filesystem::path& path);

// Every key with its resolved value; parse_config(dump_config(c)) == c.
std::string dump_config(const RunConfig& cfg);
void write_config(const std::filesystem::path& path, const RunConfig& cfg);

}  // namespace univse

#endif  // UNIVSE_CONFIG_HPP_
