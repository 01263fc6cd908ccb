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

// Batch forward/backward over the full model, optimizers, the
// finite-difference gradient oracle and the training loop.

#ifndef UNIVSE_TRAINKIT_HPP_
#define UNIVSE_TRAINKIT_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "corpus.hpp"
#include "model.hpp"
#include "objective.hpp"

namespace univse {

struct OptimConfig {
  std::string algorithm = "adam";  // "adam" or "sgd"
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  int epochs = 30;
  int batch_size = 32;
  std::uint64_t seed = 1;
  double alpha = 0.75;  // caption mix used for validation retrieval
  ComponentMask components;  // families aggregated into u_comp, in training and validation
  LossConfig loss;

  void validate() const;
};

// One matched pair with its sampled negatives. Pointers must outlive the item.
struct BatchItem {
  const RawFeatureMap* image = nullptr;
  int group = 0;
  const std::vector<int>* words = nullptr;
  const CaptionComponents* comps = nullptr;
  Negatives negatives;
};

// total_loss of the encoded batch. When grad is given (shaped like p) the
// exact gradient is added to it. Items are encoded and differentiated
// independently and reduced in item order, so the result does not depend
// on the worker count. Throws Error(kNumeric) naming a non-finite term.
LossBreakdown batch_loss(const ModelParams& p, std::span<const BatchItem> items, const LossConfig& cfg,
                         ModelParams* grad = nullptr, ComponentMask components = {});

// Draws negatives for the given examples from a per-call RNG stream.
std::vector<BatchItem> assemble_batch(const Corpus& corpus, const Dataset& ds, std::span<const std::size_t> examples,
                                      const LossConfig& cfg, std::mt19937_64& rng);

class Optimizer {
 public:
  Optimizer(const OptimConfig& cfg, const ModelParams& like);

  void step(ModelParams& p, const ModelParams& grad);
  std::int64_t steps() const { return t_; }

  // Moments live under "adam.m." / "adam.v." plus "adam.step".
  void save_state(Checkpoint& ck) const;
  void load_state(const Checkpoint& ck);

 private:
  OptimConfig cfg_;
  ModelParams m_, v_;
  std::int64_t t_ = 0;
};

struct GroupCheck {
  std::string group;
  double max_rel_error = 0.0;
  std::size_t coords = 0;
  std::string worst;  // "tensor[index]"
};

using LossFn = std::function<double(const ModelParams&, ModelParams* grad)>;

// Central differences on up to coords_per_group coordinates per group
// (all of them for smaller groups). Relative error is
// |g_an - g_fd| / max(1e-8, |g_an| + |g_fd|).
std::vector<GroupCheck> finite_diff_check(const LossFn& fn, const ModelParams& params, double eps = 1e-5,
                                          std::size_t coords_per_group = 200, std::uint64_t seed = 0);

struct EpochMetrics {
  int epoch = 0;
  LossBreakdown loss;  // mean over batches
  double r1_val = 0.0;
};

struct TrainOptions {
  ModelDims dims;
  OptimConfig optim;
  std::filesystem::path out_dir;
  std::filesystem::path pretrained;  // optional word-vector file
  std::string val_split = "test";
  bool resume = false;  // continue from out_dir/last.uvck
};

struct TrainResult {
  std::vector<EpochMetrics> epochs;  // epochs run by this call
  int best_epoch = 0;
  double best_r1 = -1.0;
};

// Writes out_dir/{last.uvck,best.uvck,metrics.jsonl,vocab.tsv}. Epoch k
// draws all randomness from stream 100 + k of seed, so a resumed run repeats an
// uninterrupted one bit for bit.
TrainResult train(const Corpus& corpus, const Vocabulary& vocab, const TrainOptions& opts);

}  // namespace univse

#endif  // UNIVSE_TRAINKIT_HPP_
