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

// Word vocabulary, basic/modifier embedding tables and the gated fusion
// encoder that maps a concatenated word vector into the joint space.

#ifndef UNIVSE_VOCAB_EMBED_HPP_
#define UNIVSE_VOCAB_EMBED_HPP_

#include <filesystem>
#include <random>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "common.hpp"

namespace univse {

enum class WordClass { kNoun, kAdjective, kRelation, kOther };

const char* word_class_name(WordClass c);
WordClass parse_word_class(std::string_view name);

// Word <-> id mapping. Id 0 is reserved for unknown words.
class Vocabulary {
 public:
  static constexpr int kUnk = 0;
  static constexpr const char* kUnkWord = "<unk>";

  Vocabulary();

  // Adds the word if absent; returns its id. The class of an existing word
  // is only upgraded from kOther.
  int add(const std::string& word, WordClass cls);

  int id(std::string_view word) const;  // kUnk when absent
  bool contains(std::string_view word) const;
  const std::string& word(int id) const { return words_.at(id); }
  WordClass word_class(int id) const { return classes_.at(id); }
  int size() const { return static_cast<int>(words_.size()); }

  std::vector<int> ids_of_class(WordClass cls) const;

  // "word<TAB>class" per line, in id order. The unknown entry is implicit.
  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);

  bool operator==(const Vocabulary& other) const { return words_ == other.words_ && classes_ == other.classes_; }

 private:
  std::vector<std::string> words_;
  std::vector<WordClass> classes_;
  std::unordered_map<std::string, int> index_;
};

// Per-word embedding tables, one row per vocabulary id.
struct WordEmbeddings {
  Matrix basic;     // |V| x d_basic
  Matrix modifier;  // |V| x d_modif

  int basic_dim() const { return static_cast<int>(basic.cols()); }
  int modifier_dim() const { return static_cast<int>(modifier.cols()); }
};

WordEmbeddings init_word_embeddings(int vocab_size, int d_basic, int d_modif, std::mt19937_64& rng);

// Overwrites basic rows from a "word v1 ... v_d" text file. Unknown words
// are ignored; returns how many rows were loaded.
int load_pretrained_basic(const std::filesystem::path& path, const Vocabulary& vocab, WordEmbeddings& emb);

// basic(noun) ++ modifier(noun): the noun with its intrinsic modifier.
Vector concat_noun(const WordEmbeddings& emb, int noun);
Vector concat_noun(const Vocabulary& vocab, const WordEmbeddings& emb, std::string_view noun);

// basic(noun) ++ modifier(adj).
Vector concat_attr_noun(const WordEmbeddings& emb, int adj, int noun);
Vector concat_attr_noun(const Vocabulary& vocab, const WordEmbeddings& emb, std::string_view adj,
                        std::string_view noun);

struct FusionParams {
  Matrix w_gate;   // d x (d_basic + d_modif)
  Vector b_gate;   // d
  Matrix w_value;  // d x (d_basic + d_modif)
  Vector b_value;  // d

  int output_dim() const { return static_cast<int>(w_gate.rows()); }
  int input_dim() const { return static_cast<int>(w_gate.cols()); }
};

FusionParams init_fusion(int d, int input_dim, std::mt19937_64& rng);
FusionParams zeros_like(const FusionParams& p);

// Intermediate values of one gated_fuse call, enough for the backward pass.
struct FuseTrace {
  Vector input;
  Vector gate;   // sigmoid(W_gate x + b_gate)
  Vector value;  // tanh(W_value x + b_value)
  double norm = 0.0;
  Vector output;
};

// Norm(sigmoid(W_gate x + b_gate) * tanh(W_value x + b_value)), elementwise
// product. Throws Error(kNumeric, "degenerate fusion output") if the
// pre-normalization norm is below kMinNorm.
Vector gated_fuse(const Vector& x, const FusionParams& p, FuseTrace* trace = nullptr);

// Accumulates parameter gradients into grad and returns dL/dx.
Vector gated_fuse_backward(const FuseTrace& trace, const Vector& d_output, const FusionParams& p,
                           FusionParams& grad);

}  // namespace univse

#endif  // UNIVSE_VOCAB_EMBED_HPP_
