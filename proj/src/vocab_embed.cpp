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

#include "vocab_embed.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace univse {

namespace {

void fill_uniform(Matrix& m, double bound, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
}

void fill_uniform(Vector& v, double bound, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = dist(rng);
}

}  // namespace

const char* word_class_name(WordClass c) {
  switch (c) {
    case WordClass::kNoun: return "noun";
    case WordClass::kAdjective: return "adjective";
    case WordClass::kRelation: return "relation";
    case WordClass::kOther: return "other";
  }
  return "other";
}

WordClass parse_word_class(std::string_view name) {
  if (name == "noun") return WordClass::kNoun;
  if (name == "adjective") return WordClass::kAdjective;
  if (name == "relation") return WordClass::kRelation;
  if (name == "other") return WordClass::kOther;
  throw Error(ErrorKind::kFormat, "unknown word class '" + std::string(name) + "'");
}

Vocabulary::Vocabulary() { add(kUnkWord, WordClass::kOther); }

int Vocabulary::add(const std::string& word, WordClass cls) {
  auto it = index_.find(word);
  if (it != index_.end()) {
    if (classes_[it->second] == WordClass::kOther && it->second != kUnk) classes_[it->second] = cls;
    return it->second;
  }
  const int id = size();
  words_.push_back(word);
  classes_.push_back(cls);
  index_.emplace(word, id);
  return id;
}

int Vocabulary::id(std::string_view word) const {
  auto it = index_.find(std::string(word));
  return it == index_.end() ? kUnk : it->second;
}

bool Vocabulary::contains(std::string_view word) const { return index_.count(std::string(word)) > 0; }

std::vector<int> Vocabulary::ids_of_class(WordClass cls) const {
  std::vector<int> out;
  for (int i = 1; i < size(); ++i) {
    if (classes_[i] == cls) out.push_back(i);
  }
  return out;
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  for (int i = 1; i < size(); ++i) out << words_[i] << '\t' << word_class_name(classes_[i]) << '\n';
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  Vocabulary vocab;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw Error(ErrorKind::kFormat, path.string() + " line " + std::to_string(line_no) + ": missing tab");
    }
    vocab.add(line.substr(0, tab), parse_word_class(line.substr(tab + 1)));
  }
  return vocab;
}

WordEmbeddings init_word_embeddings(int vocab_size, int d_basic, int d_modif, std::mt19937_64& rng) {
  if (vocab_size <= 0 || d_basic <= 0 || d_modif <= 0) {
    throw Error(ErrorKind::kInvalidArgument, "embedding dimensions must be positive");
  }
  WordEmbeddings emb{Matrix(vocab_size, d_basic), Matrix(vocab_size, d_modif)};
  fill_uniform(emb.basic, 0.1, rng);
  fill_uniform(emb.modifier, 0.1, rng);
  return emb;
}

int load_pretrained_basic(const std::filesystem::path& path, const Vocabulary& vocab, WordEmbeddings& emb) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  int loaded = 0;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    std::string word;
    if (!(fields >> word) || !vocab.contains(word)) continue;
    const int id = vocab.id(word);
    for (int j = 0; j < emb.basic_dim(); ++j) {
      if (!(fields >> emb.basic(id, j))) {
        throw Error(ErrorKind::kFormat, path.string() + " line " + std::to_string(line_no) + ": expected " +
                                            std::to_string(emb.basic_dim()) + " values");
      }
    }
    ++loaded;
  }
  return loaded;
}

Vector concat_noun(const WordEmbeddings& emb, int noun) { return concat_attr_noun(emb, noun, noun); }

Vector concat_noun(const Vocabulary& vocab, const WordEmbeddings& emb, std::string_view noun) {
  return concat_noun(emb, vocab.id(noun));
}

Vector concat_attr_noun(const WordEmbeddings& emb, int adj, int noun) {
  Vector x(emb.basic_dim() + emb.modifier_dim());
  x.head(emb.basic_dim()) = emb.basic.row(noun).transpose();
  x.tail(emb.modifier_dim()) = emb.modifier.row(adj).transpose();
  return x;
}

Vector concat_attr_noun(const Vocabulary& vocab, const WordEmbeddings& emb, std::string_view adj,
                        std::string_view noun) {
  return concat_attr_noun(emb, vocab.id(adj), vocab.id(noun));
}

FusionParams init_fusion(int d, int input_dim, std::mt19937_64& rng) {
  FusionParams p{Matrix(d, input_dim), Vector(d), Matrix(d, input_dim), Vector(d)};
  const double bound = 1.0 / std::sqrt(static_cast<double>(input_dim));
  fill_uniform(p.w_gate, bound, rng);
  fill_uniform(p.b_gate, bound, rng);
  fill_uniform(p.w_value, bound, rng);
  fill_uniform(p.b_value, bound, rng);
  return p;
}

FusionParams zeros_like(const FusionParams& p) {
  return {Matrix::Zero(p.w_gate.rows(), p.w_gate.cols()), Vector::Zero(p.b_gate.size()),
          Matrix::Zero(p.w_value.rows(), p.w_value.cols()), Vector::Zero(p.b_value.size())};
}

Vector gated_fuse(const Vector& x, const FusionParams& p, FuseTrace* trace) {
  if (x.size() != p.input_dim()) {
    throw Error(ErrorKind::kInvalidArgument, "fusion input has " + std::to_string(x.size()) + " entries, expected " +
                                                 std::to_string(p.input_dim()));
  }
  const Vector gate = (p.w_gate * x + p.b_gate).unaryExpr([](double a) { return sigmoid(a); });
  const Vector value = (p.w_value * x + p.b_value).array().tanh().matrix();
  const Vector raw = gate.cwiseProduct(value);
  const double norm = raw.norm();
  if (!(norm >= kMinNorm)) throw Error(ErrorKind::kNumeric, "degenerate fusion output");
  Vector out = raw / norm;
  if (trace) {
    trace->input = x;
    trace->gate = gate;
    trace->value = value;
    trace->norm = norm;
    trace->output = out;
  }
  return out;
}

Vector gated_fuse_backward(const FuseTrace& trace, const Vector& d_output, const FusionParams& p,
                           FusionParams& grad) {
  const Vector d_raw = normalize_backward(trace.output, trace.norm, d_output);
  const Vector d_gate_pre = d_raw.cwiseProduct(trace.value).cwiseProduct(
      trace.gate.cwiseProduct((1.0 - trace.gate.array()).matrix()));
  const Vector d_value_pre = d_raw.cwiseProduct(trace.gate).cwiseProduct(
      (1.0 - trace.value.array().square()).matrix());
  grad.w_gate.noalias() += d_gate_pre * trace.input.transpose();
  grad.b_gate += d_gate_pre;
  grad.w_value.noalias() += d_value_pre * trace.input.transpose();
  grad.b_value += d_value_pre;
  return p.w_gate.transpose() * d_gate_pre + p.w_value.transpose() * d_value_pre;
}

}  // namespace univse
