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

#include "composer.hpp"

#include <algorithm>
#include <cmath>

namespace univse {

namespace {

Matrix uniform_matrix(int rows, int cols, double bound, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  return m;
}

Vector uniform_vector(int n, double bound, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = dist(rng);
  return v;
}

Vector sigmoid_vec(const Vector& a) {
  return a.unaryExpr([](double x) { return sigmoid(x); });
}

}  // namespace

CombinerParams init_combiner(int d, std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(d));
  CombinerParams p;
  p.w_update = uniform_matrix(d, d, bound, rng);
  p.w_reset = uniform_matrix(d, d, bound, rng);
  p.w_cand = uniform_matrix(d, d, bound, rng);
  p.u_update = uniform_matrix(d, d, bound, rng);
  p.u_reset = uniform_matrix(d, d, bound, rng);
  p.u_cand = uniform_matrix(d, d, bound, rng);
  p.b_update = uniform_vector(d, bound, rng);
  p.b_reset = uniform_vector(d, bound, rng);
  p.b_cand = uniform_vector(d, bound, rng);
  return p;
}

CombinerParams zeros_like(const CombinerParams& p) {
  const auto d = p.dim();
  CombinerParams z;
  z.w_update = z.w_reset = z.w_cand = Matrix::Zero(d, p.w_update.cols());
  z.u_update = z.u_reset = z.u_cand = Matrix::Zero(d, d);
  z.b_update = z.b_reset = z.b_cand = Vector::Zero(d);
  return z;
}

Vector combine_sequence(std::span<const Vector> inputs, const CombinerParams& p, SequenceTrace* trace) {
  if (inputs.empty()) throw Error(ErrorKind::kInvalidArgument, "combine_sequence needs at least one input");
  const int d = p.dim();
  Vector h = Vector::Zero(d);
  if (trace) trace->steps.clear();
  for (const Vector& x : inputs) {
    const Vector z = sigmoid_vec(p.w_update * x + p.u_update * h + p.b_update);
    const Vector r = sigmoid_vec(p.w_reset * x + p.u_reset * h + p.b_reset);
    const Vector c = (p.w_cand * x + p.u_cand * r.cwiseProduct(h) + p.b_cand).array().tanh().matrix();
    Vector next = h + z.cwiseProduct(c - h);
    if (trace) trace->steps.push_back({x, h, z, r, c});
    h = std::move(next);
  }
  const double norm = h.norm();
  if (!(norm >= kMinNorm)) throw Error(ErrorKind::kNumeric, "degenerate combiner state");
  Vector out = h / norm;
  if (trace) {
    trace->h_last = h;
    trace->norm = norm;
    trace->output = out;
  }
  return out;
}

std::vector<Vector> combine_sequence_backward(const SequenceTrace& trace, const Vector& d_output,
                                              const CombinerParams& p, CombinerParams& grad) {
  std::vector<Vector> d_inputs(trace.steps.size());
  Vector dh = normalize_backward(trace.output, trace.norm, d_output);
  for (std::size_t k = trace.steps.size(); k-- > 0;) {
    const GruStep& s = trace.steps[k];
    const Vector& h = s.h_prev;
    const Vector dz = dh.cwiseProduct(s.cand - h);
    const Vector dc = dh.cwiseProduct(s.update);
    Vector dh_prev = dh.cwiseProduct((1.0 - s.update.array()).matrix());

    const Vector dc_pre = dc.cwiseProduct((1.0 - s.cand.array().square()).matrix());
    const Vector rh = s.reset.cwiseProduct(h);
    grad.w_cand.noalias() += dc_pre * s.input.transpose();
    grad.u_cand.noalias() += dc_pre * rh.transpose();
    grad.b_cand += dc_pre;
    Vector dx = p.w_cand.transpose() * dc_pre;
    const Vector d_rh = p.u_cand.transpose() * dc_pre;
    const Vector dr = d_rh.cwiseProduct(h);
    dh_prev += d_rh.cwiseProduct(s.reset);

    const Vector dz_pre = dz.cwiseProduct(s.update.cwiseProduct((1.0 - s.update.array()).matrix()));
    grad.w_update.noalias() += dz_pre * s.input.transpose();
    grad.u_update.noalias() += dz_pre * h.transpose();
    grad.b_update += dz_pre;
    dx.noalias() += p.w_update.transpose() * dz_pre;
    dh_prev.noalias() += p.u_update.transpose() * dz_pre;

    const Vector dr_pre = dr.cwiseProduct(s.reset.cwiseProduct((1.0 - s.reset.array()).matrix()));
    grad.w_reset.noalias() += dr_pre * s.input.transpose();
    grad.u_reset.noalias() += dr_pre * h.transpose();
    grad.b_reset += dr_pre;
    dx.noalias() += p.w_reset.transpose() * dr_pre;
    dh_prev.noalias() += p.u_reset.transpose() * dr_pre;

    d_inputs[k] = std::move(dx);
    dh = std::move(dh_prev);
  }
  return d_inputs;
}

TextParams zeros_like(const TextParams& p) {
  return {WordEmbeddings{Matrix::Zero(p.words.basic.rows(), p.words.basic.cols()),
                         Matrix::Zero(p.words.modifier.rows(), p.words.modifier.cols())},
          zeros_like(p.fusion), zeros_like(p.combiner)};
}

Vector encode_word(const TextParams& p, int basic_row, int modifier_row, WordTrace* trace) {
  const Vector x = concat_attr_noun(p.words, modifier_row, basic_row);
  if (!trace) return gated_fuse(x, p.fusion);
  trace->basic_row = basic_row;
  trace->modifier_row = modifier_row;
  return gated_fuse(x, p.fusion, &trace->fuse);
}

void encode_word_backward(const WordTrace& trace, const Vector& d_output, const TextParams& p, TextParams& grad) {
  const Vector dx = gated_fuse_backward(trace.fuse, d_output, p.fusion, grad.fusion);
  const int db = p.words.basic_dim();
  grad.words.basic.row(trace.basic_row) += dx.head(db).transpose();
  grad.words.modifier.row(trace.modifier_row) += dx.tail(p.words.modifier_dim()).transpose();
}

Vector encode_relation(const TextParams& p, RelationComponent c, RelationTrace* trace) {
  const int ids[3] = {c.subject, c.relation, c.object};
  std::vector<Vector> fused(3);
  for (int k = 0; k < 3; ++k) fused[k] = encode_word(p, ids[k], ids[k], trace ? &trace->words[k] : nullptr);
  return combine_sequence(fused, p.combiner, trace ? &trace->sequence : nullptr);
}

Vector encode_relation(const Vocabulary& vocab, const TextParams& p, const std::string& subject,
                       const std::string& relation, const std::string& object) {
  return encode_relation(p, {vocab.id(subject), vocab.id(relation), vocab.id(object)});
}

void encode_relation_backward(const RelationTrace& trace, const Vector& d_output, const TextParams& p,
                              TextParams& grad) {
  const auto d_words = combine_sequence_backward(trace.sequence, d_output, p.combiner, grad.combiner);
  for (int k = 0; k < 3; ++k) encode_word_backward(trace.words[k], d_words[k], p, grad);
}

Vector encode_sentence(const TextParams& p, std::span<const int> words, SentenceTrace* trace) {
  if (words.empty()) throw Error(ErrorKind::kInvalidArgument, "cannot encode an empty caption");
  std::vector<Vector> fused(words.size());
  if (trace) trace->words.assign(words.size(), WordTrace{});
  for (std::size_t i = 0; i < words.size(); ++i) {
    fused[i] = encode_word(p, words[i], words[i], trace ? &trace->words[i] : nullptr);
  }
  return combine_sequence(fused, p.combiner, trace ? &trace->sequence : nullptr);
}

Vector encode_sentence(const Vocabulary& vocab, const TextParams& p, const std::vector<std::string>& words) {
  std::vector<int> ids;
  ids.reserve(words.size());
  for (const auto& w : words) ids.push_back(vocab.id(w));
  return encode_sentence(p, ids);
}

void encode_sentence_backward(const SentenceTrace& trace, const Vector& d_output, const TextParams& p,
                              TextParams& grad) {
  const auto d_words = combine_sequence_backward(trace.sequence, d_output, p.combiner, grad.combiner);
  for (std::size_t i = 0; i < d_words.size(); ++i) encode_word_backward(trace.words[i], d_words[i], p, grad);
}

Vector aggregate_components(std::span<const Vector> objects, std::span<const Vector> attrs,
                            std::span<const Vector> rels, AggregateTrace* trace) {
  const Vector* first = !objects.empty() ? &objects.front() : !attrs.empty() ? &attrs.front()
                        : !rels.empty()  ? &rels.front()
                                         : nullptr;
  if (!first) throw Error(ErrorKind::kInvalidArgument, "no components");
  Vector sum = Vector::Zero(first->size());
  for (const auto& v : objects) sum += v;
  for (const auto& v : attrs) sum += v;
  for (const auto& v : rels) sum += v;
  const double norm = sum.norm();
  if (!(norm >= kMinNorm)) throw Error(ErrorKind::kNumeric, "components cancel to a zero vector");
  Vector out = sum / norm;
  if (trace) {
    trace->norm = norm;
    trace->output = out;
  }
  return out;
}

Vector encode_caption(const Vector& u_sent, const Vector& u_comp, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw Error(ErrorKind::kInvalidArgument, "alpha must lie in [0, 1], got " + std::to_string(alpha));
  }
  return alpha * u_sent + (1.0 - alpha) * u_comp;
}

CaptionComponents canonical_components(const SemanticGraph& graph, const Vocabulary& vocab) {
  CaptionComponents c;
  for (const auto& noun : graph.objects) c.objects.push_back({vocab.id(noun)});
  for (const auto& [adj, noun] : graph.attr_pairs) c.attrs.push_back({vocab.id(adj), vocab.id(noun)});
  std::vector<RelTriple> rels = graph.rel_triples;
  std::sort(rels.begin(), rels.end());
  for (const auto& t : rels) c.rels.push_back({vocab.id(t[0]), vocab.id(t[1]), vocab.id(t[2])});
  return c;
}

CaptionEncoding encode_full_caption(const TextParams& p, std::span<const int> words,
                                    const CaptionComponents& comps, double alpha, ComponentMask mask) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw Error(ErrorKind::kInvalidArgument, "alpha must lie in [0, 1], got " + std::to_string(alpha));
  }
  CaptionEncoding enc;
  enc.alpha = alpha;
  enc.u_sent = encode_sentence(p, words);
  for (const auto& c : comps.objects) enc.obj_embs.push_back(encode_object(p, c));
  for (const auto& c : comps.attrs) enc.attr_embs.push_back(encode_attribute(p, c));
  for (const auto& c : comps.rels) enc.rel_embs.push_back(encode_relation(p, c));
  const std::span<const Vector> none;
  const auto objs = mask.objects ? std::span<const Vector>(enc.obj_embs) : none;
  const auto attrs = mask.attrs ? std::span<const Vector>(enc.attr_embs) : none;
  const auto rels = mask.rels ? std::span<const Vector>(enc.rel_embs) : none;
  if (objs.empty() && attrs.empty() && rels.empty()) {
    enc.u_cap = enc.u_sent;
    return enc;
  }
  enc.u_comp = aggregate_components(objs, attrs, rels);
  enc.u_cap = encode_caption(enc.u_sent, enc.u_comp, alpha);
  return enc;
}

}  // namespace univse
