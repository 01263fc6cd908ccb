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

#include "trainkit.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "evalkit.hpp"

namespace univse {

namespace {

// Everything one item's forward pass recorded.
struct ItemTrace {
  ProjectionTrace projection;
  ProjectedMap map;
  SentenceTrace sentence;
  std::vector<WordTrace> objects, attrs;
  std::vector<RelationTrace> rels;
  std::vector<std::vector<WordTrace>> object_negs, attr_negs;
  std::vector<std::vector<RelationTrace>> rel_negs;
  AggregateTrace aggregate;
  bool has_components = false;
};

void forward_item(const ModelParams& p, const BatchItem& item, const ComponentMask& mask, EmbeddedPair& pair,
                  ItemTrace& tr) {
  const auto& text = p.text;
  const auto& comps = *item.comps;
  const auto& negs = item.negatives;
  tr.map = project(*item.image, p.projection, &tr.projection);
  pair.group = item.group;
  pair.regions = tr.map.regions;
  pair.image = tr.map.pooled;
  pair.sentence = encode_sentence(text, *item.words, &tr.sentence);

  std::vector<Vector> obj_embs, attr_embs, rel_embs;
  tr.objects.resize(comps.objects.size());
  tr.object_negs.resize(comps.objects.size());
  for (std::size_t k = 0; k < comps.objects.size(); ++k) {
    ComponentSample s;
    s.positive = encode_object(text, comps.objects[k], &tr.objects[k]);
    const auto& pool = k < negs.objects.size() ? negs.objects[k] : std::vector<ObjectComponent>{};
    tr.object_negs[k].resize(pool.size());
    for (std::size_t n = 0; n < pool.size(); ++n) s.negatives.push_back(encode_object(text, pool[n], &tr.object_negs[k][n]));
    if (mask.objects) obj_embs.push_back(s.positive);
    pair.local.push_back(std::move(s));
  }
  tr.attrs.resize(comps.attrs.size());
  tr.attr_negs.resize(comps.attrs.size());
  for (std::size_t k = 0; k < comps.attrs.size(); ++k) {
    ComponentSample s;
    s.positive = encode_attribute(text, comps.attrs[k], &tr.attrs[k]);
    const auto& pool = k < negs.attrs.size() ? negs.attrs[k] : std::vector<AttributeComponent>{};
    tr.attr_negs[k].resize(pool.size());
    for (std::size_t n = 0; n < pool.size(); ++n) s.negatives.push_back(encode_attribute(text, pool[n], &tr.attr_negs[k][n]));
    if (mask.attrs) attr_embs.push_back(s.positive);
    pair.local.push_back(std::move(s));
  }
  tr.rels.resize(comps.rels.size());
  tr.rel_negs.resize(comps.rels.size());
  for (std::size_t k = 0; k < comps.rels.size(); ++k) {
    ComponentSample s;
    s.positive = encode_relation(text, comps.rels[k], &tr.rels[k]);
    const auto& pool = k < negs.rels.size() ? negs.rels[k] : std::vector<RelationComponent>{};
    tr.rel_negs[k].resize(pool.size());
    for (std::size_t n = 0; n < pool.size(); ++n) s.negatives.push_back(encode_relation(text, pool[n], &tr.rel_negs[k][n]));
    if (mask.rels) rel_embs.push_back(s.positive);
    pair.relations.push_back(std::move(s));
  }
  tr.has_components = !obj_embs.empty() || !attr_embs.empty() || !rel_embs.empty();
  pair.components = tr.has_components ? aggregate_components(obj_embs, attr_embs, rel_embs, &tr.aggregate) : Vector();
}

void backward_item(const ModelParams& p, const ItemTrace& tr, const ComponentMask& mask, const EmbeddedPair& g,
                   ModelParams& grad) {
  project_backward(tr.projection, tr.map, g.regions, g.image, grad.projection);
  encode_sentence_backward(tr.sentence, g.sentence, p.text, grad.text);
  const Vector d_comp = tr.has_components ? aggregate_backward(tr.aggregate, g.components) : Vector();
  auto with_comp = [&](const Vector& d, bool included) -> Vector {
    return tr.has_components && included ? Vector(d + d_comp) : d;
  };

  std::size_t local = 0;
  for (std::size_t k = 0; k < tr.objects.size(); ++k, ++local) {
    encode_word_backward(tr.objects[k], with_comp(g.local[local].positive, mask.objects), p.text, grad.text);
    for (std::size_t n = 0; n < tr.object_negs[k].size(); ++n) {
      encode_word_backward(tr.object_negs[k][n], g.local[local].negatives[n], p.text, grad.text);
    }
  }
  for (std::size_t k = 0; k < tr.attrs.size(); ++k, ++local) {
    encode_word_backward(tr.attrs[k], with_comp(g.local[local].positive, mask.attrs), p.text, grad.text);
    for (std::size_t n = 0; n < tr.attr_negs[k].size(); ++n) {
      encode_word_backward(tr.attr_negs[k][n], g.local[local].negatives[n], p.text, grad.text);
    }
  }
  for (std::size_t k = 0; k < tr.rels.size(); ++k) {
    encode_relation_backward(tr.rels[k], with_comp(g.relations[k].positive, mask.rels), p.text, grad.text);
    for (std::size_t n = 0; n < tr.rel_negs[k].size(); ++n) {
      encode_relation_backward(tr.rel_negs[k][n], g.relations[k].negatives[n], p.text, grad.text);
    }
  }
}

void check_finite(const LossBreakdown& l) {
  const std::pair<const char*, double> terms[] = {{"sent", l.sent}, {"comp", l.comp}, {"rel", l.rel}, {"obj", l.obj}};
  for (const auto& [name, value] : terms) {
    if (!std::isfinite(value)) throw Error(ErrorKind::kNumeric, std::string("non-finite loss term: ") + name);
  }
}

void write_metrics_line(std::ofstream& out, const EpochMetrics& m) {
  nlohmann::json j = {{"epoch", m.epoch},        {"loss_sent", m.loss.sent}, {"loss_comp", m.loss.comp},
                      {"loss_rel", m.loss.rel},  {"loss_obj", m.loss.obj},   {"r1_val", m.r1_val}};
  out << j.dump() << '\n';
  out.flush();
}

Checkpoint training_checkpoint(const ModelParams& p, const Optimizer& opt, int epoch, double best_r1, int best_epoch) {
  Checkpoint ck;
  store_params(p, ck);
  opt.save_state(ck);
  ck.put(scalar_tensor("train.epoch", epoch));
  ck.put(scalar_tensor("train.best_r1", best_r1));
  ck.put(scalar_tensor("train.best_epoch", best_epoch));
  return ck;
}

}  // namespace

void OptimConfig::validate() const {
  if (algorithm != "adam" && algorithm != "sgd") throw Error(ErrorKind::kConfig, "optim.algorithm must be adam or sgd");
  if (!(lr > 0.0)) throw Error(ErrorKind::kConfig, "optim.lr must be > 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw Error(ErrorKind::kConfig, "optim betas must lie in [0, 1)");
  }
  if (!(eps > 0.0)) throw Error(ErrorKind::kConfig, "optim.eps must be > 0");
  if (epochs < 0) throw Error(ErrorKind::kConfig, "optim.epochs must be >= 0");
  if (batch_size < 2) throw Error(ErrorKind::kConfig, "optim.batch_size must be >= 2");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw Error(ErrorKind::kConfig, "alpha must lie in [0, 1]");
  if (!components.any()) throw Error(ErrorKind::kConfig, "u_comp needs at least one component family");
  loss.validate();
}

LossBreakdown batch_loss(const ModelParams& p, std::span<const BatchItem> items, const LossConfig& cfg,
                         ModelParams* grad, ComponentMask components) {
  const std::size_t n = items.size();
  EmbeddedBatch batch(n);
  std::vector<ItemTrace> traces(n);
  parallel_for(n, [&](std::size_t i) { forward_item(p, items[i], components, batch[i], traces[i]); });

  EmbeddedBatch d_batch;
  if (grad) d_batch = zeros_like(batch);
  const LossBreakdown loss = total_loss(batch, cfg, grad ? &d_batch : nullptr);
  check_finite(loss);
  if (!grad) return loss;

  std::vector<ModelParams> partial(n);
  parallel_for(n, [&](std::size_t i) {
    partial[i] = zeros_like(p);
    backward_item(p, traces[i], components, d_batch[i], partial[i]);
  });
  for (const auto& g : partial) add_scaled(*grad, g, 1.0);
  return loss;
}

std::vector<BatchItem> assemble_batch(const Corpus& corpus, const Dataset& ds, std::span<const std::size_t> examples,
                                      const LossConfig& cfg, std::mt19937_64& rng) {
  std::vector<BatchItem> items;
  items.reserve(examples.size());
  for (std::size_t e : examples) {
    const auto& ex = ds.examples.at(e);
    BatchItem item;
    item.image = &corpus.features.at(ex.image);
    item.group = ex.image;
    item.words = &ex.words;
    item.comps = &ex.comps;
    item.negatives = sample_negatives(ex.comps, ds.contexts.at(ex.image), ds.pools, cfg, rng);
    items.push_back(std::move(item));
  }
  return items;
}

Optimizer::Optimizer(const OptimConfig& cfg, const ModelParams& like) : cfg_(cfg), m_(zeros_like(like)), v_(zeros_like(like)) {}

void Optimizer::step(ModelParams& p, const ModelParams& grad) {
  ++t_;
  auto params = tensor_views(p);
  const auto grads = tensor_views(grad);
  if (cfg_.algorithm == "sgd") {
    for (std::size_t t = 0; t < params.size(); ++t) {
      for (Eigen::Index i = 0; i < params[t].size(); ++i) params[t].data[i] -= cfg_.lr * grads[t].data[i];
    }
    return;
  }
  auto ms = tensor_views(m_);
  auto vs = tensor_views(v_);
  const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t t = 0; t < params.size(); ++t) {
    for (Eigen::Index i = 0; i < params[t].size(); ++i) {
      const double g = grads[t].data[i];
      double& m = ms[t].data[i];
      double& v = vs[t].data[i];
      m = cfg_.beta1 * m + (1.0 - cfg_.beta1) * g;
      v = cfg_.beta2 * v + (1.0 - cfg_.beta2) * g * g;
      params[t].data[i] -= cfg_.lr * (m / c1) / (std::sqrt(v / c2) + cfg_.eps);
    }
  }
}

void Optimizer::save_state(Checkpoint& ck) const {
  store_params(m_, ck, "adam.m.");
  store_params(v_, ck, "adam.v.");
  ck.put(scalar_tensor("adam.step", static_cast<double>(t_)));
}

void Optimizer::load_state(const Checkpoint& ck) {
  load_params_into(ck, m_, "adam.m.");
  load_params_into(ck, v_, "adam.v.");
  t_ = static_cast<std::int64_t>(ck.at("adam.step").data.at(0));
}

std::vector<GroupCheck> finite_diff_check(const LossFn& fn, const ModelParams& params, double eps,
                                          std::size_t coords_per_group, std::uint64_t seed) {
  ModelParams analytic = zeros_like(params);
  fn(params, &analytic);
  ModelParams probe = params;
  auto probe_views = tensor_views(probe);
  const auto grad_views = tensor_views(analytic);
  auto rng = stream_rng(seed, 4);

  std::vector<GroupCheck> report;
  for (const auto& group : parameter_groups(params)) {
    std::vector<std::pair<std::size_t, Eigen::Index>> coords;
    for (std::size_t t = 0; t < probe_views.size(); ++t) {
      if (probe_views[t].group() != group) continue;
      for (Eigen::Index i = 0; i < probe_views[t].size(); ++i) coords.push_back({t, i});
    }
    if (coords.size() > coords_per_group) {
      std::shuffle(coords.begin(), coords.end(), rng);
      coords.resize(coords_per_group);
      std::sort(coords.begin(), coords.end());
    }
    GroupCheck gc;
    gc.group = group;
    gc.coords = coords.size();
    for (const auto& [t, i] : coords) {
      double& x = probe_views[t].data[i];
      const double saved = x;
      x = saved + eps;
      const double up = fn(probe, nullptr);
      x = saved - eps;
      const double down = fn(probe, nullptr);
      x = saved;
      const double fd = (up - down) / (2.0 * eps);
      const double an = grad_views[t].data[i];
      const double err = std::abs(an - fd) / std::max(1e-8, std::abs(an) + std::abs(fd));
      if (gc.worst.empty() || err > gc.max_rel_error) {
        gc.max_rel_error = err;
        gc.worst = probe_views[t].name + "[" + std::to_string(i) + "]";
      }
    }
    report.push_back(std::move(gc));
  }
  return report;
}

TrainResult train(const Corpus& corpus, const Vocabulary& vocab, const TrainOptions& opts) {
  opts.dims.validate();
  opts.optim.validate();
  if (corpus.features.empty()) throw Error(ErrorKind::kData, "corpus has no feature maps");
  const Dataset ds = index_corpus(corpus, vocab);
  const auto train_examples = ds.examples_in("train");
  if (train_examples.size() < 2) throw Error(ErrorKind::kData, "need at least two training captions");
  std::filesystem::create_directories(opts.out_dir);

  const auto& oc = opts.optim;
  ModelParams params;
  int start_epoch = 0;
  TrainResult result;
  const auto last_path = opts.out_dir / "last.uvck";
  const auto best_path = opts.out_dir / "best.uvck";
  const auto metrics_path = opts.out_dir / "metrics.jsonl";

  Checkpoint resumed;
  if (opts.resume) {
    resumed = load_checkpoint(last_path);
    params = params_from_checkpoint(resumed);
    if (params.vocab_size() != vocab.size()) throw Error(ErrorKind::kData, "checkpoint vocabulary size differs");
    start_epoch = static_cast<int>(resumed.at("train.epoch").data.at(0));
    result.best_r1 = resumed.at("train.best_r1").data.at(0);
    result.best_epoch = static_cast<int>(resumed.at("train.best_epoch").data.at(0));
  } else {
    auto init_rng = stream_rng(oc.seed, 0);
    params = init_model(opts.dims, vocab.size(), static_cast<int>(corpus.features.front().depth), init_rng);
    if (!opts.pretrained.empty()) load_pretrained_basic(opts.pretrained, vocab, params.text.words);
  }
  Optimizer opt(oc, params);
  if (opts.resume) opt.load_state(resumed);
  vocab.save(opts.out_dir / "vocab.tsv");

  // Metrics of earlier epochs are kept on resume, later ones dropped.
  std::vector<std::string> kept;
  if (opts.resume && std::filesystem::exists(metrics_path)) {
    std::ifstream in(metrics_path);
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && nlohmann::json::parse(line).at("epoch").get<int>() <= start_epoch) kept.push_back(line);
    }
  }
  std::ofstream metrics(metrics_path, std::ios::trunc);
  if (!metrics) throw Error(ErrorKind::kIo, "cannot write " + metrics_path.string());
  for (const auto& line : kept) metrics << line << '\n';

  if (!opts.resume) {
    const double r1 = evaluate_retrieval(params, corpus, ds, opts.val_split, oc.alpha, oc.components).t2i.r1;
    result.best_r1 = r1;
    result.best_epoch = 0;
    const auto ck = training_checkpoint(params, opt, 0, result.best_r1, 0);
    save_checkpoint(last_path, ck);
    save_checkpoint(best_path, ck);
  }

  for (int epoch = start_epoch + 1; epoch <= oc.epochs; ++epoch) {
    auto rng = stream_rng(oc.seed, 100 + static_cast<std::uint64_t>(epoch));
    std::vector<std::size_t> order = train_examples;
    std::shuffle(order.begin(), order.end(), rng);
    LossBreakdown sum;
    int batches = 0;
    for (std::size_t begin = 0; begin + 1 < order.size(); begin += static_cast<std::size_t>(oc.batch_size)) {
      const std::size_t end = std::min(order.size(), begin + static_cast<std::size_t>(oc.batch_size));
      if (end - begin < 2) break;
      const std::span<const std::size_t> ids(order.data() + begin, end - begin);
      const auto items = assemble_batch(corpus, ds, ids, oc.loss, rng);
      ModelParams grad = zeros_like(params);
      const auto loss = batch_loss(params, items, oc.loss, &grad, oc.components);
      opt.step(params, grad);
      sum.sent += loss.sent;
      sum.comp += loss.comp;
      sum.rel += loss.rel;
      sum.obj += loss.obj;
      sum.total += loss.total;
      ++batches;
    }
    EpochMetrics m;
    m.epoch = epoch;
    const double nb = std::max(1, batches);
    m.loss = {sum.sent / nb, sum.comp / nb, sum.rel / nb, sum.obj / nb, sum.total / nb};
    m.r1_val = evaluate_retrieval(params, corpus, ds, opts.val_split, oc.alpha, oc.components).t2i.r1;
    write_metrics_line(metrics, m);
    result.epochs.push_back(m);
    spdlog::info("epoch {} loss {:.4f} r1_val {:.3f}", epoch, m.loss.total, m.r1_val);
    if (m.r1_val > result.best_r1) {
      result.best_r1 = m.r1_val;
      result.best_epoch = epoch;
    }
    const auto ck = training_checkpoint(params, opt, epoch, result.best_r1, result.best_epoch);
    if (result.best_epoch == epoch) save_checkpoint(best_path, ck);
    save_checkpoint(last_path, ck);
  }
  return result;
}

}  // namespace univse
