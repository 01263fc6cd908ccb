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


#include <fstream>
#include <sstream>

#include "doctest.h"
#include "support.hpp"
#include "synthcorpus.hpp"
#include "trainkit.hpp"

using namespace univse;

namespace {

struct Fixture {
  Corpus corpus;
  Vocabulary vocab;
  Dataset ds;
  ModelParams params;
  std::vector<BatchItem> batch;
};

// A small corpus, a toy model and one fixed batch of four captions.
const Fixture& fixture() {
  static const Fixture f = [] {
    SynthConfig cfg;
    cfg.train_scenes = 10;
    cfg.test_scenes = 4;
    cfg.depth = 12;
    Fixture out;
    out.corpus = generate_corpus(cfg);
    out.vocab = *out.corpus.vocab;
    out.ds = index_corpus(out.corpus, out.vocab);
    std::mt19937_64 rng(5);
    out.params = init_model(ModelDims{8, 8, 4}, out.vocab.size(), cfg.depth, rng);
    const std::vector<std::size_t> ids = {0, 7, 13, 21};
    auto brng = stream_rng(1, 9);
    out.batch = assemble_batch(out.corpus, out.ds, ids, LossConfig{}, brng);
    return out;
  }();
  return f;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

bool all_zero(const ModelParams& p) {
  for (const auto& v : tensor_views(p)) {
    for (double x : v.values()) {
      if (x != 0.0) return false;
    }
  }
  return true;
}

TrainOptions tiny_run(const std::filesystem::path& out, int epochs) {
  TrainOptions o;
  o.dims = ModelDims{8, 8, 4};
  o.optim.epochs = epochs;
  o.optim.batch_size = 8;
  o.out_dir = out;
  return o;
}

}  // namespace

TEST_CASE("finite differences of a linear loss are exact") {
  const Fixture& f = fixture();
  ModelParams coeff = zeros_like(f.params);
  double k = 0.0;
  for (auto& v : tensor_views(coeff)) {
    for (double& x : v.values()) x = std::sin(k += 1.0);
  }
  const LossFn linear = [&](const ModelParams& p, ModelParams* grad) {
    double s = 0;
    const auto a = tensor_views(p);
    const auto c = tensor_views(coeff);
    for (std::size_t t = 0; t < a.size(); ++t) {
      for (Eigen::Index i = 0; i < a[t].size(); ++i) s += a[t].data[i] * c[t].data[i];
    }
    if (grad) add_scaled(*grad, coeff, 1.0);
    return s;
  };
  const auto report = finite_diff_check(linear, f.params, 1e-5, 50, 3);
  // Only rounding remains: about 1e-16 * sum|c_i x_i| / eps.
  for (const auto& g : report) CHECK(g.max_rel_error < 1e-7);

  SUBCASE("every group is listed exactly once") {
    std::vector<std::string> groups;
    for (const auto& g : report) groups.push_back(g.group);
    CHECK(groups == parameter_groups(f.params));
    for (const auto& g : report) CHECK(g.coords > 0);
  }
}

TEST_CASE("full-model gradients match central differences") {
  const Fixture& f = fixture();
  LossConfig cfg;
  cfg.margin = 0.5;  // keeps more hinges active
  const LossFn fn = [&](const ModelParams& p, ModelParams* grad) { return batch_loss(p, f.batch, cfg, grad).total; };
  for (const auto& g : finite_diff_check(fn, f.params, 1e-5, 40, 1)) {
    INFO(g.group << " worst " << g.worst);
    CHECK(g.max_rel_error < 1e-4);
  }
}

TEST_CASE("batch gradients") {
  const Fixture& f = fixture();
  LossConfig cfg;
  SUBCASE("two evaluations are bitwise identical") {
    ModelParams a = zeros_like(f.params), b = zeros_like(f.params);
    const auto la = batch_loss(f.params, f.batch, cfg, &a);
    const auto lb = batch_loss(f.params, f.batch, cfg, &b);
    CHECK(la.total == lb.total);
    Checkpoint ca, cb;
    store_params(a, ca);
    store_params(b, cb);
    CHECK(ca == cb);
  }
  SUBCASE("a zero loss has zero gradient") {
    cfg.w_sent = cfg.w_comp = cfg.w_rel = cfg.w_obj = 0.0;
    ModelParams g = zeros_like(f.params);
    CHECK(batch_loss(f.params, f.batch, cfg, &g).total == 0.0);
    CHECK(all_zero(g));
  }
  SUBCASE("non-finite losses name their term") {
    ModelParams broken = f.params;
    broken.projection.bias[0] = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(batch_loss(broken, f.batch, cfg), Error);
  }
  SUBCASE("masked families send no gradient through u_comp alone") {
    ComponentMask no_rels{true, true, false};
    cfg.w_sent = cfg.w_rel = cfg.w_obj = 0.0;  // only the bag-of-components term
    ModelParams g = zeros_like(f.params);
    batch_loss(f.params, f.batch, cfg, &g, no_rels);
    CHECK(g.text.combiner.w_update.norm() == 0.0);
  }
}

TEST_CASE("optimizers") {
  const Fixture& f = fixture();
  for (const char* algo : {"sgd", "adam"}) {
    OptimConfig oc;
    oc.algorithm = algo;
    ModelParams p = f.params;
    Optimizer opt(oc, p);
    opt.step(p, zeros_like(p));
    Checkpoint a, b;
    store_params(p, a);
    store_params(f.params, b);
    CHECK(a == b);  // zero gradient is a fixpoint
  }

  SUBCASE("plain gradient descent step") {
    OptimConfig oc;
    oc.algorithm = "sgd";
    oc.lr = 0.1;
    ModelParams p = f.params;
    ModelParams g = zeros_like(p);
    g.projection.bias[2] = 3.0;
    Optimizer opt(oc, p);
    opt.step(p, g);
    CHECK(p.projection.bias[2] == f.params.projection.bias[2] - 0.1 * 3.0);
    CHECK(p.projection.bias[1] == f.params.projection.bias[1]);
  }
  SUBCASE("first Adam step moves by lr in the gradient's direction") {
    OptimConfig oc;
    oc.lr = 0.01;
    ModelParams p = f.params;
    ModelParams g = zeros_like(p);
    g.projection.bias[2] = -4.0;
    Optimizer opt(oc, p);
    opt.step(p, g);
    CHECK(p.projection.bias[2] - f.params.projection.bias[2] == doctest::Approx(0.01).epsilon(1e-6));
    CHECK(opt.steps() == 1);

    Checkpoint ck;
    opt.save_state(ck);
    Optimizer restored(oc, p);
    restored.load_state(ck);
    CHECK(restored.steps() == 1);
  }
  SUBCASE("loss decreases over 20 steps on a fixed batch") {
    OptimConfig oc;
    oc.lr = 0.01;
    ModelParams p = f.params;
    Optimizer opt(oc, p);
    const double first = batch_loss(p, f.batch, oc.loss).total;
    for (int s = 0; s < 20; ++s) {
      ModelParams g = zeros_like(p);
      batch_loss(p, f.batch, oc.loss, &g);
      opt.step(p, g);
    }
    CHECK(batch_loss(p, f.batch, oc.loss).total < first);
  }
}

TEST_CASE("training runs") {
  const Fixture& f = fixture();
  testing::TempDir dir("train");

  SUBCASE("zero epochs writes the initial checkpoint") {
    const auto r = train(f.corpus, f.vocab, tiny_run(dir / "zero", 0));
    CHECK(r.epochs.empty());
    CHECK(r.best_epoch == 0);
    for (const char* name : {"last.uvck", "best.uvck", "vocab.tsv", "metrics.jsonl"}) CHECK(std::filesystem::exists(dir / "zero" / name));
    const Checkpoint ck = load_checkpoint(dir / "zero" / "last.uvck");
    CHECK(ck.at("train.epoch").data[0] == 0.0);
    auto rng = stream_rng(1, 0);
    const ModelParams init = init_model(ModelDims{8, 8, 4}, f.vocab.size(), 12, rng);
    Checkpoint expected;
    store_params(init, expected);
    for (const auto& t : expected.tensors) CHECK(ck.at(t.name) == t);
  }

  SUBCASE("identical seeds give identical artifacts, resume repeats the uninterrupted run") {
    const auto a = train(f.corpus, f.vocab, tiny_run(dir / "a", 2));
    const auto b = train(f.corpus, f.vocab, tiny_run(dir / "b", 2));
    CHECK(slurp(dir / "a" / "last.uvck") == slurp(dir / "b" / "last.uvck"));
    CHECK(slurp(dir / "a" / "metrics.jsonl") == slurp(dir / "b" / "metrics.jsonl"));
    REQUIRE(a.epochs.size() == 2);
    CHECK(a.epochs[1].loss.total < a.epochs[0].loss.total * 1.5);

    train(f.corpus, f.vocab, tiny_run(dir / "c", 1));
    TrainOptions more = tiny_run(dir / "c", 2);
    more.resume = true;
    const auto c = train(f.corpus, f.vocab, more);
    REQUIRE(c.epochs.size() == 1);
    CHECK(c.epochs[0].epoch == 2);
    CHECK(c.epochs[0].loss.total == a.epochs[1].loss.total);
    CHECK(slurp(dir / "c" / "last.uvck") == slurp(dir / "a" / "last.uvck"));
    CHECK(slurp(dir / "c" / "metrics.jsonl") == slurp(dir / "a" / "metrics.jsonl"));
  }

  SUBCASE("captions without features are rejected") {
    Corpus broken = f.corpus;
    broken.features.erase(broken.features.begin());
    CHECK_THROWS_AS(train(broken, f.vocab, tiny_run(dir / "x", 1)), Error);
  }
  SUBCASE("bad settings are config errors") {
    TrainOptions o = tiny_run(dir / "y", 1);
    o.optim.batch_size = 1;
    CHECK_THROWS_AS(train(f.corpus, f.vocab, o), Error);
    o = tiny_run(dir / "y", 1);
    o.optim.components = {false, false, false};
    CHECK_THROWS_AS(train(f.corpus, f.vocab, o), Error);
  }
}
