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


// Exercises the shared library through its C header only.

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "univse/univse.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string take(char* s) {
  std::string out = s ? s : "";
  univse_string_free(s);
  return out;
}

struct Config {
  univse_config* ptr = nullptr;
  Config() { REQUIRE(univse_config_new(&ptr) == UNIVSE_OK); }
  ~Config() { univse_config_free(ptr); }
  void set(const char* key, const std::string& value) { REQUIRE(univse_config_set(ptr, key, value.c_str()) == UNIVSE_OK); }
};

// synth -> train once for the whole suite.
struct Pipeline {
  fs::path root;
  fs::path corpus;
  fs::path run;
  int captions = 0;       // a scene may support fewer than 5 distinct captions
  int test_captions = 0;
  Pipeline() {
    std::random_device rd;
    root = fs::temp_directory_path() / ("univse-capi-" + std::to_string(rd()));
    corpus = root / "corpus";
    run = root / "run";
    Config c;
    c.set("paths.out", corpus.string());
    c.set("synth.train_scenes", "12");
    c.set("synth.test_scenes", "6");
    c.set("synth.depth", "8");
    char* report = nullptr;
    REQUIRE(univse_run_synth(c.ptr, &report) == UNIVSE_OK);
    const json synth = json::parse(take(report));
    captions = synth["captions"].get<int>();
    test_captions = synth["test_captions"].get<int>();

    Config t;
    apply_training(t);
    REQUIRE(univse_run_train(t.ptr, 0, &report) == UNIVSE_OK);
    take(report);
  }
  ~Pipeline() {
    std::error_code ec;
    fs::remove_all(root, ec);
  }
  void apply_training(Config& t) const {
    t.set("paths.corpus", corpus.string());
    t.set("paths.out", run.string());
    t.set("paths.checkpoint", (run / "last.uvck").string());
    t.set("model.d", "8");
    t.set("model.d_basic", "8");
    t.set("model.d_modif", "4");
    t.set("optim.epochs", "1");
    t.set("optim.batch_size", "8");
  }
};

const Pipeline& pipeline() {
  static const Pipeline p;
  return p;
}

}  // namespace

TEST_CASE("library metadata and status names") {
  CHECK(std::string(univse_version()).size() > 0);
  CHECK(std::string(univse_status_name(UNIVSE_OK)) == "ok");
  CHECK(std::string(univse_status_name(UNIVSE_E_IO)) == "io_error");
  CHECK(std::string(univse_status_name(UNIVSE_E_CONFIG)) == "config_error");
  CHECK(std::string(univse_status_name(12345)) == "unknown");
  CHECK(univse_set_log_level("warn") == UNIVSE_OK);
  CHECK(univse_set_log_level("loud") == UNIVSE_E_INVALID_ARGUMENT);
}

TEST_CASE("configuration handles") {
  Config c;
  char* value = nullptr;
  REQUIRE(univse_config_get(c.ptr, "caption.alpha", &value) == UNIVSE_OK);
  CHECK(take(value) == "0.75");
  c.set("optim.lr", "0.002");
  REQUIRE(univse_config_get(c.ptr, "optim.lr", &value) == UNIVSE_OK);
  CHECK(take(value) == "0.002");

  CHECK(univse_config_set(c.ptr, "optim.bogus", "1") == UNIVSE_E_CONFIG);
  CHECK(std::string(univse_last_error()).find("optim.bogus") != std::string::npos);
  CHECK(univse_config_set(nullptr, "optim.lr", "1") == UNIVSE_E_INVALID_ARGUMENT);
  CHECK(univse_config_get(c.ptr, "optim.lr", nullptr) == UNIVSE_E_INVALID_ARGUMENT);

  char* ini = nullptr;
  REQUIRE(univse_config_dump(c.ptr, &ini) == UNIVSE_OK);
  const std::string text = take(ini);
  CHECK(text.find("[optim]") != std::string::npos);

  const fs::path file = fs::temp_directory_path() / "univse-capi-config.ini";
  {
    std::ofstream out(file);
    out << text;
  }
  univse_config* loaded = nullptr;
  REQUIRE(univse_config_load(file.string().c_str(), &loaded) == UNIVSE_OK);
  REQUIRE(univse_config_dump(loaded, &ini) == UNIVSE_OK);
  CHECK(take(ini) == text);
  univse_config_free(loaded);
  fs::remove(file);
  CHECK(univse_config_load("/nonexistent/x.ini", &loaded) != UNIVSE_OK);

  char* keys = nullptr;
  REQUIRE(univse_config_keys(&keys) == UNIVSE_OK);
  CHECK(take(keys).find("loss.margin\n") != std::string::npos);
}

TEST_CASE("subcommands through the C interface") {
  const Pipeline& p = pipeline();
  CHECK(fs::exists(p.run / "last.uvck"));
  CHECK(fs::exists(p.run / "config.ini"));

  Config c;
  p.apply_training(c);
  char* report = nullptr;
  REQUIRE(univse_run_eval(c.ptr, "retrieval", &report) == UNIVSE_OK);
  const json r = json::parse(take(report));
  CHECK(p.test_captions > 24);
  CHECK(r["retrieval"]["t2i"]["queries"].get<int>() == p.test_captions);
  CHECK(r["retrieval"]["i2t"]["candidates"].get<int>() == p.test_captions);

  REQUIRE(univse_run_eval(c.ptr, "disambiguate", &report) == UNIVSE_OK);
  const json d = json::parse(take(report));
  CHECK(d["cases"].get<int>() + d["skipped"].get<int>() == p.test_captions);

  CHECK(univse_run_eval(c.ptr, "dance", &report) == UNIVSE_E_INVALID_ARGUMENT);

  const fs::path attacks = p.root / "attacks.jsonl";
  REQUIRE(univse_run_attack(c.ptr, attacks.string().c_str(), &report) == UNIVSE_OK);
  const json a = json::parse(take(report));
  CHECK(a["adversarials"].get<int>() == 5 * a["originals"].get<int>());

  REQUIRE(univse_run_relevance(c.ptr, "syn-test-0000", "clock", nullptr, &report) == UNIVSE_OK);
  const json g = json::parse(take(report));
  double sum = 0;
  for (const auto& row : g["map"]) {
    for (const auto& v : row) sum += v.get<double>();
  }
  CHECK(sum == doctest::Approx(1.0));
  CHECK(univse_run_relevance(c.ptr, "no-such-image", "clock", nullptr, &report) == UNIVSE_E_DATA);
  CHECK(univse_run_relevance(c.ptr, "syn-test-0000", "clock clock clock", nullptr, &report) == UNIVSE_E_PARSE);

  REQUIRE(univse_features_inspect((p.corpus / "features.uvse").string().c_str(), &report) == UNIVSE_OK);
  const json f = json::parse(take(report));
  CHECK(f["count"].get<int>() == 18);
  CHECK(f["records"][0]["depth"].get<int>() == 8);
  CHECK(univse_features_inspect((p.root / "absent.uvse").string().c_str(), &report) == UNIVSE_E_IO);

  REQUIRE(univse_run_parse((p.corpus / "annotations.conllu").string().c_str(), &report) == UNIVSE_OK);
  CHECK(json::parse(take(report)).size() == static_cast<std::size_t>(p.captions));

  Config missing;
  missing.set("paths.corpus", (p.root / "nowhere").string());
  missing.set("paths.out", (p.root / "run2").string());
  CHECK(univse_run_train(missing.ptr, 0, &report) == UNIVSE_E_IO);
}

TEST_CASE("model handles") {
  const Pipeline& p = pipeline();
  univse_model* m = nullptr;
  REQUIRE(univse_model_load((p.run / "last.uvck").string().c_str(), nullptr, &m) == UNIVSE_OK);
  const std::size_t d = univse_model_dim(m);
  CHECK(d == 8);

  std::vector<double> q(d), s(d), img(d);
  REQUIRE(univse_model_encode_query(m, "white clock", q.data(), q.size()) == UNIVSE_OK);
  double norm = 0;
  for (double x : q) norm += x * x;
  CHECK(std::sqrt(norm) == doctest::Approx(1.0));
  CHECK(univse_model_encode_query(m, "white clock", q.data(), d - 1) == UNIVSE_E_INVALID_ARGUMENT);
  CHECK(univse_model_encode_query(m, "purple", q.data(), d) == UNIVSE_E_PARSE);
  REQUIRE(univse_model_encode_sentence(m, "a white clock on a red table", s.data(), d) == UNIVSE_OK);

  std::vector<float> features(4 * 4 * 8);
  for (std::size_t i = 0; i < features.size(); ++i) features[i] = static_cast<float>(std::sin(0.3 * static_cast<double>(i)));
  REQUIRE(univse_model_encode_image(m, features.data(), 4, 4, 8, img.data(), d) == UNIVSE_OK);
  CHECK(univse_model_encode_image(m, features.data(), 4, 4, 7, img.data(), d) == UNIVSE_E_INVALID_ARGUMENT);

  std::vector<double> rel(16);
  REQUIRE(univse_model_relevance(m, "clock", features.data(), 4, 4, 8, 0.1, rel.data(), rel.size()) == UNIVSE_OK);
  double total = 0;
  for (double v : rel) total += v;
  CHECK(total == doctest::Approx(1.0));
  CHECK(univse_model_relevance(m, "clock", features.data(), 4, 4, 8, 0.0, rel.data(), rel.size()) ==
        UNIVSE_E_INVALID_ARGUMENT);

  univse_model_free(m);
  univse_model_free(nullptr);
  CHECK(univse_model_load((p.root / "none.uvck").string().c_str(), nullptr, &m) == UNIVSE_E_IO);
}
