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


// extern "C" boundary: every entry point converts exceptions to status
// codes and never lets one escape.

#include "univse/univse.h"

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <mutex>

#include <cctype>
#include <cstring>
#include <sstream>
#include <string>

#include "config.hpp"
#include "evalkit.hpp"
#include "pipeline.hpp"

struct univse_config {
  univse::RunConfig cfg;
};

struct univse_model {
  univse::ModelParams params;
  univse::Vocabulary vocab;
};

namespace {

thread_local std::string g_last_error;

univse_status fail(univse_status code, const std::string& message) {
  g_last_error = message;
  return code;
}

// Logs must never mix with reports on stdout.
void ensure_logger() {
  static std::once_flag once;
  std::call_once(once, [] { spdlog::set_default_logger(spdlog::stderr_color_mt("univse")); });
}

template <typename Fn>
univse_status guarded(Fn&& fn) {
  try {
    ensure_logger();
    g_last_error.clear();
    fn();
    return UNIVSE_OK;
  } catch (const univse::Error& e) {
    return fail(static_cast<univse_status>(e.kind()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(UNIVSE_E_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(UNIVSE_E_INTERNAL, e.what());
  } catch (...) {
    return fail(UNIVSE_E_INTERNAL, "unknown exception");
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void require(const void* p, const char* what) {
  if (!p) throw univse::Error(univse::ErrorKind::kInvalidArgument, std::string(what) + " is null");
}

// A validated copy, so the caller's handle keeps its raw values.
univse::RunConfig finalized(const univse_config* cfg) {
  require(cfg, "config");
  univse::RunConfig c = cfg->cfg;
  c.finalize();
  return c;
}

void emit(const nlohmann::json& j, char** report) {
  require(report, "report");
  *report = dup_string(j.dump(2));
}

void copy_out(const univse::Vector& v, double* out, size_t capacity) {
  require(out, "out");
  if (capacity < static_cast<size_t>(v.size())) {
    throw univse::Error(univse::ErrorKind::kInvalidArgument,
                        "output buffer holds " + std::to_string(capacity) + " values, need " + std::to_string(v.size()));
  }
  std::copy(v.data(), v.data() + v.size(), out);
}

univse::RawFeatureMap raw_map(const float* features, size_t rows, size_t cols, size_t depth) {
  require(features, "features");
  if (rows == 0 || cols == 0 || depth == 0) {
    throw univse::Error(univse::ErrorKind::kInvalidArgument, "feature map has a zero dimension");
  }
  univse::RawFeatureMap m;
  m.image_id = "input";
  m.rows = static_cast<std::uint32_t>(rows);
  m.cols = static_cast<std::uint32_t>(cols);
  m.depth = static_cast<std::uint32_t>(depth);
  m.data.assign(features, features + rows * cols * depth);
  return m;
}

}  // namespace

extern "C" {

const char* univse_version(void) { return UNIVSE_VERSION_STRING; }

const char* univse_status_name(int status) {
  switch (status) {
    case UNIVSE_OK: return "ok";
    case UNIVSE_E_INVALID_ARGUMENT: return "invalid_argument";
    case UNIVSE_E_IO: return "io_error";
    case UNIVSE_E_FORMAT: return "format_error";
    case UNIVSE_E_PARSE: return "parse_error";
    case UNIVSE_E_CONFIG: return "config_error";
    case UNIVSE_E_NUMERIC: return "numeric_error";
    case UNIVSE_E_DATA: return "data_error";
    case UNIVSE_E_INTERNAL: return "internal_error";
    default: return "unknown";
  }
}

const char* univse_last_error(void) { return g_last_error.c_str(); }

void univse_string_free(char* s) { std::free(s); }

univse_status univse_set_log_level(const char* level) {
  return guarded([&] {
    require(level, "level");
    const auto parsed = spdlog::level::from_str(level);
    if (parsed == spdlog::level::off && std::string(level) != "off") {
      throw univse::Error(univse::ErrorKind::kInvalidArgument, std::string("unknown log level '") + level + "'");
    }
    spdlog::set_level(parsed);
  });
}

univse_status univse_config_new(univse_config** out) {
  return guarded([&] {
    require(out, "out");
    *out = new univse_config{};
  });
}

univse_status univse_config_load(const char* path, univse_config** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new univse_config{univse::load_config(path)};
  });
}

void univse_config_free(univse_config* cfg) { delete cfg; }

univse_status univse_config_set(univse_config* cfg, const char* key, const char* value) {
  return guarded([&] {
    require(cfg, "config");
    require(key, "key");
    require(value, "value");
    univse::set_config_value(cfg->cfg, key, value);
  });
}

univse_status univse_config_get(const univse_config* cfg, const char* key, char** value) {
  return guarded([&] {
    require(cfg, "config");
    require(key, "key");
    require(value, "value");
    *value = dup_string(univse::get_config_value(cfg->cfg, key));
  });
}

univse_status univse_config_dump(const univse_config* cfg, char** ini) {
  return guarded([&] {
    require(cfg, "config");
    require(ini, "ini");
    *ini = dup_string(univse::dump_config(cfg->cfg));
  });
}

univse_status univse_config_keys(char** keys) {
  return guarded([&] {
    require(keys, "keys");
    std::string all;
    for (const auto& k : univse::config_keys()) all += k + "\n";
    *keys = dup_string(all);
  });
}

univse_status univse_run_synth(const univse_config* cfg, char** report) {
  return guarded([&] { emit(univse::run_synth(finalized(cfg)), report); });
}

univse_status univse_run_parse(const char* conllu_path, char** report) {
  return guarded([&] {
    require(conllu_path, "conllu_path");
    emit(univse::run_parse(conllu_path), report);
  });
}

univse_status univse_run_train(const univse_config* cfg, int resume, char** report) {
  return guarded([&] { emit(univse::run_train(finalized(cfg), resume != 0), report); });
}

univse_status univse_run_eval(const univse_config* cfg, const char* task, char** report) {
  return guarded([&] {
    require(task, "task");
    emit(univse::run_eval(finalized(cfg), task), report);
  });
}

univse_status univse_run_attack(const univse_config* cfg, const char* out_path, char** report) {
  return guarded([&] {
    require(out_path, "out_path");
    emit(univse::run_attack(finalized(cfg), out_path), report);
  });
}

univse_status univse_run_relevance(const univse_config* cfg, const char* image_id, const char* query,
                                   const char* ppm_path, char** report) {
  return guarded([&] {
    require(image_id, "image_id");
    require(query, "query");
    emit(univse::run_relevance(finalized(cfg), image_id, query, ppm_path ? ppm_path : ""), report);
  });
}

univse_status univse_features_inspect(const char* path, char** report) {
  return guarded([&] {
    require(path, "path");
    emit(univse::inspect_features(path), report);
  });
}

univse_status univse_model_load(const char* checkpoint, const char* vocab_path, univse_model** out) {
  return guarded([&] {
    require(checkpoint, "checkpoint");
    require(out, "out");
    const std::filesystem::path ck(checkpoint);
    const std::filesystem::path vp = vocab_path ? std::filesystem::path(vocab_path) : ck.parent_path() / "vocab.tsv";
    auto model = std::make_unique<univse_model>();
    model->params = univse::params_from_checkpoint(univse::load_checkpoint(ck));
    model->vocab = univse::Vocabulary::load(vp);
    if (model->params.vocab_size() != model->vocab.size()) {
      throw univse::Error(univse::ErrorKind::kData, "vocabulary size does not match the checkpoint");
    }
    *out = model.release();
  });
}

void univse_model_free(univse_model* model) { delete model; }

size_t univse_model_dim(const univse_model* model) {
  return model ? static_cast<size_t>(model->params.dim()) : 0;
}

univse_status univse_model_encode_query(const univse_model* model, const char* query, double* out, size_t capacity) {
  return guarded([&] {
    require(model, "model");
    require(query, "query");
    const auto parsed = univse::parse_query(query, model->vocab);
    copy_out(univse::encode_query(model->params, model->vocab, parsed), out, capacity);
  });
}

univse_status univse_model_encode_sentence(const univse_model* model, const char* sentence, double* out,
                                           size_t capacity) {
  return guarded([&] {
    require(model, "model");
    require(sentence, "sentence");
    std::istringstream in(sentence);
    std::vector<std::string> words;
    for (std::string w; in >> w;) {
      for (auto& ch : w) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
      words.push_back(w);
    }
    if (words.empty()) throw univse::Error(univse::ErrorKind::kInvalidArgument, "empty sentence");
    copy_out(univse::encode_sentence(model->vocab, model->params.text, words), out, capacity);
  });
}

univse_status univse_model_encode_image(const univse_model* model, const float* features, size_t rows, size_t cols,
                                        size_t depth, double* out, size_t capacity) {
  return guarded([&] {
    require(model, "model");
    const auto map = univse::project(raw_map(features, rows, cols, depth), model->params.projection);
    copy_out(map.pooled, out, capacity);
  });
}

univse_status univse_model_relevance(const univse_model* model, const char* query, const float* features, size_t rows,
                                     size_t cols, size_t depth, double tau, double* out, size_t capacity) {
  return guarded([&] {
    require(model, "model");
    require(query, "query");
    if (!(tau > 0.0)) throw univse::Error(univse::ErrorKind::kInvalidArgument, "tau must be > 0");
    const auto grid = univse::query_relevance(model->params, model->vocab, raw_map(features, rows, cols, depth), query, tau);
    copy_out(Eigen::Map<const univse::Vector>(grid.values.data(), static_cast<Eigen::Index>(grid.values.size())), out,
             capacity);
  });
}

}  // extern "C"
