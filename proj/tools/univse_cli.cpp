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


// univse: command-line front end over the C API.
//
// Failures print exactly one line to stderr,
//   error status=<code> kind=<name> message="<text>"
// and exit with the status code (64 for usage errors).

#include <univse/univse.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

namespace {

constexpr int kUsageError = 64;

struct Failure {
  int status;
  std::string kind;
  std::string message;
};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    if (c == '\n') {
      out += "\\n";
      continue;
    }
    out += c;
  }
  return out;
}

int report_failure(const Failure& f) {
  std::fprintf(stderr, "error status=%d kind=%s message=\"%s\"\n", f.status, f.kind.c_str(), escape(f.message).c_str());
  return f.status;
}

void check(univse_status st) {
  if (st != UNIVSE_OK) throw Failure{static_cast<int>(st), univse_status_name(st), univse_last_error()};
}

// Owns a string returned by the library.
struct Text {
  char* p = nullptr;
  ~Text() { univse_string_free(p); }
  std::string str() const { return p ? p : ""; }
};

struct ConfigDeleter {
  void operator()(univse_config* c) const { univse_config_free(c); }
};
using ConfigPtr = std::unique_ptr<univse_config, ConfigDeleter>;

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Failure{UNIVSE_E_IO, univse_status_name(UNIVSE_E_IO), "cannot write " + path.string()};
  out << text;
}

void print_or_write(const std::string& text, const std::string& path) {
  if (path.empty()) {
    std::fputs(text.c_str(), stdout);
    std::fputc('\n', stdout);
  } else {
    write_text(path, text + "\n");
  }
}

// Flags shared by the subcommands that build a RunConfig.
struct Common {
  std::string config_file;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::string corpus, checkpoint, out;
  std::optional<double> alpha;
  std::string split;
};

void add_config_flags(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config_file, "INI run configuration")->check(CLI::ExistingFile);
  cmd->add_option("--set", c.overrides, "Override a config key, section.key=value (repeatable)");
  cmd->add_option("--seed", c.seed, "Seed of every random stream");
}

void set(univse_config* cfg, const char* key, const std::string& value) { check(univse_config_set(cfg, key, value.c_str())); }

ConfigPtr build_config(const Common& c) {
  univse_config* raw = nullptr;
  check(c.config_file.empty() ? univse_config_new(&raw) : univse_config_load(c.config_file.c_str(), &raw));
  ConfigPtr cfg(raw);
  for (const auto& o : c.overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) throw Failure{UNIVSE_E_CONFIG, univse_status_name(UNIVSE_E_CONFIG), "--set expects key=value, got '" + o + "'"};
    set(cfg.get(), o.substr(0, eq).c_str(), o.substr(eq + 1));
  }
  if (c.seed) set(cfg.get(), "run.seed", std::to_string(*c.seed));
  if (!c.corpus.empty()) set(cfg.get(), "paths.corpus", c.corpus);
  if (!c.checkpoint.empty()) set(cfg.get(), "paths.checkpoint", c.checkpoint);
  if (!c.out.empty()) set(cfg.get(), "paths.out", c.out);
  if (c.alpha) set(cfg.get(), "caption.alpha", std::to_string(*c.alpha));
  if (!c.split.empty()) set(cfg.get(), "eval.split", c.split);
  return cfg;
}

// The resolved config lands beside a run's output file.
void write_config_beside(const univse_config* cfg, const std::string& output) {
  if (output.empty()) return;
  Text ini;
  check(univse_config_dump(cfg, &ini.p));
  write_text(std::filesystem::path(output).string() + ".config.ini", ini.str());
}

// The parse report is a JSON array; the CLI prints one object per line.
std::string json_lines_from_array(const std::string& array_text) {
  std::string lines;
  for (const auto& item : nlohmann::json::parse(array_text)) lines += (lines.empty() ? "" : "\n") + item.dump();
  return lines;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"UniVSE: unified visual-semantic embeddings at desk scale"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(univse_version()));
  std::string log_level = "info";
  app.add_option("--log-level", log_level, "trace|debug|info|warn|error|off (logs go to stderr)");

  Common common;

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a labeled synthetic corpus");
  synth->add_option("--out", common.out, "Output directory")->required();
  add_config_flags(synth, common);
  std::optional<int> train_scenes, test_scenes;
  synth->add_option("--train-scenes", train_scenes, "Training scenes");
  synth->add_option("--test-scenes", test_scenes, "Held-out scenes");

  // parse
  auto* parse = app.add_subcommand("parse", "Extract semantic graphs from CoNLL-U annotations");
  std::string conllu, json_out;
  parse->add_option("--conllu", conllu, "CoNLL-U file")->required();
  parse->add_option("--json-out", json_out, "Write JSON lines here instead of stdout");

  // train
  auto* train = app.add_subcommand("train", "Train a model on a corpus directory");
  train->add_option("--corpus", common.corpus, "Corpus directory");
  train->add_option("--out", common.out, "Run directory for checkpoints and metrics");
  add_config_flags(train, common);
  std::optional<int> epochs;
  bool resume = false;
  train->add_option("--epochs", epochs, "Epoch count");
  train->add_flag("--resume", resume, "Continue from <out>/last.uvck");

  // eval
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint");
  std::string task, report;
  eval->add_option("task", task, "retrieval|adversarial|unified|disambiguate|relevance")
      ->required()
      ->check(CLI::IsMember({"retrieval", "adversarial", "unified", "disambiguate", "relevance"}));
  eval->add_option("--corpus", common.corpus, "Corpus directory");
  eval->add_option("--checkpoint", common.checkpoint, "Checkpoint file");
  eval->add_option("--alpha", common.alpha, "Caption mix of sentence and component embeddings");
  eval->add_option("--split", common.split, "Corpus split to evaluate");
  eval->add_option("--report", report, "Write the JSON report here");
  add_config_flags(eval, common);

  // attack
  auto* attack = app.add_subcommand("attack", "Generate adversarial captions");
  std::string family = "all", attack_out;
  std::optional<int> n_per_caption;
  attack->add_option("--corpus", common.corpus, "Corpus directory");
  attack->add_option("--family", family, "all|object|attribute|relation")
      ->check(CLI::IsMember({"all", "object", "attribute", "relation"}));
  attack->add_option("--n", n_per_caption, "Adversarials per caption");
  attack->add_option("--split", common.split, "Corpus split, or all");
  attack->add_option("--out", attack_out, "JSON lines output")->required();
  add_config_flags(attack, common);

  // relevance
  auto* relevance = app.add_subcommand("relevance", "Relevance map of a query over one image");
  std::string image_id, query, relevance_out, ppm;
  std::optional<double> tau;
  relevance->add_option("--corpus", common.corpus, "Corpus directory");
  relevance->add_option("--checkpoint", common.checkpoint, "Checkpoint file");
  relevance->add_option("--image", image_id, "Image id")->required();
  relevance->add_option("--query", query, "noun, 'adj noun' or 'subject relation object'")->required();
  relevance->add_option("--tau", tau, "Softmax temperature");
  relevance->add_option("--out", relevance_out, "Write the JSON map here");
  relevance->add_option("--ppm", ppm, "Also write a heatmap image (binary PPM)");
  add_config_flags(relevance, common);

  // features inspect
  auto* features = app.add_subcommand("features", "Feature file utilities");
  features->require_subcommand(1);
  auto* inspect = features->add_subcommand("inspect", "List ids and shapes in a UVSE file");
  std::string uvse;
  inspect->add_option("file", uvse, "UVSE file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report_failure({kUsageError, "usage_error", e.what()});
  }

  try {
    check(univse_set_log_level(log_level.c_str()));
    Text out;
    if (synth->parsed()) {
      auto cfg = build_config(common);
      if (train_scenes) set(cfg.get(), "synth.train_scenes", std::to_string(*train_scenes));
      if (test_scenes) set(cfg.get(), "synth.test_scenes", std::to_string(*test_scenes));
      check(univse_run_synth(cfg.get(), &out.p));
      print_or_write(out.str(), "");
    } else if (parse->parsed()) {
      check(univse_run_parse(conllu.c_str(), &out.p));
      print_or_write(json_lines_from_array(out.str()), json_out);
    } else if (train->parsed()) {
      auto cfg = build_config(common);
      if (epochs) set(cfg.get(), "optim.epochs", std::to_string(*epochs));
      check(univse_run_train(cfg.get(), resume ? 1 : 0, &out.p));
      print_or_write(out.str(), "");
    } else if (eval->parsed()) {
      auto cfg = build_config(common);
      check(univse_run_eval(cfg.get(), task.c_str(), &out.p));
      print_or_write(out.str(), report);
      write_config_beside(cfg.get(), report);
    } else if (attack->parsed()) {
      auto cfg = build_config(common);
      set(cfg.get(), "attack.families", family);
      if (n_per_caption) set(cfg.get(), "attack.n_per_caption", std::to_string(*n_per_caption));
      if (common.split.empty()) set(cfg.get(), "eval.split", "all");
      check(univse_run_attack(cfg.get(), attack_out.c_str(), &out.p));
      print_or_write(out.str(), "");
      write_config_beside(cfg.get(), attack_out);
    } else if (relevance->parsed()) {
      auto cfg = build_config(common);
      if (tau) set(cfg.get(), "eval.relevance_tau", std::to_string(*tau));
      check(univse_run_relevance(cfg.get(), image_id.c_str(), query.c_str(), ppm.empty() ? nullptr : ppm.c_str(),
                                 &out.p));
      print_or_write(out.str(), relevance_out);
      write_config_beside(cfg.get(), relevance_out);
    } else if (inspect->parsed()) {
      check(univse_features_inspect(uvse.c_str(), &out.p));
      print_or_write(out.str(), "");
    }
  } catch (const Failure& f) {
    return report_failure(f);
  }
  return 0;
}
