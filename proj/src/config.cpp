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


#include "config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

namespace univse {

namespace {

std::string fmt_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const char* end = text.data() + text.size();
  const auto res = std::from_chars(text.data(), end, value);
  if (res.ec != std::errc() || res.ptr != end) {
    throw Error(ErrorKind::kConfig, "invalid value '" + text + "' for " + key);
  }
  return value;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw Error(ErrorKind::kConfig, "invalid boolean '" + text + "' for " + key);
}

std::string fmt_families(const std::vector<AttackFamily>& fams) {
  if (fams.size() == 3) return "all";
  std::string out;
  for (auto f : fams) out += (out.empty() ? "" : ",") + std::string(family_name(f));
  return out;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(' ');
    const auto e = item.find_last_not_of(' ');
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

std::vector<AttackFamily> parse_families(const std::string& key, const std::string& text) {
  if (text == "all") return {AttackFamily::kObject, AttackFamily::kAttribute, AttackFamily::kRelation};
  std::vector<AttackFamily> out;
  try {
    for (const auto& name : split_list(text)) {
      const auto f = parse_family(name);
      if (std::find(out.begin(), out.end(), f) == out.end()) out.push_back(f);
    }
  } catch (const Error&) {
    throw Error(ErrorKind::kConfig, "invalid attack families '" + text + "' for " + key);
  }
  return out;
}

std::string fmt_components(const ComponentMask& m) {
  std::string out;
  if (m.objects) out += "obj";
  if (m.attrs) out += std::string(out.empty() ? "" : ",") + "attr";
  if (m.rels) out += std::string(out.empty() ? "" : ",") + "rel";
  return out;
}

ComponentMask parse_components(const std::string& key, const std::string& text) {
  ComponentMask m{false, false, false};
  for (const auto& name : split_list(text)) {
    if (name == "obj") m.objects = true;
    else if (name == "attr") m.attrs = true;
    else if (name == "rel") m.rels = true;
    else throw Error(ErrorKind::kConfig, "invalid component family '" + name + "' for " + key);
  }
  return m;
}

struct Field {
  std::string key;
  std::function<void(RunConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <typename T, typename Proj>
Field number(std::string key, Proj proj) {
  return {std::move(key),
          [proj](RunConfig& c, const std::string& k, const std::string& v) { proj(c) = parse_number<T>(k, v); },
          [proj](const RunConfig& c) {
            if constexpr (std::is_floating_point_v<T>) {
              return fmt_double(proj(c));
            } else {
              return std::to_string(proj(c));
            }
          }};
}

template <typename Proj>
Field text(std::string key, Proj proj) {
  return {std::move(key), [proj](RunConfig& c, const std::string&, const std::string& v) { proj(c) = v; },
          [proj](const RunConfig& c) { return proj(c); }};
}

template <typename Proj>
Field boolean(std::string key, Proj proj) {
  return {std::move(key),
          [proj](RunConfig& c, const std::string& k, const std::string& v) { proj(c) = parse_bool(k, v); },
          [proj](const RunConfig& c) { return std::string(proj(c) ? "true" : "false"); }};
}

// Ordered as written by dump_config.
const std::vector<Field>& fields() {
  static const std::vector<Field> kFields = [] {
    std::vector<Field> f;
    f.push_back(number<std::uint64_t>("run.seed", [](auto& c) -> auto& { return c.seed; }));
    f.push_back(text("paths.corpus", [](auto& c) -> auto& { return c.paths.corpus; }));
    f.push_back(text("paths.checkpoint", [](auto& c) -> auto& { return c.paths.checkpoint; }));
    f.push_back(text("paths.out", [](auto& c) -> auto& { return c.paths.out; }));
    f.push_back(text("paths.pretrained", [](auto& c) -> auto& { return c.paths.pretrained; }));
    f.push_back(number<int>("model.d", [](auto& c) -> auto& { return c.model.d; }));
    f.push_back(number<int>("model.d_basic", [](auto& c) -> auto& { return c.model.d_basic; }));
    f.push_back(number<int>("model.d_modif", [](auto& c) -> auto& { return c.model.d_modif; }));
    f.push_back(text("optim.algorithm", [](auto& c) -> auto& { return c.optim.algorithm; }));
    f.push_back(number<double>("optim.lr", [](auto& c) -> auto& { return c.optim.lr; }));
    f.push_back(number<double>("optim.beta1", [](auto& c) -> auto& { return c.optim.beta1; }));
    f.push_back(number<double>("optim.beta2", [](auto& c) -> auto& { return c.optim.beta2; }));
    f.push_back(number<double>("optim.eps", [](auto& c) -> auto& { return c.optim.eps; }));
    f.push_back(number<int>("optim.epochs", [](auto& c) -> auto& { return c.optim.epochs; }));
    f.push_back(number<int>("optim.batch_size", [](auto& c) -> auto& { return c.optim.batch_size; }));
    f.push_back(text("optim.val_split", [](auto& c) -> auto& { return c.val_split; }));
    f.push_back(number<double>("loss.margin", [](auto& c) -> auto& { return c.optim.loss.margin; }));
    f.push_back(number<double>("loss.tau", [](auto& c) -> auto& { return c.optim.loss.tau; }));
    f.push_back(number<double>("loss.w_sent", [](auto& c) -> auto& { return c.optim.loss.w_sent; }));
    f.push_back(number<double>("loss.w_comp", [](auto& c) -> auto& { return c.optim.loss.w_comp; }));
    f.push_back(number<double>("loss.w_rel", [](auto& c) -> auto& { return c.optim.loss.w_rel; }));
    f.push_back(number<double>("loss.w_obj", [](auto& c) -> auto& { return c.optim.loss.w_obj; }));
    f.push_back(boolean("loss.hard_mining", [](auto& c) -> auto& { return c.optim.loss.hard_mining; }));
    f.push_back(number<int>("loss.neg_per_object", [](auto& c) -> auto& { return c.optim.loss.neg_per_object; }));
    f.push_back(number<int>("loss.neg_per_attr", [](auto& c) -> auto& { return c.optim.loss.neg_per_attr; }));
    f.push_back(number<int>("loss.neg_rel_substitute",
                            [](auto& c) -> auto& { return c.optim.loss.neg_rel_substitute; }));
    f.push_back(number<int>("loss.neg_rel_foreign", [](auto& c) -> auto& { return c.optim.loss.neg_rel_foreign; }));
    f.push_back(number<double>("caption.alpha", [](auto& c) -> auto& { return c.optim.alpha; }));
    f.push_back({"caption.components",
                 [](RunConfig& c, const std::string& k, const std::string& v) {
                   c.optim.components = parse_components(k, v);
                 },
                 [](const RunConfig& c) { return fmt_components(c.optim.components); }});
    f.push_back(number<int>("synth.rows", [](auto& c) -> auto& { return c.synth.rows; }));
    f.push_back(number<int>("synth.cols", [](auto& c) -> auto& { return c.synth.cols; }));
    f.push_back(number<int>("synth.depth", [](auto& c) -> auto& { return c.synth.depth; }));
    f.push_back(number<int>("synth.n_objects", [](auto& c) -> auto& { return c.synth.n_objects; }));
    f.push_back(number<int>("synth.n_attributes", [](auto& c) -> auto& { return c.synth.n_attributes; }));
    f.push_back(number<int>("synth.n_relations", [](auto& c) -> auto& { return c.synth.n_relations; }));
    f.push_back(number<int>("synth.train_scenes", [](auto& c) -> auto& { return c.synth.train_scenes; }));
    f.push_back(number<int>("synth.test_scenes", [](auto& c) -> auto& { return c.synth.test_scenes; }));
    f.push_back(number<double>("synth.sigma", [](auto& c) -> auto& { return c.synth.sigma; }));
    f.push_back(number<int>("synth.min_objects", [](auto& c) -> auto& { return c.synth.min_objects; }));
    f.push_back(number<int>("synth.max_objects", [](auto& c) -> auto& { return c.synth.max_objects; }));
    f.push_back(number<int>("synth.captions_per_scene",
                            [](auto& c) -> auto& { return c.synth.captions_per_scene; }));
    f.push_back(number<double>("synth.attribute_scale", [](auto& c) -> auto& { return c.synth.attribute_scale; }));
    f.push_back({"attack.families",
                 [](RunConfig& c, const std::string& k, const std::string& v) {
                   c.attack.families = parse_families(k, v);
                 },
                 [](const RunConfig& c) { return fmt_families(c.attack.families); }});
    f.push_back(number<int>("attack.n_per_caption", [](auto& c) -> auto& { return c.attack.n_per_caption; }));
    f.push_back(text("eval.split", [](auto& c) -> auto& { return c.eval.split; }));
    f.push_back(number<double>("eval.relevance_tau", [](auto& c) -> auto& { return c.eval.relevance_tau; }));
    f.push_back(number<int>("eval.cases", [](auto& c) -> auto& { return c.eval.cases; }));
    f.push_back(number<int>("eval.simulations", [](auto& c) -> auto& { return c.eval.simulations; }));
    return f;
  }();
  return kFields;
}

const Field& field(const std::string& key) {
  for (const auto& f : fields()) {
    if (f.key == key) return f;
  }
  throw Error(ErrorKind::kConfig, "unknown config key '" + key + "'");
}

}  // namespace

void RunConfig::finalize() {
  optim.seed = seed;
  synth.seed = seed;
  attack.seed = seed;
  try {
    model.validate();
    optim.validate();
    synth.validate();
    attack.validate();
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::kConfig) throw;
    throw Error(ErrorKind::kConfig, e.what());
  }
  if (val_split.empty()) throw Error(ErrorKind::kConfig, "optim.val_split must not be empty");
  if (!(eval.relevance_tau > 0.0)) throw Error(ErrorKind::kConfig, "eval.relevance_tau must be > 0");
  if (eval.cases < 1) throw Error(ErrorKind::kConfig, "eval.cases must be >= 1");
  if (eval.simulations < 1) throw Error(ErrorKind::kConfig, "eval.simulations must be >= 1");
}

void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value) {
  field(key).set(cfg, key, value);
}

std::string get_config_value(const RunConfig& cfg, const std::string& key) { return field(key).get(cfg); }

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& f : fields()) keys.push_back(f.key);
  return keys;
}

void apply_override(RunConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw Error(ErrorKind::kConfig, "override '" + assignment + "' is not key=value");
  set_config_value(cfg, assignment.substr(0, eq), assignment.substr(eq + 1));
}

RunConfig parse_config(const std::string& ini_text) {
  boost::property_tree::ptree tree;
  std::istringstream in(ini_text);
  try {
    boost::property_tree::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw Error(ErrorKind::kConfig, std::string("malformed config: ") + e.what());
  }
  RunConfig cfg;
  for (const auto& [section, body] : tree) {
    if (!body.data().empty()) throw Error(ErrorKind::kConfig, "config key '" + section + "' lies outside a section");
    for (const auto& [key, value] : body) set_config_value(cfg, section + "." + key, value.data());
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string dump_config(const RunConfig& cfg) {
  std::string out;
  std::string section;
  for (const auto& f : fields()) {
    const auto dot = f.key.find('.');
    const std::string sec = f.key.substr(0, dot);
    if (sec != section) {
      out += (section.empty() ? "" : "\n") + ("[" + sec + "]\n");
      section = sec;
    }
    out += f.key.substr(dot + 1) + " = " + f.get(cfg) + "\n";
  }
  return out;
}

void write_config(const std::filesystem::path& path, const RunConfig& cfg) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  out << dump_config(cfg);
}

}  // namespace univse
