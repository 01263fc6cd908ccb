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

#include "semparse.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "common.hpp"

namespace univse {

namespace {

std::string lowercase(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::string normalized_lemma(const AnnotatedToken& t) {
  if (t.lemma.empty() || t.lemma == "_") return lowercase(t.surface);
  return lowercase(t.lemma);
}

bool is_nominal_subject(const std::string& dep) {
  return dep == "nsubj" || dep == "nsubj:pass" || dep == "csubj";
}

bool is_direct_object(const std::string& dep) { return dep == "obj" || dep == "dobj"; }

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    if (tab == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
  return fields;
}

bool parse_int(const std::string& s, int& out) {
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end;
}

}  // namespace

const char* pos_name(PosTag tag) {
  switch (tag) {
    case PosTag::kNoun: return "NOUN";
    case PosTag::kAdj: return "ADJ";
    case PosTag::kVerb: return "VERB";
    case PosTag::kAdp: return "ADP";
    case PosTag::kDet: return "DET";
    case PosTag::kOther: return "X";
  }
  return "X";
}

PosTag coarse_pos(const std::string& upos) {
  if (upos == "NOUN" || upos == "PROPN") return PosTag::kNoun;
  if (upos == "ADJ") return PosTag::kAdj;
  if (upos == "VERB") return PosTag::kVerb;
  if (upos == "ADP") return PosTag::kAdp;
  if (upos == "DET") return PosTag::kDet;
  return PosTag::kOther;
}

AnnotatedToken make_token(std::string surface, std::string lemma, PosTag tag, int head,
                          std::string dep, std::string upos) {
  AnnotatedToken t;
  t.surface = std::move(surface);
  t.lemma = std::move(lemma);
  t.pos_tag = tag;
  t.head_index = head;
  t.dep_label = std::move(dep);
  t.upos = upos.empty() ? pos_name(tag) : std::move(upos);
  return t;
}

bool SemanticGraph::closed() const {
  for (const auto& [adj, noun] : attr_pairs) {
    if (!objects.count(noun)) return false;
  }
  for (const auto& t : rel_triples) {
    if (!objects.count(t[0]) || !objects.count(t[2])) return false;
  }
  return true;
}

void validate_tree(const std::vector<AnnotatedToken>& tokens) {
  const int n = static_cast<int>(tokens.size());
  if (n == 0) throw ParseError(0, "empty sentence");
  int root = -1;
  for (int i = 0; i < n; ++i) {
    const int h = tokens[i].head_index;
    if (h == kRootHead) {
      if (root >= 0) throw ParseError(i, "multiple roots (first root at token " + std::to_string(root) + ")");
      root = i;
      continue;
    }
    if (h < 0 || h >= n) throw ParseError(i, "head index " + std::to_string(h) + " out of range");
    if (h == i) throw ParseError(i, "self loop");
  }
  for (int i = 0; i < n; ++i) {
    int cur = i;
    for (int steps = 0; tokens[cur].head_index != kRootHead; ++steps) {
      if (steps > n) throw ParseError(i, "cycle in dependency heads");
      cur = tokens[cur].head_index;
    }
  }
  if (root < 0) throw ParseError(0, "no root");
}

SemanticGraph parse_caption(const std::vector<AnnotatedToken>& tokens) {
  validate_tree(tokens);
  const int n = static_cast<int>(tokens.size());

  std::vector<std::string> lemma(n);
  std::vector<std::vector<int>> children(n);
  for (int i = 0; i < n; ++i) {
    lemma[i] = normalized_lemma(tokens[i]);
    if (tokens[i].head_index != kRootHead) children[tokens[i].head_index].push_back(i);
  }
  auto is = [&](int i, PosTag tag) { return i >= 0 && tokens[i].pos_tag == tag; };
  auto child_with = [&](int i, auto&& pred) {
    for (int c : children[i]) {
      if (pred(c)) return c;
    }
    return -1;
  };
  auto nominal_subject_of = [&](int i) {
    return child_with(i, [&](int c) { return is(c, PosTag::kNoun) && is_nominal_subject(tokens[c].dep_label); });
  };

  SemanticGraph g;
  for (int i = 0; i < n; ++i) {
    if (is(i, PosTag::kNoun)) g.objects.insert(lemma[i]);
  }

  for (int i = 0; i < n; ++i) {
    if (!is(i, PosTag::kAdj)) continue;
    const int h = tokens[i].head_index;
    if (is(h, PosTag::kNoun)) {
      g.attr_pairs.emplace(lemma[i], lemma[h]);
    } else if (const int subj = nominal_subject_of(i); subj >= 0) {
      // Predicative adjective: "the clock is white".
      g.attr_pairs.emplace(lemma[i], lemma[subj]);
    }
  }

  // Each relation word yields at most one triple; keyed by its position.
  std::vector<std::pair<int, RelTriple>> found;
  for (int i = 0; i < n; ++i) {
    if (is(i, PosTag::kAdp)) {
      const int h = tokens[i].head_index;
      const int pobj = child_with(i, [&](int c) { return is(c, PosTag::kNoun); });
      if (is(h, PosTag::kNoun) && pobj >= 0) {
        // noun -> preposition -> noun chain.
        found.push_back({i, {lemma[h], lemma[i], lemma[pobj]}});
        continue;
      }
      if (h < 0 || !is(h, PosTag::kNoun)) {
        if (pobj >= 0 && h >= 0) {
          if (const int subj = nominal_subject_of(h); subj >= 0) {
            found.push_back({i, {lemma[subj], lemma[i], lemma[pobj]}});
          }
        }
        continue;
      }
      // Case marker on a noun: find the noun it relates to.
      const int dependent = h;
      const int governor = tokens[dependent].head_index;
      if (is(governor, PosTag::kNoun) && tokens[dependent].dep_label != "conj") {
        found.push_back({i, {lemma[governor], lemma[i], lemma[dependent]}});
      } else if (const int subj = nominal_subject_of(dependent); subj >= 0) {
        found.push_back({i, {lemma[subj], lemma[i], lemma[dependent]}});
      } else if (governor >= 0 && !is(governor, PosTag::kNoun)) {
        if (const int vsubj = nominal_subject_of(governor); vsubj >= 0 && vsubj != dependent) {
          found.push_back({i, {lemma[vsubj], lemma[i], lemma[dependent]}});
        }
      }
    } else if (is(i, PosTag::kVerb)) {
      const int subj = nominal_subject_of(i);
      const int obj = child_with(i, [&](int c) { return is(c, PosTag::kNoun) && is_direct_object(tokens[c].dep_label); });
      if (subj >= 0 && obj >= 0) found.push_back({i, {lemma[subj], lemma[i], lemma[obj]}});
    }
  }
  for (auto& [pos, triple] : found) {
    if (std::find(g.rel_triples.begin(), g.rel_triples.end(), triple) == g.rel_triples.end()) {
      g.rel_triples.push_back(std::move(triple));
    }
  }
  return g;
}

std::vector<ConllSentence> read_conllu(std::istream& in) {
  std::vector<ConllSentence> out;
  ConllSentence current;
  std::vector<int> raw_heads;
  std::vector<std::size_t> token_lines;
  bool open = false;
  std::size_t line_no = 0;

  auto flush = [&] {
    if (!open) return;
    const int n = static_cast<int>(current.tokens.size());
    for (int i = 0; i < n; ++i) {
      if (raw_heads[i] < 0 || raw_heads[i] > n) {
        throw Error(ErrorKind::kFormat, "line " + std::to_string(token_lines[i]) + ": head " +
                                            std::to_string(raw_heads[i]) + " outside sentence of " +
                                            std::to_string(n) + " tokens");
      }
      current.tokens[i].head_index = raw_heads[i] - 1;
    }
    if (current.id.empty()) current.id = "sent-" + std::to_string(out.size() + 1);
    out.push_back(std::move(current));
    current = ConllSentence{};
    raw_heads.clear();
    token_lines.clear();
    open = false;
  };

  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      flush();
      continue;
    }
    if (line[0] == '#') {
      const std::string key = "# sent_id = ";
      if (line.rfind(key, 0) == 0) current.id = line.substr(key.size());
      open = true;
      continue;
    }
    const auto fields = split_tabs(line);
    if (fields.size() != 10) {
      throw Error(ErrorKind::kFormat, "line " + std::to_string(line_no) + ": expected 10 columns, found " +
                                          std::to_string(fields.size()));
    }
    // Multiword ranges ("1-2") and empty nodes ("1.1") carry no tree edges.
    if (fields[0].find_first_of("-.") != std::string::npos) continue;
    int id = 0;
    int head = 0;
    if (!parse_int(fields[0], id) || id != static_cast<int>(current.tokens.size()) + 1) {
      throw Error(ErrorKind::kFormat, "line " + std::to_string(line_no) + ": bad token id '" + fields[0] + "'");
    }
    if (!parse_int(fields[6], head)) {
      throw Error(ErrorKind::kFormat, "line " + std::to_string(line_no) + ": bad head '" + fields[6] + "'");
    }
    current.tokens.push_back(make_token(fields[1], fields[2], coarse_pos(fields[3]), 0, fields[7], fields[3]));
    raw_heads.push_back(head);
    token_lines.push_back(line_no);
    open = true;
  }
  flush();
  return out;
}

std::vector<ConllSentence> load_conllu(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  return read_conllu(in);
}

void write_conllu(std::ostream& out, const std::vector<ConllSentence>& sentences) {
  for (const auto& s : sentences) {
    out << "# sent_id = " << s.id << '\n';
    for (std::size_t i = 0; i < s.tokens.size(); ++i) {
      const auto& t = s.tokens[i];
      out << (i + 1) << '\t' << t.surface << '\t' << (t.lemma.empty() ? "_" : t.lemma) << '\t'
          << (t.upos.empty() ? pos_name(t.pos_tag) : t.upos) << "\t_\t_\t" << (t.head_index + 1) << '\t'
          << (t.dep_label.empty() ? "_" : t.dep_label) << "\t_\t_\n";
    }
    out << '\n';
  }
}

std::string caption_text(const std::vector<AnnotatedToken>& tokens) {
  std::ostringstream os;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) os << ' ';
    os << tokens[i].surface;
  }
  return os.str();
}

std::vector<std::string> lemma_sequence(const std::vector<AnnotatedToken>& tokens) {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(normalized_lemma(t));
  return out;
}

}  // namespace univse
