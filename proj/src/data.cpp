// Copyright 2026 The QLSC Authors
// SPDX-License-Identifier: Apache-2.0

#include "qlsc/data.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <utility>

#include <nlohmann/json.hpp>

#include "qlsc/errors.hpp"
#include "qlsc/rng.hpp"

namespace qlsc {

using nlohmann::json;
using nlohmann::ordered_json;

std::string_view split_name(Split split) {
  switch (split) {
    case Split::kTrain:
      return "train";
    case Split::kDev:
      return "dev";
    case Split::kTest:
      return "test";
  }
  return "train";
}

Split parse_split(std::string_view name) {
  if (name == "train") return Split::kTrain;
  if (name == "dev") return Split::kDev;
  if (name == "test") return Split::kTest;
  throw SchemaError("unknown split '" + std::string(name) + "'");
}

std::span<const int> QAExample::answer_tokens() const {
  return std::span<const int>(passage).subspan(
      static_cast<std::size_t>(answer_start),
      static_cast<std::size_t>(answer_end - answer_start + 1));
}

// ---- Vocab ----------------------------------------------------------------

Vocab::Vocab() {
  add("[PAD]");
  add("[SEP]");
  add("[UNK]");
}

int Vocab::add(std::string_view token) {
  const std::string key(token);
  if (auto it = index_.find(key); it != index_.end()) return it->second;
  const int id = static_cast<int>(tokens_.size());
  tokens_.push_back(key);
  index_.emplace(key, id);
  return id;
}

int Vocab::id_of(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnk : it->second;
}

bool Vocab::contains(std::string_view token) const {
  return index_.count(std::string(token)) != 0;
}

const std::string& Vocab::token(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
    throw VocabError("token id " + std::to_string(id) +
                     " outside vocabulary of size " +
                     std::to_string(tokens_.size()));
  }
  return tokens_[static_cast<std::size_t>(id)];
}

// ---- synthetic corpus -----------------------------------------------------

namespace {

constexpr std::array<std::string_view, 15> kTemplateWords = {
    ".",   "what", "is",   "the", "of", "?",   "'s",  "tell",
    "me",  "which", "does", "have", "do", "you", "know"};

// <E> and <R> are the entity and relation slots.
constexpr std::array<std::string_view, 6> kQuestionTemplates = {
    "what is the <R> of <E> ?",  "<E> 's <R> is what ?",
    "tell me the <R> of <E>",    "which <R> does <E> have ?",
    "<R> of <E> ?",              "do you know <E> 's <R> ?"};

constexpr std::size_t kMaxFactTokens = 5;  // entity relation value value .

struct Fact {
  std::size_t entity;
  std::size_t relation;
  std::vector<int> value;
};

struct Layout {
  std::vector<int> entity_ids;
  std::vector<std::vector<int>> relation_ids;  // [relation][surface]
  std::vector<int> value_ids;
  int period = 0;
};

Layout build_vocab(const GenSpec& spec, Vocab& vocab) {
  Layout layout;
  for (auto word : kTemplateWords) vocab.add(word);
  layout.period = vocab.id_of(".");
  for (std::size_t e = 0; e < spec.n_entities; ++e) {
    layout.entity_ids.push_back(vocab.add("e" + std::to_string(e)));
  }
  for (std::size_t r = 0; r < spec.n_relations; ++r) {
    std::vector<int> surfaces{vocab.add("r" + std::to_string(r))};
    for (std::size_t s = 1; s < spec.relation_synonyms; ++s) {
      surfaces.push_back(
          vocab.add("r" + std::to_string(r) + "_" + std::to_string(s)));
    }
    layout.relation_ids.push_back(std::move(surfaces));
  }
  for (std::size_t v = 0; vocab.size() < spec.vocab_size; ++v) {
    layout.value_ids.push_back(vocab.add("v" + std::to_string(v)));
  }
  return layout;
}

std::size_t index_below(Rng& rng, std::size_t bound) {
  return static_cast<std::size_t>(rng.bounded(bound));
}

std::vector<int> draw_value(Rng& rng, const Layout& layout) {
  const std::size_t len = 1 + index_below(rng, 2);
  std::vector<int> value;
  for (std::size_t i = 0; i < len; ++i) {
    value.push_back(layout.value_ids[index_below(rng, layout.value_ids.size())]);
  }
  return value;
}

std::size_t fact_length(const Fact& f) { return 3 + f.value.size(); }

}  // namespace

std::size_t template_word_count() { return kTemplateWords.size(); }
std::size_t question_template_count() { return kQuestionTemplates.size(); }

void GenSpec::validate() const {
  auto fail = [](const std::string& why) {
    throw ConfigError("infeasible generation spec: " + why);
  };
  if (n_groups == 0) fail("n_groups must be positive");
  if (paraphrases_per_group < 2) fail("paraphrases_per_group must be >= 2");
  if (paraphrases_per_group > kQuestionTemplates.size()) {
    fail("paraphrases_per_group exceeds the " +
         std::to_string(kQuestionTemplates.size()) + " question templates");
  }
  if (n_entities < 2 || n_relations < 2) {
    fail("need at least 2 entities and 2 relations");
  }
  if (relation_synonyms == 0) fail("relation_synonyms must be positive");
  const std::size_t fixed = Vocab::kReserved + kTemplateWords.size() +
                            n_entities + n_relations * relation_synonyms;
  if (vocab_size < fixed + distractor_facts + 2) {
    fail("vocab_size " + std::to_string(vocab_size) + " leaves too few value "
         "tokens (reserved, templates, entities and relations take " +
         std::to_string(fixed) + ")");
  }
  if (passage_len_min > passage_len_max) {
    fail("passage_len_min exceeds passage_len_max");
  }
  if (passage_len_max < (1 + distractor_facts) * kMaxFactTokens) {
    fail("passage_len_max cannot hold the answer fact plus distractors");
  }
  if (n_entities * n_relations < 1 + distractor_facts + passage_len_max / 4) {
    fail("too few (entity, relation) pairs to fill a passage");
  }
  if (test_fraction < 0.0 || dev_fraction < 0.0 ||
      test_fraction + dev_fraction > 1.0) {
    fail("split fractions must be non-negative and sum to at most 1");
  }
}

Corpus generate_corpus(const GenSpec& spec) {
  spec.validate();
  Corpus corpus;
  const Layout layout = build_vocab(spec, corpus.vocab);
  Rng rng(spec.seed);

  std::vector<std::vector<QAExample>> groups;
  for (std::size_t g = 0; g < spec.n_groups; ++g) {
    const std::size_t entity = index_below(rng, spec.n_entities);
    const std::size_t relation = index_below(rng, spec.n_relations);
    std::set<std::pair<std::size_t, std::size_t>> used{{entity, relation}};
    std::set<std::vector<int>> values;

    auto fresh_value = [&] {
      for (;;) {
        auto v = draw_value(rng, layout);
        if (values.insert(v).second) return v;
      }
    };

    std::vector<Fact> facts{{entity, relation, fresh_value()}};
    const std::vector<int> answer = facts.front().value;
    std::size_t length = fact_length(facts.front());

    for (std::size_t d = 0; d < spec.distractor_facts; ++d) {
      const bool same_entity = rng.bounded(2) == 0;
      for (std::size_t attempt = 0; attempt < 64; ++attempt) {
        const std::size_t e =
            same_entity ? entity : index_below(rng, spec.n_entities);
        const std::size_t r =
            same_entity ? index_below(rng, spec.n_relations) : relation;
        if (used.insert({e, r}).second) {
          facts.push_back({e, r, fresh_value()});
          length += fact_length(facts.back());
          break;
        }
      }
    }
    while (length < spec.passage_len_min) {
      const std::size_t e = index_below(rng, spec.n_entities);
      const std::size_t r = index_below(rng, spec.n_relations);
      if (!used.insert({e, r}).second) continue;
      Fact filler{e, r, fresh_value()};
      if (length + fact_length(filler) > spec.passage_len_max) break;
      length += fact_length(filler);
      facts.push_back(std::move(filler));
    }
    rng.shuffle(std::span<Fact>(facts));

    std::vector<int> passage;
    int answer_start = 0;
    for (const auto& f : facts) {
      passage.push_back(layout.entity_ids[f.entity]);
      passage.push_back(layout.relation_ids[f.relation].front());
      if (f.entity == entity && f.relation == relation) {
        answer_start = static_cast<int>(passage.size());
      }
      passage.insert(passage.end(), f.value.begin(), f.value.end());
      passage.push_back(layout.period);
    }

    std::vector<std::size_t> order(kQuestionTemplates.size());
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(std::span<std::size_t>(order));

    std::vector<QAExample> members;
    for (std::size_t p = 0; p < spec.paraphrases_per_group; ++p) {
      const auto& surfaces = layout.relation_ids[relation];
      const int relation_id = surfaces[index_below(rng, surfaces.size())];
      QAExample ex;
      ex.id = "g" + std::to_string(g) + "-p" + std::to_string(p);
      ex.group_id = "g" + std::to_string(g);
      ex.passage = passage;
      ex.answer_start = answer_start;
      ex.answer_end = answer_start + static_cast<int>(answer.size()) - 1;
      std::istringstream words{std::string(kQuestionTemplates[order[p]])};
      for (std::string word; words >> word;) {
        if (word == "<E>") {
          ex.question.push_back(layout.entity_ids[entity]);
        } else if (word == "<R>") {
          ex.question.push_back(relation_id);
        } else {
          ex.question.push_back(corpus.vocab.id_of(word));
        }
      }
      members.push_back(std::move(ex));
    }
    groups.push_back(std::move(members));
  }

  std::vector<std::size_t> group_order(spec.n_groups);
  std::iota(group_order.begin(), group_order.end(), 0);
  rng.shuffle(std::span<std::size_t>(group_order));
  const auto n_test = static_cast<std::size_t>(
      spec.test_fraction * static_cast<double>(spec.n_groups));
  const auto n_dev = static_cast<std::size_t>(
      spec.dev_fraction * static_cast<double>(spec.n_groups));
  for (std::size_t rank = 0; rank < group_order.size(); ++rank) {
    const Split split = rank < n_test           ? Split::kTest
                        : rank < n_test + n_dev ? Split::kDev
                                                : Split::kTrain;
    for (auto& ex : groups[group_order[rank]]) ex.split = split;
  }
  for (auto& members : groups) {
    for (auto& ex : members) corpus.examples.push_back(std::move(ex));
  }
  return corpus;
}

// ---- JSONL ----------------------------------------------------------------

std::string to_jsonl_line(const QAExample& example) {
  ordered_json obj;
  obj["id"] = example.id;
  obj["group_id"] = example.group_id;
  obj["split"] = split_name(example.split);
  obj["question"] = example.question;
  obj["passage"] = example.passage;
  obj["answer_start"] = example.answer_start;
  obj["answer_end"] = example.answer_end;
  return obj.dump();
}

void save_jsonl(std::span<const QAExample> examples,
                const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  for (const auto& ex : examples) out << to_jsonl_line(ex) << '\n';
  if (!out) throw Error("failed writing " + path.string());
}

namespace {

const json& require_field(const json& obj, const char* field,
                          std::size_t line) {
  auto it = obj.find(field);
  if (it == obj.end()) {
    throw SchemaError("line " + std::to_string(line) + ": missing field '" +
                      field + "'");
  }
  return *it;
}

[[noreturn]] void bad_field(const char* field, std::size_t line,
                            const std::string& why) {
  throw SchemaError("line " + std::to_string(line) + ": field '" + field +
                    "' " + why);
}

std::string string_field(const json& obj, const char* field, std::size_t line) {
  const auto& v = require_field(obj, field, line);
  if (!v.is_string()) bad_field(field, line, "must be a string");
  return v.get<std::string>();
}

int int_field(const json& obj, const char* field, std::size_t line) {
  const auto& v = require_field(obj, field, line);
  if (!v.is_number_integer()) bad_field(field, line, "must be an integer");
  return v.get<int>();
}

std::vector<int> ids_field(const json& obj, const char* field,
                           std::size_t line) {
  const auto& v = require_field(obj, field, line);
  if (!v.is_array()) bad_field(field, line, "must be an array of token ids");
  std::vector<int> ids;
  for (const auto& item : v) {
    if (!item.is_number_integer() || item.get<long long>() < 0) {
      bad_field(field, line, "must hold non-negative integers");
    }
    ids.push_back(item.get<int>());
  }
  return ids;
}

}  // namespace

std::vector<QAExample> load_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::vector<QAExample> examples;
  std::string text;
  for (std::size_t line = 1; std::getline(in, text); ++line) {
    if (!text.empty() && text.back() == '\r') text.pop_back();
    if (text.find_first_not_of(" \t") == std::string::npos) continue;
    json obj;
    try {
      obj = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ParseError(path.string() + " line " + std::to_string(line) + ": " +
                       e.what());
    }
    if (!obj.is_object()) {
      throw ParseError(path.string() + " line " + std::to_string(line) +
                       ": expected a JSON object");
    }
    QAExample ex;
    ex.id = string_field(obj, "id", line);
    ex.group_id = string_field(obj, "group_id", line);
    try {
      ex.split = parse_split(string_field(obj, "split", line));
    } catch (const SchemaError& e) {
      bad_field("split", line, e.what());
    }
    ex.question = ids_field(obj, "question", line);
    ex.passage = ids_field(obj, "passage", line);
    ex.answer_start = int_field(obj, "answer_start", line);
    ex.answer_end = int_field(obj, "answer_end", line);
    if (ex.answer_start < 0) bad_field("answer_start", line, "is negative");
    if (ex.answer_end < ex.answer_start) {
      bad_field("answer_end", line, "precedes answer_start");
    }
    if (static_cast<std::size_t>(ex.answer_end) >= ex.passage.size()) {
      bad_field("answer_end", line, "lies beyond the passage");
    }
    examples.push_back(std::move(ex));
  }
  return examples;
}

// ---- SQuAD ----------------------------------------------------------------

namespace {

enum class CharClass { kSpace, kPunct, kWord };

CharClass classify(char32_t cp) {
  if (cp < 0x80) {
    const auto c = static_cast<unsigned char>(cp);
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
        c == '\v') {
      return CharClass::kSpace;
    }
    if ((c >= '!' && c <= '/') || (c >= ':' && c <= '@') ||
        (c >= '[' && c <= '`') || (c >= '{' && c <= '~')) {
      return CharClass::kPunct;
    }
    return CharClass::kWord;
  }
  if (cp == 0xA0 || cp == 0x2009 || cp == 0x202F || cp == 0x3000) {
    return CharClass::kSpace;
  }
  // Dashes, quotes, ellipsis and similar marks, plus the Latin-1 and CJK
  // punctuation that shows up in Wikipedia text.
  if ((cp >= 0x2010 && cp <= 0x2027) || (cp >= 0x2030 && cp <= 0x205E) ||
      cp == 0xA1 || cp == 0xA7 || cp == 0xAB || cp == 0xB6 || cp == 0xB7 ||
      cp == 0xBB || cp == 0xBF || (cp >= 0x3001 && cp <= 0x3003) ||
      (cp >= 0x3008 && cp <= 0x3011)) {
    return CharClass::kPunct;
  }
  return CharClass::kWord;
}

struct CodePoint {
  char32_t value;
  std::size_t byte_begin;
  std::size_t byte_end;
};

std::vector<CodePoint> decode_utf8(std::string_view text) {
  std::vector<CodePoint> out;
  std::size_t i = 0;
  while (i < text.size()) {
    const auto lead = static_cast<unsigned char>(text[i]);
    std::size_t len = 1;
    char32_t cp = lead;
    if (lead >= 0xF0) {
      len = 4;
      cp = lead & 0x07;
    } else if (lead >= 0xE0) {
      len = 3;
      cp = lead & 0x0F;
    } else if (lead >= 0xC0) {
      len = 2;
      cp = lead & 0x1F;
    }
    if (i + len > text.size()) len = text.size() - i;
    for (std::size_t j = 1; j < len; ++j) {
      cp = (cp << 6) | (static_cast<unsigned char>(text[i + j]) & 0x3F);
    }
    out.push_back({cp, i, i + len});
    i += len;
  }
  return out;
}

}  // namespace

std::vector<TextToken> tokenize_text(std::string_view text) {
  const auto cps = decode_utf8(text);
  std::vector<TextToken> tokens;
  std::size_t i = 0;
  while (i < cps.size()) {
    const CharClass cls = classify(cps[i].value);
    if (cls == CharClass::kSpace) {
      ++i;
      continue;
    }
    std::size_t j = i + 1;
    if (cls == CharClass::kWord) {
      while (j < cps.size() && classify(cps[j].value) == CharClass::kWord) ++j;
    }
    const std::size_t byte_begin = cps[i].byte_begin;
    const std::size_t byte_end = cps[j - 1].byte_end;
    tokens.push_back({std::string(text.substr(byte_begin, byte_end - byte_begin)),
                      i, j});
    i = j;
  }
  return tokens;
}

SquadLoadResult load_squad_json(const std::filesystem::path& path,
                                VocabPolicy policy, Vocab& vocab, Split split) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  auto schema = [&](const std::string& why) {
    return ParseError(path.string() + ": not SQuAD v1.1 JSON: " + why);
  };
  if (!doc.is_object() || !doc.contains("data") || !doc["data"].is_array()) {
    throw schema("missing top-level 'data' array");
  }
  if (policy == VocabPolicy::kBuild) vocab = Vocab();

  SquadLoadResult result;
  for (const auto& article : doc["data"]) {
    if (!article.contains("paragraphs") || !article["paragraphs"].is_array()) {
      throw schema("article without 'paragraphs'");
    }
    for (const auto& para : article["paragraphs"]) {
      if (!para.contains("context") || !para["context"].is_string() ||
          !para.contains("qas") || !para["qas"].is_array()) {
        throw schema("paragraph needs 'context' and 'qas'");
      }
      const std::string context = para["context"].get<std::string>();
      const auto tokens = tokenize_text(context);
      const auto cps = decode_utf8(context);
      std::vector<int> passage;
      passage.reserve(tokens.size());
      for (const auto& t : tokens) passage.push_back(vocab.add(t.text));

      for (const auto& qa : para["qas"]) {
        if (!qa.contains("id") || !qa.contains("question") ||
            !qa.contains("answers") || !qa["answers"].is_array()) {
          throw schema("qa needs 'id', 'question' and 'answers'");
        }
        const std::string id = qa["id"].is_string()
                                   ? qa["id"].get<std::string>()
                                   : qa["id"].dump();
        ++result.total_answers;
        if (qa["answers"].empty()) {
          ++result.skipped;
          result.warnings.push_back(id + ": no answers");
          continue;
        }
        const auto& answer = qa["answers"].front();
        if (!answer.contains("text") || !answer.contains("answer_start") ||
            !answer["answer_start"].is_number_integer()) {
          throw schema("answer needs 'text' and integer 'answer_start'");
        }
        const std::string answer_text = answer["text"].get<std::string>();
        const auto start = answer["answer_start"].get<long long>();
        const std::size_t length = decode_utf8(answer_text).size();
        const std::size_t char_begin = start < 0 ? cps.size() + 1
                                                 : static_cast<std::size_t>(start);
        const std::size_t char_end = char_begin + length;

        bool text_matches = char_end <= cps.size() && length > 0;
        if (text_matches) {
          const std::size_t b = cps[char_begin].byte_begin;
          const std::size_t e = cps[char_end - 1].byte_end;
          text_matches = context.compare(b, e - b, answer_text) == 0;
        }
        auto first = std::find_if(tokens.begin(), tokens.end(), [&](const auto& t) {
          return t.begin == char_begin;
        });
        auto last = std::find_if(tokens.begin(), tokens.end(), [&](const auto& t) {
          return t.end == char_end;
        });
        if (!text_matches || first == tokens.end() || last == tokens.end() ||
            last < first) {
          ++result.skipped;
          result.warnings.push_back(id + ": answer offset " +
                                    std::to_string(start) +
                                    " does not align with token boundaries");
          continue;
        }
        QAExample ex;
        ex.id = id;
        ex.group_id = id;
        ex.split = split;
        ex.passage = passage;
        ex.answer_start = static_cast<int>(first - tokens.begin());
        ex.answer_end = static_cast<int>(last - tokens.begin());
        for (const auto& t : tokenize_text(qa["question"].get<std::string>())) {
          ex.question.push_back(vocab.add(t.text));
        }
        result.examples.push_back(std::move(ex));
      }
    }
  }
  return result;
}

}  // namespace qlsc
