// Copyright 2026 The QLSC Authors
// SPDX-License-Identifier: Apache-2.0
//
// Question answering examples, vocabularies and corpus I/O.
//
// The synthetic generator builds passages out of facts "entity relation value
// ." and asks for the value of one (entity, relation) pair. Every group holds
// several paraphrases of the same question, each built from a different
// question template and a randomly chosen surface form of the relation, all
// sharing one passage. Distractor facts repeat the asked entity or relation
// with another value.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace qlsc {

enum class Split { kTrain, kDev, kTest };

std::string_view split_name(Split split);
Split parse_split(std::string_view name);

struct QAExample {
  std::string id;
  std::string group_id;
  std::vector<int> passage;
  std::vector<int> question;
  int answer_start = 0;  // inclusive passage token index
  int answer_end = 0;    // inclusive
  Split split = Split::kTrain;

  std::span<const int> answer_tokens() const;
  bool operator==(const QAExample&) const = default;
};

class Vocab {
 public:
  static constexpr int kPad = 0;
  static constexpr int kSep = 1;
  static constexpr int kUnk = 2;
  static constexpr std::size_t kReserved = 3;

  Vocab();

  /// Id of `token`, inserting it if new.
  int add(std::string_view token);
  /// kUnk when absent.
  int id_of(std::string_view token) const;
  bool contains(std::string_view token) const;
  const std::string& token(int id) const;
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

// ---- synthetic corpus -----------------------------------------------------

struct GenSpec {
  std::uint64_t seed = 7;
  std::size_t n_groups = 150;
  std::size_t paraphrases_per_group = 3;
  std::size_t vocab_size = 400;
  std::size_t passage_len_min = 16;
  std::size_t passage_len_max = 40;
  std::size_t n_entities = 40;
  std::size_t n_relations = 12;
  std::size_t relation_synonyms = 2;  // surface forms per relation
  std::size_t distractor_facts = 3;
  double test_fraction = 0.3;
  double dev_fraction = 0.1;

  /// Throws ConfigError when no corpus can satisfy the spec.
  void validate() const;
};

struct Corpus {
  std::vector<QAExample> examples;
  Vocab vocab;
};

/// Number of fixed template words the generator reserves in the vocabulary.
std::size_t template_word_count();
std::size_t question_template_count();

Corpus generate_corpus(const GenSpec& spec);

// ---- JSONL ----------------------------------------------------------------

/// One object per line with fields id, group_id, split, question, passage,
/// answer_start, answer_end (in that order).
std::string to_jsonl_line(const QAExample& example);
void save_jsonl(std::span<const QAExample> examples,
                const std::filesystem::path& path);
/// ParseError (with line number) on malformed lines; SchemaError on missing
/// or invalid fields.
std::vector<QAExample> load_jsonl(const std::filesystem::path& path);

// ---- SQuAD v1.1 -----------------------------------------------------------

enum class VocabPolicy { kBuild, kExtend };

struct TextToken {
  std::string text;
  std::size_t begin = 0;  // code-point offsets, [begin, end)
  std::size_t end = 0;
};

/// Runs of non-space, non-punctuation characters, and single punctuation
/// characters, with code-point offsets into `text` (UTF-8). Punctuation is
/// ASCII punctuation plus common Unicode dashes, quotes and marks.
std::vector<TextToken> tokenize_text(std::string_view text);

struct SquadLoadResult {
  std::vector<QAExample> examples;
  std::size_t total_answers = 0;
  std::size_t skipped = 0;
  std::vector<std::string> warnings;
};

/// Reads data -> paragraphs -> qas. Each question becomes one example (its
/// own group) using the first answer. Answers whose character span does not
/// coincide with token boundaries are skipped and reported in `warnings`.
/// With kBuild, `vocab` is reset before ingestion; with kExtend new tokens
/// are appended to it.
SquadLoadResult load_squad_json(const std::filesystem::path& path,
                                VocabPolicy policy, Vocab& vocab,
                                Split split = Split::kTrain);

}  // namespace qlsc
