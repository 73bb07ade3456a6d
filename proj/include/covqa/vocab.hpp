// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <string>
#include <vector>

namespace covqa {

// Lowercases, strips .,!? and splits on whitespace.
std::vector<std::string> tokenize(const std::string& text);

// Token vocabulary with fixed special slots. Ids are stable across
// save/load (serialized as a comma-joined word list).
class Vocab {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kBos = 2;
  static constexpr int kEoq = 3;
  static constexpr int kStop = 4;

  Vocab();
  explicit Vocab(const std::vector<std::string>& words);

  int add(const std::string& word);
  int id(const std::string& word) const;  // kUnk for unknown words
  bool contains(const std::string& word) const { return index_.count(word) > 0; }
  const std::string& word(int id) const;
  int size() const { return static_cast<int>(words_.size()); }

  std::vector<int> encode(const std::vector<std::string>& tokens, int max_len = 0) const;
  std::vector<int> encode_text(const std::string& text, int max_len = 0) const;
  std::string decode(const std::vector<int>& ids) const;  // skips special tokens

  std::string join() const;
  static Vocab from_join(const std::string& joined);

 private:
  std::vector<std::string> words_;
  std::map<std::string, int> index_;
};

// Ordered candidate answer strings A*.
class AnswerVocab {
 public:
  AnswerVocab() = default;
  explicit AnswerVocab(std::vector<std::string> answers);

  int id(const std::string& answer) const;  // -1 when absent
  const std::string& answer(int id) const;
  int size() const { return static_cast<int>(answers_.size()); }
  const std::vector<std::string>& all() const { return answers_; }

  std::string join() const;
  static AnswerVocab from_join(const std::string& joined);

 private:
  std::vector<std::string> answers_;
  std::map<std::string, int> index_;
};

}  // namespace covqa
