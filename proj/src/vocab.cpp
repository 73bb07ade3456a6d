// SPDX-License-Identifier: Apache-2.0
#include "covqa/vocab.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>
#include <stdexcept>

namespace covqa {

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    unsigned char u = static_cast<unsigned char>(c);
    if (std::isspace(u) || c == '?' || c == '.' || c == ',' || c == '!') {
      if (!cur.empty()) {
        out.push_back(cur);
        cur.clear();
      }
      continue;
    }
    cur.push_back(static_cast<char>(std::tolower(u)));
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

namespace {
const std::vector<std::string> kSpecials = {"<pad>", "<unk>", "<bos>", "<eoq>", "<stop>"};
}

Vocab::Vocab() {
  for (const auto& s : kSpecials) add(s);
}

Vocab::Vocab(const std::vector<std::string>& words) : Vocab() {
  for (const auto& w : words) add(w);
}

int Vocab::add(const std::string& word) {
  auto it = index_.find(word);
  if (it != index_.end()) return it->second;
  int id = static_cast<int>(words_.size());
  words_.push_back(word);
  index_[word] = id;
  return id;
}

int Vocab::id(const std::string& word) const {
  auto it = index_.find(word);
  return it == index_.end() ? kUnk : it->second;
}

const std::string& Vocab::word(int id) const {
  if (id < 0 || id >= size()) throw std::out_of_range("Vocab: bad id");
  return words_[static_cast<size_t>(id)];
}

std::vector<int> Vocab::encode(const std::vector<std::string>& tokens, int max_len) const {
  std::vector<int> ids;
  for (const auto& t : tokens) {
    if (max_len > 0 && static_cast<int>(ids.size()) >= max_len) break;
    ids.push_back(id(t));
  }
  return ids;
}

std::vector<int> Vocab::encode_text(const std::string& text, int max_len) const {
  return encode(tokenize(text), max_len);
}

std::string Vocab::decode(const std::vector<int>& ids) const {
  std::string out;
  for (int i : ids) {
    if (i <= kStop) continue;
    if (!out.empty()) out += ' ';
    out += word(i);
  }
  return out;
}

std::string Vocab::join() const {
  std::string out;
  for (size_t i = kSpecials.size(); i < words_.size(); ++i) {
    if (i != kSpecials.size()) out += ',';
    out += words_[i];
  }
  return out;
}

Vocab Vocab::from_join(const std::string& joined) {
  std::vector<std::string> words;
  std::stringstream ss(joined);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) words.push_back(item);
  return Vocab(words);
}

AnswerVocab::AnswerVocab(std::vector<std::string> answers) : answers_(std::move(answers)) {
  for (size_t i = 0; i < answers_.size(); ++i) {
    if (index_.count(answers_[i])) throw std::invalid_argument("AnswerVocab: duplicate answer " + answers_[i]);
    index_[answers_[i]] = static_cast<int>(i);
  }
}

int AnswerVocab::id(const std::string& answer) const {
  auto it = index_.find(answer);
  return it == index_.end() ? -1 : it->second;
}

const std::string& AnswerVocab::answer(int id) const {
  if (id < 0 || id >= size()) throw std::out_of_range("AnswerVocab: bad id");
  return answers_[static_cast<size_t>(id)];
}

std::string AnswerVocab::join() const {
  std::string out;
  for (size_t i = 0; i < answers_.size(); ++i) {
    if (i) out += ',';
    out += answers_[i];
  }
  return out;
}

AnswerVocab AnswerVocab::from_join(const std::string& joined) {
  std::vector<std::string> answers;
  std::stringstream ss(joined);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) answers.push_back(item);
  return AnswerVocab(std::move(answers));
}

}  // namespace covqa
