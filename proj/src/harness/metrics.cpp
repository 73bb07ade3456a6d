// SPDX-License-Identifier: Apache-2.0
#include "covqa/harness/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace covqa::harness {

double vqa_accuracy(const std::string& prediction, const std::vector<std::string>& gold) {
  if (gold.empty()) throw std::invalid_argument("vqa_accuracy: empty gold answer set");
  int matches = static_cast<int>(std::count(gold.begin(), gold.end(), prediction));
  if (gold.size() == 1) return matches > 0 ? 1.0 : 0.0;
  return std::min(matches / 3.0, 1.0);
}

namespace {

std::map<std::vector<std::string>, int> ngram_counts(const std::vector<std::string>& tokens, int n) {
  std::map<std::vector<std::string>, int> counts;
  for (int i = 0; i + n <= static_cast<int>(tokens.size()); ++i)
    ++counts[std::vector<std::string>(tokens.begin() + i, tokens.begin() + i + n)];
  return counts;
}

}  // namespace

double bleu(const std::vector<std::vector<std::string>>& candidates,
            const std::vector<std::vector<std::vector<std::string>>>& references, int max_n) {
  if (max_n < 1 || max_n > 3) throw std::invalid_argument("bleu: max_n must be in {1,2,3}");
  if (candidates.empty()) throw std::invalid_argument("bleu: empty corpus");
  if (candidates.size() != references.size())
    throw std::invalid_argument("bleu: candidate/reference count mismatch");

  std::vector<long long> matched(static_cast<size_t>(max_n), 0);
  std::vector<long long> total(static_cast<size_t>(max_n), 0);
  long long cand_len = 0, ref_len = 0;

  for (size_t s = 0; s < candidates.size(); ++s) {
    const auto& cand = candidates[s];
    const auto& refs = references[s];
    if (refs.empty()) throw std::invalid_argument("bleu: candidate without references");
    cand_len += static_cast<long long>(cand.size());

    long long closest = std::numeric_limits<long long>::max();
    long long closest_diff = std::numeric_limits<long long>::max();
    for (const auto& ref : refs) {
      long long len = static_cast<long long>(ref.size());
      long long diff = std::llabs(len - static_cast<long long>(cand.size()));
      if (diff < closest_diff || (diff == closest_diff && len < closest)) {
        closest_diff = diff;
        closest = len;
      }
    }
    ref_len += closest;

    for (int n = 1; n <= max_n; ++n) {
      auto cn = ngram_counts(cand, n);
      std::map<std::vector<std::string>, int> clip;
      for (const auto& ref : refs)
        for (const auto& [gram, count] : ngram_counts(ref, n)) {
          auto& best = clip[gram];
          best = std::max(best, count);
        }
      for (const auto& [gram, count] : cn) {
        total[static_cast<size_t>(n - 1)] += count;
        auto it = clip.find(gram);
        if (it != clip.end()) matched[static_cast<size_t>(n - 1)] += std::min(count, it->second);
      }
    }
  }

  double log_precision = 0;
  for (int n = 0; n < max_n; ++n) {
    if (total[static_cast<size_t>(n)] == 0 || matched[static_cast<size_t>(n)] == 0) return 0.0;
    log_precision += std::log(static_cast<double>(matched[static_cast<size_t>(n)]) /
                              static_cast<double>(total[static_cast<size_t>(n)]));
  }
  double brevity = 1.0;
  if (cand_len < ref_len && cand_len > 0)
    brevity = std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(cand_len));
  if (cand_len == 0) return 0.0;
  return 100.0 * brevity * std::exp(log_precision / max_n);
}

void EvalReport::add(const RecordResult& r) {
  overall.count += 1;
  overall.score_sum += r.score;
  auto& t = by_answer_type[r.answer_type];
  t.count += 1;
  t.score_sum += r.score;
  auto& q = by_qform[r.qform];
  q.count += 1;
  q.score_sum += r.score;
  auto& b = by_sqs_bucket[sqs_bucket(r.sqs_len)];
  b.count += 1;
  b.score_sum += r.score;
  if (r.error) ++errors;
}

}  // namespace covqa::harness
