#include "strata/rouge.hpp"

#include <algorithm>
#include <cstdint>
#include <map>
#include <stdexcept>

#include <fmt/format.h>

namespace strata::rouge {

namespace {

using NgramCounts = std::map<std::vector<std::string>, std::size_t>;

NgramCounts count_ngrams(const std::vector<std::string>& toks, std::size_t n) {
  NgramCounts counts;
  if (toks.size() < n) return counts;
  for (std::size_t i = 0; i + n <= toks.size(); ++i)
    ++counts[std::vector<std::string>(toks.begin() + static_cast<std::ptrdiff_t>(i),
                                      toks.begin() + static_cast<std::ptrdiff_t>(i + n))];
  return counts;
}

Report mean(const std::vector<Report>& per_doc) {
  Report r;
  r.documents = per_doc.size();
  if (per_doc.empty()) return r;
  auto acc = [](Score& into, const Score& s) {
    into.precision += s.precision;
    into.recall += s.recall;
    into.f1 += s.f1;
  };
  for (const auto& d : per_doc) {
    acc(r.rouge1, d.rouge1);
    acc(r.rouge2, d.rouge2);
    acc(r.rouge3, d.rouge3);
    acc(r.rougeL, d.rougeL);
  }
  const double n = static_cast<double>(per_doc.size());
  for (Score* s : {&r.rouge1, &r.rouge2, &r.rouge3, &r.rougeL}) {
    s->precision /= n;
    s->recall /= n;
    s->f1 /= n;
  }
  return r;
}

void check_sizes(const std::vector<std::vector<std::string>>& c, const std::vector<std::vector<std::string>>& r) {
  if (c.size() != r.size()) throw std::invalid_argument("score_corpus: candidate and reference counts differ");
}

}  // namespace

Score make_score(double overlap, double candidate_total, double reference_total) {
  Score s;
  s.precision = candidate_total > 0 ? overlap / candidate_total : 0.0;
  s.recall = reference_total > 0 ? overlap / reference_total : 0.0;
  s.f1 = s.precision + s.recall > 0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
  return s;
}

Score rouge_n(const std::vector<std::string>& candidate, const std::vector<std::string>& reference, std::size_t n) {
  if (n == 0) throw std::invalid_argument("rouge_n: n must be at least 1");
  if (candidate.size() < n || reference.size() < n) return {};
  const auto cand = count_ngrams(candidate, n);
  const auto ref = count_ngrams(reference, n);
  std::size_t overlap = 0;
  for (const auto& [gram, count] : cand)
    if (auto it = ref.find(gram); it != ref.end()) overlap += std::min(count, it->second);
  return make_score(static_cast<double>(overlap), static_cast<double>(candidate.size() - n + 1),
                    static_cast<double>(reference.size() - n + 1));
}

std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j)
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

Score rouge_l(const std::vector<std::string>& candidate, const std::vector<std::string>& reference) {
  if (candidate.empty() || reference.empty()) return {};
  return make_score(static_cast<double>(lcs_length(candidate, reference)), static_cast<double>(candidate.size()),
                    static_cast<double>(reference.size()));
}

Report score_document(const std::vector<std::string>& candidate, const std::vector<std::string>& reference) {
  Report r;
  r.rouge1 = rouge_n(candidate, reference, 1);
  r.rouge2 = rouge_n(candidate, reference, 2);
  r.rouge3 = rouge_n(candidate, reference, 3);
  r.rougeL = rouge_l(candidate, reference);
  r.documents = 1;
  return r;
}

namespace serial {
Report score_corpus(const std::vector<std::vector<std::string>>& candidates,
                    const std::vector<std::vector<std::string>>& references) {
  check_sizes(candidates, references);
  std::vector<Report> per_doc;
  per_doc.reserve(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) per_doc.push_back(score_document(candidates[i], references[i]));
  return mean(per_doc);
}
}  // namespace serial

namespace parallel {
Report score_corpus(const std::vector<std::vector<std::string>>& candidates,
                    const std::vector<std::vector<std::string>>& references) {
  check_sizes(candidates, references);
  std::vector<Report> per_doc(candidates.size());
  const auto n = static_cast<std::int64_t>(candidates.size());
#pragma omp parallel for schedule(dynamic, 4)
  for (std::int64_t i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    per_doc[k] = score_document(candidates[k], references[k]);
  }
  return mean(per_doc);
}
}  // namespace parallel

std::string format_report(const Report& r, const std::string& label) {
  std::string out = fmt::format("{:<16} {:>7} {:>7} {:>7} {:>7}\n", "Summarizer", "RG-1", "RG-2", "RG-3", "RG-L");
  out += fmt::format("{:<16} {:>7.2f} {:>7.2f} {:>7.2f} {:>7.2f}\n", label, 100.0 * r.rouge1.f1, 100.0 * r.rouge2.f1,
                     100.0 * r.rouge3.f1, 100.0 * r.rougeL.f1);
  out += fmt::format("({} documents, full-length F1, mean over documents)\n", r.documents);
  return out;
}

}  // namespace strata::rouge
