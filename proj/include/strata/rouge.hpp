#pragma once

#include <string>
#include <vector>

namespace strata::rouge {

struct Score {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// F1 = 2PR / (P + R), zero when P + R = 0.
Score make_score(double overlap, double candidate_total, double reference_total);

/// Clipped n-gram overlap. Zero score when either side has no n-grams.
Score rouge_n(const std::vector<std::string>& candidate, const std::vector<std::string>& reference, std::size_t n);

/// Longest-common-subsequence based ROUGE-L (full length, single reference).
Score rouge_l(const std::vector<std::string>& candidate, const std::vector<std::string>& reference);

std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b);

/// The four metrics reported per document.
struct Report {
  Score rouge1, rouge2, rouge3, rougeL;
  std::size_t documents = 0;
};

Report score_document(const std::vector<std::string>& candidate, const std::vector<std::string>& reference);

namespace serial {
Report score_corpus(const std::vector<std::vector<std::string>>& candidates,
                    const std::vector<std::vector<std::string>>& references);
}
namespace parallel {
Report score_corpus(const std::vector<std::vector<std::string>>& candidates,
                    const std::vector<std::vector<std::string>>& references);
}

/// Mean of per-document precision, recall and F1. Documents are scored in
/// parallel; the mean is taken in document order.
using parallel::score_corpus;

/// Text table of F1 x 100 with two decimals: RG-1 RG-2 RG-3 RG-L.
std::string format_report(const Report& report, const std::string& label = "model");

}  // namespace strata::rouge
