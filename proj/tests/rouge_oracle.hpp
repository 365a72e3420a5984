#pragma once

// Brute-force ROUGE reference: n-gram overlap by greedy one-to-one matching of
// candidate n-grams to unused reference n-grams, LCS by trying every
// candidate subsequence. Only suitable for short inputs.

#include <cstddef>
#include <string>
#include <vector>

namespace strata::testing {

struct OracleScore {
  double p = 0, r = 0, f = 0;
};

inline OracleScore oracle_prf(double match, double cand, double ref) {
  OracleScore s;
  if (cand > 0) s.p = match / cand;
  if (ref > 0) s.r = match / ref;
  if (s.p + s.r > 0) s.f = 2 * s.p * s.r / (s.p + s.r);
  return s;
}

inline OracleScore oracle_rouge_n(const std::vector<std::string>& cand, const std::vector<std::string>& ref,
                                  std::size_t n) {
  if (cand.size() < n || ref.size() < n) return {};
  const std::size_t nc = cand.size() - n + 1, nr = ref.size() - n + 1;
  std::vector<bool> used(nr, false);
  std::size_t match = 0;
  for (std::size_t i = 0; i < nc; ++i) {
    for (std::size_t j = 0; j < nr; ++j) {
      if (used[j]) continue;
      bool eq = true;
      for (std::size_t k = 0; k < n && eq; ++k) eq = cand[i + k] == ref[j + k];
      if (eq) {
        used[j] = true;
        ++match;
        break;
      }
    }
  }
  return oracle_prf(double(match), double(nc), double(nr));
}

inline bool is_subsequence(const std::vector<std::string>& sub, const std::vector<std::string>& seq) {
  std::size_t k = 0;
  for (const auto& t : seq)
    if (k < sub.size() && sub[k] == t) ++k;
  return k == sub.size();
}

inline std::size_t oracle_lcs(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::size_t best = 0;
  for (std::size_t mask = 0; mask < (std::size_t{1} << a.size()); ++mask) {
    std::vector<std::string> sub;
    for (std::size_t i = 0; i < a.size(); ++i)
      if (mask >> i & 1) sub.push_back(a[i]);
    if (sub.size() > best && is_subsequence(sub, b)) best = sub.size();
  }
  return best;
}

inline OracleScore oracle_rouge_l(const std::vector<std::string>& cand, const std::vector<std::string>& ref) {
  if (cand.empty() || ref.empty()) return {};
  return oracle_prf(double(oracle_lcs(cand, ref)), double(cand.size()), double(ref.size()));
}

}  // namespace strata::testing
