#include "strata/vocab.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <stdexcept>

namespace strata {

Vocabulary::Vocabulary() {
  for (auto* name : kSpecialNames) add(name, 0);
}

void Vocabulary::add(const std::string& token, std::size_t count) {
  index_.emplace(token, tokens_.size());
  tokens_.push_back(token);
  counts_.push_back(count);
}

Vocabulary Vocabulary::build(const std::vector<Document>& corpus, std::size_t cap) {
  if (corpus.empty()) throw std::invalid_argument("build_vocab: empty corpus");
  if (cap <= kNumSpecials) throw std::invalid_argument("build_vocab: cap must exceed the 4 special tokens");
  std::unordered_map<std::string, std::size_t> freq;
  for (const auto& d : corpus) {
    for (const auto& s : d.sections)
      for (const auto& t : s.tokens) ++freq[t];
    for (const auto& t : d.abstract) ++freq[t];
  }
  Vocabulary v;
  for (auto* name : kSpecialNames) freq.erase(name);
  std::vector<std::pair<std::string, std::size_t>> ranked(freq.begin(), freq.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  const std::size_t keep = std::min(ranked.size(), cap - kNumSpecials);
  for (std::size_t i = 0; i < keep; ++i) v.add(ranked[i].first, ranked[i].second);
  return v;
}

std::size_t Vocabulary::id(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::token(std::size_t id) const {
  if (id >= tokens_.size()) throw std::out_of_range("vocabulary id out of range: " + std::to_string(id));
  return tokens_[id];
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write vocabulary: " + path.string());
  for (std::size_t i = 0; i < tokens_.size(); ++i) os << tokens_[i] << '\t' << counts_[i] << '\n';
  if (!os) throw std::runtime_error("write failed: " + path.string());
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read vocabulary: " + path.string());
  Vocabulary v;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    auto tab = line.rfind('\t');
    if (tab == std::string::npos) throw std::runtime_error("vocabulary line " + std::to_string(line_no + 1) + " has no count");
    auto token = line.substr(0, tab);
    auto count = static_cast<std::size_t>(std::stoull(line.substr(tab + 1)));
    if (line_no < kNumSpecials) {
      if (token != kSpecialNames[line_no]) throw std::runtime_error("vocabulary file does not start with the special tokens");
    } else {
      if (v.contains(token)) throw std::runtime_error("duplicate vocabulary token: " + token);
      v.add(token, count);
    }
    ++line_no;
  }
  return v;
}

ExtendedVocabulary::ExtendedVocabulary(const Vocabulary& base, const Document& doc) : base_size_(base.size()) {
  for (const auto& s : doc.sections)
    for (const auto& t : s.tokens)
      if (!base.contains(t) && !extra_index_.count(t)) {
        extra_index_.emplace(t, base_size_ + extra_.size());
        extra_.push_back(t);
      }
}

std::size_t ExtendedVocabulary::id(const Vocabulary& base, const std::string& token) const {
  if (base.contains(token)) return base.id(token);
  auto it = extra_index_.find(token);
  return it == extra_index_.end() ? Vocabulary::kUnk : it->second;
}

EncodedInput encode_document(const Document& doc, const Vocabulary& vocab, std::size_t max_decode) {
  EncodedInput out;
  out.id = doc.id;
  out.ext = ExtendedVocabulary(vocab, doc);
  for (const auto& s : doc.sections) {
    std::vector<std::size_t> base, ext;
    for (const auto& t : s.tokens) {
      base.push_back(vocab.id(t));
      ext.push_back(out.ext.id(vocab, t));
    }
    out.base_ids.push_back(std::move(base));
    out.ext_ids.push_back(std::move(ext));
  }
  out.reference = doc.abstract;
  for (const auto& t : doc.abstract) {
    if (out.target.size() == max_decode) break;
    out.target.push_back(out.ext.id(vocab, t));
  }
  if (out.target.size() < max_decode) out.target.push_back(Vocabulary::kStop);
  return out;
}

EncodedInput flatten(const EncodedInput& in) {
  EncodedInput out;
  out.id = in.id;
  out.ext = in.ext;
  out.target = in.target;
  out.reference = in.reference;
  out.base_ids.resize(1);
  out.ext_ids.resize(1);
  for (std::size_t s = 0; s < in.base_ids.size(); ++s) {
    out.base_ids[0].insert(out.base_ids[0].end(), in.base_ids[s].begin(), in.base_ids[s].end());
    out.ext_ids[0].insert(out.ext_ids[0].end(), in.ext_ids[s].begin(), in.ext_ids[s].end());
  }
  return out;
}

PaddedSource pad_source(const EncodedInput& in, std::size_t sections, std::size_t max_len) {
  if (in.base_ids.empty()) throw std::invalid_argument("pad_source: document has no sections");
  if (sections < in.base_ids.size()) throw std::invalid_argument("pad_source: too few section slots");
  PaddedSource p;
  p.sections = sections;
  p.max_len = max_len;
  p.ext_size = in.ext.size();
  p.base_ids.assign(sections * max_len, Vocabulary::kPad);
  p.ext_ids.assign(sections * max_len, Vocabulary::kPad);
  p.word_mask.assign(sections * max_len, false);
  p.section_mask.assign(sections, false);
  for (std::size_t s = 0; s < in.base_ids.size(); ++s) {
    const auto& ids = in.base_ids[s];
    if (ids.size() > max_len) throw std::invalid_argument("pad_source: section longer than max_len");
    p.section_mask[s] = !ids.empty();
    for (std::size_t i = 0; i < ids.size(); ++i) {
      p.base_ids[s * max_len + i] = ids[i];
      p.ext_ids[s * max_len + i] = in.ext_ids[s][i];
      p.word_mask[s * max_len + i] = true;
    }
  }
  return p;
}

std::vector<std::string> restore_tokens(const std::vector<std::size_t>& ids, const Vocabulary& vocab,
                                        const ExtendedVocabulary& ext) {
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (auto id : ids) {
    if (id < vocab.size()) {
      out.push_back(vocab.token(id));
    } else if (id < ext.size()) {
      out.push_back(ext.extra()[id - vocab.size()]);
    } else {
      throw std::out_of_range("restore_tokens: id " + std::to_string(id) + " outside extended vocabulary of size " +
                              std::to_string(ext.size()));
    }
  }
  return out;
}

}  // namespace strata
