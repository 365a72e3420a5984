#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include "strata/corpus.hpp"

namespace strata {

class Vocabulary {
 public:
  static constexpr std::size_t kPad = 0;
  static constexpr std::size_t kUnk = 1;
  static constexpr std::size_t kStart = 2;
  static constexpr std::size_t kStop = 3;
  static constexpr std::size_t kNumSpecials = 4;
  static constexpr const char* kSpecialNames[kNumSpecials] = {"<pad>", "<unk>", "<s>", "</s>"};

  Vocabulary();

  /// Ranks section and abstract tokens by frequency (descending, ties
  /// lexicographic) and keeps the top cap - 4 after the specials.
  static Vocabulary build(const std::vector<Document>& corpus, std::size_t cap = 50000);

  std::size_t size() const { return tokens_.size(); }
  bool contains(const std::string& token) const { return index_.count(token) != 0; }
  std::size_t id(const std::string& token) const;  // UNK if absent
  const std::string& token(std::size_t id) const;
  std::size_t count(std::size_t id) const { return counts_.at(id); }

  /// One "token<TAB>count" line per id, specials included.
  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);

 private:
  void add(const std::string& token, std::size_t count);

  std::vector<std::string> tokens_;
  std::vector<std::size_t> counts_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Per-document extension of a base vocabulary with the source tokens it does
/// not contain. Extra ids follow the base ids in order of first occurrence
/// (section-major, then position).
class ExtendedVocabulary {
 public:
  ExtendedVocabulary() = default;
  ExtendedVocabulary(const Vocabulary& base, const Document& doc);

  std::size_t base_size() const { return base_size_; }
  std::size_t size() const { return base_size_ + extra_.size(); }
  const std::vector<std::string>& extra() const { return extra_; }

  /// Base id, else extra id, else UNK.
  std::size_t id(const Vocabulary& base, const std::string& token) const;

 private:
  std::size_t base_size_ = 0;
  std::vector<std::string> extra_;
  std::unordered_map<std::string, std::size_t> extra_index_;
};

/// A document mapped to ids. Sections are unpadded here; padding happens when
/// batches are assembled.
struct EncodedInput {
  std::string id;
  std::vector<std::vector<std::size_t>> base_ids;  // OOV -> UNK; encoder input
  std::vector<std::vector<std::size_t>> ext_ids;   // OOV -> extended id; copy targets
  ExtendedVocabulary ext;
  std::vector<std::size_t> target;                 // abstract in extended space, STOP-terminated unless clipped
  std::vector<std::string> reference;              // abstract tokens
};

EncodedInput encode_document(const Document& doc, const Vocabulary& vocab, std::size_t max_decode = 210);

/// Collapses all sections into one (the flat-encoder ablation).
EncodedInput flatten(const EncodedInput& in);

/// Source ids padded to a fixed grid of sections x max_len (row-major).
struct PaddedSource {
  std::size_t sections = 0;
  std::size_t max_len = 0;
  std::vector<std::size_t> base_ids;
  std::vector<std::size_t> ext_ids;
  std::vector<bool> word_mask;
  std::vector<bool> section_mask;
  std::size_t ext_size = 0;
};

/// Pads `in` to `sections` x `max_len`; both must be at least the input's
/// own extents.
PaddedSource pad_source(const EncodedInput& in, std::size_t sections, std::size_t max_len);
inline PaddedSource pad_source(const EncodedInput& in) {
  std::size_t m = 0;
  for (const auto& s : in.base_ids) m = std::max(m, s.size());
  return pad_source(in, in.base_ids.size(), m);
}

/// Maps extended-space ids to strings; UNK renders as "<unk>".
std::vector<std::string> restore_tokens(const std::vector<std::size_t>& ids, const Vocabulary& vocab,
                                        const ExtendedVocabulary& ext);

}  // namespace strata
