#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace strata {

struct Section {
  std::string name;
  std::vector<std::string> tokens;
};

struct Document {
  std::string id;
  std::vector<Section> sections;
  std::vector<std::string> abstract;

  std::vector<std::string> section_names() const;
  std::size_t token_count() const;
};

/// Raised for documents that cannot be used (e.g. nothing left after the
/// conclusion cutoff).
class CorpusError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Streams documents from a JSON Lines file with fields article_id,
/// abstract_text, section_names, sections. Lines that are not valid JSON or do
/// not match the schema are skipped and counted. Sentence strings are split on
/// whitespace; no other processing happens here.
class CorpusReader {
 public:
  explicit CorpusReader(const std::filesystem::path& path);
  std::optional<Document> next();
  std::size_t skipped() const { return skipped_; }
  std::size_t line_number() const { return line_no_; }

 private:
  std::ifstream in_;
  std::filesystem::path path_;
  std::size_t skipped_ = 0;
  std::size_t line_no_ = 0;
};

struct LoadedCorpus {
  std::vector<Document> documents;
  std::size_t skipped = 0;
};

LoadedCorpus load_corpus(const std::filesystem::path& path);

/// Writes documents in the input schema: each section and the abstract become
/// a single space-joined "sentence".
void write_corpus(const std::filesystem::path& path, const std::vector<Document>& docs);

/// Splits text into tokens: lowercases ASCII, splits on whitespace and
/// detaches the characters . , ; : ! ? ( ) " from token boundaries.
std::vector<std::string> tokenize(const std::string& text);

/// Lowercases, replaces $...$ / $$...$$ spans with @xmath<k> (one counter per
/// document, sections first then abstract), replaces citation markers with
/// @xcite, tokenizes, and drops every section after the first one whose name
/// contains a concluding phrase. Sections with no tokens are dropped.
/// Throws CorpusError("no usable sections") / CorpusError("empty abstract").
Document normalize(const Document& raw);

/// True if a section heading marks the end of the kept body.
bool is_concluding_section(const std::string& name);

struct TruncationLimits {
  std::size_t max_doc = 2000;
  std::size_t max_sec = 500;
  std::size_t max_sections = 4;
};

Document truncate(const Document& doc, const TruncationLimits& limits = {});

}  // namespace strata
