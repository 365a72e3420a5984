#include "strata/corpus.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <sstream>
#include <string_view>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

namespace strata {

namespace {

constexpr std::string_view kPunct = ".,;:!?()\"";
constexpr std::array<std::string_view, 4> kConcludingPhrases = {
    "conclusion", "concluding remarks", "summary", "discussion and conclusion"};

bool is_punct(char c) { return kPunct.find(c) != std::string_view::npos; }

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out)
    if (static_cast<unsigned char>(c) < 0x80) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::vector<std::string> split_ws(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

std::string join(const std::vector<std::string>& toks) {
  std::string out;
  for (const auto& t : toks) {
    if (!out.empty()) out += ' ';
    out += t;
  }
  return out;
}

// Largest k such that "@xmath<k>" already occurs, or -1.
long max_existing_math_index(const std::string& text) {
  long best = -1;
  constexpr std::string_view tag = "@xmath";
  for (auto pos = text.find(tag); pos != std::string::npos; pos = text.find(tag, pos + 1)) {
    std::size_t i = pos + tag.size();
    if (i >= text.size() || !std::isdigit(static_cast<unsigned char>(text[i]))) continue;
    long v = 0;
    while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i])) && v < 100000000)
      v = v * 10 + (text[i++] - '0');
    best = std::max(best, v);
  }
  return best;
}

std::string replace_math(const std::string& text, long& counter) {
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] != '$') {
      out += text[i++];
      continue;
    }
    const bool display = i + 1 < text.size() && text[i + 1] == '$';
    const std::string_view close = display ? "$$" : "$";
    const std::size_t start = i + close.size();
    const std::size_t end = text.find(close, start);
    if (end == std::string::npos) {  // unbalanced: keep the rest verbatim
      out.append(text, i, std::string::npos);
      break;
    }
    out += " @xmath" + std::to_string(counter++) + " ";
    i = end + close.size();
  }
  return out;
}

// Length of a citation marker starting at text[i], or 0.
//   \cite{..}, \citep{..}, \citet{..}, \cite*{..}, optional [..] arguments
//   [12], [3, 4], [5-7], [1,2-4]
std::size_t citation_length(const std::string& text, std::size_t i) {
  if (text.compare(i, 5, "\\cite") == 0) {
    std::size_t j = i + 5;
    while (j < text.size() && std::isalpha(static_cast<unsigned char>(text[j]))) ++j;
    if (j < text.size() && text[j] == '*') ++j;
    while (j < text.size() && text[j] == '[') {
      auto e = text.find(']', j);
      if (e == std::string::npos) return 0;
      j = e + 1;
    }
    if (j >= text.size() || text[j] != '{') return 0;
    auto e = text.find('}', j);
    return e == std::string::npos ? 0 : e + 1 - i;
  }
  if (text[i] == '[') {
    std::size_t j = i + 1;
    bool digit = false;
    while (j < text.size()) {
      char c = text[j];
      if (std::isdigit(static_cast<unsigned char>(c))) {
        digit = true;
      } else if (c == ']') {
        return digit ? j + 1 - i : 0;
      } else if (c != ',' && c != '-' && c != ' ') {
        return 0;
      }
      ++j;
    }
  }
  return 0;
}

std::string replace_citations(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size();) {
    if (auto n = citation_length(text, i); n > 0) {
      out += " @xcite ";
      i += n;
    } else {
      out += text[i++];
    }
  }
  return out;
}

std::vector<std::string> normalize_text(const std::string& raw, long& math_counter) {
  return tokenize(replace_citations(replace_math(lower(raw), math_counter)));
}

bool is_string_array(const nlohmann::json& j) {
  return j.is_array() && std::all_of(j.begin(), j.end(), [](const auto& e) { return e.is_string(); });
}

std::optional<Document> parse_record(const nlohmann::json& j, std::string& why) {
  if (!j.is_object()) return why = "record is not an object", std::nullopt;
  if (!j.contains("article_id") || !j["article_id"].is_string()) return why = "missing article_id", std::nullopt;
  if (!j.contains("abstract_text") || !is_string_array(j["abstract_text"]))
    return why = "missing abstract_text", std::nullopt;
  if (!j.contains("section_names") || !is_string_array(j["section_names"]))
    return why = "missing section_names", std::nullopt;
  if (!j.contains("sections") || !j["sections"].is_array()) return why = "missing sections", std::nullopt;
  const auto& secs = j["sections"];
  if (secs.size() != j["section_names"].size()) return why = "sections/section_names length mismatch", std::nullopt;
  Document d;
  d.id = j["article_id"].get<std::string>();
  for (std::size_t s = 0; s < secs.size(); ++s) {
    if (!is_string_array(secs[s])) return why = "section is not an array of strings", std::nullopt;
    Section sec;
    sec.name = j["section_names"][s].get<std::string>();
    for (const auto& sentence : secs[s]) {
      auto toks = split_ws(sentence.get<std::string>());
      sec.tokens.insert(sec.tokens.end(), toks.begin(), toks.end());
    }
    d.sections.push_back(std::move(sec));
  }
  for (const auto& sentence : j["abstract_text"]) {
    auto toks = split_ws(sentence.get<std::string>());
    d.abstract.insert(d.abstract.end(), toks.begin(), toks.end());
  }
  return d;
}

}  // namespace

std::vector<std::string> Document::section_names() const {
  std::vector<std::string> names;
  for (const auto& s : sections) names.push_back(s.name);
  return names;
}

std::size_t Document::token_count() const {
  std::size_t n = 0;
  for (const auto& s : sections) n += s.tokens.size();
  return n;
}

CorpusReader::CorpusReader(const std::filesystem::path& path) : in_(path), path_(path) {
  if (!in_) throw std::runtime_error("cannot read corpus file: " + path.string());
}

std::optional<Document> CorpusReader::next() {
  std::string line;
  while (std::getline(in_, line)) {
    ++line_no_;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::string why;
    auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded()) {
      why = "malformed JSON";
    } else if (auto doc = parse_record(j, why)) {
      return doc;
    }
    ++skipped_;
    spdlog::warn("{}:{}: skipping record ({})", path_.string(), line_no_, why);
  }
  if (in_.bad()) throw std::runtime_error("I/O error while reading " + path_.string());
  return std::nullopt;
}

LoadedCorpus load_corpus(const std::filesystem::path& path) {
  CorpusReader reader(path);
  LoadedCorpus out;
  while (auto d = reader.next()) out.documents.push_back(std::move(*d));
  out.skipped = reader.skipped();
  return out;
}

void write_corpus(const std::filesystem::path& path, const std::vector<Document>& docs) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write corpus file: " + path.string());
  for (const auto& d : docs) {
    nlohmann::json j;
    j["article_id"] = d.id;
    j["abstract_text"] = nlohmann::json::array({join(d.abstract)});
    j["section_names"] = d.section_names();
    auto secs = nlohmann::json::array();
    for (const auto& s : d.sections) secs.push_back(nlohmann::json::array({join(s.tokens)}));
    j["sections"] = std::move(secs);
    os << j.dump() << '\n';
  }
  if (!os) throw std::runtime_error("write failed: " + path.string());
}

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> out;
  for (const auto& raw : split_ws(lower(text))) {
    std::size_t b = 0, e = raw.size();
    while (b < e && is_punct(raw[b])) out.emplace_back(1, raw[b++]);
    std::size_t tail = e;
    while (tail > b && is_punct(raw[tail - 1])) --tail;
    if (tail > b) out.push_back(raw.substr(b, tail - b));
    for (std::size_t i = tail; i < e; ++i) out.emplace_back(1, raw[i]);
  }
  return out;
}

bool is_concluding_section(const std::string& name) {
  const auto n = lower(name);
  return std::any_of(kConcludingPhrases.begin(), kConcludingPhrases.end(),
                     [&](std::string_view p) { return n.find(p) != std::string::npos; });
}

Document normalize(const Document& raw) {
  // Continue numbering after any @xmath tokens already present so that
  // normalizing twice changes nothing.
  long existing = -1;
  for (const auto& s : raw.sections) existing = std::max(existing, max_existing_math_index(join(s.tokens)));
  existing = std::max(existing, max_existing_math_index(join(raw.abstract)));
  long counter = existing + 1;

  Document out;
  out.id = raw.id;
  for (const auto& s : raw.sections) {
    Section sec;
    sec.name = join(split_ws(lower(s.name)));
    sec.tokens = normalize_text(join(s.tokens), counter);
    const bool last = is_concluding_section(sec.name);
    if (!sec.tokens.empty()) out.sections.push_back(std::move(sec));
    if (last) break;
  }
  out.abstract = normalize_text(join(raw.abstract), counter);
  if (out.sections.empty()) throw CorpusError("no usable sections");
  if (out.abstract.empty()) throw CorpusError("empty abstract");
  return out;
}

Document truncate(const Document& doc, const TruncationLimits& limits) {
  Document out;
  out.id = doc.id;
  out.abstract = doc.abstract;
  std::size_t total = 0;
  for (std::size_t s = 0; s < doc.sections.size() && s < limits.max_sections; ++s) {
    const auto& src = doc.sections[s];
    std::size_t keep = std::min(src.tokens.size(), limits.max_sec);
    keep = std::min(keep, limits.max_doc - std::min(limits.max_doc, total));
    if (keep == 0) break;
    Section sec{src.name, {src.tokens.begin(), src.tokens.begin() + static_cast<std::ptrdiff_t>(keep)}};
    total += keep;
    out.sections.push_back(std::move(sec));
  }
  return out;
}

}  // namespace strata
