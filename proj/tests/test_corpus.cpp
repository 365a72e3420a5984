#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "strata/corpus.hpp"
#include "strata/vocab.hpp"

using namespace strata;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name, const std::string& content) {
  auto p = fs::temp_directory_path() / name;
  std::ofstream(p) << content;
  return p;
}

Document raw(std::vector<std::pair<std::string, std::string>> secs, std::string abstract) {
  Document d;
  d.id = "doc";
  for (auto& [n, t] : secs) d.sections.push_back({n, {t}});
  d.abstract = {abstract};
  return d;
}

Document sized(const std::vector<std::size_t>& lengths) {
  Document d;
  d.id = "s";
  for (std::size_t j = 0; j < lengths.size(); ++j) {
    Section s{"sec" + std::to_string(j), {}};
    for (std::size_t i = 0; i < lengths[j]; ++i) s.tokens.push_back("t" + std::to_string(i));
    d.sections.push_back(s);
  }
  d.abstract = {"a"};
  return d;
}

std::vector<std::size_t> lengths(const Document& d) {
  std::vector<std::size_t> out;
  for (const auto& s : d.sections) out.push_back(s.tokens.size());
  return out;
}

}  // namespace

TEST_SUITE("load_corpus") {
  TEST_CASE("empty file") {
    auto c = load_corpus(temp_file("strata_empty.jsonl", ""));
    CHECK(c.documents.empty());
    CHECK(c.skipped == 0);
  }

  TEST_CASE("malformed and schema-violating lines are skipped and counted") {
    const std::string good =
        R"({"article_id":"a","abstract_text":["x y"],"section_names":["intro"],"sections":[["hello world"]]})";
    const std::string missing = R"({"article_id":"c","abstract_text":["x"],"section_names":["intro"]})";
    auto c = load_corpus(temp_file("strata_mixed.jsonl", good + "\n{not json\n" + good + "\n" + missing + "\n"));
    CHECK(c.documents.size() == 2);
    CHECK(c.skipped == 2);
    CHECK(c.documents[0].sections[0].tokens == std::vector<std::string>{"hello", "world"});
    CHECK(c.documents[0].abstract == std::vector<std::string>{"x", "y"});
  }

  TEST_CASE("unreadable path is fatal") { CHECK_THROWS(load_corpus("/nonexistent/strata/corpus.jsonl")); }

  TEST_CASE("write then load round trips") {
    Document d = normalize(raw({{"intro", "alpha beta"}, {"results", "gamma"}}, "delta ."));
    auto p = fs::temp_directory_path() / "strata_roundtrip.jsonl";
    write_corpus(p, {d, d});
    auto c = load_corpus(p);
    REQUIRE(c.documents.size() == 2);
    CHECK(c.documents[1].sections[1].tokens == d.sections[1].tokens);
    CHECK(c.documents[1].section_names() == d.section_names());
    CHECK(c.documents[1].abstract == d.abstract);
  }
}

TEST_SUITE("normalize") {
  TEST_CASE("conclusion cutoff keeps the concluding section") {
    auto d = normalize(raw({{"Intro", "a"}, {"Methods", "b"}, {"Conclusion", "c"}, {"Appendix", "d"}}, "s"));
    CHECK(d.section_names() == std::vector<std::string>{"intro", "methods", "conclusion"});
  }

  TEST_CASE("other concluding phrases") {
    CHECK(is_concluding_section("5 Concluding Remarks"));
    CHECK(is_concluding_section("summary and outlook"));
    CHECK(is_concluding_section("discussion and conclusions"));
    CHECK_FALSE(is_concluding_section("discussion"));
  }

  TEST_CASE("no concluding section keeps everything") {
    auto d = normalize(raw({{"a", "x"}, {"b", "y"}, {"c", "z"}}, "s"));
    CHECK(d.sections.size() == 3);
  }

  TEST_CASE("math spans become indexed tokens") {
    auto d = normalize(raw({{"intro", "We use $x^2$ here"}}, "s"));
    CHECK(d.sections[0].tokens == std::vector<std::string>{"we", "use", "@xmath0", "here"});
    auto e = normalize(raw({{"intro", "$a$ and $$b + c$$ then $d$"}}, "on $e$"));
    CHECK(e.sections[0].tokens == std::vector<std::string>{"@xmath0", "and", "@xmath1", "then", "@xmath2"});
    CHECK(e.abstract == std::vector<std::string>{"on", "@xmath3"});
  }

  TEST_CASE("citations become @xcite") {
    auto d = normalize(raw({{"intro", "as shown \\cite{foo,bar} and [3, 4] before \\citep{x}."}}, "s"));
    CHECK(d.sections[0].tokens ==
          std::vector<std::string>{"as", "shown", "@xcite", "and", "@xcite", "before", "@xcite", "."});
  }

  TEST_CASE("tokenizer detaches punctuation and keeps special tokens") {
    CHECK(tokenize("Hello, World! (yes) \"q\"") ==
          std::vector<std::string>{"hello", ",", "world", "!", "(", "yes", ")", "\"", "q", "\""});
    CHECK(tokenize("see @xmath12, @xcite.") == std::vector<std::string>{"see", "@xmath12", ",", "@xcite", "."});
    CHECK(tokenize("   ").empty());
  }

  TEST_CASE("pre-normalized tokens pass through") {
    auto d = normalize(raw({{"intro", "@xmath3 is @xcite"}}, "@xmath0"));
    CHECK(d.sections[0].tokens == std::vector<std::string>{"@xmath3", "is", "@xcite"});
    CHECK(d.abstract == std::vector<std::string>{"@xmath0"});
  }

  TEST_CASE("errors") {
    CHECK_THROWS_WITH(normalize(raw({{"conclusion", "  "}}, "s")), "no usable sections");
    CHECK_THROWS_WITH(normalize(raw({{"intro", "x"}}, " ")), "empty abstract");
  }

  TEST_CASE("idempotence on random documents") {
    std::mt19937_64 rng(21);
    const std::vector<std::string> words{"The", "model", "$x$", "\\cite{a}", "[12]", "(see", "fig.)", "Result,", "@xmath4",
                                         "$$y=2$$", "done!", "\"quoted\""};
    const std::vector<std::string> names{"Introduction", "Method", "Results", "Summary", "Appendix", "Related Work"};
    std::uniform_int_distribution<std::size_t> w(0, words.size() - 1), n(0, names.size() - 1), len(1, 15),
        cnt(1, 6);
    for (int trial = 0; trial < 300; ++trial) {
      Document d;
      d.id = "r";
      for (std::size_t s = cnt(rng); s > 0; --s) {
        std::string text;
        for (std::size_t i = len(rng); i > 0; --i) text += words[w(rng)] + " ";
        d.sections.push_back({names[n(rng)], {text}});
      }
      d.abstract = {words[w(rng)] + " " + words[w(rng)] + " end"};
      Document once = normalize(d);
      Document twice = normalize(once);
      CHECK(once.section_names() == twice.section_names());
      for (std::size_t s = 0; s < once.sections.size(); ++s) CHECK(once.sections[s].tokens == twice.sections[s].tokens);
      CHECK(once.abstract == twice.abstract);
      for (const auto& s : once.sections) {
        CHECK_FALSE(s.tokens.empty());
        for (const auto& t : s.tokens)
          for (char c : t) CHECK_FALSE((c >= 'A' && c <= 'Z'));
      }
    }
  }
}

TEST_SUITE("truncate") {
  TEST_CASE("examples") {
    CHECK(lengths(truncate(sized({600, 600, 600, 600, 600, 600}))) == std::vector<std::size_t>{500, 500, 500, 500});
    CHECK(lengths(truncate(sized({50}))) == std::vector<std::size_t>{50});
    CHECK(lengths(truncate(sized({900, 900, 900}))) == std::vector<std::size_t>{500, 500, 500});
    CHECK(lengths(truncate(sized({10, 20, 30}), {25, 500, 4})) == std::vector<std::size_t>{10, 15});
  }

  TEST_CASE("limits hold and truncation is idempotent on random documents") {
    std::mt19937_64 rng(8);
    std::uniform_int_distribution<std::size_t> secs(1, 8), len(1, 900), lim(1, 60);
    for (int trial = 0; trial < 1000; ++trial) {
      std::vector<std::size_t> ls(secs(rng));
      for (auto& l : ls) l = len(rng);
      TruncationLimits limits{2000, 500, 4};
      if (trial % 2) limits = {lim(rng) * 10, lim(rng) * 5, 1 + lim(rng) % 5};
      Document t = truncate(sized(ls), limits);
      auto out = lengths(t);
      CHECK(!out.empty());
      CHECK(out.size() <= limits.max_sections);
      std::size_t total = 0;
      for (auto l : out) {
        CHECK(l > 0);
        CHECK(l <= limits.max_sec);
        total += l;
      }
      CHECK(total <= limits.max_doc);
      CHECK(lengths(truncate(t, limits)) == out);
    }
  }
}

TEST_SUITE("vocabulary") {
  Document tokens_doc(std::vector<std::string> toks) {
    Document d;
    d.sections.push_back({"s", std::move(toks)});
    d.abstract = {};
    return d;
  }

  TEST_CASE("frequency ranking and cap") {
    auto v = Vocabulary::build({tokens_doc({"b", "a", "a", "a"})}, 6);
    CHECK(v.size() == 6);
    CHECK(v.id("<pad>") == 0);
    CHECK(v.id("<unk>") == 1);
    CHECK(v.id("<s>") == 2);
    CHECK(v.id("</s>") == 3);
    CHECK(v.id("a") == 4);
    CHECK(v.id("b") == 5);
    auto small = Vocabulary::build({tokens_doc({"b", "a", "a", "a"})}, 5);
    CHECK(small.size() == 5);
    CHECK(small.id("b") == Vocabulary::kUnk);
    auto tie = Vocabulary::build({tokens_doc({"b", "a", "b", "a"})}, 10);
    CHECK(tie.id("a") == 4);
    CHECK(tie.id("b") == 5);
  }

  TEST_CASE("errors") {
    CHECK_THROWS(Vocabulary::build({}, 10));
    CHECK_THROWS(Vocabulary::build({tokens_doc({"a"})}, 4));
  }

  TEST_CASE("bijective, dense, and persistent") {
    std::mt19937_64 rng(4);
    std::uniform_int_distribution<int> w(0, 300);
    std::vector<std::string> toks;
    for (int i = 0; i < 3000; ++i) toks.push_back("w" + std::to_string(w(rng)));
    auto v = Vocabulary::build({tokens_doc(toks)}, 100);
    CHECK(v.size() == 100);
    for (std::size_t id = 0; id < v.size(); ++id) CHECK(v.id(v.token(id)) == id);
    for (std::size_t id = 5; id < v.size(); ++id) CHECK(v.count(id - 1) >= v.count(id));
    auto p = fs::temp_directory_path() / "strata_vocab.tsv";
    v.save(p);
    auto back = Vocabulary::load(p);
    REQUIRE(back.size() == v.size());
    for (std::size_t id = 0; id < v.size(); ++id) CHECK(back.token(id) == v.token(id));
  }

  TEST_CASE("extended vocabulary and encoding") {
    auto v = Vocabulary::build({tokens_doc({"a", "b", "c"})}, 10);
    Document d;
    d.id = "x";
    d.sections = {{"s1", {"a", "q", "b"}}, {"s2", {"r", "q", "c"}}};
    d.abstract = {"q", "a", "zzz"};
    auto in = encode_document(d, v);
    CHECK(in.ext.extra() == std::vector<std::string>{"q", "r"});
    CHECK(in.ext_ids[0][1] == v.size());
    CHECK(in.ext_ids[1][1] == v.size());
    CHECK(in.ext_ids[1][0] == v.size() + 1);
    CHECK(in.base_ids[0][1] == Vocabulary::kUnk);
    CHECK(in.target == std::vector<std::size_t>{v.size(), v.id("a"), Vocabulary::kUnk, Vocabulary::kStop});
    for (const auto& sec : in.ext_ids)
      for (auto id : sec) CHECK(id >= Vocabulary::kNumSpecials);
    CHECK(restore_tokens(in.target, v, in.ext) == std::vector<std::string>{"q", "a", "<unk>", "</s>"});
    CHECK_THROWS(restore_tokens({v.size() + 2}, v, in.ext));

    Document known = d;
    known.sections = {{"s", {"a", "b", "c"}}};
    auto k = encode_document(known, v);
    CHECK(k.ext.extra().empty());
    CHECK(k.ext_ids == k.base_ids);
  }

  TEST_CASE("target clipping") {
    auto v = Vocabulary::build({tokens_doc({"a"})}, 10);
    Document d;
    d.sections = {{"s", {"a"}}};
    d.abstract = {"a", "a", "a", "a"};
    CHECK(encode_document(d, v, 3).target.size() == 3);
    CHECK(encode_document(d, v, 5).target.back() == Vocabulary::kStop);
  }

  TEST_CASE("padding and flattening") {
    auto v = Vocabulary::build({tokens_doc({"a", "b"})}, 10);
    Document d;
    d.sections = {{"s1", {"a"}}, {"s2", {"b", "a", "b"}}};
    d.abstract = {"a"};
    auto in = encode_document(d, v);
    auto p = pad_source(in);
    CHECK(p.sections == 2);
    CHECK(p.max_len == 3);
    CHECK(p.word_mask == std::vector<bool>{true, false, false, true, true, true});
    CHECK(p.base_ids[1] == Vocabulary::kPad);
    auto wide = pad_source(in, 3, 4);
    CHECK(wide.section_mask == std::vector<bool>{true, true, false});
    CHECK_THROWS(pad_source(in, 1, 3));
    auto f = flatten(in);
    CHECK(f.base_ids.size() == 1);
    CHECK(f.base_ids[0].size() == 4);
  }
}
