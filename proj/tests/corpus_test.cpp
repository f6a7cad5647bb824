#include <catch2/catch_amalgamated.hpp>

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "plltm/corpus.hpp"
#include "plltm/corpus_io.hpp"

using namespace plltm;

namespace {

RawDocument raw_doc(std::string id,
                    std::vector<std::vector<std::string>> tokens,
                    std::vector<std::string> labels = {}) {
  RawDocument d;
  d.doc_id = std::move(id);
  d.tokens = std::move(tokens);
  d.labels = std::move(labels);
  return d;
}

std::vector<RawDocument> docs_with_counts(
    const std::map<std::string, int>& counts) {
  RawDocument d;
  d.doc_id = "d0";
  d.tokens.resize(1);
  for (const auto& [term, count] : counts) {
    for (int i = 0; i < count; ++i) d.tokens[0].push_back(term);
  }
  return {d};
}

std::filesystem::path temp_dir() {
  static int counter = 0;
  auto dir = std::filesystem::temp_directory_path() /
             ("plltm_corpus_test_" + std::to_string(::getpid()) + "_" +
              std::to_string(counter++));
  std::filesystem::create_directories(dir);
  return dir;
}

Corpus tiny_two_language_corpus() {
  Corpus corpus;
  corpus.vocabularies.push_back(
      Vocabulary::from_terms(0, {"apple", "pear", "plum"}));
  corpus.vocabularies.push_back(Vocabulary::from_terms(1, {"rot", "grun"}));
  corpus.label_names = {"fruit", "color theory"};  // spaces allowed in labels
  Document d0;
  d0.doc_id = "d0";
  d0.tokens = {{0, 1, 0}, {1}};
  d0.labels = {0};
  Document d1;
  d1.doc_id = "d1";
  d1.tokens = {{2}, {0, 0}};
  d1.labels = {0, 1};
  corpus.documents = {d0, d1};
  return corpus;
}

}  // namespace

TEST_CASE("vocabulary keeps terms at the frequency threshold", "[corpus]") {
  auto docs = docs_with_counts({{"a", 5}, {"b", 2}, {"c", 1}});
  auto vocab = build_vocabulary(docs, 0, 2, {});
  REQUIRE(vocab.terms == std::vector<std::string>{"a", "b"});
  REQUIRE(vocab.index.at("a") == 0);
  REQUIRE(vocab.index.at("b") == 1);
}

TEST_CASE("vocabulary removes stopwords", "[corpus]") {
  auto docs = docs_with_counts({{"a", 5}, {"the", 9}});
  auto vocab = build_vocabulary(docs, 0, 1, {"the"});
  REQUIRE(vocab.terms == std::vector<std::string>{"a"});
}

TEST_CASE("vocabulary orders by frequency then lexicographically", "[corpus]") {
  auto docs = docs_with_counts({{"zz", 3}, {"aa", 3}, {"mm", 7}});
  auto vocab = build_vocabulary(docs, 0, 1, {});
  REQUIRE(vocab.terms == std::vector<std::string>{"mm", "aa", "zz"});
}

TEST_CASE("over-aggressive filtering is an error", "[corpus]") {
  auto docs = docs_with_counts({{"a", 1}, {"b", 1}});
  REQUIRE_THROWS_AS(build_vocabulary(docs, 0, 5, {}), std::runtime_error);
  REQUIRE_THROWS(build_vocabulary(docs, 0, 1, {"a", "b"}));
}

TEST_CASE("vocabulary construction is deterministic", "[corpus]") {
  std::vector<RawDocument> docs;
  Rng rng(99);
  for (int d = 0; d < 20; ++d) {
    RawDocument doc;
    doc.doc_id = "d" + std::to_string(d);
    doc.tokens.resize(1);
    for (int i = 0; i < 50; ++i) {
      doc.tokens[0].push_back("t" + std::to_string(rng.next_index(17)));
    }
    docs.push_back(doc);
  }
  auto a = build_vocabulary(docs, 0, 2, {"t3"});
  auto b = build_vocabulary(docs, 0, 2, {"t3"});
  REQUIRE(a.terms == b.terms);
}

TEST_CASE("encoding drops out-of-vocabulary tokens in order", "[corpus]") {
  auto docs = std::vector<RawDocument>{raw_doc("d0", {{"a", "x", "b"}})};
  auto vocab = Vocabulary::from_terms(0, {"a", "b"});
  auto result = encode_corpus(docs, {vocab}, {});
  REQUIRE(result.corpus.documents.size() == 1);
  REQUIRE(result.corpus.documents[0].tokens[0] ==
          std::vector<std::uint32_t>{0, 1});
  REQUIRE(result.dropped_tokens == 1);
}

TEST_CASE("encoding maps label strings to their position", "[corpus]") {
  std::vector<std::string> label_names;
  for (int i = 0; i < 7; ++i) label_names.push_back("l" + std::to_string(i));
  label_names.push_back("Developmental Psychology");  // position 7
  auto docs = std::vector<RawDocument>{
      raw_doc("d0", {{"a"}}, {"Developmental Psychology"})};
  auto vocab = Vocabulary::from_terms(0, {"a"});
  auto result = encode_corpus(docs, {vocab}, label_names);
  REQUIRE(result.corpus.documents[0].labels ==
          std::vector<std::uint32_t>{7});
}

TEST_CASE("documents empty after encoding are dropped and counted",
          "[corpus]") {
  std::vector<RawDocument> docs = {
      raw_doc("d0", {{"a", "b"}}),
      raw_doc("d1", {{"x", "y"}}),  // fully out of vocabulary
      raw_doc("d2", {{"b"}}),
  };
  auto vocab = Vocabulary::from_terms(0, {"a", "b"});
  auto result = encode_corpus(docs, {vocab}, {});
  REQUIRE(result.corpus.documents.size() == 2);
  REQUIRE(result.dropped_documents == 1);
  REQUIRE(result.corpus.documents[0].doc_id == "d0");
  REQUIRE(result.corpus.documents[1].doc_id == "d2");
}

TEST_CASE("unknown label is an error naming the document", "[corpus]") {
  auto docs = std::vector<RawDocument>{raw_doc("d7", {{"a"}}, {"mystery"})};
  auto vocab = Vocabulary::from_terms(0, {"a"});
  try {
    encode_corpus(docs, {vocab}, {"known"});
    FAIL("expected an error");
  } catch (const std::runtime_error& e) {
    REQUIRE(std::string(e.what()).find("d7") != std::string::npos);
    REQUIRE(std::string(e.what()).find("mystery") != std::string::npos);
  }
}

TEST_CASE("encoding never invents tokens", "[corpus]") {
  Rng rng(4);
  std::vector<RawDocument> docs;
  for (int d = 0; d < 10; ++d) {
    RawDocument doc;
    doc.doc_id = "d" + std::to_string(d);
    doc.tokens.resize(1);
    for (int i = 0; i < 30; ++i) {
      doc.tokens[0].push_back("t" + std::to_string(rng.next_index(40)));
    }
    docs.push_back(doc);
  }
  auto vocab = build_vocabulary(docs, 0, 2, {});
  auto result = encode_corpus(docs, {vocab}, {});
  for (std::size_t d = 0; d < result.corpus.documents.size(); ++d) {
    const auto& doc = result.corpus.documents[d];
    std::multiset<std::string> original(docs[d].tokens[0].begin(),
                                        docs[d].tokens[0].end());
    for (std::uint32_t t : doc.tokens[0]) {
      REQUIRE(original.count(vocab.terms[t]) > 0);
    }
  }
}

TEST_CASE("held-out split partitions the target language", "[corpus]") {
  Document doc;
  doc.doc_id = "d0";
  doc.tokens = {{10, 11, 12, 13}};
  Rng rng(1);
  auto split = split_held_out(doc, 0, 0.5, rng);
  REQUIRE(split.observed_part.tokens[0].size() == 2);
  REQUIRE(split.target_part.tokens[0].size() == 2);
  std::multiset<std::uint32_t> combined;
  for (auto t : split.observed_part.tokens[0]) combined.insert(t);
  for (auto t : split.target_part.tokens[0]) combined.insert(t);
  REQUIRE(combined == std::multiset<std::uint32_t>{10, 11, 12, 13});
}

TEST_CASE("held-out split keeps other languages fully observed", "[corpus]") {
  Document doc;
  doc.doc_id = "d0";
  doc.tokens.resize(2);
  for (std::uint32_t i = 0; i < 10; ++i) doc.tokens[0].push_back(i);
  for (std::uint32_t i = 0; i < 4; ++i) doc.tokens[1].push_back(i);
  doc.labels = {3};
  Rng rng(7);
  auto split = split_held_out(doc, 1, 0.5, rng);
  REQUIRE(split.observed_part.tokens[0] == doc.tokens[0]);
  REQUIRE(split.observed_part.tokens[1].size() == 2);
  REQUIRE(split.target_part.tokens[0].empty());
  REQUIRE(split.target_part.tokens[1].size() == 2);
  REQUIRE(split.target_part.labels == doc.labels);
  REQUIRE(split.observed_part.labels == doc.labels);
}

TEST_CASE("held-out split is a partition for many fractions", "[corpus]") {
  Rng data_rng(3);
  for (int round = 0; round < 30; ++round) {
    Document doc;
    doc.doc_id = "d";
    doc.tokens.resize(1);
    const std::uint32_t n = 2 + data_rng.next_index(40);
    for (std::uint32_t i = 0; i < n; ++i) {
      doc.tokens[0].push_back(data_rng.next_index(8));
    }
    const double fraction = 0.05 + 0.9 * data_rng.next_double();
    Rng rng(round);
    auto split = split_held_out(doc, 0, fraction, rng);
    const auto expected_observed =
        static_cast<std::size_t>(std::ceil(fraction * n));
    REQUIRE(split.observed_part.tokens[0].size() == expected_observed);
    std::multiset<std::uint32_t> combined, original(doc.tokens[0].begin(),
                                                    doc.tokens[0].end());
    for (auto t : split.observed_part.tokens[0]) combined.insert(t);
    for (auto t : split.target_part.tokens[0]) combined.insert(t);
    REQUIRE(combined == original);
  }
}

TEST_CASE("held-out split is deterministic under a fixed seed", "[corpus]") {
  Document doc;
  doc.doc_id = "d0";
  doc.tokens = {{1, 2, 3, 4, 5, 6, 7}};
  Rng a(42), b(42);
  auto sa = split_held_out(doc, 0, 0.5, a);
  auto sb = split_held_out(doc, 0, 0.5, b);
  REQUIRE(sa.observed_part.tokens[0] == sb.observed_part.tokens[0]);
  REQUIRE(sa.target_part.tokens[0] == sb.target_part.tokens[0]);
}

TEST_CASE("held-out split requires two target tokens", "[corpus]") {
  Document doc;
  doc.doc_id = "d0";
  doc.tokens = {{5}};
  Rng rng(0);
  REQUIRE_THROWS_AS(split_held_out(doc, 0, 0.5, rng), std::runtime_error);
  doc.tokens[0].push_back(6);
  REQUIRE_THROWS_AS(split_held_out(doc, 0, 1.0, rng), std::invalid_argument);
  REQUIRE_THROWS_AS(split_held_out(doc, 0, 0.0, rng), std::invalid_argument);
}

TEST_CASE("corpus round-trips through the text format", "[corpus]") {
  auto corpus = tiny_two_language_corpus();
  auto dir = temp_dir();
  const std::string path = (dir / "corpus.txt").string();
  save_corpus(corpus, path);
  auto loaded = load_corpus(path);

  REQUIRE(loaded.label_names == corpus.label_names);
  REQUIRE(loaded.num_languages() == corpus.num_languages());
  for (std::size_t l = 0; l < corpus.num_languages(); ++l) {
    REQUIRE(loaded.vocabularies[l].terms == corpus.vocabularies[l].terms);
  }
  REQUIRE(loaded.documents.size() == corpus.documents.size());
  for (std::size_t d = 0; d < corpus.documents.size(); ++d) {
    REQUIRE(loaded.documents[d].doc_id == corpus.documents[d].doc_id);
    REQUIRE(loaded.documents[d].tokens == corpus.documents[d].tokens);
    REQUIRE(loaded.documents[d].labels == corpus.documents[d].labels);
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("loading rejects labels missing from the sidecar", "[corpus]") {
  auto corpus = tiny_two_language_corpus();
  auto dir = temp_dir();
  const std::string path = (dir / "corpus.txt").string();
  save_corpus(corpus, path);
  // rewrite the label sidecar with one label removed
  {
    std::ofstream out(path + ".labels", std::ios::binary);
    out << "fruit\n";
  }
  try {
    load_corpus(path);
    FAIL("expected an error");
  } catch (const std::runtime_error& e) {
    REQUIRE(std::string(e.what()).find("d1") != std::string::npos);
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("loading rejects terms missing from the vocabulary", "[corpus]") {
  auto dir = temp_dir();
  const std::string path = (dir / "corpus.txt").string();
  {
    std::ofstream out(path, std::ios::binary);
    out << "d0\t\tlang0: apple mystery\n";
    std::ofstream vout(path + ".vocab0", std::ios::binary);
    vout << "apple\n";
  }
  try {
    load_corpus(path);
    FAIL("expected an error");
  } catch (const std::runtime_error& e) {
    REQUIRE(std::string(e.what()).find("line 1") != std::string::npos);
    REQUIRE(std::string(e.what()).find("mystery") != std::string::npos);
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("empty corpus file is an error", "[corpus]") {
  auto dir = temp_dir();
  const std::string path = (dir / "corpus.txt").string();
  {
    std::ofstream out(path, std::ios::binary);
    std::ofstream vout(path + ".vocab0", std::ios::binary);
    vout << "a\n";
  }
  try {
    load_corpus(path);
    FAIL("expected an error");
  } catch (const std::runtime_error& e) {
    REQUIRE(std::string(e.what()).find("no documents") != std::string::npos);
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("malformed lines report their line number", "[corpus]") {
  auto dir = temp_dir();
  const std::string path = (dir / "corpus.txt").string();
  {
    std::ofstream out(path, std::ios::binary);
    out << "d0\t\tlang0: a\n";
    out << "only_an_id\n";
    std::ofstream vout(path + ".vocab0", std::ios::binary);
    vout << "a\n";
  }
  try {
    load_corpus(path);
    FAIL("expected an error");
  } catch (const std::runtime_error& e) {
    REQUIRE(std::string(e.what()).find("line 2") != std::string::npos);
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("language selection keeps labels and drops other tokens",
          "[corpus]") {
  auto corpus = tiny_two_language_corpus();
  auto uni = select_language(corpus, 1);
  REQUIRE(uni.num_languages() == 1);
  REQUIRE(uni.vocabularies[0].terms == corpus.vocabularies[1].terms);
  REQUIRE(uni.documents[0].tokens[0] == corpus.documents[0].tokens[1]);
  REQUIRE(uni.documents[0].labels == corpus.documents[0].labels);
  REQUIRE(uni.total_tokens(0) == corpus.total_tokens(1));
}
