#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "plltm/corpus.hpp"

namespace plltm {

// Corpus files are UTF-8, one document per line:
//
//   doc_id<TAB>label,label,...<TAB>lang0: tok tok ...<TAB>lang1: tok ...
//
// Tokens and labels are written as strings; the id mapping lives in sidecar
// files: <path>.vocab<l> (one term per line, line number = term id) and
// <path>.labels (one label name per line, line number = label id).

namespace detail {

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      parts.push_back(s.substr(start));
      break;
    }
    parts.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
  return parts;
}

inline void check_atom(const std::string& value, const char* what) {
  if (value.empty()) {
    throw std::invalid_argument(std::string(what) + " must be non-empty");
  }
  if (value.find_first_of(" \t\n\r") != std::string::npos) {
    throw std::invalid_argument(std::string(what) + " \"" + value +
                                "\" contains whitespace");
  }
}

inline std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

inline std::string vocab_path(const std::string& base, std::size_t language) {
  return base + ".vocab" + std::to_string(language);
}

inline std::string labels_path(const std::string& base) {
  return base + ".labels";
}

// Parses "lang<idx>:" block headers; returns the language index.
inline std::uint32_t parse_language_header(std::string_view block,
                                           std::size_t line_no,
                                           std::string_view& rest) {
  if (block.substr(0, 4) != "lang") {
    throw std::runtime_error("line " + std::to_string(line_no) +
                             ": language block must start with \"lang\"");
  }
  const std::size_t colon = block.find(':');
  if (colon == std::string_view::npos) {
    throw std::runtime_error("line " + std::to_string(line_no) +
                             ": language block missing ':'");
  }
  const std::string_view digits = block.substr(4, colon - 4);
  std::uint32_t index = 0;
  auto [ptr, ec] =
      std::from_chars(digits.data(), digits.data() + digits.size(), index);
  if (ec != std::errc{} || ptr != digits.data() + digits.size() ||
      digits.empty()) {
    throw std::runtime_error("line " + std::to_string(line_no) +
                             ": bad language index \"" + std::string(digits) +
                             "\"");
  }
  rest = block.substr(colon + 1);
  return index;
}

inline std::vector<std::string> parse_token_list(std::string_view rest) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < rest.size()) {
    while (i < rest.size() && rest[i] == ' ') ++i;
    std::size_t j = i;
    while (j < rest.size() && rest[j] != ' ') ++j;
    if (j > i) tokens.emplace_back(rest.substr(i, j - i));
    i = j;
  }
  return tokens;
}

struct ParsedLine {
  RawDocument doc;
  std::uint32_t max_language = 0;
  bool has_blocks = false;
};

inline ParsedLine parse_document_line(const std::string& line,
                                      std::size_t line_no) {
  const auto fields = split(line, '\t');
  if (fields.size() < 2) {
    throw std::runtime_error("line " + std::to_string(line_no) +
                             ": expected at least doc_id and label fields");
  }
  ParsedLine parsed;
  parsed.doc.doc_id = std::string(fields[0]);
  if (parsed.doc.doc_id.empty()) {
    throw std::runtime_error("line " + std::to_string(line_no) +
                             ": empty doc_id");
  }
  if (!fields[1].empty()) {
    for (const auto& lab : split(fields[1], ',')) {
      if (lab.empty()) {
        throw std::runtime_error("line " + std::to_string(line_no) +
                                 ": empty label name");
      }
      parsed.doc.labels.emplace_back(lab);
    }
  }
  for (std::size_t f = 2; f < fields.size(); ++f) {
    if (fields[f].empty()) continue;
    std::string_view rest;
    const std::uint32_t l = parse_language_header(fields[f], line_no, rest);
    if (l >= parsed.doc.tokens.size()) parsed.doc.tokens.resize(l + 1);
    if (!parsed.doc.tokens[l].empty()) {
      throw std::runtime_error("line " + std::to_string(line_no) +
                               ": duplicate block for language " +
                               std::to_string(l));
    }
    parsed.doc.tokens[l] = parse_token_list(rest);
    parsed.max_language = std::max(parsed.max_language, l);
    parsed.has_blocks = true;
  }
  return parsed;
}

}  // namespace detail

// Raw load: tokens and labels stay strings; L is the highest language index
// seen plus one. Used before vocabulary building.
inline std::vector<RawDocument> load_raw_corpus(const std::string& path) {
  const auto lines = detail::read_lines(path);
  std::vector<RawDocument> docs;
  std::uint32_t max_language = 0;
  bool any_blocks = false;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    auto parsed = detail::parse_document_line(lines[i], i + 1);
    max_language = std::max(max_language, parsed.max_language);
    any_blocks = any_blocks || parsed.has_blocks;
    docs.push_back(std::move(parsed.doc));
  }
  if (docs.empty()) throw std::runtime_error(path + ": no documents");
  const std::size_t L = any_blocks ? max_language + 1 : 1;
  for (auto& d : docs) d.tokens.resize(L);
  return docs;
}

inline std::vector<std::string> load_term_list(const std::string& path) {
  auto lines = detail::read_lines(path);
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) {
      throw std::runtime_error(path + ": empty entry at line " +
                               std::to_string(i + 1));
    }
  }
  return lines;
}

inline std::set<std::string> load_stopwords(const std::string& path) {
  std::set<std::string> words;
  for (auto& line : detail::read_lines(path)) {
    if (!line.empty()) words.insert(line);
  }
  return words;
}

// Strict load of an encoded corpus: every token must resolve in the sidecar
// vocabulary and every label in the sidecar label list.
inline Corpus load_corpus(const std::string& path) {
  Corpus corpus;
  for (std::uint32_t l = 0;; ++l) {
    const std::string vp = detail::vocab_path(path, l);
    if (!std::filesystem::exists(vp)) break;
    corpus.vocabularies.push_back(
        Vocabulary::from_terms(l, load_term_list(vp)));
  }
  if (corpus.vocabularies.empty()) {
    throw std::runtime_error(path + ": no vocabulary sidecar files (" +
                             detail::vocab_path(path, 0) + " missing)");
  }
  const std::string lp = detail::labels_path(path);
  if (std::filesystem::exists(lp)) {
    auto lines = detail::read_lines(lp);
    while (!lines.empty() && lines.back().empty()) lines.pop_back();
    corpus.label_names = std::move(lines);
  }
  std::unordered_map<std::string, std::uint32_t> label_index;
  for (std::uint32_t i = 0; i < corpus.label_names.size(); ++i) {
    label_index.emplace(corpus.label_names[i], i);
  }

  const std::size_t L = corpus.num_languages();
  const auto lines = detail::read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    auto parsed = detail::parse_document_line(lines[i], i + 1);
    if (parsed.max_language >= L && parsed.has_blocks) {
      throw std::runtime_error(
          "line " + std::to_string(i + 1) + ": language " +
          std::to_string(parsed.max_language) + " has no vocabulary sidecar");
    }
    Document doc;
    doc.doc_id = std::move(parsed.doc.doc_id);
    doc.tokens.resize(L);
    parsed.doc.tokens.resize(L);
    for (std::size_t l = 0; l < L; ++l) {
      const auto& index = corpus.vocabularies[l].index;
      doc.tokens[l].reserve(parsed.doc.tokens[l].size());
      for (const auto& tok : parsed.doc.tokens[l]) {
        auto it = index.find(tok);
        if (it == index.end()) {
          throw std::runtime_error("line " + std::to_string(i + 1) +
                                   ": term \"" + tok +
                                   "\" not in vocabulary for language " +
                                   std::to_string(l));
        }
        doc.tokens[l].push_back(it->second);
      }
    }
    for (const auto& lab : parsed.doc.labels) {
      auto it = label_index.find(lab);
      if (it == label_index.end()) {
        throw std::runtime_error("document " + doc.doc_id +
                                 ": unknown label \"" + lab + "\"");
      }
      doc.labels.push_back(it->second);
    }
    std::sort(doc.labels.begin(), doc.labels.end());
    doc.labels.erase(std::unique(doc.labels.begin(), doc.labels.end()),
                     doc.labels.end());
    corpus.documents.push_back(std::move(doc));
  }
  if (corpus.documents.empty()) {
    throw std::runtime_error(path + ": no documents");
  }
  corpus.validate();
  return corpus;
}

inline void save_corpus(const Corpus& corpus, const std::string& path) {
  corpus.validate();
  for (const auto& vocab : corpus.vocabularies) {
    for (const auto& term : vocab.terms) detail::check_atom(term, "term");
  }
  // label names are comma-delimited on the document line, so spaces are
  // fine but commas, tabs and newlines are not
  for (const auto& name : corpus.label_names) {
    if (name.empty()) {
      throw std::invalid_argument("label names must be non-empty");
    }
    if (name.find_first_of(",\t\n\r") != std::string::npos) {
      throw std::invalid_argument("label name \"" + name +
                                  "\" contains a comma, tab or newline");
    }
  }

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (const auto& doc : corpus.documents) {
    detail::check_atom(doc.doc_id, "doc_id");
    out << doc.doc_id << '\t';
    for (std::size_t i = 0; i < doc.labels.size(); ++i) {
      if (i) out << ',';
      out << corpus.label_names[doc.labels[i]];
    }
    for (std::size_t l = 0; l < corpus.num_languages(); ++l) {
      out << "\tlang" << l << ':';
      for (std::uint32_t t : doc.tokens[l]) {
        out << ' ' << corpus.vocabularies[l].terms[t];
      }
    }
    out << '\n';
  }
  out.close();
  if (!out) throw std::runtime_error("write failed: " + path);

  for (std::size_t l = 0; l < corpus.num_languages(); ++l) {
    std::ofstream vout(detail::vocab_path(path, l), std::ios::binary);
    if (!vout) throw std::runtime_error("cannot write vocabulary sidecar");
    for (const auto& term : corpus.vocabularies[l].terms) vout << term << '\n';
    vout.close();
    if (!vout) throw std::runtime_error("write failed: vocabulary sidecar");
  }
  std::ofstream lout(detail::labels_path(path), std::ios::binary);
  if (!lout) throw std::runtime_error("cannot write label sidecar");
  for (const auto& name : corpus.label_names) lout << name << '\n';
  lout.close();
  if (!lout) throw std::runtime_error("write failed: label sidecar");
}

}  // namespace plltm
