#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "plltm/rng.hpp"

namespace plltm {

// One vocabulary per language; term id == position in `terms`.
struct Vocabulary {
  std::uint32_t language_id = 0;
  std::vector<std::string> terms;
  std::unordered_map<std::string, std::uint32_t> index;

  static Vocabulary from_terms(std::uint32_t language_id,
                               std::vector<std::string> terms) {
    Vocabulary v;
    v.language_id = language_id;
    v.terms = std::move(terms);
    v.index.reserve(v.terms.size());
    for (std::uint32_t t = 0; t < v.terms.size(); ++t) {
      auto [it, inserted] = v.index.emplace(v.terms[t], t);
      if (!inserted) {
        throw std::invalid_argument("duplicate term in vocabulary " +
                                    std::to_string(language_id) + ": " +
                                    v.terms[t]);
      }
    }
    return v;
  }

  std::size_t size() const { return terms.size(); }
};

// Encoded document: token ids per language plus a sorted label-id set.
struct Document {
  std::string doc_id;
  std::vector<std::vector<std::uint32_t>> tokens;  // [language][position]
  std::vector<std::uint32_t> labels;               // sorted, unique

  std::size_t tokens_in(std::size_t language) const {
    return tokens[language].size();
  }
  std::size_t total_tokens() const {
    std::size_t n = 0;
    for (const auto& seq : tokens) n += seq.size();
    return n;
  }
};

struct Corpus {
  std::vector<Document> documents;
  std::vector<Vocabulary> vocabularies;  // length L
  std::vector<std::string> label_names;

  std::size_t num_languages() const { return vocabularies.size(); }
  std::size_t num_label_names() const { return label_names.size(); }

  std::size_t total_tokens(std::size_t language) const {
    std::size_t n = 0;
    for (const auto& d : documents) n += d.tokens_in(language);
    return n;
  }

  void validate() const {
    const std::size_t L = num_languages();
    if (L == 0) throw std::invalid_argument("corpus has no languages");
    for (const auto& d : documents) {
      if (d.tokens.size() != L) {
        throw std::invalid_argument("document " + d.doc_id + " has " +
                                    std::to_string(d.tokens.size()) +
                                    " language blocks, corpus has " +
                                    std::to_string(L));
      }
      for (std::size_t l = 0; l < L; ++l) {
        for (std::uint32_t t : d.tokens[l]) {
          if (t >= vocabularies[l].size()) {
            throw std::out_of_range("document " + d.doc_id + ": token id " +
                                    std::to_string(t) +
                                    " out of range for language " +
                                    std::to_string(l));
          }
        }
      }
      for (std::uint32_t lab : d.labels) {
        if (lab >= label_names.size()) {
          throw std::out_of_range("document " + d.doc_id + ": label id " +
                                  std::to_string(lab) + " out of range");
        }
      }
      if (!std::is_sorted(d.labels.begin(), d.labels.end()) ||
          std::adjacent_find(d.labels.begin(), d.labels.end()) !=
              d.labels.end()) {
        throw std::invalid_argument("document " + d.doc_id +
                                    ": labels not sorted/unique");
      }
    }
  }
};

// x_d1 / x_d2 split of a test document. observed_part keeps every language
// except a sampled share of the target language; target_part holds the rest.
struct HeldOutSplit {
  Document observed_part;
  Document target_part;
  std::uint32_t target_language = 0;
};

// Pre-encoding view of a document: tokens and labels are still strings.
struct RawDocument {
  std::string doc_id;
  std::vector<std::vector<std::string>> tokens;  // [language][position]
  std::vector<std::string> labels;
};

// Terms with corpus frequency >= min_count and not in stopwords, ordered by
// descending frequency, ties broken lexicographically.
inline Vocabulary build_vocabulary(const std::vector<RawDocument>& raw_docs,
                                   std::uint32_t language,
                                   std::size_t min_count,
                                   const std::set<std::string>& stopwords) {
  if (min_count < 1) throw std::invalid_argument("min_count must be >= 1");
  std::unordered_map<std::string, std::size_t> freq;
  for (const auto& d : raw_docs) {
    if (language >= d.tokens.size()) continue;
    for (const auto& tok : d.tokens[language]) ++freq[tok];
  }
  std::vector<std::pair<std::string, std::size_t>> kept;
  kept.reserve(freq.size());
  for (auto& [term, count] : freq) {
    if (count >= min_count && !stopwords.count(term)) {
      kept.emplace_back(term, count);
    }
  }
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (kept.empty()) {
    throw std::runtime_error(
        "vocabulary for language " + std::to_string(language) +
        " is empty after filtering (min_count=" + std::to_string(min_count) +
        ", " + std::to_string(stopwords.size()) + " stopwords)");
  }
  std::vector<std::string> terms;
  terms.reserve(kept.size());
  for (auto& [term, count] : kept) terms.push_back(term);
  return Vocabulary::from_terms(language, std::move(terms));
}

struct EncodeResult {
  Corpus corpus;
  std::size_t dropped_documents = 0;  // empty in every language after encoding
  std::size_t dropped_tokens = 0;     // out-of-vocabulary occurrences
};

// Maps raw tokens to ids (out-of-vocabulary tokens dropped) and label strings
// to label ids. Documents left empty in every language are dropped.
inline EncodeResult encode_corpus(const std::vector<RawDocument>& raw_docs,
                                  std::vector<Vocabulary> vocabularies,
                                  std::vector<std::string> label_names) {
  std::unordered_map<std::string, std::uint32_t> label_index;
  for (std::uint32_t i = 0; i < label_names.size(); ++i) {
    auto [it, inserted] = label_index.emplace(label_names[i], i);
    if (!inserted) {
      throw std::invalid_argument("duplicate label name: " + label_names[i]);
    }
  }
  const std::size_t L = vocabularies.size();
  EncodeResult result;
  result.corpus.vocabularies = std::move(vocabularies);
  result.corpus.label_names = std::move(label_names);
  for (const auto& raw : raw_docs) {
    if (raw.tokens.size() > L) {
      throw std::invalid_argument(
          "document " + raw.doc_id + " has " +
          std::to_string(raw.tokens.size()) +
          " language blocks but only " + std::to_string(L) +
          " vocabularies were supplied");
    }
    Document doc;
    doc.doc_id = raw.doc_id;
    doc.tokens.resize(L);
    std::size_t kept = 0;
    for (std::size_t l = 0; l < L && l < raw.tokens.size(); ++l) {
      const auto& index = result.corpus.vocabularies[l].index;
      for (const auto& tok : raw.tokens[l]) {
        auto it = index.find(tok);
        if (it == index.end()) {
          ++result.dropped_tokens;
        } else {
          doc.tokens[l].push_back(it->second);
          ++kept;
        }
      }
    }
    for (const auto& lab : raw.labels) {
      auto it = label_index.find(lab);
      if (it == label_index.end()) {
        throw std::runtime_error("document " + raw.doc_id +
                                 ": unknown label \"" + lab + "\"");
      }
      doc.labels.push_back(it->second);
    }
    std::sort(doc.labels.begin(), doc.labels.end());
    doc.labels.erase(std::unique(doc.labels.begin(), doc.labels.end()),
                     doc.labels.end());
    if (kept == 0) {
      ++result.dropped_documents;
    } else {
      result.corpus.documents.push_back(std::move(doc));
    }
  }
  return result;
}

// ceil(fraction * N) uniformly chosen target-language positions go to the
// observed part, the remainder to the target part; other languages are
// copied wholly into the observed part. Relative token order is kept.
inline HeldOutSplit split_held_out(const Document& doc,
                                   std::uint32_t target_language,
                                   double fraction, Rng& rng) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw std::invalid_argument("fraction must lie strictly in (0, 1)");
  }
  if (target_language >= doc.tokens.size()) {
    throw std::out_of_range("target language out of range");
  }
  const std::size_t n = doc.tokens[target_language].size();
  if (n < 2) {
    throw std::runtime_error("document " + doc.doc_id + " has " +
                             std::to_string(n) +
                             " tokens in the target language; need >= 2 for a "
                             "held-out split");
  }
  const auto observed_count = static_cast<std::size_t>(
      std::ceil(fraction * static_cast<double>(n)));

  // Partial Fisher-Yates: the first observed_count slots are the sample.
  std::vector<std::uint32_t> positions(n);
  std::iota(positions.begin(), positions.end(), 0u);
  for (std::size_t i = 0; i < observed_count; ++i) {
    const auto j =
        i + rng.next_index(static_cast<std::uint32_t>(n - i));
    std::swap(positions[i], positions[j]);
  }
  std::vector<std::uint32_t> observed_pos(positions.begin(),
                                          positions.begin() + observed_count);
  std::vector<std::uint32_t> target_pos(positions.begin() + observed_count,
                                        positions.end());
  std::sort(observed_pos.begin(), observed_pos.end());
  std::sort(target_pos.begin(), target_pos.end());

  HeldOutSplit split;
  split.target_language = target_language;
  split.observed_part = doc;
  split.observed_part.tokens[target_language].clear();
  for (std::uint32_t p : observed_pos) {
    split.observed_part.tokens[target_language].push_back(
        doc.tokens[target_language][p]);
  }
  split.target_part.doc_id = doc.doc_id;
  split.target_part.labels = doc.labels;
  split.target_part.tokens.resize(doc.tokens.size());
  for (std::uint32_t p : target_pos) {
    split.target_part.tokens[target_language].push_back(
        doc.tokens[target_language][p]);
  }
  return split;
}

// Restriction of a document/corpus to one language (used for the unilingual
// model variants). The selected language becomes language 0.
inline Document select_language(const Document& doc, std::uint32_t language) {
  if (language >= doc.tokens.size()) {
    throw std::out_of_range("language out of range");
  }
  Document out;
  out.doc_id = doc.doc_id;
  out.labels = doc.labels;
  out.tokens.push_back(doc.tokens[language]);
  return out;
}

inline Corpus select_language(const Corpus& corpus, std::uint32_t language) {
  if (language >= corpus.num_languages()) {
    throw std::out_of_range("language out of range");
  }
  Corpus out;
  out.label_names = corpus.label_names;
  Vocabulary vocab = corpus.vocabularies[language];
  vocab.language_id = 0;
  out.vocabularies.push_back(std::move(vocab));
  out.documents.reserve(corpus.documents.size());
  for (const auto& d : corpus.documents) {
    out.documents.push_back(select_language(d, language));
  }
  return out;
}

inline HeldOutSplit select_language(const HeldOutSplit& split) {
  HeldOutSplit out;
  out.target_language = 0;
  out.observed_part = select_language(split.observed_part,
                                      split.target_language);
  out.target_part = select_language(split.target_part, split.target_language);
  return out;
}

}  // namespace plltm
