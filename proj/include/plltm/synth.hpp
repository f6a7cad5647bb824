#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "plltm/corpus.hpp"
#include "plltm/model.hpp"
#include "plltm/rng.hpp"

namespace plltm {

struct GroundTruth {
  std::uint32_t num_topics = 0;
  std::vector<std::vector<double>> phi_true;  // per language, K x V^l
  std::vector<double> theta_true;             // D x K, row-major
  LabelMask masks;
};

struct SynthSpec {
  std::uint32_t num_topics = 0;
  std::uint32_t num_languages = 0;
  std::vector<std::uint32_t> vocab_sizes;  // per language
  std::uint32_t num_documents = 0;
  double labels_per_doc_mean = 1.0;
  std::vector<double> doc_length_means;  // per language
  double alpha = 0.1;
  std::vector<double> beta;  // per language

  void validate() const {
    if (num_topics < 1 || num_languages < 1 || num_documents < 1) {
      throw std::invalid_argument("all dimensions must be >= 1");
    }
    if (vocab_sizes.size() != num_languages ||
        doc_length_means.size() != num_languages ||
        beta.size() != num_languages) {
      throw std::invalid_argument(
          "vocab_sizes, doc_length_means and beta must have one entry per "
          "language");
    }
    for (auto v : vocab_sizes) {
      if (v < 1) throw std::invalid_argument("vocab sizes must be >= 1");
    }
    for (double m : doc_length_means) {
      if (!(m > 0.0)) throw std::invalid_argument("length means must be > 0");
    }
    if (!(labels_per_doc_mean >= 1.0)) {
      throw std::invalid_argument("labels_per_doc_mean must be >= 1");
    }
    if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be > 0");
    for (double b : beta) {
      if (!(b > 0.0)) throw std::invalid_argument("beta must be > 0");
    }
  }
};

namespace detail {

inline void dirichlet_sample(Rng& rng, double concentration, double* out,
                             std::size_t n) {
  std::gamma_distribution<double> gamma(concentration, 1.0);
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = gamma(rng.engine());
    sum += out[i];
  }
  if (sum <= 0.0) {
    // all gamma draws underflowed; fall back to a uniform point
    for (std::size_t i = 0; i < n; ++i) out[i] = 1.0 / static_cast<double>(n);
    return;
  }
  for (std::size_t i = 0; i < n; ++i) out[i] /= sum;
}

inline std::uint32_t categorical_sample(Rng& rng, const double* probs,
                                        std::uint32_t n) {
  double u = rng.next_double();
  for (std::uint32_t i = 0; i + 1 < n; ++i) {
    u -= probs[i];
    if (u < 0.0) return i;
  }
  return n - 1;
}

// Uniform subset of {0..K-1} with at least one element; the size is
// 1 + Poisson(mean - 1), capped at K.
inline std::vector<std::uint32_t> sample_label_set(Rng& rng, std::uint32_t K,
                                                   double mean) {
  std::uint32_t size = 1;
  if (mean > 1.0) {
    std::poisson_distribution<std::uint32_t> extra(mean - 1.0);
    size = 1 + extra(rng.engine());
  }
  size = std::min(size, K);
  std::vector<std::uint32_t> ids(K);
  std::iota(ids.begin(), ids.end(), 0u);
  for (std::uint32_t i = 0; i < size; ++i) {
    const auto j = i + rng.next_index(K - i);
    std::swap(ids[i], ids[j]);
  }
  ids.resize(size);
  std::sort(ids.begin(), ids.end());
  return ids;
}

}  // namespace detail

// Samples a corpus from the generative process: per-document label sets,
// theta restricted to the labels, per-language topic-term distributions,
// Poisson document lengths (truncated >= 1), then topics and words.
inline std::pair<Corpus, GroundTruth> generate_corpus(const SynthSpec& spec,
                                                      Rng& rng) {
  spec.validate();
  const std::uint32_t K = spec.num_topics;
  const std::uint32_t L = spec.num_languages;
  const std::uint32_t D = spec.num_documents;

  Corpus corpus;
  corpus.label_names.reserve(K);
  for (std::uint32_t k = 0; k < K; ++k) {
    corpus.label_names.push_back("class" + std::to_string(k));
  }
  for (std::uint32_t l = 0; l < L; ++l) {
    std::vector<std::string> terms;
    terms.reserve(spec.vocab_sizes[l]);
    for (std::uint32_t t = 0; t < spec.vocab_sizes[l]; ++t) {
      terms.push_back("w" + std::to_string(t));
    }
    corpus.vocabularies.push_back(
        Vocabulary::from_terms(l, std::move(terms)));
  }

  GroundTruth truth;
  truth.num_topics = K;
  truth.phi_true.resize(L);
  for (std::uint32_t l = 0; l < L; ++l) {
    const std::size_t V = spec.vocab_sizes[l];
    truth.phi_true[l].resize(static_cast<std::size_t>(K) * V);
    for (std::uint32_t k = 0; k < K; ++k) {
      detail::dirichlet_sample(rng, spec.beta[l],
                               truth.phi_true[l].data() + k * V, V);
    }
  }

  truth.theta_true.assign(static_cast<std::size_t>(D) * K, 0.0);
  truth.masks.permitted.reserve(D);
  corpus.documents.reserve(D);
  std::vector<double> theta_restricted;
  for (std::uint32_t d = 0; d < D; ++d) {
    Document doc;
    doc.doc_id = "doc" + std::to_string(d);
    doc.labels = detail::sample_label_set(rng, K, spec.labels_per_doc_mean);
    truth.masks.permitted.push_back(doc.labels);

    const auto m = static_cast<std::uint32_t>(doc.labels.size());
    theta_restricted.resize(m);
    detail::dirichlet_sample(rng, spec.alpha, theta_restricted.data(), m);
    double* theta_row = truth.theta_true.data() + static_cast<std::size_t>(d) * K;
    for (std::uint32_t j = 0; j < m; ++j) {
      theta_row[doc.labels[j]] = theta_restricted[j];
    }

    doc.tokens.resize(L);
    for (std::uint32_t l = 0; l < L; ++l) {
      std::poisson_distribution<std::uint32_t> length(spec.doc_length_means[l]);
      std::uint32_t n = 0;
      while (n < 1) n = length(rng.engine());
      doc.tokens[l].resize(n);
      const std::size_t V = spec.vocab_sizes[l];
      for (std::uint32_t i = 0; i < n; ++i) {
        const std::uint32_t j =
            detail::categorical_sample(rng, theta_restricted.data(), m);
        const std::uint32_t k = doc.labels[j];
        doc.tokens[l][i] = detail::categorical_sample(
            rng, truth.phi_true[l].data() + static_cast<std::size_t>(k) * V,
            static_cast<std::uint32_t>(V));
      }
    }
    corpus.documents.push_back(std::move(doc));
  }
  return {std::move(corpus), std::move(truth)};
}

// Exact collapsed posterior over complete assignment vectors for tiny
// instances, by enumeration. The assignment vector lists every token in
// document / language / position order (the sweep order). Probabilities are
// proportional to the product of Dirichlet-multinomial factors over
// documents and over language-topic term counts.
inline std::map<std::vector<std::uint32_t>, double> exact_posterior(
    const Corpus& corpus, const ModelConfig& config,
    std::size_t max_enumeration = 1000000) {
  config.validate();
  corpus.validate();
  const std::uint32_t K = config.num_topics;
  const std::size_t L = corpus.num_languages();
  if (L != config.num_languages) {
    throw std::invalid_argument("corpus/config language mismatch");
  }
  const LabelMask mask = build_label_mask(corpus, config);

  // token slots in sweep order
  struct Slot {
    std::uint32_t doc;
    std::uint32_t language;
    std::uint32_t term;
  };
  std::vector<Slot> slots;
  double enumeration_size = 1.0;
  for (std::uint32_t d = 0; d < corpus.documents.size(); ++d) {
    for (std::uint32_t l = 0; l < L; ++l) {
      for (std::uint32_t t : corpus.documents[d].tokens[l]) {
        slots.push_back({d, l, t});
        enumeration_size *= static_cast<double>(mask[d].size());
      }
    }
  }
  if (slots.empty()) throw std::invalid_argument("corpus has no tokens");
  if (enumeration_size > static_cast<double>(max_enumeration)) {
    std::ostringstream msg;
    msg << "enumeration would need " << enumeration_size
        << " assignment vectors (limit " << max_enumeration << ")";
    throw std::runtime_error(msg.str());
  }

  const std::size_t D = corpus.documents.size();
  std::vector<std::int32_t> n_dk(D * K);
  std::vector<std::vector<std::int32_t>> n_kt(L);
  std::vector<std::vector<std::int32_t>> n_k(L);
  for (std::size_t l = 0; l < L; ++l) {
    n_kt[l].resize(static_cast<std::size_t>(K) * corpus.vocabularies[l].size());
    n_k[l].resize(K);
  }

  std::vector<std::size_t> choice(slots.size(), 0);
  std::vector<std::uint32_t> assignment(slots.size());
  std::map<std::vector<std::uint32_t>, double> table;  // assignment -> log score

  bool done = false;
  while (!done) {
    for (std::size_t i = 0; i < slots.size(); ++i) {
      assignment[i] = mask[slots[i].doc][choice[i]];
    }
    // tally counts for this assignment
    std::fill(n_dk.begin(), n_dk.end(), 0);
    for (std::size_t l = 0; l < L; ++l) {
      std::fill(n_kt[l].begin(), n_kt[l].end(), 0);
      std::fill(n_k[l].begin(), n_k[l].end(), 0);
    }
    for (std::size_t i = 0; i < slots.size(); ++i) {
      const auto& s = slots[i];
      const std::size_t V = corpus.vocabularies[s.language].size();
      ++n_dk[static_cast<std::size_t>(s.doc) * K + assignment[i]];
      ++n_kt[s.language][static_cast<std::size_t>(assignment[i]) * V + s.term];
      ++n_k[s.language][assignment[i]];
    }

    double log_score = 0.0;
    for (std::size_t d = 0; d < D; ++d) {
      for (std::uint32_t k : mask[d]) {
        log_score += std::lgamma(config.alpha + n_dk[d * K + k]) -
                     std::lgamma(config.alpha);
      }
    }
    for (std::size_t l = 0; l < L; ++l) {
      const std::size_t V = corpus.vocabularies[l].size();
      const double vbeta = static_cast<double>(V) * config.beta[l];
      for (std::uint32_t k = 0; k < K; ++k) {
        log_score += std::lgamma(vbeta) - std::lgamma(vbeta + n_k[l][k]);
        for (std::size_t t = 0; t < V; ++t) {
          const auto c = n_kt[l][static_cast<std::size_t>(k) * V + t];
          if (c > 0) {
            log_score +=
                std::lgamma(config.beta[l] + c) - std::lgamma(config.beta[l]);
          }
        }
      }
    }
    table.emplace(assignment, log_score);

    // mixed-radix odometer over the permitted sets, rightmost slot fastest
    done = true;
    for (std::size_t pos = slots.size(); pos-- > 0;) {
      if (++choice[pos] < mask[slots[pos].doc].size()) {
        done = false;
        break;
      }
      choice[pos] = 0;
    }
  }

  double max_log = -std::numeric_limits<double>::infinity();
  for (const auto& [z, s] : table) max_log = std::max(max_log, s);
  double total = 0.0;
  for (const auto& [z, s] : table) total += std::exp(s - max_log);
  for (auto& [z, p] : table) p = std::exp(p - max_log) / total;
  return table;
}

struct TopicMatch {
  std::vector<std::uint32_t> learned_to_true;  // indexed by learned topic
  std::vector<double> per_topic_l1;            // indexed by learned topic
  double mean_l1 = 0.0;
};

// Greedy matching: repeatedly pair the globally closest (learned, true) rows
// by L1 distance over the concatenated languages, without reuse.
inline TopicMatch match_topics(const std::vector<std::vector<double>>& learned,
                               const std::vector<std::vector<double>>& truth,
                               std::uint32_t K) {
  if (learned.size() != truth.size()) {
    throw std::invalid_argument("language count mismatch");
  }
  for (std::size_t l = 0; l < learned.size(); ++l) {
    if (learned[l].size() != truth[l].size()) {
      throw std::invalid_argument("vocabulary size mismatch in language " +
                                  std::to_string(l));
    }
  }
  std::vector<double> dist(static_cast<std::size_t>(K) * K, 0.0);
  for (std::size_t l = 0; l < learned.size(); ++l) {
    const std::size_t V = learned[l].size() / K;
    for (std::uint32_t i = 0; i < K; ++i) {
      for (std::uint32_t j = 0; j < K; ++j) {
        double s = 0.0;
        const double* a = learned[l].data() + static_cast<std::size_t>(i) * V;
        const double* b = truth[l].data() + static_cast<std::size_t>(j) * V;
        for (std::size_t t = 0; t < V; ++t) s += std::abs(a[t] - b[t]);
        dist[static_cast<std::size_t>(i) * K + j] += s;
      }
    }
  }

  TopicMatch match;
  match.learned_to_true.assign(K, 0);
  match.per_topic_l1.assign(K, 0.0);
  std::vector<bool> used_learned(K, false), used_true(K, false);
  for (std::uint32_t round = 0; round < K; ++round) {
    double best = std::numeric_limits<double>::infinity();
    std::uint32_t bi = 0, bj = 0;
    for (std::uint32_t i = 0; i < K; ++i) {
      if (used_learned[i]) continue;
      for (std::uint32_t j = 0; j < K; ++j) {
        if (used_true[j]) continue;
        const double d = dist[static_cast<std::size_t>(i) * K + j];
        if (d < best) {
          best = d;
          bi = i;
          bj = j;
        }
      }
    }
    used_learned[bi] = used_true[bj] = true;
    match.learned_to_true[bi] = bj;
    match.per_topic_l1[bi] = best;
    match.mean_l1 += best;
  }
  match.mean_l1 /= static_cast<double>(K);
  return match;
}

// Ground truth file: versioned text, full-precision doubles, so recovery
// experiments can be replayed byte-for-byte.
inline void save_ground_truth(const GroundTruth& truth,
                              const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  const std::uint32_t K = truth.num_topics;
  const std::size_t L = truth.phi_true.size();
  const std::size_t D = truth.masks.num_documents();
  char buf[32];
  auto fmt = [&buf](double x) {
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return std::string(buf);
  };
  out << "plltm-truth 1\n";
  out << "topics " << K << " languages " << L << " documents " << D << "\n";
  for (std::size_t l = 0; l < L; ++l) {
    const std::size_t V = truth.phi_true[l].size() / K;
    out << "phi " << l << ' ' << V << '\n';
    for (std::uint32_t k = 0; k < K; ++k) {
      for (std::size_t t = 0; t < V; ++t) {
        if (t) out << ' ';
        out << fmt(truth.phi_true[l][static_cast<std::size_t>(k) * V + t]);
      }
      out << '\n';
    }
  }
  out << "theta\n";
  for (std::size_t d = 0; d < D; ++d) {
    for (std::uint32_t k = 0; k < K; ++k) {
      if (k) out << ' ';
      out << fmt(truth.theta_true[d * K + k]);
    }
    out << '\n';
  }
  out << "masks\n";
  for (const auto& permitted : truth.masks.permitted) {
    for (std::size_t i = 0; i < permitted.size(); ++i) {
      if (i) out << ',';
      out << permitted[i];
    }
    out << '\n';
  }
  out.close();
  if (!out) throw std::runtime_error("write failed: " + path);
}

inline GroundTruth load_ground_truth(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string word;
  std::uint32_t version = 0;
  in >> word >> version;
  if (word != "plltm-truth" || version != 1) {
    throw std::runtime_error(path + ": not a ground-truth file");
  }
  GroundTruth truth;
  std::size_t L = 0, D = 0;
  in >> word >> truth.num_topics >> word >> L >> word >> D;
  if (!in) throw std::runtime_error(path + ": malformed header");
  truth.phi_true.resize(L);
  for (std::size_t l = 0; l < L; ++l) {
    std::size_t index = 0, V = 0;
    in >> word >> index >> V;
    if (!in || word != "phi" || index != l) {
      throw std::runtime_error(path + ": malformed phi section");
    }
    truth.phi_true[l].resize(static_cast<std::size_t>(truth.num_topics) * V);
    for (double& x : truth.phi_true[l]) in >> x;
  }
  in >> word;
  if (!in || word != "theta") {
    throw std::runtime_error(path + ": malformed theta section");
  }
  truth.theta_true.resize(static_cast<std::size_t>(D) * truth.num_topics);
  for (double& x : truth.theta_true) in >> x;
  in >> word;
  if (!in || word != "masks") {
    throw std::runtime_error(path + ": malformed masks section");
  }
  in >> std::ws;
  truth.masks.permitted.resize(D);
  std::string line;
  for (std::size_t d = 0; d < D; ++d) {
    if (!std::getline(in, line)) {
      throw std::runtime_error(path + ": truncated masks section");
    }
    std::stringstream ss(line);
    std::string id;
    while (std::getline(ss, id, ',')) {
      truth.masks.permitted[d].push_back(
          static_cast<std::uint32_t>(std::stoul(id)));
    }
  }
  return truth;
}

}  // namespace plltm
