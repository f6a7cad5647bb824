#pragma once

#include <cstdint>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "plltm/corpus.hpp"
#include "plltm/rng.hpp"

namespace plltm {

enum class EmptyLabelPolicy {
  kAllTopics,  // unlabeled documents may use every topic
  kStrict,     // unlabeled documents are an error
};

// One configuration covers all four model variants: use_labels=false with
// L=1 is LDA, use_labels=true with L=1 is Labeled LDA, use_labels=false
// with L>1 is the polylingual model, use_labels=true with L>1 the labeled
// polylingual model.
struct ModelConfig {
  std::uint32_t num_topics = 0;       // K
  std::uint32_t num_languages = 1;    // L
  double alpha = 0.1;                 // symmetric document-topic prior
  std::vector<double> beta;           // per-language topic-term prior
  bool use_labels = false;
  std::uint32_t sweeps = 500;
  std::uint32_t burn_in = 0;
  std::uint64_t seed = 0;
  bool average_phi = false;           // average phi over post-burn-in sweeps
  EmptyLabelPolicy empty_label_policy = EmptyLabelPolicy::kAllTopics;

  void validate() const {
    if (num_topics < 1) throw std::invalid_argument("num_topics must be >= 1");
    if (num_languages < 1) {
      throw std::invalid_argument("num_languages must be >= 1");
    }
    if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be > 0");
    if (beta.size() != num_languages) {
      throw std::invalid_argument("beta must have one entry per language");
    }
    for (double b : beta) {
      if (!(b > 0.0)) throw std::invalid_argument("beta must be > 0");
    }
    if (sweeps < 1) throw std::invalid_argument("sweeps must be >= 1");
    if (burn_in >= sweeps) {
      throw std::invalid_argument("burn_in must be < sweeps");
    }
  }
};

// Per-document permitted topic sets. With use_labels=false every document
// gets the full set and the restriction is vacuous.
struct LabelMask {
  std::vector<std::vector<std::uint32_t>> permitted;  // sorted topic ids

  const std::vector<std::uint32_t>& operator[](std::size_t d) const {
    return permitted[d];
  }
  std::size_t num_documents() const { return permitted.size(); }
};

inline LabelMask build_label_mask(const Corpus& corpus,
                                  const ModelConfig& config) {
  config.validate();
  const std::uint32_t K = config.num_topics;
  std::vector<std::uint32_t> full(K);
  std::iota(full.begin(), full.end(), 0u);
  LabelMask mask;
  mask.permitted.reserve(corpus.documents.size());
  for (const auto& doc : corpus.documents) {
    if (!config.use_labels) {
      mask.permitted.push_back(full);
      continue;
    }
    if (doc.labels.empty()) {
      if (config.empty_label_policy == EmptyLabelPolicy::kStrict) {
        throw std::runtime_error("document " + doc.doc_id +
                                 " has no labels (strict policy)");
      }
      mask.permitted.push_back(full);
      continue;
    }
    for (std::uint32_t lab : doc.labels) {
      if (lab >= K) {
        throw std::out_of_range("document " + doc.doc_id + ": label id " +
                                std::to_string(lab) + " >= num_topics " +
                                std::to_string(K));
      }
    }
    mask.permitted.push_back(doc.labels);  // already sorted and unique
  }
  return mask;
}

// Topic assignments plus the count aggregates the collapsed sampler needs.
// Counts are redundant with the assignments by construction; verify_counts
// re-tallies them from scratch.
struct ModelState {
  std::uint32_t num_topics = 0;
  // z[d][l][i]
  std::vector<std::vector<std::vector<std::uint32_t>>> assignments;
  std::vector<std::int32_t> doc_topic;               // D x K, row-major
  std::vector<std::vector<std::int32_t>> topic_term; // per language, K x V^l
  std::vector<std::vector<std::int64_t>> topic_total;  // per language, K
  std::vector<std::int64_t> doc_total;               // per document

  std::size_t num_documents() const { return assignments.size(); }
  std::size_t num_languages() const { return topic_term.size(); }
  std::size_t vocab_size(std::size_t l) const {
    return topic_term[l].size() / num_topics;
  }

  std::int32_t& doc_topic_at(std::size_t d, std::uint32_t k) {
    return doc_topic[d * num_topics + k];
  }
  std::int32_t doc_topic_at(std::size_t d, std::uint32_t k) const {
    return doc_topic[d * num_topics + k];
  }
};

inline ModelState init_state(const Corpus& corpus, const LabelMask& mask,
                             const ModelConfig& config, Rng& rng) {
  config.validate();
  if (mask.num_documents() != corpus.documents.size()) {
    throw std::invalid_argument("mask does not match corpus");
  }
  if (corpus.num_languages() != config.num_languages) {
    throw std::invalid_argument("corpus has " +
                                std::to_string(corpus.num_languages()) +
                                " languages, config expects " +
                                std::to_string(config.num_languages));
  }
  const std::uint32_t K = config.num_topics;
  const std::size_t D = corpus.documents.size();
  const std::size_t L = corpus.num_languages();

  ModelState state;
  state.num_topics = K;
  state.assignments.resize(D);
  state.doc_topic.assign(D * K, 0);
  state.doc_total.assign(D, 0);
  state.topic_term.resize(L);
  state.topic_total.resize(L);
  for (std::size_t l = 0; l < L; ++l) {
    state.topic_term[l].assign(
        static_cast<std::size_t>(K) * corpus.vocabularies[l].size(), 0);
    state.topic_total[l].assign(K, 0);
  }

  for (std::size_t d = 0; d < D; ++d) {
    const auto& permitted = mask[d];
    if (permitted.empty()) {
      throw std::invalid_argument("document " + corpus.documents[d].doc_id +
                                  " has an empty permitted set");
    }
    state.assignments[d].resize(L);
    for (std::size_t l = 0; l < L; ++l) {
      const auto& toks = corpus.documents[d].tokens[l];
      const std::size_t V = corpus.vocabularies[l].size();
      auto& z = state.assignments[d][l];
      z.resize(toks.size());
      for (std::size_t i = 0; i < toks.size(); ++i) {
        const std::uint32_t k = permitted[rng.next_index(
            static_cast<std::uint32_t>(permitted.size()))];
        z[i] = k;
        ++state.doc_topic_at(d, k);
        ++state.topic_term[l][static_cast<std::size_t>(k) * V + toks[i]];
        ++state.topic_total[l][k];
        ++state.doc_total[d];
      }
    }
  }
  return state;
}

namespace detail {

struct CountTally {
  std::vector<std::int32_t> doc_topic;
  std::vector<std::int64_t> doc_total;
  std::vector<std::vector<std::int32_t>> topic_term;
  std::vector<std::vector<std::int64_t>> topic_total;
};

inline CountTally tally_counts(const ModelState& state, const Corpus& corpus) {
  const std::uint32_t K = state.num_topics;
  const std::size_t D = state.num_documents();
  const std::size_t L = corpus.num_languages();
  CountTally tally;
  tally.doc_topic.assign(D * K, 0);
  tally.doc_total.assign(D, 0);
  tally.topic_term.resize(L);
  tally.topic_total.resize(L);
  for (std::size_t l = 0; l < L; ++l) {
    tally.topic_term[l].assign(
        static_cast<std::size_t>(K) * corpus.vocabularies[l].size(), 0);
    tally.topic_total[l].assign(K, 0);
  }
  for (std::size_t d = 0; d < D; ++d) {
    for (std::size_t l = 0; l < L; ++l) {
      const auto& toks = corpus.documents[d].tokens[l];
      const auto& z = state.assignments[d][l];
      if (z.size() != toks.size()) {
        throw std::logic_error("assignment length mismatch in document " +
                               corpus.documents[d].doc_id);
      }
      const std::size_t V = corpus.vocabularies[l].size();
      for (std::size_t i = 0; i < toks.size(); ++i) {
        ++tally.doc_topic[d * K + z[i]];
        ++tally.topic_term[l][static_cast<std::size_t>(z[i]) * V + toks[i]];
        ++tally.topic_total[l][z[i]];
        ++tally.doc_total[d];
      }
    }
  }
  return tally;
}

}  // namespace detail

// Recomputes every count from the assignments and throws on any mismatch.
inline void verify_counts(const ModelState& state, const Corpus& corpus) {
  auto tally = detail::tally_counts(state, corpus);
  if (tally.doc_topic != state.doc_topic ||
      tally.doc_total != state.doc_total ||
      tally.topic_term != state.topic_term ||
      tally.topic_total != state.topic_total) {
    throw std::logic_error("count aggregates drifted from assignments");
  }
}

// Rebuilds the count aggregates from the assignments (e.g. after loading a
// model file, which stores assignments but not counts).
inline void rebuild_counts(ModelState& state, const Corpus& corpus) {
  auto tally = detail::tally_counts(state, corpus);
  state.doc_topic = std::move(tally.doc_topic);
  state.doc_total = std::move(tally.doc_total);
  state.topic_term = std::move(tally.topic_term);
  state.topic_total = std::move(tally.topic_total);
}

// Full conditional over all K topics for the token (d, l, term t) currently
// assigned current_k; counts in `state` still include the token. Entries for
// non-permitted topics are exactly zero. With include_doc_denominator the
// k-independent factor 1/(n_d - 1 + K*alpha) is applied before normalizing;
// the result is identical either way.
inline std::vector<double> full_conditional(
    const ModelState& state, const LabelMask& mask, const ModelConfig& config,
    std::size_t d, std::size_t l, std::uint32_t t, std::uint32_t current_k,
    bool include_doc_denominator = false) {
  const std::uint32_t K = config.num_topics;
  const std::size_t V = state.vocab_size(l);
  const double beta_l = config.beta[l];
  const double vbeta_l = static_cast<double>(V) * beta_l;
  std::vector<double> probs(K, 0.0);
  double total = 0.0;
  for (std::uint32_t k : mask[d]) {
    const double excl = (k == current_k) ? 1.0 : 0.0;
    const double doc_part = state.doc_topic[d * K + k] - excl + config.alpha;
    const double term_part =
        state.topic_term[l][static_cast<std::size_t>(k) * V + t] - excl +
        beta_l;
    const double total_part = state.topic_total[l][k] - excl + vbeta_l;
    double w = doc_part * term_part / total_part;
    if (include_doc_denominator) {
      w /= static_cast<double>(state.doc_total[d]) - 1.0 +
           static_cast<double>(K) * config.alpha;
    }
    probs[k] = w;
    total += w;
  }
  if (!(total > 0.0)) {
    throw std::logic_error("full conditional has zero total weight");
  }
  for (std::uint32_t k : mask[d]) probs[k] /= total;
  return probs;
}

// One full Gibbs sweep: every token visited once in document, language,
// position order; counts are decremented, a new topic is drawn from the
// restricted conditional, and counts are re-incremented.
inline void gibbs_sweep(ModelState& state, const LabelMask& mask,
                        const ModelConfig& config, const Corpus& corpus,
                        Rng& rng) {
  const std::uint32_t K = config.num_topics;
  const std::size_t D = corpus.documents.size();
  const std::size_t L = corpus.num_languages();
  std::vector<double> cumulative(K);

  for (std::size_t d = 0; d < D; ++d) {
    const auto& permitted = mask[d];
    const auto m = static_cast<std::uint32_t>(permitted.size());
    std::int32_t* doc_row = state.doc_topic.data() + d * K;
    for (std::size_t l = 0; l < L; ++l) {
      const auto& toks = corpus.documents[d].tokens[l];
      auto& z = state.assignments[d][l];
      const std::size_t V = corpus.vocabularies[l].size();
      const double beta_l = config.beta[l];
      const double vbeta_l = static_cast<double>(V) * beta_l;
      std::int32_t* term_counts = state.topic_term[l].data();
      std::int64_t* totals = state.topic_total[l].data();

      for (std::size_t i = 0; i < toks.size(); ++i) {
        const std::uint32_t t = toks[i];
        const std::uint32_t old_k = z[i];
        --doc_row[old_k];
        --term_counts[static_cast<std::size_t>(old_k) * V + t];
        --totals[old_k];

        double running = 0.0;
        for (std::uint32_t j = 0; j < m; ++j) {
          const std::uint32_t k = permitted[j];
          running += (doc_row[k] + config.alpha) *
                     (term_counts[static_cast<std::size_t>(k) * V + t] +
                      beta_l) /
                     (totals[k] + vbeta_l);
          cumulative[j] = running;
        }
        const double u = rng.next_double() * running;
        std::uint32_t j = 0;
        while (j + 1 < m && u >= cumulative[j]) ++j;
        const std::uint32_t new_k = permitted[j];

        z[i] = new_k;
        ++doc_row[new_k];
        ++term_counts[static_cast<std::size_t>(new_k) * V + t];
        ++totals[new_k];
      }
    }
  }
}

// Posterior-mean topic-term distributions from the current counts:
//   phi_kt = (n_kt + beta_l) / (n_k + V_l * beta_l)
inline std::vector<std::vector<double>> posterior_mean_phi(
    const ModelState& state, const ModelConfig& config) {
  const std::uint32_t K = config.num_topics;
  std::vector<std::vector<double>> phi(state.num_languages());
  for (std::size_t l = 0; l < state.num_languages(); ++l) {
    const std::size_t V = state.vocab_size(l);
    const double beta_l = config.beta[l];
    const double vbeta_l = static_cast<double>(V) * beta_l;
    phi[l].resize(state.topic_term[l].size());
    for (std::uint32_t k = 0; k < K; ++k) {
      const double denom = state.topic_total[l][k] + vbeta_l;
      for (std::size_t t = 0; t < V; ++t) {
        phi[l][static_cast<std::size_t>(k) * V + t] =
            (state.topic_term[l][static_cast<std::size_t>(k) * V + t] +
             beta_l) /
            denom;
      }
    }
  }
  return phi;
}

// Posterior-mean document-topic mixture under the restricted prior:
//   theta_dk = (n_dk + alpha) / (n_d + alpha * |permitted|)  for permitted k
inline std::vector<double> estimate_theta(const ModelState& state,
                                          const LabelMask& mask,
                                          const ModelConfig& config,
                                          std::size_t d) {
  const std::uint32_t K = config.num_topics;
  std::vector<double> theta(K, 0.0);
  const auto& permitted = mask[d];
  const double denom =
      static_cast<double>(state.doc_total[d]) +
      config.alpha * static_cast<double>(permitted.size());
  for (std::uint32_t k : permitted) {
    theta[k] = (state.doc_topic_at(d, k) + config.alpha) / denom;
  }
  return theta;
}

struct TrainedModel {
  std::vector<std::vector<double>> phi;  // per language, K x V^l row-major
  ModelConfig config;
  LabelMask label_mask;
  ModelState final_state;
  std::vector<std::uint32_t> vocab_sizes;
  // Term strings; empty after loading a model file until vocabularies are
  // re-attached from corpus sidecars.
  std::vector<Vocabulary> vocabularies;

  std::size_t vocab_size(std::size_t l) const { return vocab_sizes[l]; }

  const double* phi_row(std::size_t l, std::uint32_t k) const {
    return phi[l].data() + static_cast<std::size_t>(k) * vocab_sizes[l];
  }
};

using SweepCallback =
    std::function<void(std::uint32_t sweep, const ModelState& state)>;

inline TrainedModel train(const Corpus& corpus, const ModelConfig& config,
                          const SweepCallback& on_sweep = {}) {
  config.validate();
  corpus.validate();
  LabelMask mask = build_label_mask(corpus, config);
  Rng rng(config.seed);
  ModelState state = init_state(corpus, mask, config, rng);

  std::vector<std::vector<double>> phi_accum;
  std::size_t accum_count = 0;
  for (std::uint32_t sweep = 1; sweep <= config.sweeps; ++sweep) {
    gibbs_sweep(state, mask, config, corpus, rng);
    if (config.average_phi && sweep > config.burn_in) {
      auto phi = posterior_mean_phi(state, config);
      if (phi_accum.empty()) {
        phi_accum = std::move(phi);
      } else {
        for (std::size_t l = 0; l < phi.size(); ++l) {
          for (std::size_t i = 0; i < phi[l].size(); ++i) {
            phi_accum[l][i] += phi[l][i];
          }
        }
      }
      ++accum_count;
    }
    if (on_sweep) on_sweep(sweep, state);
  }

  TrainedModel model;
  if (config.average_phi) {
    for (auto& mat : phi_accum) {
      for (double& x : mat) x /= static_cast<double>(accum_count);
    }
    model.phi = std::move(phi_accum);
  } else {
    model.phi = posterior_mean_phi(state, config);
  }
  model.config = config;
  model.label_mask = std::move(mask);
  model.final_state = std::move(state);
  model.vocabularies = corpus.vocabularies;
  model.vocab_sizes.reserve(corpus.num_languages());
  for (const auto& v : corpus.vocabularies) {
    model.vocab_sizes.push_back(static_cast<std::uint32_t>(v.size()));
  }
  return model;
}

}  // namespace plltm
