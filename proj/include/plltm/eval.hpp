#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <numeric>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "plltm/corpus.hpp"
#include "plltm/model.hpp"
#include "plltm/rng.hpp"

namespace plltm {

struct PerplexityReport {
  std::vector<std::pair<std::uint32_t, double>> per_iteration;  // (sweep, ppx)
  double final_perplexity = 0.0;
  std::uint64_t token_count = 0;
};

struct FoldInOptions {
  std::uint32_t sweeps = 200;
  std::uint32_t burn_in = 100;
  // Restrict the held-out document's topics to its labels (only meaningful
  // when the model was trained with labels).
  bool respect_labels = true;
};

namespace detail {

inline std::vector<std::uint32_t> fold_in_permitted(const TrainedModel& model,
                                                    const Document& observed,
                                                    bool respect_labels) {
  const std::uint32_t K = model.config.num_topics;
  if (model.config.use_labels && respect_labels && !observed.labels.empty()) {
    for (std::uint32_t lab : observed.labels) {
      if (lab >= K) {
        throw std::out_of_range("document " + observed.doc_id + ": label id " +
                                std::to_string(lab) + " >= num_topics");
      }
    }
    return observed.labels;
  }
  std::vector<std::uint32_t> full(K);
  std::iota(full.begin(), full.end(), 0u);
  return full;
}

}  // namespace detail

// Gibbs over one held-out document with phi held fixed:
//   p(z_i = k) ~ (n_k + alpha) * phi_{k, w_i}   restricted to permitted k.
// Returns theta averaged over the post-burn-in sweeps.
inline std::vector<double> fold_in(const TrainedModel& model,
                                   const Document& observed,
                                   const FoldInOptions& options, Rng& rng) {
  const std::uint32_t K = model.config.num_topics;
  const std::size_t L = model.config.num_languages;
  if (observed.tokens.size() != L) {
    throw std::invalid_argument("document " + observed.doc_id + " has " +
                                std::to_string(observed.tokens.size()) +
                                " language blocks, model expects " +
                                std::to_string(L));
  }
  if (observed.total_tokens() == 0) {
    throw std::runtime_error("document " + observed.doc_id +
                             " is empty in every language");
  }
  if (options.burn_in >= options.sweeps) {
    throw std::invalid_argument("fold-in burn_in must be < sweeps");
  }
  const double alpha = model.config.alpha;
  const auto permitted =
      detail::fold_in_permitted(model, observed, options.respect_labels);
  const auto m = static_cast<std::uint32_t>(permitted.size());

  std::vector<std::int32_t> counts(K, 0);
  std::vector<std::vector<std::uint32_t>> z(L);
  std::int64_t total = 0;
  for (std::size_t l = 0; l < L; ++l) {
    z[l].resize(observed.tokens[l].size());
    for (auto& zi : z[l]) {
      zi = permitted[rng.next_index(m)];
      ++counts[zi];
      ++total;
    }
  }

  std::vector<double> cumulative(m);
  std::vector<double> theta_sum(K, 0.0);
  std::size_t samples = 0;
  for (std::uint32_t sweep = 1; sweep <= options.sweeps; ++sweep) {
    for (std::size_t l = 0; l < L; ++l) {
      const auto& toks = observed.tokens[l];
      const double* phi_l = model.phi[l].data();
      const std::size_t V = model.vocab_sizes[l];
      for (std::size_t i = 0; i < toks.size(); ++i) {
        const std::uint32_t t = toks[i];
        if (t >= V) {
          throw std::out_of_range("document " + observed.doc_id +
                                  ": token id out of vocabulary");
        }
        --counts[z[l][i]];
        double running = 0.0;
        for (std::uint32_t j = 0; j < m; ++j) {
          const std::uint32_t k = permitted[j];
          running +=
              (counts[k] + alpha) * phi_l[static_cast<std::size_t>(k) * V + t];
          cumulative[j] = running;
        }
        if (!(running > 0.0)) {
          throw std::logic_error(
              "document " + observed.doc_id +
              ": observed token has zero probability under every permitted "
              "topic");
        }
        const double u = rng.next_double() * running;
        std::uint32_t j = 0;
        while (j + 1 < m && u >= cumulative[j]) ++j;
        z[l][i] = permitted[j];
        ++counts[z[l][i]];
      }
    }
    if (sweep > options.burn_in) {
      const double denom = static_cast<double>(total) +
                           alpha * static_cast<double>(permitted.size());
      for (std::uint32_t k : permitted) {
        theta_sum[k] += (counts[k] + alpha) / denom;
      }
      ++samples;
    }
  }
  for (double& x : theta_sum) x /= static_cast<double>(samples);
  return theta_sum;
}

// Folds in every split's observed part; per-document seeds are derived from
// base_seed, so the result is independent of the thread count.
inline std::vector<std::vector<double>> fold_in_all(
    const TrainedModel& model, const std::vector<HeldOutSplit>& splits,
    const FoldInOptions& options, std::uint64_t base_seed,
    unsigned threads = 1) {
  std::vector<std::vector<double>> thetas(splits.size());
  auto worker = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      Rng rng(mix_seed(base_seed, i + 1));
      thetas[i] = fold_in(model, splits[i].observed_part, options, rng);
    }
  };
  if (threads <= 1 || splits.size() < 2) {
    worker(0, splits.size());
    return thetas;
  }
  const std::size_t n = splits.size();
  const unsigned t = std::min<unsigned>(threads, static_cast<unsigned>(n));
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(t);
  pool.reserve(t);
  for (unsigned w = 0; w < t; ++w) {
    const std::size_t begin = n * w / t;
    const std::size_t end = n * (w + 1) / t;
    pool.emplace_back([&, w, begin, end] {
      try {
        worker(begin, end);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (const auto& error : errors) {
    if (error) std::rethrow_exception(error);
  }
  return thetas;
}

// Held-out perplexity of the target parts:
//   exp( - sum_d sum_{t in x_d2} log( sum_k theta_dk * phi_{k,t} ) / N )
inline PerplexityReport perplexity(
    const TrainedModel& model, const std::vector<HeldOutSplit>& splits,
    const std::vector<std::vector<double>>& thetas) {
  if (splits.size() != thetas.size()) {
    throw std::invalid_argument("one theta vector per split required");
  }
  const std::uint32_t K = model.config.num_topics;
  double log_sum = 0.0;
  std::uint64_t tokens = 0;
  for (std::size_t i = 0; i < splits.size(); ++i) {
    const std::uint32_t l = splits[i].target_language;
    if (l >= model.config.num_languages) {
      throw std::out_of_range("target language out of range");
    }
    const double* phi_l = model.phi[l].data();
    const std::size_t V = model.vocab_sizes[l];
    const auto& theta = thetas[i];
    for (std::uint32_t t : splits[i].target_part.tokens[l]) {
      if (t >= V) {
        throw std::out_of_range("target token id out of vocabulary");
      }
      double p = 0.0;
      for (std::uint32_t k = 0; k < K; ++k) {
        p += theta[k] * phi_l[static_cast<std::size_t>(k) * V + t];
      }
      if (!(p > 0.0)) {
        throw std::logic_error("zero probability for a held-out token");
      }
      log_sum += std::log(p);
      ++tokens;
    }
  }
  if (tokens == 0) {
    throw std::runtime_error("held-out target parts contain no tokens");
  }
  PerplexityReport report;
  report.token_count = tokens;
  report.final_perplexity =
      std::exp(-log_sum / static_cast<double>(tokens));
  return report;
}

// Trains on `train_corpus` and, every eval_every sweeps, snapshots phi,
// folds in all splits and records the held-out perplexity.
inline PerplexityReport perplexity_curve(
    const Corpus& train_corpus, const std::vector<HeldOutSplit>& splits,
    const ModelConfig& config, std::uint32_t eval_every,
    const FoldInOptions& fold_options = {}, unsigned threads = 1) {
  if (eval_every < 1) throw std::invalid_argument("eval_every must be >= 1");
  config.validate();
  train_corpus.validate();

  PerplexityReport report;
  LabelMask mask = build_label_mask(train_corpus, config);
  Rng rng(config.seed);
  ModelState state = init_state(train_corpus, mask, config, rng);
  TrainedModel snapshot;
  snapshot.config = config;
  snapshot.vocab_sizes.clear();
  for (const auto& v : train_corpus.vocabularies) {
    snapshot.vocab_sizes.push_back(static_cast<std::uint32_t>(v.size()));
  }
  for (std::uint32_t sweep = 1; sweep <= config.sweeps; ++sweep) {
    gibbs_sweep(state, mask, config, train_corpus, rng);
    if (sweep % eval_every == 0 || sweep == config.sweeps) {
      snapshot.phi = posterior_mean_phi(state, config);
      const auto thetas =
          fold_in_all(snapshot, splits, fold_options,
                      mix_seed(config.seed, 0x666f6c64, sweep), threads);
      auto point = perplexity(snapshot, splits, thetas);
      report.per_iteration.emplace_back(sweep, point.final_perplexity);
      report.final_perplexity = point.final_perplexity;
      report.token_count = point.token_count;
    }
  }
  return report;
}

// The n most probable terms of a topic in one language, ties broken by
// term id ascending.
inline std::vector<std::uint32_t> top_term_ids(const TrainedModel& model,
                                               std::uint32_t topic,
                                               std::uint32_t language,
                                               std::size_t n) {
  if (topic >= model.config.num_topics) {
    throw std::out_of_range("topic out of range");
  }
  if (language >= model.config.num_languages) {
    throw std::out_of_range("language out of range");
  }
  const std::size_t V = model.vocab_sizes[language];
  if (n > V) throw std::invalid_argument("n exceeds vocabulary size");
  const double* row = model.phi_row(language, topic);
  std::vector<std::uint32_t> ids(V);
  std::iota(ids.begin(), ids.end(), 0u);
  std::partial_sort(ids.begin(), ids.begin() + n, ids.end(),
                    [row](std::uint32_t a, std::uint32_t b) {
                      if (row[a] != row[b]) return row[a] > row[b];
                      return a < b;
                    });
  ids.resize(n);
  return ids;
}

inline std::vector<std::pair<std::string, double>> top_terms(
    const TrainedModel& model, std::uint32_t topic, std::uint32_t language,
    std::size_t n) {
  if (model.vocabularies.empty()) {
    throw std::runtime_error(
        "model has no term strings attached; load the corpus sidecar "
        "vocabularies first");
  }
  const auto ids = top_term_ids(model, topic, language, n);
  const double* row = model.phi_row(language, topic);
  std::vector<std::pair<std::string, double>> result;
  result.reserve(ids.size());
  for (std::uint32_t t : ids) {
    result.emplace_back(model.vocabularies[language].terms[t], row[t]);
  }
  return result;
}

struct IntrusionTask {
  std::uint32_t topic_id = 0;
  std::uint32_t language_id = 0;
  std::vector<std::string> terms;       // 6 terms, shuffled
  std::uint32_t intruder_position = 0;  // index into terms
  std::uint32_t intruder_home_topic = 0;
};

struct IntrusionConfig {
  std::size_t shown_terms = 5;   // top terms of the probed topic
  std::size_t home_top = 10;     // intruder must rank this high at home
  std::size_t exclude_top = 30;  // intruder must not rank this high here
};

// Shown terms are the topic's top-5; the intruder is drawn uniformly from
// terms that are top-10 in some other topic but outside this topic's top-30.
inline IntrusionTask generate_intrusion_task(
    const TrainedModel& model, std::uint32_t topic, std::uint32_t language,
    Rng& rng, const IntrusionConfig& cfg = {}) {
  const std::uint32_t K = model.config.num_topics;
  if (K < 2) throw std::invalid_argument("need at least two topics");
  const std::size_t V = model.vocab_sizes.at(language);
  if (V < cfg.exclude_top + 1) {
    throw std::invalid_argument("vocabulary too small for intruder selection");
  }
  if (model.vocabularies.empty()) {
    throw std::runtime_error(
        "model has no term strings attached; load the corpus sidecar "
        "vocabularies first");
  }

  const auto shown = top_term_ids(model, topic, language, cfg.shown_terms);
  const auto excluded = top_term_ids(model, topic, language, cfg.exclude_top);
  std::vector<bool> is_excluded(V, false);
  for (std::uint32_t t : excluded) is_excluded[t] = true;

  // candidate term -> home topic (the other topic where it scores highest)
  std::vector<std::int64_t> home(V, -1);
  for (std::uint32_t k = 0; k < K; ++k) {
    if (k == topic) continue;
    const double* row = model.phi_row(language, k);
    for (std::uint32_t t : top_term_ids(model, k, language, cfg.home_top)) {
      if (is_excluded[t]) continue;
      if (home[t] < 0 ||
          row[t] > model.phi_row(language,
                                 static_cast<std::uint32_t>(home[t]))[t]) {
        home[t] = k;
      }
    }
  }
  std::vector<std::uint32_t> candidates;
  for (std::uint32_t t = 0; t < V; ++t) {
    if (home[t] >= 0) candidates.push_back(t);
  }
  if (candidates.empty()) {
    throw std::runtime_error(
        "no intruder candidates for topic " + std::to_string(topic) +
        ": other topics' top terms all overlap its top-" +
        std::to_string(cfg.exclude_top) +
        " list; relax the intrusion thresholds");
  }
  const std::uint32_t intruder =
      candidates[rng.next_index(static_cast<std::uint32_t>(candidates.size()))];

  std::vector<std::uint32_t> term_ids(shown.begin(), shown.end());
  term_ids.push_back(intruder);
  // Fisher-Yates shuffle of the six shown positions.
  for (std::size_t i = term_ids.size() - 1; i > 0; --i) {
    const auto j = rng.next_index(static_cast<std::uint32_t>(i + 1));
    std::swap(term_ids[i], term_ids[j]);
  }

  IntrusionTask task;
  task.topic_id = topic;
  task.language_id = language;
  task.intruder_home_topic = static_cast<std::uint32_t>(home[intruder]);
  for (std::size_t i = 0; i < term_ids.size(); ++i) {
    task.terms.push_back(model.vocabularies[language].terms[term_ids[i]]);
    if (term_ids[i] == intruder) {
      task.intruder_position = static_cast<std::uint32_t>(i);
    }
  }
  return task;
}

}  // namespace plltm
