// Command-line front end: corpus ingestion, training, held-out evaluation,
// topic export, intrusion-task export and synthetic corpus generation.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "plltm/plltm.hpp"

namespace {

constexpr int kExitData = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<double> parse_broadcast_list(const std::string& text,
                                         std::size_t n, const char* what) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      values.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw UsageError(std::string(what) + ": bad number \"" + item + "\"");
    }
  }
  if (values.size() == 1 && n > 1) values.assign(n, values[0]);
  if (values.size() != n) {
    throw UsageError(std::string(what) + ": expected 1 or " +
                     std::to_string(n) + " comma-separated values, got " +
                     std::to_string(values.size()));
  }
  return values;
}

std::vector<std::uint32_t> parse_broadcast_list_u32(const std::string& text,
                                                    std::size_t n,
                                                    const char* what) {
  std::vector<std::uint32_t> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      values.push_back(static_cast<std::uint32_t>(std::stoul(item)));
    } catch (const std::exception&) {
      throw UsageError(std::string(what) + ": bad number \"" + item + "\"");
    }
  }
  if (values.size() == 1 && n > 1) values.assign(n, values[0]);
  if (values.size() != n) {
    throw UsageError(std::string(what) + ": expected 1 or " +
                     std::to_string(n) + " comma-separated values, got " +
                     std::to_string(values.size()));
  }
  return values;
}

unsigned default_threads() {
  if (const char* env = std::getenv("PLLTM_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) return static_cast<unsigned>(v);
  }
  return 1;
}

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

// Manifest sidecar: enough to replay the run. Timing lines are informative
// only and are not covered by the bit-reproducibility contract.
class Manifest {
 public:
  Manifest(std::string command, int argc, char** argv) {
    start_ = std::chrono::steady_clock::now();
    add("tool", "plltm");
    add("version", plltm::kVersion);
    add("command", std::move(command));
    std::string argv_line;
    for (int i = 0; i < argc; ++i) {
      if (i) argv_line += ' ';
      argv_line += argv[i];
    }
    add("argv", argv_line);
  }

  void add(std::string key, std::string value) {
    entries_.emplace_back(std::move(key), std::move(value));
  }
  void add(std::string key, std::uint64_t value) {
    add(std::move(key), std::to_string(value));
  }
  void add(std::string key, double value) {
    add(std::move(key), format_double(value));
  }

  void write(const std::string& output_path) const {
    const auto elapsed = std::chrono::duration<double>(
                             std::chrono::steady_clock::now() - start_)
                             .count();
    std::ofstream out(output_path + ".manifest", std::ios::binary);
    if (!out) {
      throw std::runtime_error("cannot write manifest for " + output_path);
    }
    for (const auto& [key, value] : entries_) {
      out << key << " = " << value << '\n';
    }
    out << "elapsed_seconds = " << format_double(elapsed) << '\n';
  }

 private:
  std::chrono::steady_clock::time_point start_;
  std::vector<std::pair<std::string, std::string>> entries_;
};

bool has_vocab_sidecar(const std::string& path) {
  return std::filesystem::exists(path + ".vocab0");
}

// Loads a training corpus: pre-encoded when sidecar vocabularies exist,
// otherwise raw text run through frequency/stopword filtering.
plltm::Corpus load_training_corpus(const std::string& path,
                                   std::size_t min_count,
                                   const std::string& stopword_path) {
  if (has_vocab_sidecar(path)) {
    return plltm::load_corpus(path);
  }
  auto raw = plltm::load_raw_corpus(path);
  std::set<std::string> stopwords;
  if (!stopword_path.empty()) {
    stopwords = plltm::load_stopwords(stopword_path);
  }
  const std::size_t L = raw.front().tokens.size();
  std::vector<plltm::Vocabulary> vocabularies;
  for (std::size_t l = 0; l < L; ++l) {
    vocabularies.push_back(plltm::build_vocabulary(
        raw, static_cast<std::uint32_t>(l), min_count, stopwords));
  }
  std::set<std::string> label_set;
  for (const auto& d : raw) label_set.insert(d.labels.begin(), d.labels.end());
  std::vector<std::string> label_names(label_set.begin(), label_set.end());
  auto encoded = plltm::encode_corpus(raw, std::move(vocabularies),
                                      std::move(label_names));
  if (encoded.dropped_documents || encoded.dropped_tokens) {
    std::cerr << "encode: dropped " << encoded.dropped_tokens
              << " out-of-vocabulary tokens and " << encoded.dropped_documents
              << " empty documents\n";
  }
  if (encoded.corpus.documents.empty()) {
    throw std::runtime_error(path + ": no documents left after encoding");
  }
  return std::move(encoded.corpus);
}

void write_model_sidecars(const plltm::Corpus& corpus,
                          const std::string& model_path) {
  for (std::size_t l = 0; l < corpus.num_languages(); ++l) {
    std::ofstream out(model_path + ".vocab" + std::to_string(l),
                      std::ios::binary);
    if (!out) throw std::runtime_error("cannot write vocabulary sidecar");
    for (const auto& term : corpus.vocabularies[l].terms) out << term << '\n';
  }
  std::ofstream out(model_path + ".labels", std::ios::binary);
  if (!out) throw std::runtime_error("cannot write label sidecar");
  for (const auto& name : corpus.label_names) out << name << '\n';
}

plltm::TrainedModel load_model_with_terms(const std::string& path,
                                          std::vector<std::string>* label_names) {
  auto model = plltm::load_model(path);
  std::vector<plltm::Vocabulary> vocabularies;
  for (std::uint32_t l = 0; l < model.config.num_languages; ++l) {
    const std::string vp = path + ".vocab" + std::to_string(l);
    if (!std::filesystem::exists(vp)) {
      if (l == 0) return model;  // no sidecars at all; terms stay detached
      throw std::runtime_error("missing vocabulary sidecar " + vp);
    }
    vocabularies.push_back(
        plltm::Vocabulary::from_terms(l, plltm::load_term_list(vp)));
  }
  plltm::attach_vocabularies(model, std::move(vocabularies));
  if (label_names) {
    const std::string lp = path + ".labels";
    if (std::filesystem::exists(lp)) {
      auto lines = plltm::detail::read_lines(lp);
      while (!lines.empty() && lines.back().empty()) lines.pop_back();
      *label_names = std::move(lines);
    }
  }
  return model;
}

struct VariantSelection {
  bool use_labels = false;
  bool unilingual = false;
};

VariantSelection parse_variant(const std::string& name) {
  if (name == "lda") return {false, true};
  if (name == "llda") return {true, true};
  if (name == "pltm") return {false, false};
  if (name == "plltm") return {true, false};
  throw UsageError("unknown model variant \"" + name +
                   "\" (expected lda|llda|pltm|plltm)");
}

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
  std::string corpus_path;
  std::string out_path;
  std::string variant = "plltm";
  std::uint32_t k = 0;
  double alpha = 0.1;
  std::string beta = "0.01";
  std::uint32_t sweeps = 500;
  std::uint32_t burn_in = 0;
  std::uint64_t seed = 0;
  std::int64_t language = -1;
  std::size_t min_count = 5;
  std::string stopword_path;
  bool average_phi = false;
  std::string empty_labels = "all";
  unsigned chains = 1;
  bool quiet = false;
};

int run_train(const TrainArgs& args, Manifest& manifest) {
  const auto variant = parse_variant(args.variant);
  plltm::Corpus corpus = load_training_corpus(args.corpus_path,
                                              args.min_count,
                                              args.stopword_path);
  if (variant.unilingual) {
    if (corpus.num_languages() > 1) {
      if (args.language < 0) {
        throw UsageError("model " + args.variant +
                         " is unilingual; this corpus has " +
                         std::to_string(corpus.num_languages()) +
                         " languages, select one with --language");
      }
      corpus = plltm::select_language(
          corpus, static_cast<std::uint32_t>(args.language));
    }
  } else if (args.language >= 0) {
    corpus = plltm::select_language(corpus,
                                    static_cast<std::uint32_t>(args.language));
  }

  plltm::ModelConfig config;
  config.use_labels = variant.use_labels;
  config.num_languages = static_cast<std::uint32_t>(corpus.num_languages());
  config.num_topics = args.k;
  if (config.num_topics == 0) {
    if (!variant.use_labels || corpus.label_names.empty()) {
      throw UsageError("--k is required for this corpus/model combination");
    }
    config.num_topics = static_cast<std::uint32_t>(corpus.label_names.size());
  }
  config.alpha = args.alpha;
  config.beta =
      parse_broadcast_list(args.beta, corpus.num_languages(), "--beta");
  config.sweeps = args.sweeps;
  config.burn_in = args.burn_in;
  config.average_phi = args.average_phi;
  if (args.empty_labels == "all") {
    config.empty_label_policy = plltm::EmptyLabelPolicy::kAllTopics;
  } else if (args.empty_labels == "strict") {
    config.empty_label_policy = plltm::EmptyLabelPolicy::kStrict;
  } else {
    throw UsageError("--empty-labels must be all or strict");
  }

  const auto train_chain = [&](unsigned chain) {
    plltm::ModelConfig chain_config = config;
    chain_config.seed = args.seed + chain;
    chain_config.validate();
    plltm::SweepCallback progress;
    if (!args.quiet && chain == 0) {
      const std::uint32_t step = std::max(1u, chain_config.sweeps / 10);
      progress = [step, &chain_config](std::uint32_t sweep,
                                       const plltm::ModelState&) {
        if (sweep % step == 0 || sweep == chain_config.sweeps) {
          std::cerr << "sweep " << sweep << "/" << chain_config.sweeps << '\n';
        }
      };
    }
    auto model = plltm::train(corpus, chain_config, progress);
    const std::string path =
        args.chains == 1 ? args.out_path
                         : args.out_path + ".chain" + std::to_string(chain);
    plltm::save_model(model, path);
    write_model_sidecars(corpus, path);
  };

  if (args.chains == 1) {
    train_chain(0);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(args.chains);
    pool.reserve(args.chains);
    for (unsigned c = 0; c < args.chains; ++c) {
      pool.emplace_back([&, c] {
        try {
          train_chain(c);
        } catch (...) {
          errors[c] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (const auto& error : errors) {
      if (error) std::rethrow_exception(error);
    }
  }

  manifest.add("corpus", args.corpus_path);
  manifest.add("model_variant", args.variant);
  manifest.add("num_topics", static_cast<std::uint64_t>(config.num_topics));
  manifest.add("num_languages",
               static_cast<std::uint64_t>(config.num_languages));
  manifest.add("alpha", config.alpha);
  for (std::size_t l = 0; l < config.beta.size(); ++l) {
    manifest.add("beta" + std::to_string(l), config.beta[l]);
  }
  manifest.add("sweeps", static_cast<std::uint64_t>(config.sweeps));
  manifest.add("burn_in", static_cast<std::uint64_t>(config.burn_in));
  manifest.add("seed", args.seed);
  manifest.add("chains", static_cast<std::uint64_t>(args.chains));
  manifest.write(args.out_path);
  return 0;
}

// ---------------------------------------------------------------------------
// eval

struct EvalArgs {
  std::string model_path;
  std::string test_path;
  std::string out_path;
  double holdout_frac = 0.5;
  std::int64_t language = -1;  // corpus language for unilingual models
  std::uint32_t target_language = 0;
  std::uint32_t fold_sweeps = 200;
  std::uint32_t fold_burn_in = 100;
  std::uint64_t seed = 0;
  bool ignore_test_labels = false;
  unsigned threads = 0;  // 0 = use default
  bool curve = false;
  std::string train_path;
  std::uint32_t sweeps = 200;
  std::uint32_t eval_every = 10;
};

// Encodes a corpus file against the model's vocabulary; out-of-vocabulary
// tokens are dropped so the perplexity stays defined under the training
// vocabulary closure. `language` selects one corpus language for unilingual
// models trained with --language.
plltm::Corpus encode_against_model(const std::string& path,
                                   const plltm::TrainedModel& model,
                                   const std::vector<std::string>& label_names,
                                   std::int64_t language) {
  auto raw = plltm::load_raw_corpus(path);
  const std::size_t corpus_languages = raw.front().tokens.size();
  if (language >= 0) {
    if (static_cast<std::size_t>(language) >= corpus_languages) {
      throw UsageError("--language out of range for " + path);
    }
    for (auto& d : raw) {
      d.tokens = {std::move(d.tokens[static_cast<std::size_t>(language)])};
    }
  } else if (corpus_languages > model.config.num_languages) {
    throw UsageError(path + " has " + std::to_string(corpus_languages) +
                     " languages but the model expects " +
                     std::to_string(model.config.num_languages) +
                     "; select one with --language");
  }
  for (auto& d : raw) d.tokens.resize(model.config.num_languages);
  auto encoded = plltm::encode_corpus(raw, model.vocabularies, label_names);
  if (encoded.dropped_documents || encoded.dropped_tokens) {
    std::cerr << "encode " << path << ": dropped " << encoded.dropped_tokens
              << " out-of-vocabulary tokens and " << encoded.dropped_documents
              << " empty documents\n";
  }
  if (encoded.corpus.documents.empty()) {
    throw std::runtime_error(path + ": no usable documents");
  }
  return std::move(encoded.corpus);
}

int run_eval(const EvalArgs& args, Manifest& manifest) {
  if (!(args.holdout_frac > 0.0 && args.holdout_frac < 1.0)) {
    throw UsageError("--holdout-frac must lie strictly between 0 and 1");
  }
  std::vector<std::string> label_names;
  auto model = load_model_with_terms(args.model_path, &label_names);
  if (model.vocabularies.empty()) {
    throw std::runtime_error(args.model_path +
                             ": vocabulary sidecars are required for eval");
  }
  if (args.target_language >= model.config.num_languages) {
    throw UsageError("--target-language out of range for this model");
  }
  const unsigned threads = args.threads ? args.threads : default_threads();

  auto test =
      encode_against_model(args.test_path, model, label_names, args.language);

  std::vector<plltm::HeldOutSplit> splits;
  std::size_t skipped = 0;
  for (std::size_t i = 0; i < test.documents.size(); ++i) {
    const auto& doc = test.documents[i];
    if (doc.tokens_in(args.target_language) < 2) {
      ++skipped;
      continue;
    }
    plltm::Rng rng(plltm::mix_seed(args.seed, 0x73706c69, i));
    splits.push_back(plltm::split_held_out(doc, args.target_language,
                                           args.holdout_frac, rng));
  }
  if (skipped) {
    std::cerr << "skipped " << skipped
              << " documents with fewer than 2 target-language tokens\n";
  }
  if (splits.empty()) {
    throw std::runtime_error("no test documents usable for held-out split");
  }

  plltm::FoldInOptions fold;
  fold.sweeps = args.fold_sweeps;
  fold.burn_in = args.fold_burn_in;
  fold.respect_labels = !args.ignore_test_labels;

  plltm::PerplexityReport report;
  if (args.curve) {
    if (args.train_path.empty()) {
      throw UsageError("--curve requires --train");
    }
    auto train_corpus = encode_against_model(args.train_path, model,
                                             label_names, args.language);
    plltm::ModelConfig config = model.config;
    config.sweeps = args.sweeps;
    config.burn_in = 0;
    config.seed = args.seed;
    report = plltm::perplexity_curve(train_corpus, splits, config,
                                     args.eval_every, fold, threads);
  } else {
    const auto thetas =
        plltm::fold_in_all(model, splits, fold, args.seed, threads);
    report = plltm::perplexity(model, splits, thetas);
    report.per_iteration.emplace_back(model.config.sweeps,
                                      report.final_perplexity);
  }

  std::ofstream out(args.out_path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + args.out_path);
  out << "sweep,perplexity\n";
  for (const auto& [sweep, ppx] : report.per_iteration) {
    out << sweep << ',' << format_double(ppx) << '\n';
  }
  out.close();
  if (!out) throw std::runtime_error("write failed: " + args.out_path);

  std::cerr << "perplexity " << format_double(report.final_perplexity)
            << " over " << report.token_count << " held-out tokens in "
            << splits.size() << " documents\n";

  manifest.add("model", args.model_path);
  manifest.add("test", args.test_path);
  manifest.add("holdout_frac", args.holdout_frac);
  manifest.add("target_language",
               static_cast<std::uint64_t>(args.target_language));
  manifest.add("fold_sweeps", static_cast<std::uint64_t>(args.fold_sweeps));
  manifest.add("fold_burn_in",
               static_cast<std::uint64_t>(args.fold_burn_in));
  manifest.add("respect_test_labels", args.ignore_test_labels ? "no" : "yes");
  manifest.add("seed", args.seed);
  manifest.add("final_perplexity", report.final_perplexity);
  manifest.add("token_count", report.token_count);
  manifest.write(args.out_path);
  return 0;
}

// ---------------------------------------------------------------------------
// topics

struct TopicsArgs {
  std::string model_path;
  std::string out_path;
  std::size_t n = 5;
  std::int64_t language = -1;
};

int run_topics(const TopicsArgs& args, Manifest& manifest) {
  auto model = load_model_with_terms(args.model_path, nullptr);
  if (model.vocabularies.empty()) {
    throw std::runtime_error(args.model_path +
                             ": vocabulary sidecars are required for topics");
  }
  std::vector<std::uint32_t> languages;
  if (args.language >= 0) {
    if (args.language >= model.config.num_languages) {
      throw UsageError("--language out of range for this model");
    }
    languages.push_back(static_cast<std::uint32_t>(args.language));
  } else {
    for (std::uint32_t l = 0; l < model.config.num_languages; ++l) {
      languages.push_back(l);
    }
  }

  std::ofstream out(args.out_path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + args.out_path);
  out << "topic\tlanguage\trank\tterm\tprobability\n";
  char buf[40];
  for (std::uint32_t k = 0; k < model.config.num_topics; ++k) {
    for (std::uint32_t l : languages) {
      const std::size_t n = std::min<std::size_t>(args.n, model.vocab_sizes[l]);
      const auto terms = plltm::top_terms(model, k, l, n);
      for (std::size_t r = 0; r < terms.size(); ++r) {
        std::snprintf(buf, sizeof(buf), "%.6g", terms[r].second);
        out << k << '\t' << l << '\t' << (r + 1) << '\t' << terms[r].first
            << '\t' << buf << '\n';
      }
    }
  }
  out.close();
  if (!out) throw std::runtime_error("write failed: " + args.out_path);

  manifest.add("model", args.model_path);
  manifest.add("n", static_cast<std::uint64_t>(args.n));
  manifest.write(args.out_path);
  return 0;
}

// ---------------------------------------------------------------------------
// intrude

struct IntrudeArgs {
  std::string model_path;
  std::string out_path;
  std::string key_path;
  std::int64_t topic = -1;
  std::uint32_t language = 0;
  std::uint64_t seed = 0;
  std::size_t home_top = 10;
  std::size_t exclude_top = 30;
};

int run_intrude(const IntrudeArgs& args, Manifest& manifest) {
  auto model = load_model_with_terms(args.model_path, nullptr);
  if (model.vocabularies.empty()) {
    throw std::runtime_error(args.model_path +
                             ": vocabulary sidecars are required for intrude");
  }
  if (args.language >= model.config.num_languages) {
    throw UsageError("--language out of range for this model");
  }
  std::vector<std::uint32_t> topics;
  if (args.topic >= 0) {
    if (args.topic >= model.config.num_topics) {
      throw UsageError("--topic out of range for this model");
    }
    topics.push_back(static_cast<std::uint32_t>(args.topic));
  } else {
    for (std::uint32_t k = 0; k < model.config.num_topics; ++k) {
      topics.push_back(k);
    }
  }
  plltm::IntrusionConfig cfg;
  cfg.home_top = args.home_top;
  cfg.exclude_top = args.exclude_top;

  std::ofstream out(args.out_path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + args.out_path);
  std::ofstream key(args.key_path, std::ios::binary);
  if (!key) throw std::runtime_error("cannot write " + args.key_path);
  out << "topic\tlanguage\tterms\n";
  key << "topic\tlanguage\tintruder_position\tintruder_term\thome_topic\n";
  for (std::uint32_t k : topics) {
    // per-topic stream: the task for topic k does not depend on which other
    // topics are exported alongside it
    plltm::Rng rng(plltm::mix_seed(args.seed, 0x696e7472, k));
    const auto task =
        plltm::generate_intrusion_task(model, k, args.language, rng, cfg);
    out << task.topic_id << '\t' << task.language_id << '\t';
    for (std::size_t i = 0; i < task.terms.size(); ++i) {
      if (i) out << ' ';
      out << task.terms[i];
    }
    out << '\n';
    key << task.topic_id << '\t' << task.language_id << '\t'
        << task.intruder_position << '\t'
        << task.terms[task.intruder_position] << '\t'
        << task.intruder_home_topic << '\n';
  }
  out.close();
  key.close();
  if (!out || !key) throw std::runtime_error("write failed");

  manifest.add("model", args.model_path);
  manifest.add("language", static_cast<std::uint64_t>(args.language));
  manifest.add("seed", args.seed);
  manifest.write(args.out_path);
  return 0;
}

// ---------------------------------------------------------------------------
// synth

struct SynthArgs {
  std::string out_path;
  std::uint32_t k = 0;
  std::uint32_t langs = 1;
  std::uint32_t docs = 0;
  std::string vocab;
  std::string doc_length = "60";
  double labels_mean = 2.0;
  double alpha = 0.1;
  std::string beta = "0.01";
  std::uint64_t seed = 0;
};

int run_synth(const SynthArgs& args, Manifest& manifest) {
  plltm::SynthSpec spec;
  spec.num_topics = args.k;
  spec.num_languages = args.langs;
  spec.num_documents = args.docs;
  spec.vocab_sizes = parse_broadcast_list_u32(args.vocab, args.langs,
                                              "--vocab");
  spec.doc_length_means =
      parse_broadcast_list(args.doc_length, args.langs, "--doc-length");
  spec.labels_per_doc_mean = args.labels_mean;
  spec.alpha = args.alpha;
  spec.beta = parse_broadcast_list(args.beta, args.langs, "--beta");
  spec.validate();

  plltm::Rng rng(args.seed);
  auto [corpus, truth] = plltm::generate_corpus(spec, rng);
  plltm::save_corpus(corpus, args.out_path);
  plltm::save_ground_truth(truth, args.out_path + ".truth");

  std::cerr << "generated " << corpus.documents.size() << " documents, ";
  for (std::size_t l = 0; l < corpus.num_languages(); ++l) {
    if (l) std::cerr << " + ";
    std::cerr << corpus.total_tokens(l) << " tokens (language " << l << ")";
  }
  std::cerr << '\n';

  manifest.add("topics", static_cast<std::uint64_t>(args.k));
  manifest.add("languages", static_cast<std::uint64_t>(args.langs));
  manifest.add("documents", static_cast<std::uint64_t>(args.docs));
  manifest.add("labels_mean", args.labels_mean);
  manifest.add("seed", args.seed);
  manifest.write(args.out_path);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Polylingual labeled topic modeling toolkit"};
  app.require_subcommand(1);

  TrainArgs train_args;
  auto* train = app.add_subcommand("train", "Train a topic model");
  train->add_option("--corpus", train_args.corpus_path, "Corpus file")
      ->required()
      ->check(CLI::ExistingFile);
  train->add_option("--out", train_args.out_path, "Output model file")
      ->required();
  train->add_option("--model", train_args.variant,
                    "Variant: lda|llda|pltm|plltm");
  train->add_option("--k", train_args.k,
                    "Topic count (defaults to the label count for labeled "
                    "models)");
  train->add_option("--alpha", train_args.alpha, "Document-topic prior");
  train->add_option("--beta", train_args.beta,
                    "Topic-term prior, comma list or single value");
  train->add_option("--sweeps", train_args.sweeps, "Gibbs sweeps")
      ->check(CLI::PositiveNumber);
  train->add_option("--burn-in", train_args.burn_in, "Burn-in sweeps");
  train->add_option("--seed", train_args.seed, "Random seed");
  train->add_option("--language", train_args.language,
                    "Restrict the corpus to one language");
  train->add_option("--min-count", train_args.min_count,
                    "Minimum term frequency (raw corpora)");
  train->add_option("--stopwords", train_args.stopword_path,
                    "Stopword file, one per line (raw corpora)")
      ->check(CLI::ExistingFile);
  train->add_flag("--average", train_args.average_phi,
                  "Average phi over post-burn-in sweeps");
  train->add_option("--empty-labels", train_args.empty_labels,
                    "Policy for unlabeled documents: all|strict");
  train->add_option("--chains", train_args.chains,
                    "Independent chains (outputs suffixed per chain)")
      ->check(CLI::Range(1u, 64u));
  train->add_flag("--quiet", train_args.quiet, "Suppress progress output");

  EvalArgs eval_args;
  auto* eval = app.add_subcommand("eval", "Held-out perplexity");
  eval->add_option("--model", eval_args.model_path, "Trained model file")
      ->required()
      ->check(CLI::ExistingFile);
  eval->add_option("--test", eval_args.test_path, "Test corpus file")
      ->required()
      ->check(CLI::ExistingFile);
  eval->add_option("--out", eval_args.out_path, "Output CSV")->required();
  eval->add_option("--holdout-frac", eval_args.holdout_frac,
                   "Observed fraction of the target language");
  eval->add_option("--language", eval_args.language,
                   "Restrict the test corpus to one language (unilingual "
                   "models)");
  eval->add_option("--target-language", eval_args.target_language,
                   "Language whose held-out half is scored");
  eval->add_option("--fold-sweeps", eval_args.fold_sweeps, "Fold-in sweeps")
      ->check(CLI::PositiveNumber);
  eval->add_option("--fold-burn-in", eval_args.fold_burn_in,
                   "Fold-in burn-in");
  eval->add_option("--seed", eval_args.seed, "Random seed");
  eval->add_flag("--ignore-test-labels", eval_args.ignore_test_labels,
                 "Do not restrict fold-in to test document labels");
  eval->add_option("--threads", eval_args.threads,
                   "Fold-in threads (default: PLLTM_THREADS or 1)");
  eval->add_flag("--curve", eval_args.curve,
                 "Record a perplexity curve while training from scratch");
  eval->add_option("--train", eval_args.train_path,
                   "Training corpus for --curve")
      ->check(CLI::ExistingFile);
  eval->add_option("--sweeps", eval_args.sweeps, "Training sweeps for --curve")
      ->check(CLI::PositiveNumber);
  eval->add_option("--eval-every", eval_args.eval_every,
                   "Curve evaluation interval")
      ->check(CLI::PositiveNumber);

  TopicsArgs topics_args;
  auto* topics = app.add_subcommand("topics", "Export top terms per topic");
  topics->add_option("--model", topics_args.model_path, "Trained model file")
      ->required()
      ->check(CLI::ExistingFile);
  topics->add_option("--out", topics_args.out_path, "Output TSV")->required();
  topics->add_option("--n", topics_args.n, "Terms per topic");
  topics->add_option("--language", topics_args.language,
                     "Language (default: all)");

  IntrudeArgs intrude_args;
  auto* intrude =
      app.add_subcommand("intrude", "Export word-intrusion tasks");
  intrude->add_option("--model", intrude_args.model_path, "Trained model file")
      ->required()
      ->check(CLI::ExistingFile);
  intrude->add_option("--out", intrude_args.out_path, "Task file")->required();
  intrude->add_option("--key", intrude_args.key_path, "Answer key file")
      ->required();
  intrude->add_option("--topic", intrude_args.topic,
                      "Single topic (default: all)");
  intrude->add_option("--language", intrude_args.language, "Language");
  intrude->add_option("--seed", intrude_args.seed, "Random seed");
  intrude->add_option("--home-top", intrude_args.home_top,
                      "Intruder must be in its home topic's top n");
  intrude->add_option("--exclude-top", intrude_args.exclude_top,
                      "Intruder must be outside this topic's top n");

  SynthArgs synth_args;
  auto* synth =
      app.add_subcommand("synth", "Generate a synthetic corpus with truth");
  synth->add_option("--out", synth_args.out_path, "Output corpus path")
      ->required();
  synth->add_option("--k", synth_args.k, "Topic count")->required();
  synth->add_option("--langs", synth_args.langs, "Language count");
  synth->add_option("--docs", synth_args.docs, "Document count")->required();
  synth->add_option("--vocab", synth_args.vocab,
                    "Vocabulary sizes, comma list or single value")
      ->required();
  synth->add_option("--doc-length", synth_args.doc_length,
                    "Mean tokens per language, comma list or single value");
  synth->add_option("--labels-mean", synth_args.labels_mean,
                    "Mean labels per document");
  synth->add_option("--alpha", synth_args.alpha, "Document-topic prior");
  synth->add_option("--beta", synth_args.beta,
                    "Topic-term prior, comma list or single value");
  synth->add_option("--seed", synth_args.seed, "Random seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (train->parsed()) {
      Manifest manifest("train", argc, argv);
      return run_train(train_args, manifest);
    }
    if (eval->parsed()) {
      Manifest manifest("eval", argc, argv);
      return run_eval(eval_args, manifest);
    }
    if (topics->parsed()) {
      Manifest manifest("topics", argc, argv);
      return run_topics(topics_args, manifest);
    }
    if (intrude->parsed()) {
      Manifest manifest("intrude", argc, argv);
      return run_intrude(intrude_args, manifest);
    }
    if (synth->parsed()) {
      Manifest manifest("synth", argc, argv);
      return run_synth(synth_args, manifest);
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  return 0;
}
