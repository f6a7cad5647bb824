// Acceptance suite: one pass/fail line per criterion, nonzero exit when any
// criterion fails. Heavier settings (sample counts, corpus sizes, seeds) are
// fixed here so reruns are reproducible.

#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "plltm/plltm.hpp"

namespace fs = std::filesystem;
using namespace plltm;

namespace {

int g_failures = 0;

void report(int criterion, const char* name, bool pass,
            const std::string& detail) {
  std::printf("[%s] criterion %d: %s — %s\n", pass ? "PASS" : "FAIL",
              criterion, name, detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                       start)
      .count();
}

// ---------------------------------------------------------------------------
// shared fixtures

// The tiny two-document instance: tokens [0,0,1] and [1,1], L=1, V=2.
Corpus tiny_instance(const std::vector<std::vector<std::uint32_t>>& labels) {
  Corpus corpus;
  corpus.vocabularies.push_back(Vocabulary::from_terms(0, {"w0", "w1"}));
  corpus.label_names = {"c0", "c1"};
  Document d0;
  d0.doc_id = "d0";
  d0.tokens = {{0, 0, 1}};
  Document d1;
  d1.doc_id = "d1";
  d1.tokens = {{1, 1}};
  if (!labels.empty()) {
    d0.labels = labels[0];
    d1.labels = labels[1];
  }
  corpus.documents = {d0, d1};
  return corpus;
}

ModelConfig tiny_config(bool use_labels) {
  ModelConfig config;
  config.num_topics = 2;
  config.num_languages = 1;
  config.alpha = 0.1;
  config.beta = {0.01};
  config.use_labels = use_labels;
  config.sweeps = 1;
  config.seed = 12345;
  return config;
}

// Empirical distribution of retained post-burn-in Gibbs samples vs the
// enumerated posterior; returns (tv, forbidden_sample_count).
std::pair<double, std::uint64_t> gibbs_vs_oracle(
    const Corpus& corpus, const ModelConfig& config,
    const std::map<std::vector<std::uint32_t>, double>& oracle,
    std::uint64_t burn_in_sweeps, std::uint64_t retained,
    std::uint64_t thinning) {
  LabelMask mask = build_label_mask(corpus, config);
  Rng rng(config.seed);
  ModelState state = init_state(corpus, mask, config, rng);
  for (std::uint64_t s = 0; s < burn_in_sweeps; ++s) {
    gibbs_sweep(state, mask, config, corpus, rng);
  }
  std::map<std::vector<std::uint32_t>, std::uint64_t> counts;
  std::vector<std::uint32_t> key;
  std::uint64_t forbidden = 0;
  for (std::uint64_t s = 0; s < retained; ++s) {
    for (std::uint64_t t = 0; t < thinning; ++t) {
      gibbs_sweep(state, mask, config, corpus, rng);
    }
    key.clear();
    for (const auto& doc : state.assignments) {
      for (const auto& lang : doc) {
        key.insert(key.end(), lang.begin(), lang.end());
      }
    }
    if (!oracle.count(key)) ++forbidden;
    ++counts[key];
  }
  double tv = 0.0;
  for (const auto& [z, p] : oracle) {
    const auto it = counts.find(z);
    const double freq =
        it == counts.end()
            ? 0.0
            : static_cast<double>(it->second) / static_cast<double>(retained);
    tv += std::abs(freq - p);
  }
  for (const auto& [z, c] : counts) {
    if (!oracle.count(z)) {
      tv += static_cast<double>(c) / static_cast<double>(retained);
    }
  }
  return {0.5 * tv, forbidden};
}

void criterion_1() {
  const auto start = std::chrono::steady_clock::now();
  auto corpus = tiny_instance({});
  auto config = tiny_config(false);
  auto oracle = exact_posterior(corpus, config);
  auto [tv, forbidden] =
      gibbs_vs_oracle(corpus, config, oracle, 1000, 1000000, 5);
  const double elapsed = seconds_since(start);
  std::ostringstream detail;
  detail << "TV = " << tv << " over " << oracle.size()
         << " assignment vectors, 1000000 retained samples, " << elapsed
         << " s";
  report(1, "sampler matches the exact posterior", tv < 0.02 && elapsed < 60.0,
         detail.str());
}

void criterion_2() {
  const auto start = std::chrono::steady_clock::now();
  auto corpus = tiny_instance({{1}, {0, 1}});
  auto config = tiny_config(true);
  config.seed = 54321;
  auto oracle = exact_posterior(corpus, config);
  auto [tv, forbidden] =
      gibbs_vs_oracle(corpus, config, oracle, 1000, 1000000, 5);
  const double elapsed = seconds_since(start);
  std::ostringstream detail;
  detail << "TV = " << tv << " over " << oracle.size()
         << " admissible vectors, " << forbidden
         << " forbidden samples observed, " << elapsed << " s";
  report(2, "label-restricted sampler matches the restricted posterior",
         tv < 0.02 && forbidden == 0 && elapsed < 60.0, detail.str());
}

// ---------------------------------------------------------------------------
// criterion 3: variant reduction equivalence

std::uint64_t hash_state(const ModelState& state) {
  std::uint64_t h = 1469598103934665603ull;
  for (const auto& doc : state.assignments) {
    for (const auto& lang : doc) {
      for (std::uint32_t z : lang) {
        h ^= z;
        h *= 1099511628211ull;
      }
    }
  }
  return h;
}

struct Trajectory {
  std::vector<std::uint64_t> per_sweep_hashes;
  std::vector<std::vector<std::vector<std::uint32_t>>> final_assignments;

  bool operator==(const Trajectory&) const = default;
};

Trajectory trajectory(const Corpus& corpus, const ModelConfig& config) {
  Trajectory t;
  auto model = train(corpus, config, [&](std::uint32_t, const ModelState& s) {
    t.per_sweep_hashes.push_back(hash_state(s));
  });
  t.final_assignments = std::move(model.final_state.assignments);
  return t;
}

void criterion_3() {
  SynthSpec spec;
  spec.num_topics = 8;
  spec.num_languages = 2;
  spec.num_documents = 100;
  spec.vocab_sizes = {60, 60};
  spec.doc_length_means = {20.0, 20.0};
  spec.labels_per_doc_mean = 2.0;
  spec.alpha = 0.1;
  spec.beta = {0.01, 0.01};
  Rng rng(20240);
  auto [corpus, truth] = generate_corpus(spec, rng);

  // full masks: every document explicitly labeled with all topics
  Corpus full_label_corpus = corpus;
  std::vector<std::uint32_t> all(spec.num_topics);
  std::iota(all.begin(), all.end(), 0u);
  for (auto& d : full_label_corpus.documents) d.labels = all;

  ModelConfig plltm_config;
  plltm_config.num_topics = 8;
  plltm_config.num_languages = 2;
  plltm_config.alpha = 0.1;
  plltm_config.beta = {0.01, 0.01};
  plltm_config.use_labels = true;
  plltm_config.sweeps = 100;
  plltm_config.seed = 99;

  ModelConfig pltm_config = plltm_config;
  pltm_config.use_labels = false;

  const auto a1 = trajectory(full_label_corpus, plltm_config);
  const auto a2 = trajectory(corpus, pltm_config);
  const bool multi_ok = a1 == a2;

  Corpus uni = select_language(full_label_corpus, 0);
  ModelConfig llda_config = plltm_config;
  llda_config.num_languages = 1;
  llda_config.beta = {0.01};
  ModelConfig lda_config = llda_config;
  lda_config.use_labels = false;
  const auto b1 = trajectory(uni, llda_config);
  const auto b2 = trajectory(uni, lda_config);
  const bool uni_ok = b1 == b2;

  std::ostringstream detail;
  detail << "full-mask PLL-TM vs PLTM trajectories "
         << (multi_ok ? "identical" : "DIVERGED") << " (100 sweeps); L=1 vs "
         << "LDA trajectories " << (uni_ok ? "identical" : "DIVERGED");
  report(3, "model variants reduce to each other bit-exactly",
         multi_ok && uni_ok, detail.str());
}

// ---------------------------------------------------------------------------
// criteria 4-6 share the recovery corpus family

SynthSpec recovery_spec(std::uint32_t documents) {
  SynthSpec spec;
  spec.num_topics = 10;
  spec.num_languages = 2;
  spec.num_documents = documents;
  spec.vocab_sizes = {200, 200};
  spec.doc_length_means = {60.0, 60.0};
  spec.labels_per_doc_mean = 2.0;
  spec.alpha = 0.1;
  spec.beta = {0.01, 0.01};
  return spec;
}

ModelConfig recovery_config(std::uint64_t seed, std::uint32_t sweeps) {
  ModelConfig config;
  config.num_topics = 10;
  config.num_languages = 2;
  config.alpha = 0.1;
  config.beta = {0.01, 0.01};
  config.use_labels = true;
  config.sweeps = sweeps;
  config.seed = seed;
  return config;
}

void criterion_4() {
  Rng rng(1001);
  auto [corpus, truth] = generate_corpus(recovery_spec(500), rng);
  auto config = recovery_config(777, 200);
  std::uint32_t checks = 0;
  std::string failure;
  train(corpus, config, [&](std::uint32_t sweep, const ModelState& state) {
    if (sweep % 10 != 0) return;
    try {
      verify_counts(state, corpus);
      ++checks;
    } catch (const std::exception& e) {
      if (failure.empty()) {
        failure = "sweep " + std::to_string(sweep) + ": " + e.what();
      }
    }
  });
  std::ostringstream detail;
  if (failure.empty()) {
    detail << "recomputed tallies matched incremental counts at " << checks
           << " checkpoints over 200 sweeps";
  } else {
    detail << failure;
  }
  report(4, "count aggregates never drift", failure.empty() && checks == 20,
         detail.str());
}

void criterion_5() {
  // Threshold pinned from three reference runs before this test was armed
  // (mean L1 of 0.070095, 0.056647 and 0.067463 for seeds 1001/2001,
  // 1002/2002, 1003/2003; see calibration_test.cpp). 0.15 gives roughly 2x
  // headroom over the worst observed run on the [0, 4] concatenated-L1
  // scale.
  constexpr double kMeanL1Threshold = 0.15;
  const auto start = std::chrono::steady_clock::now();
  Rng rng(1001);
  auto [corpus, truth] = generate_corpus(recovery_spec(500), rng);
  auto model = train(corpus, recovery_config(2001, 500));
  auto match = match_topics(model.phi, truth.phi_true, 10);
  const double elapsed = seconds_since(start);
  std::ostringstream detail;
  detail << "greedy-matched mean L1 = " << match.mean_l1 << " (threshold "
         << kMeanL1Threshold << "), " << elapsed << " s";
  report(5, "topic recovery on synthetic data",
         match.mean_l1 < kMeanL1Threshold && elapsed < 600.0, detail.str());
}

void criterion_6() {
  auto spec = recovery_spec(600);  // 500 train + 100 held out
  Rng rng(4242);
  auto [corpus, truth] = generate_corpus(spec, rng);
  Corpus train_part = corpus;
  train_part.documents.assign(corpus.documents.begin(),
                              corpus.documents.begin() + 500);

  std::vector<HeldOutSplit> splits;
  for (std::size_t i = 500; i < 600; ++i) {
    Rng srng(mix_seed(4242, 0x73706c69, i));
    splits.push_back(split_held_out(corpus.documents[i], 0, 0.5, srng));
  }
  std::vector<HeldOutSplit> uni_splits;
  uni_splits.reserve(splits.size());
  for (const auto& s : splits) uni_splits.push_back(select_language(s));

  FoldInOptions fold;
  fold.sweeps = 100;
  fold.burn_in = 50;

  auto labeled =
      perplexity_curve(train_part, splits, recovery_config(31, 200), 10, fold,
                       4);

  Corpus uni_train = select_language(train_part, 0);
  ModelConfig lda_config = recovery_config(31, 200);
  lda_config.num_languages = 1;
  lda_config.beta = {0.01};
  lda_config.use_labels = false;
  auto unlabeled =
      perplexity_curve(uni_train, uni_splits, lda_config, 10, fold, 4);

  auto at_sweep = [](const PerplexityReport& r, std::uint32_t sweep) {
    for (const auto& [s, p] : r.per_iteration) {
      if (s == sweep) return p;
    }
    return -1.0;
  };
  const double l10 = at_sweep(labeled, 10), u10 = at_sweep(unlabeled, 10);
  const double l50 = at_sweep(labeled, 50), u50 = at_sweep(unlabeled, 50);
  const double l200 = labeled.final_perplexity;
  const double u200 = unlabeled.final_perplexity;
  const bool ok = l10 > 0 && u10 > 0 && l10 < u10 && l50 < u50 && l200 < u200;
  std::ostringstream detail;
  detail << "PLL-TM vs LDA perplexity: sweep 10: " << l10 << " vs " << u10
         << "; sweep 50: " << l50 << " vs " << u50 << "; sweep 200: " << l200
         << " vs " << u200;
  report(6, "labeled polylingual curve stays below the LDA curve", ok,
         detail.str());
}

void criterion_7() {
  TrainedModel uniform;
  uniform.config.num_topics = 1;
  uniform.config.num_languages = 1;
  uniform.config.alpha = 0.1;
  uniform.config.beta = {0.01};
  uniform.config.sweeps = 1;
  uniform.vocab_sizes = {4};
  uniform.phi = {{0.25, 0.25, 0.25, 0.25}};

  HeldOutSplit split;
  split.target_language = 0;
  split.observed_part.doc_id = "t";
  split.observed_part.tokens = {{0}};
  split.target_part.doc_id = "t";
  split.target_part.tokens = {{0, 1, 2, 3, 1, 2}};
  auto uniform_report =
      perplexity(uniform, {split}, {std::vector<double>{1.0}});
  const bool uniform_ok =
      std::abs(uniform_report.final_perplexity - 4.0) <= 1e-9;

  // per-token probabilities 0.5, 0.25, 0.125 -> the criterion's closed form
  // exp(-(ln .5 + ln .25 + ln .125)/3)
  TrainedModel shaped = uniform;
  shaped.phi = {{0.5, 0.25, 0.125, 0.125}};
  HeldOutSplit three = split;
  three.target_part.tokens = {{0, 1, 2}};
  auto three_report =
      perplexity(shaped, {three}, {std::vector<double>{1.0}});
  const double closed_form =
      std::exp(-(std::log(0.5) + std::log(0.25) + std::log(0.125)) / 3.0);
  const bool three_ok =
      std::abs(three_report.final_perplexity - closed_form) <= 1e-6;

  // two tokens at 0.5 and 0.25 give the 2.8284 geometric-mean value
  HeldOutSplit two = split;
  two.target_part.tokens = {{0, 1}};
  auto two_report = perplexity(shaped, {two}, {std::vector<double>{1.0}});
  const bool two_ok =
      std::abs(two_report.final_perplexity - 2.8284271247461903) <= 1e-6;

  std::ostringstream detail;
  detail << "uniform V=4: " << uniform_report.final_perplexity
         << "; (0.5, 0.25, 0.125): " << three_report.final_perplexity
         << " vs closed form " << closed_form << "; (0.5, 0.25): "
         << two_report.final_perplexity;
  report(7, "closed-form perplexity checks", uniform_ok && three_ok && two_ok,
         detail.str());
}

// ---------------------------------------------------------------------------
// criterion 8: end-to-end CLI determinism

int run_cli(const std::string& args) {
  const std::string cmd =
      std::string(PLLTM_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  if (status == -1) return -1;
  return WIFEXITED(status) ? WEXITSTATUS(status) : -2;
}

std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool run_pipeline(const fs::path& dir, std::string& failure) {
  const std::string corpus = (dir / "synth.txt").string();
  const std::string model = (dir / "model.bin").string();
  if (run_cli("synth --k 4 --langs 2 --docs 60 --vocab 40,40 --doc-length 14 "
              "--labels-mean 2 --seed 9 --out " +
              corpus) != 0) {
    failure = "synth failed";
    return false;
  }
  if (run_cli("train --corpus " + corpus + " --out " + model +
              " --model plltm --sweeps 40 --seed 9 --quiet") != 0) {
    failure = "train failed";
    return false;
  }
  if (run_cli("eval --model " + model + " --test " + corpus + " --out " +
              (dir / "ppx.csv").string() +
              " --fold-sweeps 30 --fold-burn-in 10 --seed 9") != 0) {
    failure = "eval failed";
    return false;
  }
  if (run_cli("topics --model " + model + " --out " +
              (dir / "topics.tsv").string() + " --n 5") != 0) {
    failure = "topics failed";
    return false;
  }
  return true;
}

void criterion_8() {
  const auto base = fs::temp_directory_path() /
                    ("plltm_acceptance_" + std::to_string(::getpid()));
  const fs::path run1 = base / "run1";
  const fs::path run2 = base / "run2";
  fs::create_directories(run1);
  fs::create_directories(run2);

  std::string failure;
  bool ok = run_pipeline(run1, failure) && run_pipeline(run2, failure);
  std::size_t compared = 0;
  if (ok) {
    // every produced file must match byte-for-byte; manifests carry
    // wall-clock timings and are exempt from the contract
    for (const auto& entry : fs::directory_iterator(run1)) {
      const std::string name = entry.path().filename().string();
      if (name.size() >= 9 && name.ends_with(".manifest")) continue;
      const auto other = run2 / name;
      if (!fs::exists(other)) {
        ok = false;
        failure = name + " missing from second run";
        break;
      }
      if (read_bytes(entry.path()) != read_bytes(other)) {
        ok = false;
        failure = name + " differs between runs";
        break;
      }
      ++compared;
    }
    if (ok && compared == 0) {
      ok = false;
      failure = "no output files produced";
    }
  }
  std::ostringstream detail;
  if (ok) {
    detail << compared
           << " output files byte-identical across two seeded runs";
  } else {
    detail << failure;
  }
  report(8, "seeded CLI pipeline is bit-reproducible", ok, detail.str());
  fs::remove_all(base);
}

}  // namespace

int main() {
  criterion_1();
  criterion_2();
  criterion_3();
  criterion_4();
  criterion_5();
  criterion_6();
  criterion_7();
  criterion_8();
  if (g_failures) {
    std::printf("%d criterion(s) failed\n", g_failures);
    return 1;
  }
  std::printf("all acceptance criteria passed\n");
  return 0;
}
