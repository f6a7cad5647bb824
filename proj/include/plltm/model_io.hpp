#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>

#include "plltm/model.hpp"

namespace plltm {

// Model file layout (all multi-byte values little-endian):
//
//   magic "PLLTMMDL" | format version u32 | endianness tag u32 (0x01020304)
//   config: K u32, L u32, alpha f64, beta f64[L], use_labels u8,
//           sweeps u32, burn_in u32, seed u64, average_phi u8, policy u8
//   vocab sizes u32[L]
//   document count u64
//   label mask: per document, count u32 then topic ids u32[count]
//   phi: per language, K*V^l f64 row-major
//   has_assignments u8; if 1: per document per language,
//                       length u64 then topic ids u32[length]

namespace detail {

inline constexpr char kModelMagic[8] = {'P', 'L', 'L', 'T', 'M', 'M', 'D', 'L'};
inline constexpr std::uint32_t kModelFormatVersion = 1;
inline constexpr std::uint32_t kEndianTag = 0x01020304u;

template <typename T>
void write_le(std::ostream& out, T value) {
  static_assert(std::is_integral_v<T>);
  std::array<char, sizeof(T)> bytes;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    bytes[i] = static_cast<char>((static_cast<std::uint64_t>(value) >> (8 * i)) &
                                 0xff);
  }
  out.write(bytes.data(), bytes.size());
}

inline void write_le_f64(std::ostream& out, double value) {
  write_le(out, std::bit_cast<std::uint64_t>(value));
}

template <typename T>
T read_le(std::istream& in) {
  static_assert(std::is_integral_v<T>);
  std::array<char, sizeof(T)> bytes;
  in.read(bytes.data(), bytes.size());
  if (!in) throw std::runtime_error("model file truncated");
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[i]))
         << (8 * i);
  }
  return static_cast<T>(v);
}

inline double read_le_f64(std::istream& in) {
  return std::bit_cast<double>(read_le<std::uint64_t>(in));
}

}  // namespace detail

inline void save_model(const TrainedModel& model, const std::string& path,
                       bool include_assignments = true) {
  using namespace detail;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out.write(kModelMagic, sizeof(kModelMagic));
  write_le(out, kModelFormatVersion);
  write_le(out, kEndianTag);

  const ModelConfig& c = model.config;
  write_le(out, c.num_topics);
  write_le(out, c.num_languages);
  write_le_f64(out, c.alpha);
  for (double b : c.beta) write_le_f64(out, b);
  write_le(out, static_cast<std::uint8_t>(c.use_labels ? 1 : 0));
  write_le(out, c.sweeps);
  write_le(out, c.burn_in);
  write_le(out, c.seed);
  write_le(out, static_cast<std::uint8_t>(c.average_phi ? 1 : 0));
  write_le(out, static_cast<std::uint8_t>(c.empty_label_policy));

  for (std::uint32_t v : model.vocab_sizes) write_le(out, v);
  write_le(out, static_cast<std::uint64_t>(model.label_mask.num_documents()));
  for (const auto& permitted : model.label_mask.permitted) {
    write_le(out, static_cast<std::uint32_t>(permitted.size()));
    for (std::uint32_t k : permitted) write_le(out, k);
  }
  for (const auto& mat : model.phi) {
    for (double x : mat) write_le_f64(out, x);
  }
  write_le(out, static_cast<std::uint8_t>(include_assignments ? 1 : 0));
  if (include_assignments) {
    for (const auto& doc : model.final_state.assignments) {
      for (const auto& z : doc) {
        write_le(out, static_cast<std::uint64_t>(z.size()));
        for (std::uint32_t k : z) write_le(out, k);
      }
    }
  }
  out.close();
  if (!out) throw std::runtime_error("write failed: " + path);
}

// Loads a model file. Term strings are not stored in the file; the returned
// model's `vocabularies` is empty until re-attached from corpus sidecars.
// final_state carries the stored assignments only; use rebuild_counts with
// the training corpus to restore the count aggregates.
inline TrainedModel load_model(const std::string& path) {
  using namespace detail;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kModelMagic, sizeof(magic)) != 0) {
    throw std::runtime_error(path + ": not a model file (bad magic)");
  }
  const auto version = read_le<std::uint32_t>(in);
  if (version != kModelFormatVersion) {
    throw std::runtime_error(path + ": unsupported model format version " +
                             std::to_string(version));
  }
  const auto endian = read_le<std::uint32_t>(in);
  if (endian != kEndianTag) {
    throw std::runtime_error(path + ": bad endianness tag");
  }

  TrainedModel model;
  ModelConfig& c = model.config;
  c.num_topics = read_le<std::uint32_t>(in);
  c.num_languages = read_le<std::uint32_t>(in);
  c.alpha = read_le_f64(in);
  c.beta.resize(c.num_languages);
  for (double& b : c.beta) b = read_le_f64(in);
  c.use_labels = read_le<std::uint8_t>(in) != 0;
  c.sweeps = read_le<std::uint32_t>(in);
  c.burn_in = read_le<std::uint32_t>(in);
  c.seed = read_le<std::uint64_t>(in);
  c.average_phi = read_le<std::uint8_t>(in) != 0;
  c.empty_label_policy =
      static_cast<EmptyLabelPolicy>(read_le<std::uint8_t>(in));
  c.validate();

  model.vocab_sizes.resize(c.num_languages);
  for (auto& v : model.vocab_sizes) v = read_le<std::uint32_t>(in);
  const auto num_docs = read_le<std::uint64_t>(in);
  model.label_mask.permitted.resize(num_docs);
  for (auto& permitted : model.label_mask.permitted) {
    permitted.resize(read_le<std::uint32_t>(in));
    for (auto& k : permitted) {
      k = read_le<std::uint32_t>(in);
      if (k >= c.num_topics) {
        throw std::runtime_error(path + ": mask topic id out of range");
      }
    }
  }
  model.phi.resize(c.num_languages);
  for (std::size_t l = 0; l < c.num_languages; ++l) {
    model.phi[l].resize(static_cast<std::size_t>(c.num_topics) *
                        model.vocab_sizes[l]);
    for (double& x : model.phi[l]) x = read_le_f64(in);
  }

  ModelState& state = model.final_state;
  state.num_topics = c.num_topics;
  const bool has_assignments = read_le<std::uint8_t>(in) != 0;
  if (has_assignments) {
    state.assignments.resize(num_docs);
    for (std::size_t d = 0; d < num_docs; ++d) {
      state.assignments[d].resize(c.num_languages);
      for (std::size_t l = 0; l < c.num_languages; ++l) {
        auto& z = state.assignments[d][l];
        z.resize(read_le<std::uint64_t>(in));
        for (auto& k : z) {
          k = read_le<std::uint32_t>(in);
          if (k >= c.num_topics) {
            throw std::runtime_error(path + ": assignment out of range");
          }
        }
      }
    }
  }
  return model;
}

// Re-attaches term strings from a corpus whose vocabularies match the model.
inline void attach_vocabularies(TrainedModel& model,
                                std::vector<Vocabulary> vocabularies) {
  if (vocabularies.size() != model.vocab_sizes.size()) {
    throw std::invalid_argument("vocabulary count does not match model");
  }
  for (std::size_t l = 0; l < vocabularies.size(); ++l) {
    if (vocabularies[l].size() != model.vocab_sizes[l]) {
      throw std::invalid_argument(
          "vocabulary size mismatch for language " + std::to_string(l) +
          ": model has " + std::to_string(model.vocab_sizes[l]) +
          ", corpus has " + std::to_string(vocabularies[l].size()));
    }
  }
  model.vocabularies = std::move(vocabularies);
}

}  // namespace plltm
