#pragma once

// Corpus ingestion: tokenization, SCT / ROCStories / NLI loaders, vocabulary
// and pretrained word vectors.

#include "storylogic/params.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace storylogic {

using Tokens = std::vector<std::string>;

// Lowercases ASCII letters, splits on whitespace and emits every punctuation
// character as its own token. Apostrophes and hyphens between two word
// characters stay inside the word ("didn't", "well-known").
Tokens tokenize(std::string_view text);

struct Story {
  std::string story_id;
  std::array<Tokens, 5> sentences;
};

struct ClozeInstance {
  std::string instance_id;
  std::array<Tokens, 4> plot;
  std::array<Tokens, 2> endings;
  int right_index = 1;  // 1 or 2

  const Tokens& right_ending() const { return endings[right_index - 1]; }
  const Tokens& wrong_ending() const { return endings[2 - right_index]; }
};

enum class NliLabel : int { entailment = 0, neutral = 1, contradiction = 2 };

struct NliPair {
  Tokens premise;
  Tokens hypothesis;
  NliLabel label = NliLabel::entailment;
};

std::string_view to_string(NliLabel label);

// RFC 4180 style: quoted fields may hold commas, doubled quotes and newlines.
std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path);

std::vector<ClozeInstance> load_cloze(const std::filesystem::path& path);
std::vector<Story> load_rocstories(const std::filesystem::path& path);

struct NliBlend {
  std::vector<NliPair> train;
  std::vector<NliPair> val;
  std::size_t read = 0;        // well-formed records seen
  std::size_t unlabeled = 0;   // dropped: gold label "-" or unknown
  std::size_t too_long = 0;    // dropped: a sentence with >= max_len tokens
  std::size_t malformed = 0;   // skipped: unparseable line or missing field
};

// Reads one JSON-lines NLI file and applies the label/length filter. Counts
// are added into `stats`.
std::vector<NliPair> read_nli(const std::filesystem::path& path, std::size_t max_len,
                              NliBlend& stats);

// Filters both corpora (SNLI first, then MultiNLI), then moves `val_size`
// seeded-random records into the validation portion. Both portions keep the
// input order.
NliBlend blend_nli(const std::filesystem::path& snli,
                   const std::filesystem::path& multinli, std::size_t max_len = 20,
                   std::size_t val_size = 1000, std::uint64_t seed = 1);

void write_nli(const std::filesystem::path& path, const std::vector<NliPair>& pairs);

class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr std::string_view kPadToken = "<pad>";
  static constexpr std::string_view kUnkToken = "<unk>";

  Vocabulary();

  // Tokens with count >= min_count, by descending count then lexicographic.
  static Vocabulary build(const std::vector<const Tokens*>& corpus, int min_count);

  int id(std::string_view token) const;
  const std::string& token(int id) const { return id_to_token_.at(static_cast<std::size_t>(id)); }
  int size() const { return static_cast<int>(id_to_token_.size()); }
  const std::vector<std::string>& tokens() const { return id_to_token_; }

  std::vector<int> encode(const Tokens& tokens) const;

  // FNV-1a over the newline-joined id_to_token list.
  std::uint64_t fingerprint() const;

  // One token per line in id order, reserved tokens included.
  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);

 private:
  void push(std::string token);

  std::vector<std::string> id_to_token_;
  std::unordered_map<std::string, int> token_to_id_;
};

struct EmbeddingMatrix {
  Matrix<float> matrix;  // [vocab x dim]
  bool trainable = true;
  std::size_t found = 0;  // rows copied from the vector file
};

// Rows for tokens present in the file are copied verbatim; the rest are
// uniform in [-0.05, 0.05] drawn from `seed`; the padding row is zero. A line
// whose value count differs from `dim` is a FormatError naming the line.
EmbeddingMatrix load_embeddings(const std::filesystem::path& path, const Vocabulary& vocab,
                                int dim = 300, std::uint64_t seed = 1);

// Same initialization without a vector file (every row random, padding zero).
EmbeddingMatrix random_embeddings(const Vocabulary& vocab, int dim, std::uint64_t seed);

}  // namespace storylogic
