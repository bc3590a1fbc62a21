#pragma once

// Fixtures shared by the unit and acceptance suites: the camping story,
// random miniature instances and the two synthetic corpora.

#include "storylogic/config.hpp"
#include "storylogic/data.hpp"
#include "storylogic/score_model.hpp"

#include <array>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

namespace storylogic::testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("storylogic-" + tag + "-" + std::to_string(::getpid()) + "-" +
             std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path write(const std::string& name, const std::string& text) const {
    const auto p = path_ / name;
    std::ofstream(p, std::ios::binary) << text;
    return p;
  }

 private:
  std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline const std::array<std::string, 4> kCampingPlot = {
    "Daddy took us to the woods to camp.",
    "He taught us how to build a fire with sticks.",
    "He helped us learn how to make our own tents.",
    "We fell asleep counting the stars in the sky.",
};
inline const std::string kCampingRight = "We had a wonderful time camping.";
inline const std::string kCampingWrong = "We will never camp again.";

inline ClozeInstance camping_instance() {
  ClozeInstance c;
  c.instance_id = "camping";
  for (std::size_t i = 0; i < 4; ++i) c.plot[i] = tokenize(kCampingPlot[i]);
  c.endings = {tokenize(kCampingRight), tokenize(kCampingWrong)};
  c.right_index = 1;
  return c;
}

inline Vocabulary vocabulary_of(const std::vector<ClozeInstance>& instances) {
  std::vector<const Tokens*> corpus;
  for (const auto& c : instances) {
    for (const auto& s : c.plot) corpus.push_back(&s);
    for (const auto& e : c.endings) corpus.push_back(&e);
  }
  return Vocabulary::build(corpus, 1);
}

// Miniature sizes used by the gradient checks.
inline ModelConfig mini_config(Mode mode = Mode::full) {
  ModelConfig c = ModelConfig::miniature();
  c.mode = mode;
  return c;
}

// Uniform parameters in [-scale, scale] with padding rows kept at zero. The
// default initialization leaves ReLU and max-pool inputs so close to their
// kinks that a finite-difference step can cross them.
template <class T>
void randomize(ParamStore<T>& store, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < store.size(); ++i) {
    init::uniform(store[i].value, -scale, scale, rng);
    if (store[i].frozen_row >= 0) store[i].value.row(store[i].frozen_row).setZero();
  }
}

inline std::vector<int> random_sentence(std::mt19937_64& rng, int vocab, int max_len) {
  std::uniform_int_distribution<int> len(1, max_len);
  std::uniform_int_distribution<int> tok(2, vocab - 1);
  std::vector<int> s(static_cast<std::size_t>(len(rng)));
  for (auto& t : s) t = tok(rng);
  return s;
}

inline EncodedCloze random_cloze(std::mt19937_64& rng, int vocab, int max_len) {
  EncodedCloze c;
  for (auto& s : c.plot) s = random_sentence(rng, vocab, max_len);
  for (auto& e : c.endings) e = random_sentence(rng, vocab, max_len);
  c.right_index = std::uniform_int_distribution<int>(1, 2)(rng);
  return c;
}

// Cloze stories over a closed vocabulary: each plot mentions one keyword, the
// right ending repeats it and the wrong ending names a keyword absent from
// the plot.
inline std::vector<ClozeInstance> keyword_cloze(std::size_t count, std::uint64_t seed) {
  static const std::vector<std::string> keywords = {"apple", "boat", "cake", "dog",
                                                    "egg",   "fire", "goat", "hat"};
  static const std::vector<std::string> filler = {"we", "saw", "a", "the", "then", "it", "was"};
  std::mt19937_64 rng(seed);
  auto pick = [&](const std::vector<std::string>& from) {
    return from[std::uniform_int_distribution<std::size_t>(0, from.size() - 1)(rng)];
  };
  std::vector<ClozeInstance> out;
  for (std::size_t n = 0; n < count; ++n) {
    const std::string key = pick(keywords);
    std::string other = pick(keywords);
    while (other == key) other = pick(keywords);
    ClozeInstance c;
    c.instance_id = "kw" + std::to_string(n);
    const std::size_t key_sentence = std::uniform_int_distribution<std::size_t>(0, 3)(rng);
    for (std::size_t i = 0; i < 4; ++i) {
      Tokens s = {pick(filler), pick(filler), pick(filler)};
      if (i == key_sentence) s.insert(s.begin() + 1, key);
      c.plot[i] = s;
    }
    const Tokens right = {pick(filler), key, pick(filler)};
    const Tokens wrong = {pick(filler), other, pick(filler)};
    c.right_index = std::uniform_int_distribution<int>(1, 2)(rng);
    c.endings[c.right_index - 1] = right;
    c.endings[2 - c.right_index] = wrong;
    out.push_back(std::move(c));
  }
  return out;
}

// Templated NLI pairs: identical hypothesis -> entailment, "not" inserted ->
// contradiction, an appended adverb -> neutral.
inline std::vector<NliPair> templated_nli(std::size_t count, std::uint64_t seed) {
  static const std::vector<std::string> subjects = {"man", "woman", "dog", "cat", "boy"};
  static const std::vector<std::string> verbs = {"runs", "sleeps", "eats", "sings"};
  static const std::vector<std::string> adverbs = {"outside", "today"};
  std::mt19937_64 rng(seed);
  auto pick = [&](const std::vector<std::string>& from) {
    return from[std::uniform_int_distribution<std::size_t>(0, from.size() - 1)(rng)];
  };
  std::vector<NliPair> out;
  for (std::size_t n = 0; n < count; ++n) {
    NliPair p;
    p.premise = {"the", pick(subjects), pick(verbs)};
    p.label = static_cast<NliLabel>(n % 3);
    switch (p.label) {
      case NliLabel::entailment:
        p.hypothesis = p.premise;
        break;
      case NliLabel::contradiction:
        p.hypothesis = {"the", p.premise[1], "not", p.premise[2]};
        break;
      case NliLabel::neutral:
        p.hypothesis = p.premise;
        p.hypothesis.push_back(pick(adverbs));
        break;
    }
    out.push_back(std::move(p));
  }
  return out;
}

inline Vocabulary vocabulary_of(const std::vector<NliPair>& pairs) {
  std::vector<const Tokens*> corpus;
  for (const auto& p : pairs) {
    corpus.push_back(&p.premise);
    corpus.push_back(&p.hypothesis);
  }
  return Vocabulary::build(corpus, 1);
}

}  // namespace storylogic::testing
