#pragma once

// Single-file parameter container.
//
//   STORYLOGIC-CHECKPOINT <version>\n
//   vocab_fingerprint <16 hex digits>\n
//   vocab_size <n>\n
//   config <count>\n  followed by <count> key=value lines
//   optimizer_step <n>\n
//   rng <text state or ->\n
//   arrays <count>\n
//   per array: "array <name> <f32|f64> <rows> <cols>\n", then rows*cols
//   little-endian values in column-major order, then "\n"
//   END\n

#include "storylogic/config.hpp"
#include "storylogic/data.hpp"
#include "storylogic/params.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace storylogic {

enum class DType { f32, f64 };

struct NamedArray {
  std::string name;
  DType dtype = DType::f32;
  std::int64_t rows = 0;
  std::int64_t cols = 0;
  // Raw little-endian payload.
  std::vector<unsigned char> bytes;

  template <typename T>
  Matrix<T> to_matrix() const;
  template <typename T>
  static NamedArray from_matrix(std::string name, const Matrix<T>& m);
};

struct Checkpoint {
  static constexpr int kVersion = 1;

  int version = kVersion;
  ModelConfig config;
  std::uint64_t vocab_fingerprint = 0;
  std::int64_t vocab_size = 0;
  std::int64_t optimizer_step = 0;
  std::string rng_state = "-";
  std::vector<NamedArray> arrays;

  const NamedArray* find(std::string_view name) const;
  // Throws MismatchError when the vocabulary differs.
  void check_vocabulary(const Vocabulary& vocab) const;
};

// Copies every parameter of `store` (all of them, trainable or not).
template <typename T>
Checkpoint make_checkpoint(const ParamStore<T>& store, const ModelConfig& config,
                           const Vocabulary& vocab);

// Loads arrays into `store` for every parameter whose name starts with
// `prefix`. With `require_all`, a missing array is a MismatchError. Names in
// `skip` are never touched. Returns the number of parameters assigned.
template <typename T>
std::size_t apply_checkpoint(ParamStore<T>& store, const Checkpoint& ckpt,
                             std::string_view prefix = "", bool require_all = true,
                             const std::vector<std::string>& skip = {});

std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint parse_checkpoint(const std::string& bytes, const std::string& origin = "<memory>");

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
// With `vocab` set, a fingerprint mismatch is a MismatchError.
Checkpoint load_checkpoint(const std::filesystem::path& path,
                           const Vocabulary* vocab = nullptr);

}  // namespace storylogic
