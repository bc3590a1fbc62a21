#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace storylogic {

enum class Mode { full, cu_only, lu_only };

std::string_view to_string(Mode mode);
Mode parse_mode(std::string_view text);

// Model dimensions plus every training hyperparameter. Serialized as flat
// key=value text both in config files and checkpoint headers.
struct ModelConfig {
  Mode mode = Mode::full;
  int emb_dim = 300;
  int cu_hidden = 512;
  int esim_hidden = 400;
  int tracker_hidden = 128;
  int scorer_hidden = 512;
  double margin = 1.0;
  double learning_rate = 0.001;
  int batch_size = 32;
  bool freeze_extractor = false;
  bool train_embeddings = true;
  double dropout = 0.0;
  double clip_norm = 5.0;
  int patience = 3;
  int max_epochs_nli = 10;
  int max_epochs_sct = 30;
  int folds = 5;
  int max_len = 20;
  int nli_val_size = 1000;
  int min_count = 1;
  std::uint64_t seed = 1;

  // Input width of the scorer MLP for the configured mode.
  int scorer_input() const;
  int content_dim() const { return 4 * cu_hidden; }
  int logic_dim() const { return 8 * tracker_hidden; }

  bool uses_content() const { return mode != Mode::lu_only; }
  bool uses_logic() const { return mode != Mode::cu_only; }

  // Throws UsageError on non-positive sizes, margin <= 0 and similar.
  void validate() const;

  // Returns false when `key` is not a config key; throws UsageError when the
  // value does not parse.
  bool set(std::string_view key, std::string_view value);
  std::vector<std::pair<std::string, std::string>> to_pairs() const;
  std::string to_text() const;

  static ModelConfig miniature();
};

// Shortest text that parses back to the same double.
std::string format_double(double value);

// Parses `key=value` lines; '#' starts a comment line.
std::vector<std::pair<std::string, std::string>> parse_key_values(std::string_view text);

}  // namespace storylogic
