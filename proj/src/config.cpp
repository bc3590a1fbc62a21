#include "storylogic/config.hpp"

#include "storylogic/error.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

namespace storylogic {

namespace {

template <typename Int>
Int parse_int(std::string_view key, std::string_view text) {
  Int v{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw UsageError("config key '" + std::string(key) + "': '" + std::string(text) +
                     "' is not an integer");
  }
  return v;
}

double parse_real(std::string_view key, std::string_view text) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(v)) {
    throw UsageError("config key '" + std::string(key) + "': '" + std::string(text) +
                     "' is not a finite number");
  }
  return v;
}

bool parse_bool(std::string_view key, std::string_view text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw UsageError("config key '" + std::string(key) + "': '" + std::string(text) +
                   "' is not a boolean");
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::string_view to_string(Mode mode) {
  switch (mode) {
    case Mode::full:
      return "full";
    case Mode::cu_only:
      return "cu_only";
    case Mode::lu_only:
      return "lu_only";
  }
  return "?";
}

Mode parse_mode(std::string_view text) {
  if (text == "full") return Mode::full;
  if (text == "cu_only") return Mode::cu_only;
  if (text == "lu_only") return Mode::lu_only;
  throw UsageError("unknown mode '" + std::string(text) +
                   "' (expected full, cu_only or lu_only)");
}

std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

int ModelConfig::scorer_input() const {
  switch (mode) {
    case Mode::full:
      return content_dim() + logic_dim();
    case Mode::cu_only:
      return content_dim();
    case Mode::lu_only:
      return logic_dim();
  }
  return 0;
}

void ModelConfig::validate() const {
  auto positive = [](int v, const char* name) {
    if (v <= 0) throw UsageError(std::string(name) + " must be positive");
  };
  positive(emb_dim, "emb_dim");
  positive(cu_hidden, "cu_hidden");
  positive(esim_hidden, "esim_hidden");
  positive(tracker_hidden, "tracker_hidden");
  positive(scorer_hidden, "scorer_hidden");
  positive(batch_size, "batch_size");
  positive(patience, "patience");
  positive(max_epochs_nli, "max_epochs_nli");
  positive(max_epochs_sct, "max_epochs_sct");
  positive(max_len, "max_len");
  positive(min_count, "min_count");
  if (folds < 2) throw UsageError("folds must be at least 2");
  if (nli_val_size < 0) throw UsageError("nli_val_size must be non-negative");
  if (!(margin > 0.0)) throw UsageError("margin must be positive");
  if (!(learning_rate > 0.0)) throw UsageError("learning_rate must be positive");
  if (dropout < 0.0 || dropout >= 1.0) throw UsageError("dropout must be in [0, 1)");
}

bool ModelConfig::set(std::string_view key, std::string_view value) {
  value = trim(value);
  if (key == "mode") {
    mode = parse_mode(value);
  } else if (key == "emb_dim") {
    emb_dim = parse_int<int>(key, value);
  } else if (key == "cu_hidden") {
    cu_hidden = parse_int<int>(key, value);
  } else if (key == "esim_hidden") {
    esim_hidden = parse_int<int>(key, value);
  } else if (key == "tracker_hidden") {
    tracker_hidden = parse_int<int>(key, value);
  } else if (key == "scorer_hidden") {
    scorer_hidden = parse_int<int>(key, value);
  } else if (key == "margin") {
    margin = parse_real(key, value);
  } else if (key == "learning_rate") {
    learning_rate = parse_real(key, value);
  } else if (key == "batch_size") {
    batch_size = parse_int<int>(key, value);
  } else if (key == "freeze_extractor") {
    freeze_extractor = parse_bool(key, value);
  } else if (key == "train_embeddings") {
    train_embeddings = parse_bool(key, value);
  } else if (key == "dropout") {
    dropout = parse_real(key, value);
  } else if (key == "clip_norm") {
    clip_norm = parse_real(key, value);
  } else if (key == "patience") {
    patience = parse_int<int>(key, value);
  } else if (key == "max_epochs_nli") {
    max_epochs_nli = parse_int<int>(key, value);
  } else if (key == "max_epochs_sct") {
    max_epochs_sct = parse_int<int>(key, value);
  } else if (key == "folds") {
    folds = parse_int<int>(key, value);
  } else if (key == "max_len") {
    max_len = parse_int<int>(key, value);
  } else if (key == "nli_val_size") {
    nli_val_size = parse_int<int>(key, value);
  } else if (key == "min_count") {
    min_count = parse_int<int>(key, value);
  } else if (key == "seed") {
    seed = parse_int<std::uint64_t>(key, value);
  } else {
    return false;
  }
  return true;
}

std::vector<std::pair<std::string, std::string>> ModelConfig::to_pairs() const {
  auto b = [](bool v) { return std::string(v ? "true" : "false"); };
  return {
      {"mode", std::string(to_string(mode))},
      {"emb_dim", std::to_string(emb_dim)},
      {"cu_hidden", std::to_string(cu_hidden)},
      {"esim_hidden", std::to_string(esim_hidden)},
      {"tracker_hidden", std::to_string(tracker_hidden)},
      {"scorer_hidden", std::to_string(scorer_hidden)},
      {"margin", format_double(margin)},
      {"learning_rate", format_double(learning_rate)},
      {"batch_size", std::to_string(batch_size)},
      {"freeze_extractor", b(freeze_extractor)},
      {"train_embeddings", b(train_embeddings)},
      {"dropout", format_double(dropout)},
      {"clip_norm", format_double(clip_norm)},
      {"patience", std::to_string(patience)},
      {"max_epochs_nli", std::to_string(max_epochs_nli)},
      {"max_epochs_sct", std::to_string(max_epochs_sct)},
      {"folds", std::to_string(folds)},
      {"max_len", std::to_string(max_len)},
      {"nli_val_size", std::to_string(nli_val_size)},
      {"min_count", std::to_string(min_count)},
      {"seed", std::to_string(seed)},
  };
}

std::string ModelConfig::to_text() const {
  std::string out;
  for (const auto& [k, v] : to_pairs()) out += k + "=" + v + "\n";
  return out;
}

ModelConfig ModelConfig::miniature() {
  ModelConfig c;
  c.emb_dim = 8;
  c.cu_hidden = 4;
  c.esim_hidden = 4;
  c.tracker_hidden = 4;
  c.scorer_hidden = 4;
  return c;
}

std::vector<std::pair<std::string, std::string>> parse_key_values(std::string_view text) {
  std::vector<std::pair<std::string, std::string>> out;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
    ++line_no;
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw UsageError("config line " + std::to_string(line_no) + ": expected key=value");
    }
    out.emplace_back(std::string(trim(line.substr(0, eq))),
                     std::string(trim(line.substr(eq + 1))));
  }
  return out;
}

}  // namespace storylogic
