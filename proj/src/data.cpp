#include "storylogic/data.hpp"

#include "storylogic/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

namespace storylogic {

namespace {

bool is_word_byte(unsigned char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
         c == '_' || c >= 0x80;
}

bool is_space_byte(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  std::string text = buf.str();
  if (text.starts_with("\xEF\xBB\xBF")) text.erase(0, 3);
  return text;
}

Tokens tokenize_field(const std::string& text, const std::filesystem::path& path,
                      std::size_t row, std::size_t column) {
  Tokens t = tokenize(text);
  if (t.empty()) {
    throw FormatError(path.string() + ": row " + std::to_string(row) + ", column " +
                      std::to_string(column + 1) + " is empty after tokenization");
  }
  return t;
}

bool blank_row(const std::vector<std::string>& row) {
  return std::all_of(row.begin(), row.end(), [](const std::string& f) {
    return std::all_of(f.begin(), f.end(),
                       [](char c) { return is_space_byte(static_cast<unsigned char>(c)); });
  });
}

std::string join(const Tokens& tokens) {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out += ' ';
    out += t;
  }
  return out;
}

}  // namespace

Tokens tokenize(std::string_view text) {
  Tokens out;
  std::string word;
  auto flush = [&] {
    if (!word.empty()) out.push_back(std::move(word));
    word.clear();
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const auto c = static_cast<unsigned char>(text[i]);
    if (is_space_byte(c)) {
      flush();
    } else if (is_word_byte(c)) {
      word += (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : static_cast<char>(c);
    } else if ((c == '\'' || c == '-') && !word.empty() && i + 1 < text.size() &&
               is_word_byte(static_cast<unsigned char>(text[i + 1]))) {
      word += static_cast<char>(c);
    } else {
      flush();
      out.emplace_back(1, static_cast<char>(c));
    }
  }
  flush();
  return out;
}

std::string_view to_string(NliLabel label) {
  switch (label) {
    case NliLabel::entailment:
      return "entailment";
    case NliLabel::neutral:
      return "neutral";
    case NliLabel::contradiction:
      return "contradiction";
  }
  return "?";
}

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
      any = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
      any = true;
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      if (any || !field.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
      }
      row.clear();
      field.clear();
      any = false;
    } else {
      field += c;
      any = true;
    }
  }
  if (quoted) throw FormatError(path.string() + ": unterminated quoted field");
  if (any || !field.empty()) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<ClozeInstance> load_cloze(const std::filesystem::path& path) {
  const auto rows = read_csv(path);
  std::vector<ClozeInstance> out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (blank_row(row)) continue;
    if (row.size() != 8) {
      throw FormatError(path.string() + ": row " + std::to_string(r + 1) + " has " +
                        std::to_string(row.size()) + " columns, expected 8");
    }
    ClozeInstance inst;
    inst.instance_id = row[0];
    for (std::size_t i = 0; i < 4; ++i) inst.plot[i] = tokenize_field(row[1 + i], path, r + 1, 1 + i);
    for (std::size_t i = 0; i < 2; ++i) {
      inst.endings[i] = tokenize_field(row[5 + i], path, r + 1, 5 + i);
    }
    const std::string& answer = row[7];
    if (answer == "1") {
      inst.right_index = 1;
    } else if (answer == "2") {
      inst.right_index = 2;
    } else {
      throw FormatError(path.string() + ": row " + std::to_string(r + 1) +
                        " has AnswerRightEnding '" + answer + "', expected 1 or 2");
    }
    out.push_back(std::move(inst));
  }
  return out;
}

std::vector<Story> load_rocstories(const std::filesystem::path& path) {
  const auto rows = read_csv(path);
  std::vector<Story> out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (blank_row(row)) continue;
    if (row.size() != 7) {
      throw FormatError(path.string() + ": row " + std::to_string(r + 1) + " has " +
                        std::to_string(row.size()) + " columns, expected 7 (id, title, 5 sentences)");
    }
    Story story;
    story.story_id = row[0];
    for (std::size_t i = 0; i < 5; ++i) {
      story.sentences[i] = tokenize_field(row[2 + i], path, r + 1, 2 + i);
    }
    out.push_back(std::move(story));
  }
  return out;
}

std::vector<NliPair> read_nli(const std::filesystem::path& path, std::size_t max_len,
                              NliBlend& stats) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<NliPair> out;
  std::string line;
  while (std::getline(in, line)) {
    if (std::all_of(line.begin(), line.end(),
                    [](char c) { return is_space_byte(static_cast<unsigned char>(c)); })) {
      continue;
    }
    const auto record = nlohmann::json::parse(line, nullptr, false);
    if (record.is_discarded() || !record.is_object() ||
        !record.contains("gold_label") || !record["gold_label"].is_string() ||
        !record.contains("sentence1") || !record["sentence1"].is_string() ||
        !record.contains("sentence2") || !record["sentence2"].is_string()) {
      ++stats.malformed;
      continue;
    }
    NliPair pair;
    pair.premise = tokenize(record["sentence1"].get<std::string>());
    pair.hypothesis = tokenize(record["sentence2"].get<std::string>());
    if (pair.premise.empty() || pair.hypothesis.empty()) {
      ++stats.malformed;
      continue;
    }
    ++stats.read;
    const auto label = record["gold_label"].get<std::string>();
    if (label == "entailment") {
      pair.label = NliLabel::entailment;
    } else if (label == "neutral") {
      pair.label = NliLabel::neutral;
    } else if (label == "contradiction") {
      pair.label = NliLabel::contradiction;
    } else {
      ++stats.unlabeled;
      continue;
    }
    if (pair.premise.size() >= max_len || pair.hypothesis.size() >= max_len) {
      ++stats.too_long;
      continue;
    }
    out.push_back(std::move(pair));
  }
  return out;
}

NliBlend blend_nli(const std::filesystem::path& snli, const std::filesystem::path& multinli,
                   std::size_t max_len, std::size_t val_size, std::uint64_t seed) {
  NliBlend blend;
  std::vector<NliPair> pool = read_nli(snli, max_len, blend);
  auto more = read_nli(multinli, max_len, blend);
  pool.insert(pool.end(), std::make_move_iterator(more.begin()),
              std::make_move_iterator(more.end()));
  if (pool.empty()) {
    throw FormatError("NLI blend retained no records from " + snli.string() + " and " +
                      multinli.string());
  }
  if (pool.size() <= val_size) {
    throw UsageError("NLI blend retained " + std::to_string(pool.size()) +
                     " records, need more than the validation size " +
                     std::to_string(val_size));
  }
  std::vector<std::size_t> order(pool.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::uint8_t> in_val(pool.size(), 0);
  for (std::size_t i = 0; i < val_size; ++i) in_val[order[i]] = 1;
  blend.train.reserve(pool.size() - val_size);
  blend.val.reserve(val_size);
  for (std::size_t i = 0; i < pool.size(); ++i) {
    (in_val[i] ? blend.val : blend.train).push_back(std::move(pool[i]));
  }
  return blend;
}

void write_nli(const std::filesystem::path& path, const std::vector<NliPair>& pairs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& p : pairs) {
    nlohmann::ordered_json rec;
    rec["gold_label"] = std::string(to_string(p.label));
    rec["sentence1"] = join(p.premise);
    rec["sentence2"] = join(p.hypothesis);
    out << rec.dump() << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

Vocabulary::Vocabulary() {
  push(std::string(kPadToken));
  push(std::string(kUnkToken));
}

void Vocabulary::push(std::string token) {
  token_to_id_.emplace(token, static_cast<int>(id_to_token_.size()));
  id_to_token_.push_back(std::move(token));
}

Vocabulary Vocabulary::build(const std::vector<const Tokens*>& corpus, int min_count) {
  if (min_count < 1) throw UsageError("min_count must be at least 1");
  std::map<std::string, long long> counts;
  for (const Tokens* seq : corpus) {
    for (const auto& t : *seq) {
      if (t == kPadToken || t == kUnkToken) continue;
      ++counts[t];
    }
  }
  std::vector<std::pair<std::string, long long>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  Vocabulary vocab;
  for (auto& [token, count] : ranked) {
    if (count >= min_count) vocab.push(token);
  }
  return vocab;
}

int Vocabulary::id(std::string_view token) const {
  const auto it = token_to_id_.find(std::string(token));
  return it == token_to_id_.end() ? kUnk : it->second;
}

std::vector<int> Vocabulary::encode(const Tokens& tokens) const {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(id(t));
  return ids;
}

std::uint64_t Vocabulary::fingerprint() const {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](unsigned char c) {
    h ^= c;
    h *= 1099511628211ULL;
  };
  for (const auto& t : id_to_token_) {
    for (char c : t) mix(static_cast<unsigned char>(c));
    mix('\n');
  }
  return h;
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& t : id_to_token_) out << t << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  if (lines.size() < 2 || lines[0] != kPadToken || lines[1] != kUnkToken) {
    throw FormatError(path.string() + ": vocabulary must start with " +
                      std::string(kPadToken) + " and " + std::string(kUnkToken));
  }
  Vocabulary vocab;
  for (std::size_t i = 2; i < lines.size(); ++i) {
    if (lines[i].empty() || vocab.token_to_id_.contains(lines[i])) {
      throw FormatError(path.string() + ": line " + std::to_string(i + 1) +
                        " is empty or repeats a token");
    }
    vocab.push(lines[i]);
  }
  return vocab;
}

EmbeddingMatrix random_embeddings(const Vocabulary& vocab, int dim, std::uint64_t seed) {
  if (dim <= 0) throw UsageError("embedding dimension must be positive");
  EmbeddingMatrix emb;
  emb.matrix.resize(vocab.size(), dim);
  std::mt19937_64 rng(seed);
  init::uniform(emb.matrix, -0.05, 0.05, rng);
  emb.matrix.row(Vocabulary::kPad).setZero();
  return emb;
}

EmbeddingMatrix load_embeddings(const std::filesystem::path& path, const Vocabulary& vocab,
                                int dim, std::uint64_t seed) {
  EmbeddingMatrix emb = random_embeddings(vocab, dim, seed);
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> seen(static_cast<std::size_t>(vocab.size()), 0);
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string_view> fields;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    fields.clear();
    std::string_view rest(line);
    while (!rest.empty()) {
      const auto start = rest.find_first_not_of(' ');
      if (start == std::string_view::npos) break;
      rest.remove_prefix(start);
      const auto end = rest.find(' ');
      fields.push_back(rest.substr(0, end));
      rest.remove_prefix(end == std::string_view::npos ? rest.size() : end);
    }
    if (fields.size() != static_cast<std::size_t>(dim) + 1) {
      throw FormatError(path.string() + ": line " + std::to_string(line_no) + " has " +
                        std::to_string(fields.empty() ? 0 : fields.size() - 1) +
                        " values, expected " + std::to_string(dim));
    }
    const int id = vocab.id(fields[0]);
    if (id == Vocabulary::kUnk && fields[0] != Vocabulary::kUnkToken) continue;
    if (id == Vocabulary::kPad || seen[static_cast<std::size_t>(id)]) continue;
    for (int k = 0; k < dim; ++k) {
      const auto f = fields[static_cast<std::size_t>(k) + 1];
      float v = 0.0f;
      const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
      if (ec != std::errc() || ptr != f.data() + f.size()) {
        throw FormatError(path.string() + ": line " + std::to_string(line_no) +
                          " has a non-numeric value '" + std::string(f) + "'");
      }
      emb.matrix(id, k) = v;
    }
    seen[static_cast<std::size_t>(id)] = 1;
    ++emb.found;
  }
  emb.matrix.row(Vocabulary::kPad).setZero();
  return emb;
}

}  // namespace storylogic
