#include "storylogic/checkpoint.hpp"

#include "storylogic/error.hpp"

#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>

namespace storylogic {

namespace {

constexpr std::string_view kMagic = "STORYLOGIC-CHECKPOINT";

std::string_view dtype_name(DType d) { return d == DType::f32 ? "f32" : "f64"; }

std::size_t dtype_size(DType d) { return d == DType::f32 ? 4 : 8; }

template <typename T>
constexpr DType dtype_of() {
  return sizeof(T) == 4 ? DType::f32 : DType::f64;
}

template <typename U>
U byteswap_if_needed(U v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    unsigned char b[sizeof(U)];
    std::memcpy(b, &v, sizeof(U));
    for (std::size_t i = 0; i < sizeof(U) / 2; ++i) std::swap(b[i], b[sizeof(U) - 1 - i]);
    std::memcpy(&v, b, sizeof(U));
    return v;
  }
}

std::string hex16(std::uint64_t v) {
  char buf[17];
  for (int i = 15; i >= 0; --i) {
    buf[i] = "0123456789abcdef"[v & 0xF];
    v >>= 4;
  }
  buf[16] = 0;
  return buf;
}

class Reader {
 public:
  Reader(const std::string& data, std::string origin)
      : data_(data), origin_(std::move(origin)) {}

  std::string line() {
    const auto nl = data_.find('\n', pos_);
    if (nl == std::string::npos) fail("unexpected end of file");
    std::string out = data_.substr(pos_, nl - pos_);
    pos_ = nl + 1;
    return out;
  }

  // "<key> <value>" line with a fixed key.
  std::string field(std::string_view key) {
    const std::string l = line();
    if (!l.starts_with(key) || l.size() <= key.size() || l[key.size()] != ' ') {
      fail("expected '" + std::string(key) + "' line, found '" + l + "'");
    }
    return l.substr(key.size() + 1);
  }

  template <typename Int>
  Int integer(std::string_view key) {
    const std::string text = field(key);
    return to_int<Int>(text);
  }

  template <typename Int>
  Int to_int(const std::string& text, int base = 10) {
    Int v{};
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v, base);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
      fail("bad integer '" + text + "'");
    }
    return v;
  }

  std::vector<unsigned char> bytes(std::size_t n) {
    if (data_.size() - pos_ < n) fail("truncated array payload");
    std::vector<unsigned char> out(data_.begin() + static_cast<std::ptrdiff_t>(pos_),
                                   data_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
    pos_ += n;
    return out;
  }

  void expect_newline() {
    if (pos_ >= data_.size() || data_[pos_] != '\n') fail("missing array terminator");
    ++pos_;
  }

  bool at_end() const { return pos_ == data_.size(); }

  [[noreturn]] void fail(const std::string& what) const {
    throw FormatError(origin_ + ": " + what);
  }

 private:
  const std::string& data_;
  std::string origin_;
  std::size_t pos_ = 0;
};

}  // namespace

template <typename T>
Matrix<T> NamedArray::to_matrix() const {
  Matrix<T> m(rows, cols);
  const std::size_t n = static_cast<std::size_t>(rows * cols);
  if (bytes.size() != n * dtype_size(dtype)) {
    throw FormatError("array " + name + ": payload size does not match shape");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (dtype == DType::f32) {
      std::uint32_t raw;
      std::memcpy(&raw, bytes.data() + 4 * i, 4);
      m.data()[i] = static_cast<T>(std::bit_cast<float>(byteswap_if_needed(raw)));
    } else {
      std::uint64_t raw;
      std::memcpy(&raw, bytes.data() + 8 * i, 8);
      m.data()[i] = static_cast<T>(std::bit_cast<double>(byteswap_if_needed(raw)));
    }
  }
  return m;
}

template <typename T>
NamedArray NamedArray::from_matrix(std::string name, const Matrix<T>& m) {
  NamedArray a;
  a.name = std::move(name);
  a.dtype = dtype_of<T>();
  a.rows = m.rows();
  a.cols = m.cols();
  a.bytes.resize(static_cast<std::size_t>(m.size()) * sizeof(T));
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    if constexpr (sizeof(T) == 4) {
      const auto raw = byteswap_if_needed(std::bit_cast<std::uint32_t>(m.data()[i]));
      std::memcpy(a.bytes.data() + 4 * i, &raw, 4);
    } else {
      const auto raw = byteswap_if_needed(std::bit_cast<std::uint64_t>(m.data()[i]));
      std::memcpy(a.bytes.data() + 8 * i, &raw, 8);
    }
  }
  return a;
}

const NamedArray* Checkpoint::find(std::string_view name) const {
  for (const auto& a : arrays) {
    if (a.name == name) return &a;
  }
  return nullptr;
}

void Checkpoint::check_vocabulary(const Vocabulary& vocab) const {
  if (vocab.fingerprint() != vocab_fingerprint || vocab.size() != vocab_size) {
    throw MismatchError("checkpoint vocabulary fingerprint " + hex16(vocab_fingerprint) +
                        " (size " + std::to_string(vocab_size) +
                        ") does not match the supplied vocabulary " +
                        hex16(vocab.fingerprint()) + " (size " +
                        std::to_string(vocab.size()) + ")");
  }
}

template <typename T>
Checkpoint make_checkpoint(const ParamStore<T>& store, const ModelConfig& config,
                           const Vocabulary& vocab) {
  Checkpoint c;
  c.config = config;
  c.vocab_fingerprint = vocab.fingerprint();
  c.vocab_size = vocab.size();
  c.arrays.reserve(store.size());
  for (std::size_t i = 0; i < store.size(); ++i) {
    c.arrays.push_back(NamedArray::from_matrix<T>(store[i].name, store[i].value));
  }
  return c;
}

template <typename T>
std::size_t apply_checkpoint(ParamStore<T>& store, const Checkpoint& ckpt,
                             std::string_view prefix, bool require_all,
                             const std::vector<std::string>& skip) {
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < store.size(); ++i) {
    auto& p = store[i];
    if (!std::string_view(p.name).starts_with(prefix)) continue;
    bool skipped = false;
    for (const auto& s : skip) skipped = skipped || s == p.name;
    if (skipped) continue;
    const NamedArray* a = ckpt.find(p.name);
    if (a == nullptr) {
      if (require_all) throw MismatchError("checkpoint has no array named " + p.name);
      continue;
    }
    if (a->rows != p.value.rows() || a->cols != p.value.cols()) {
      throw MismatchError("checkpoint array " + p.name + " has shape " +
                          std::to_string(a->rows) + "x" + std::to_string(a->cols) +
                          ", model expects " + std::to_string(p.value.rows()) + "x" +
                          std::to_string(p.value.cols()));
    }
    p.value = a->to_matrix<T>();
    ++assigned;
  }
  return assigned;
}

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  std::string out;
  out += std::string(kMagic) + " " + std::to_string(ckpt.version) + "\n";
  out += "vocab_fingerprint " + hex16(ckpt.vocab_fingerprint) + "\n";
  out += "vocab_size " + std::to_string(ckpt.vocab_size) + "\n";
  const auto pairs = ckpt.config.to_pairs();
  out += "config " + std::to_string(pairs.size()) + "\n";
  for (const auto& [k, v] : pairs) out += k + "=" + v + "\n";
  out += "optimizer_step " + std::to_string(ckpt.optimizer_step) + "\n";
  out += "rng " + (ckpt.rng_state.empty() ? std::string("-") : ckpt.rng_state) + "\n";
  out += "arrays " + std::to_string(ckpt.arrays.size()) + "\n";
  for (const auto& a : ckpt.arrays) {
    if (a.name.find_first_of(" \n") != std::string::npos) {
      throw FormatError("array name may not contain spaces: " + a.name);
    }
    out += "array " + a.name + " " + std::string(dtype_name(a.dtype)) + " " +
           std::to_string(a.rows) + " " + std::to_string(a.cols) + "\n";
    out.append(reinterpret_cast<const char*>(a.bytes.data()), a.bytes.size());
    out += "\n";
  }
  out += "END\n";
  return out;
}

Checkpoint parse_checkpoint(const std::string& bytes, const std::string& origin) {
  Reader r(bytes, origin);
  Checkpoint c;
  const std::string head = r.line();
  if (!head.starts_with(kMagic)) r.fail("not a checkpoint file");
  c.version = r.to_int<int>(head.substr(std::min(head.size(), kMagic.size() + 1)));
  if (c.version != Checkpoint::kVersion) {
    throw MismatchError(origin + ": checkpoint version " + std::to_string(c.version) +
                        " is not supported (expected " +
                        std::to_string(Checkpoint::kVersion) + ")");
  }
  c.vocab_fingerprint = r.to_int<std::uint64_t>(r.field("vocab_fingerprint"), 16);
  c.vocab_size = r.integer<std::int64_t>("vocab_size");
  const auto n_config = r.integer<std::size_t>("config");
  for (std::size_t i = 0; i < n_config; ++i) {
    const std::string l = r.line();
    const auto eq = l.find('=');
    if (eq == std::string::npos) r.fail("bad config line '" + l + "'");
    if (!c.config.set(l.substr(0, eq), l.substr(eq + 1))) {
      r.fail("unknown config key '" + l.substr(0, eq) + "'");
    }
  }
  c.optimizer_step = r.integer<std::int64_t>("optimizer_step");
  c.rng_state = r.field("rng");
  const auto n_arrays = r.integer<std::size_t>("arrays");
  for (std::size_t i = 0; i < n_arrays; ++i) {
    std::istringstream hdr(r.field("array"));
    NamedArray a;
    std::string dtype;
    if (!(hdr >> a.name >> dtype >> a.rows >> a.cols) || a.rows < 0 || a.cols < 0) {
      r.fail("bad array header");
    }
    if (dtype == "f32") {
      a.dtype = DType::f32;
    } else if (dtype == "f64") {
      a.dtype = DType::f64;
    } else {
      r.fail("unknown dtype '" + dtype + "'");
    }
    a.bytes = r.bytes(static_cast<std::size_t>(a.rows * a.cols) * dtype_size(a.dtype));
    r.expect_newline();
    c.arrays.push_back(std::move(a));
  }
  if (r.line() != "END" || !r.at_end()) r.fail("missing END marker");
  return c;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  const std::string data = serialize_checkpoint(ckpt);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path, const Vocabulary* vocab) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  Checkpoint c = parse_checkpoint(buf.str(), path.string());
  if (vocab != nullptr) c.check_vocabulary(*vocab);
  return c;
}

template Matrix<float> NamedArray::to_matrix<float>() const;
template Matrix<double> NamedArray::to_matrix<double>() const;
template NamedArray NamedArray::from_matrix<float>(std::string, const Matrix<float>&);
template NamedArray NamedArray::from_matrix<double>(std::string, const Matrix<double>&);
template Checkpoint make_checkpoint<float>(const ParamStore<float>&, const ModelConfig&,
                                           const Vocabulary&);
template Checkpoint make_checkpoint<double>(const ParamStore<double>&, const ModelConfig&,
                                            const Vocabulary&);
template std::size_t apply_checkpoint<float>(ParamStore<float>&, const Checkpoint&,
                                             std::string_view, bool,
                                             const std::vector<std::string>&);
template std::size_t apply_checkpoint<double>(ParamStore<double>&, const Checkpoint&,
                                              std::string_view, bool,
                                              const std::vector<std::string>&);

}  // namespace storylogic
