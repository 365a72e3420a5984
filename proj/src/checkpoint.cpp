#include "strata/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace strata {

namespace {

constexpr char kMagic[8] = {'S', 'T', 'R', 'A', 'T', 'A', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

class Writer {
 public:
  explicit Writer(std::ostream& os) : os_(os) {}
  void bytes(const void* p, std::size_t n) { os_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n)); }
  template <typename U>
  void uint(U v) {
    unsigned char b[sizeof(U)];
    for (std::size_t i = 0; i < sizeof(U); ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    bytes(b, sizeof(U));
  }
  void f64(double v) { uint(std::bit_cast<std::uint64_t>(v)); }
  void str(const std::string& s) {
    uint(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }

 private:
  std::ostream& os_;
};

class Reader {
 public:
  explicit Reader(std::istream& is) : is_(is) {}
  void bytes(void* p, std::size_t n) {
    is_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(is_.gcount()) != n) throw std::runtime_error("checkpoint: truncated file");
  }
  template <typename U>
  U uint() {
    unsigned char b[sizeof(U)];
    bytes(b, sizeof(U));
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(static_cast<U>(b[i]) << (8 * i));
    return v;
  }
  double f64() { return std::bit_cast<double>(uint<std::uint64_t>()); }
  std::string str(std::size_t limit) {
    auto n = uint<std::uint32_t>();
    if (n > limit) throw std::runtime_error("checkpoint: implausible string length");
    std::string s(n, '\0');
    bytes(s.data(), n);
    return s;
  }

 private:
  std::istream& is_;
};

std::string encode_metadata(const std::map<std::string, std::string>& md) {
  std::string out;
  for (const auto& [k, v] : md) {
    if (k.find_first_of("=\n") != std::string::npos || v.find('\n') != std::string::npos)
      throw std::invalid_argument("checkpoint: metadata keys/values may not contain '=' or newlines: " + k);
    out += k + "=" + v + "\n";
  }
  return out;
}

std::map<std::string, std::string> decode_metadata(const std::string& text) {
  std::map<std::string, std::string> md;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    md[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return md;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, std::uint64_t step,
                     const std::map<std::string, std::string>& metadata, const ParameterStore& params,
                     const AdagradState* optimizer) {
  // Write to a sibling temp file and rename so readers never see a partial file.
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("checkpoint: cannot open " + tmp.string() + " for writing");
    Writer w(os);
    w.bytes(kMagic, sizeof kMagic);
    w.uint(kVersion);
    w.uint(step);
    auto md = encode_metadata(metadata);
    w.uint(static_cast<std::uint64_t>(md.size()));
    w.bytes(md.data(), md.size());
    w.uint(static_cast<std::uint32_t>(params.size()));
    for (std::size_t i = 0; i < params.size(); ++i) {
      const Tensor& t = params.at(i);
      w.str(params.name(i));
      w.uint(static_cast<std::uint32_t>(t.shape().size()));
      for (auto d : t.shape()) w.uint(static_cast<std::uint64_t>(d));
      for (double v : t.data()) w.f64(v);
    }
    if (optimizer) {
      if (optimizer->accumulator.size() != params.size())
        throw std::invalid_argument("checkpoint: optimizer state does not match parameters");
      w.uint(std::uint8_t{1});
      w.f64(optimizer->learning_rate);
      w.f64(optimizer->initial_accumulator);
      for (const auto& acc : optimizer->accumulator)
        for (double v : acc) w.f64(v);
    } else {
      w.uint(std::uint8_t{0});
    }
    if (!os.flush()) throw std::runtime_error("checkpoint: write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("checkpoint not found: " + path.string());
  Reader r(is);
  char magic[8];
  r.bytes(magic, sizeof magic);
  if (std::memcmp(magic, kMagic, sizeof magic) != 0) throw std::runtime_error("checkpoint: bad magic in " + path.string());
  if (auto v = r.uint<std::uint32_t>(); v != kVersion)
    throw std::runtime_error("checkpoint: unsupported version " + std::to_string(v));
  Checkpoint ck;
  ck.step = r.uint<std::uint64_t>();
  auto md_len = r.uint<std::uint64_t>();
  if (md_len > (1u << 24)) throw std::runtime_error("checkpoint: implausible metadata length");
  std::string md(md_len, '\0');
  r.bytes(md.data(), md.size());
  ck.metadata = decode_metadata(md);
  auto count = r.uint<std::uint32_t>();
  for (std::uint32_t i = 0; i < count; ++i) {
    ck.names.push_back(r.str(4096));
    auto rank = r.uint<std::uint32_t>();
    if (rank == 0 || rank > 8) throw std::runtime_error("checkpoint: bad tensor rank");
    std::vector<std::size_t> shape(rank);
    for (auto& d : shape) d = static_cast<std::size_t>(r.uint<std::uint64_t>());
    Tensor t(shape);
    for (double& v : t.data()) v = r.f64();
    ck.tensors.push_back(std::move(t));
  }
  if (r.uint<std::uint8_t>() == 1) {
    AdagradState st;
    st.learning_rate = r.f64();
    st.initial_accumulator = r.f64();
    for (const auto& t : ck.tensors) {
      std::vector<double> acc(t.size());
      for (double& v : acc) v = r.f64();
      st.accumulator.push_back(std::move(acc));
    }
    ck.optimizer = std::move(st);
  }
  return ck;
}

void restore_parameters(const Checkpoint& ckpt, ParameterStore& params) {
  if (ckpt.tensors.size() != params.size())
    throw std::runtime_error("checkpoint: tensor count " + std::to_string(ckpt.tensors.size()) +
                             " does not match model (" + std::to_string(params.size()) + ")");
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& t = params.at(i);
    if (ckpt.names[i] != params.name(i) || ckpt.tensors[i].shape() != t.shape())
      throw std::runtime_error("checkpoint: parameter " + ckpt.names[i] + " " +
                               shape_string(ckpt.tensors[i].shape()) + " does not match model parameter " +
                               params.name(i) + " " + shape_string(t.shape()));
    auto src = ckpt.tensors[i].data();
    std::copy(src.begin(), src.end(), t.data().begin());
  }
}

}  // namespace strata
