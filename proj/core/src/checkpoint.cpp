#include "evoem/checkpoint.hpp"

#include <array>
#include <bit>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <vector>

#include "evoem/error.hpp"

namespace evoem {

namespace {

constexpr std::array<char, 4> kMagic{'E', 'E', 'M', '1'};

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}
  void u32(std::uint32_t v) { bytes(v, 4); }
  void u64(std::uint64_t v) { bytes(v, 8); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    out_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }
  // Named row-major matrix.
  void array(const std::string& name, const Eigen::MatrixXd& m) {
    str(name);
    u64(static_cast<std::uint64_t>(m.rows()));
    u64(static_cast<std::uint64_t>(m.cols()));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) f64(m(r, c));
  }
  void scalar(const std::string& name, double v) { array(name, Eigen::MatrixXd::Constant(1, 1, v)); }

 private:
  void bytes(std::uint64_t v, int n) {
    char b[8];
    for (int i = 0; i < n; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
    out_.write(b, n);
  }
  std::ostream& out_;
};

class Reader {
 public:
  Reader(std::istream& in, std::string name) : in_(in), name_(std::move(name)) {}
  std::uint32_t u32() { return static_cast<std::uint32_t>(bytes(4)); }
  std::uint64_t u64() { return bytes(8); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() {
    const std::uint32_t n = u32();
    if (n > (1U << 16)) fail("implausible string length");
    std::string s(n, '\0');
    if (!in_.read(s.data(), n)) fail("truncated");
    return s;
  }
  Eigen::MatrixXd matrix() {
    const std::uint64_t rows = u64(), cols = u64();
    if (rows > (1ULL << 24) || cols > (1ULL << 24) || rows * cols > (1ULL << 30)) fail("implausible array shape");
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = f64();
    return m;
  }
  [[noreturn]] void fail(const std::string& what) const { throw IoError(name_ + ": checkpoint " + what); }

 private:
  std::uint64_t bytes(int n) {
    unsigned char b[8];
    if (!in_.read(reinterpret_cast<char*>(b), n)) fail("truncated");
    std::uint64_t v = 0;
    for (int i = n - 1; i >= 0; --i) v = (v << 8) | b[i];
    return v;
  }
  std::istream& in_;
  std::string name_;
};

std::uint32_t kind_tag(ModelKind k) { return static_cast<std::uint32_t>(k); }

ModelKind kind_from_tag(std::uint32_t tag, const Reader& r) {
  switch (tag) {
    case 0:
      return ModelKind::kNoisyOr;
    case 1:
      return ModelKind::kBsc;
    case 2:
      return ModelKind::kSssc;
    default:
      r.fail("has unknown model kind tag " + std::to_string(tag));
  }
}

void write_params(Writer& w, const ModelParams& params) {
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, NoisyOrParams>) {
          w.u32(2);
          w.array("pi", p.pi);
          w.array("W", p.W);
        } else if constexpr (std::is_same_v<T, BscParams>) {
          w.u32(3);
          w.scalar("pi", p.pi);
          w.scalar("sigma2", p.sigma2);
          w.array("W", p.W);
        } else {
          w.u32(6);
          w.array("pi", p.pi);
          w.scalar("sigma2", p.sigma2);
          w.array("W", p.W);
          w.array("mu", p.mu);
          w.array("Psi", p.Psi);
          w.scalar("mu_psi_frozen", p.mu_psi_frozen ? 1.0 : 0.0);
        }
      },
      params);
}

ModelParams read_params(Reader& r, ModelKind kind) {
  const std::uint32_t count = r.u32();
  std::map<std::string, Eigen::MatrixXd> arrays;
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name = r.str();
    arrays[name] = r.matrix();
  }
  auto get = [&](const std::string& name) -> const Eigen::MatrixXd& {
    auto it = arrays.find(name);
    if (it == arrays.end()) r.fail("lacks array '" + name + "'");
    return it->second;
  };
  auto scalar = [&](const std::string& name) {
    const auto& m = get(name);
    if (m.size() != 1) r.fail("array '" + name + "' is not a scalar");
    return m(0, 0);
  };
  switch (kind) {
    case ModelKind::kNoisyOr:
      return NoisyOrParams{get("pi").col(0), get("W")};
    case ModelKind::kBsc:
      return BscParams{scalar("pi"), scalar("sigma2"), get("W")};
    case ModelKind::kSssc: {
      SsscParams p;
      p.pi = get("pi").col(0);
      p.sigma2 = scalar("sigma2");
      p.W = get("W");
      p.mu = get("mu").col(0);
      p.Psi = get("Psi");
      p.mu_psi_frozen = scalar("mu_psi_frozen") != 0.0;
      return p;
    }
  }
  r.fail("has unknown model kind");
}

CheckpointHeader read_header(Reader& r, std::istream& in, const std::string& name) {
  char magic[4];
  if (!in.read(magic, 4) || !std::equal(magic, magic + 4, kMagic.begin()))
    throw IoError(name + ": not a checkpoint (bad magic)");
  CheckpointHeader h;
  h.version = r.u32();
  if (h.version != kCheckpointVersion)
    throw IoError(name + ": checkpoint format version " + std::to_string(h.version) + " is not supported (expected " +
                  std::to_string(kCheckpointVersion) + ")");
  h.kind = kind_from_tag(r.u32(), r);
  h.H = r.u64();
  h.D = r.u64();
  h.S = r.u64();
  h.N = r.u64();
  h.iteration = r.u64();
  h.seed = r.u64();
  return h;
}

}  // namespace

void save_checkpoint(std::ostream& out, const EemState& state) {
  const std::size_t H = latent_dim(state.params);
  const std::size_t N = state.sets.size();
  const std::size_t S = N > 0 ? state.sets[0].size() : state.sets.S;
  out.write(kMagic.data(), 4);
  Writer w(out);
  w.u32(kCheckpointVersion);
  w.u32(kind_tag(kind_of(state.params)));
  w.u64(H);
  w.u64(observed_dim(state.params));
  w.u64(S);
  w.u64(N);
  w.u64(state.iteration);
  w.u64(state.seed);
  write_params(w, state.params);

  const std::size_t words = words_for(H);
  w.u64(words);
  for (std::size_t n = 0; n < N; ++n) {
    const LatentStateSet& set = state.sets[n];
    if (set.size() != S || set.H() != H) throw Error("save_checkpoint: inconsistent state set sizes");
    for (Word word : set.raw_bits()) w.u64(word);
    for (double v : set.lpj()) w.f64(v);
  }
  w.u64(state.trace.size());
  for (const auto& p : state.trace.points()) {
    w.u64(p.iteration);
    w.f64(p.free_energy_per_datapoint);
  }
}

void save_checkpoint(const std::string& path, const EemState& state) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint " + path);
  save_checkpoint(out, state);
  if (!out) throw IoError("write failed: " + path);
}

EemState load_checkpoint(std::istream& in, const std::string& name) {
  Reader r(in, name);
  const CheckpointHeader h = read_header(r, in, name);
  EemState state;
  state.iteration = h.iteration;
  state.seed = h.seed;
  state.params = read_params(r, h.kind);
  validate(state.params);
  if (latent_dim(state.params) != h.H || observed_dim(state.params) != h.D) r.fail("header disagrees with arrays");

  const std::uint64_t words = r.u64();
  if (words != words_for(h.H)) r.fail("has a bad state word count");
  state.sets.H = h.H;
  state.sets.S = h.S;
  state.sets.sets.reserve(h.N);
  BinaryState s(h.H);
  std::vector<double> lpj(h.S);
  std::vector<BinaryState> states(h.S, BinaryState(h.H));
  for (std::uint64_t n = 0; n < h.N; ++n) {
    for (auto& st : states)
      for (auto& word : st.words()) word = r.u64();
    for (auto& v : lpj) v = r.f64();
    LatentStateSet set(h.H, h.S);
    for (std::size_t i = 0; i < h.S; ++i)
      if (!set.insert(states[i], lpj[i])) r.fail("holds a duplicate state");
    state.sets.sets.push_back(std::move(set));
  }
  const std::uint64_t trace = r.u64();
  for (std::uint64_t i = 0; i < trace; ++i) {
    const std::uint64_t it = r.u64();
    state.trace.push(it, r.f64());
  }
  return state;
}

EemState load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path);
  return load_checkpoint(in, path);
}

CheckpointHeader read_checkpoint_header(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path);
  Reader r(in, path);
  return read_header(r, in, path);
}

}  // namespace evoem
