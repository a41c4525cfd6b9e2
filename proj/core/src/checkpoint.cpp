#include "pixembed/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "pixembed/errors.hpp"

namespace pixembed {

static_assert(std::endian::native == std::endian::little,
              "checkpoint codec assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'P', 'X', 'E', 'M', 'B', 'C', 'K', 'P'};

class Writer {
 public:
  void u64(std::uint64_t v) { raw(&v, sizeof v); }
  void f64(double v) { raw(&v, sizeof v); }
  void str(const std::string& s) {
    u64(s.size());
    raw(s.data(), s.size());
  }
  void raw(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out.insert(out.end(), b, b + n);
  }
  std::vector<std::uint8_t> out;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}
  std::uint64_t u64() {
    std::uint64_t v;
    raw(&v, sizeof v);
    return v;
  }
  double f64() {
    double v;
    raw(&v, sizeof v);
    return v;
  }
  std::string str() {
    const std::uint64_t n = u64();
    need(n);
    std::string s(reinterpret_cast<const char*>(in_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  void raw(void* p, std::size_t n) {
    need(n);
    std::memcpy(p, in_.data() + pos_, n);
    pos_ += n;
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  void need(std::uint64_t n) const {
    if (n > in_.size() - pos_) throw LengthError("checkpoint truncated");
  }
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

void write_tensor(Writer& w, const std::string& name, const Tensor& t) {
  w.str(name);
  w.u64(t.rank());
  for (std::size_t e : t.shape()) w.u64(e);
  for (real v : t.values()) w.f64(static_cast<double>(v));
}

}  // namespace

const Tensor& Checkpoint::find(const std::string& name) const {
  for (const auto& nt : tensors) {
    if (nt.name == name) return nt.tensor;
  }
  throw FormatError("checkpoint has no tensor named '" + name + "'");
}

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt) {
  Writer w;
  w.raw(kMagic, sizeof kMagic);
  w.u64(kCheckpointVersion);
  w.str(ckpt.config_echo);
  w.u64(ckpt.epoch);
  w.u64(ckpt.tensors.size() + 3);
  write_tensor(w, "meta.stats", Tensor({2}, {ckpt.stats.mean, ckpt.stats.std}));
  const auto& q = ckpt.quantizer;
  write_tensor(w, "meta.quantizer",
               Tensor({5}, {q.mean, q.std, static_cast<real>(q.multiplier),
                            static_cast<real>(q.index_offset), static_cast<real>(q.vocab_size)}));
  write_tensor(w, "meta.train", Tensor({2}, {ckpt.clean_accuracy, ckpt.train_seconds}));
  for (const auto& nt : ckpt.tensors) write_tensor(w, nt.name, nt.tensor);
  return std::move(w.out);
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  char magic[8];
  r.raw(magic, sizeof magic);
  if (std::memcmp(magic, kMagic, sizeof kMagic) != 0) throw FormatError("not a pixembed checkpoint");
  const std::uint64_t version = r.u64();
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint ckpt;
  ckpt.config_echo = r.str();
  ckpt.epoch = r.u64();
  const std::uint64_t count = r.u64();
  for (std::uint64_t i = 0; i < count; ++i) {
    std::string name = r.str();
    const std::uint64_t rank = r.u64();
    if (rank == 0 || rank > 8) throw FormatError("tensor '" + name + "' has invalid rank");
    Shape shape(rank);
    std::uint64_t n = 1;
    for (auto& e : shape) {
      e = r.u64();
      if (e == 0 || e > (std::uint64_t{1} << 40)) throw FormatError("tensor '" + name + "' has invalid extent");
      n *= e;
    }
    if (n > bytes.size() / sizeof(double)) throw LengthError("tensor '" + name + "' larger than checkpoint");
    std::vector<real> values(n);
    for (auto& v : values) v = static_cast<real>(r.f64());
    Tensor t(std::move(shape), std::move(values));

    if (name == "meta.stats" && t.size() == 2) {
      ckpt.stats = {t[0], t[1]};
    } else if (name == "meta.quantizer" && t.size() == 5) {
      ckpt.quantizer = {t[0], t[1], static_cast<std::int64_t>(t[2]), static_cast<std::int64_t>(t[3]),
                        static_cast<std::int64_t>(t[4])};
    } else if (name == "meta.train" && t.size() == 2) {
      ckpt.clean_accuracy = t[0];
      ckpt.train_seconds = t[1];
    } else {
      ckpt.tensors.push_back({std::move(name), std::move(t)});
    }
  }
  if (!r.done()) throw FormatError("trailing bytes after checkpoint payload");
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  const auto bytes = encode_checkpoint(ckpt);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) { return decode_checkpoint(read_file(path)); }

}  // namespace pixembed
