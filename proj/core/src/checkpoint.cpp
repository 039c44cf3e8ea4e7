#include "xtal/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "xtal/error.hpp"

namespace xtal {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes little-endian");

namespace {

constexpr char kMagic[8] = {'X', 'T', 'A', 'L', 'C', 'K', 'P', 'T'};

template <typename T>
void put(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

void put_string(std::ofstream& out, const std::string& s) {
  put<std::uint64_t>(out, s.size());
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

class Reader {
 public:
  explicit Reader(const std::string& path) : in_(path, std::ios::binary), path_(path) {
    if (!in_) throw IoError("cannot open checkpoint " + path);
  }

  template <typename T>
  T get() {
    T v;
    read(reinterpret_cast<char*>(&v), sizeof(T));
    return v;
  }

  std::string get_string(std::uint64_t limit = 1u << 30) {
    const auto n = get<std::uint64_t>();
    if (n > limit) fail("string length out of range");
    std::string s(n, '\0');
    read(s.data(), n);
    return s;
  }

  void read(char* dst, std::uint64_t n) {
    in_.read(dst, static_cast<std::streamsize>(n));
    if (!in_) fail("truncated file");
  }

  [[noreturn]] void fail(const std::string& why) {
    throw IoError("corrupt checkpoint " + path_ + ": " + why);
  }

  bool at_end() { return in_.peek() == std::char_traits<char>::eof(); }

 private:
  std::ifstream in_;
  std::string path_;
};

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& c) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint " + path);
  out.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kCheckpointVersion);
  put_string(out, c.config_text);
  put<std::uint64_t>(out, c.edge_std.sigma_hats.size());
  for (double s : c.edge_std.sigma_hats) put(out, s);
  put<std::uint64_t>(out, c.params.segments().size());
  for (const Segment& s : c.params.segments()) {
    put_string(out, s.name);
    put<std::int32_t>(out, s.rows);
    put<std::int32_t>(out, s.cols);
  }
  put<std::uint64_t>(out, c.params.size());
  out.write(reinterpret_cast<const char*>(c.params.values().data()),
            static_cast<std::streamsize>(c.params.size() * sizeof(double)));
  if (!out) throw IoError("failed writing checkpoint " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  Reader r(path);
  char magic[8];
  r.read(magic, sizeof(magic));
  if (std::memcmp(magic, kMagic, sizeof(magic)) != 0) r.fail("bad magic");
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion) r.fail("unsupported version " + std::to_string(version));
  Checkpoint c;
  c.config_text = r.get_string();
  const auto levels = r.get<std::uint64_t>();
  if (levels > 1u << 20) r.fail("level count out of range");
  for (std::uint64_t i = 0; i < levels; ++i) c.edge_std.sigma_hats.push_back(r.get<double>());
  const auto segments = r.get<std::uint64_t>();
  if (segments > 1u << 20) r.fail("segment count out of range");
  for (std::uint64_t i = 0; i < segments; ++i) {
    const std::string name = r.get_string(1u << 16);
    const auto rows = r.get<std::int32_t>();
    const auto cols = r.get<std::int32_t>();
    if (rows < 0 || cols < 0) r.fail("negative segment shape");
    c.params.add(name, rows, cols);
  }
  const auto count = r.get<std::uint64_t>();
  if (count != c.params.size()) r.fail("value count does not match segment table");
  r.read(reinterpret_cast<char*>(c.params.values().data()), count * sizeof(double));
  if (!r.at_end()) r.fail("trailing bytes");
  return c;
}

}  // namespace xtal
