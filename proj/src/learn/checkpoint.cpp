#include "zmlloco/learn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace zmlloco {
namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

constexpr char kMagic[8] = {'Z', 'M', 'L', 'C', 'K', 'P', 'T', '\0'};

template <typename T>
void write_pod(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is, const std::string& what) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw CheckpointError("truncated checkpoint while reading " + what);
  return v;
}

std::string read_string(std::istream& is, std::uint64_t n, const std::string& what) {
  if (n > (1ull << 32)) throw CheckpointError("implausible length for " + what);
  std::string s(n, '\0');
  is.read(s.data(), static_cast<std::streamsize>(n));
  if (!is) throw CheckpointError("truncated checkpoint while reading " + what);
  return s;
}

}  // namespace

void Checkpoint::put(const std::string& name, const MatX& m) {
  NamedArray a{name, {m.rows(), m.cols()}, std::vector<double>(m.data(), m.data() + m.size())};
  for (auto& existing : arrays)
    if (existing.name == name) {
      existing = std::move(a);
      return;
    }
  arrays.push_back(std::move(a));
}

void Checkpoint::put(const std::string& name, const VecX& v) {
  NamedArray a{name, {v.size()}, std::vector<double>(v.data(), v.data() + v.size())};
  for (auto& existing : arrays)
    if (existing.name == name) {
      existing = std::move(a);
      return;
    }
  arrays.push_back(std::move(a));
}

bool Checkpoint::has(const std::string& name) const {
  for (const auto& a : arrays)
    if (a.name == name) return true;
  return false;
}

const NamedArray& Checkpoint::at(const std::string& name) const {
  for (const auto& a : arrays)
    if (a.name == name) return a;
  throw CheckpointError("checkpoint has no array named " + name);
}

MatX Checkpoint::matrix(const std::string& name) const {
  const NamedArray& a = at(name);
  if (a.shape.size() != 2) throw CheckpointError("array " + name + " is not a matrix");
  return Eigen::Map<const MatX>(a.data.data(), a.shape[0], a.shape[1]);
}

VecX Checkpoint::vector(const std::string& name) const {
  const NamedArray& a = at(name);
  return Eigen::Map<const VecX>(a.data.data(), static_cast<Eigen::Index>(a.data.size()));
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw CheckpointError("cannot open " + tmp.string() + " for writing");
    os.write(kMagic, sizeof(kMagic));
    write_pod(os, Checkpoint::kFormatVersion);
    write_pod(os, ckpt.model_hash);
    const std::string header = ckpt.header.dump();
    write_pod(os, static_cast<std::uint64_t>(header.size()));
    os.write(header.data(), static_cast<std::streamsize>(header.size()));
    write_pod(os, static_cast<std::uint32_t>(ckpt.arrays.size()));
    for (const NamedArray& a : ckpt.arrays) {
      std::int64_t count = 1;
      for (auto d : a.shape) count *= d;
      if (count != static_cast<std::int64_t>(a.data.size()))
        throw CheckpointError("array " + a.name + " has a shape that does not match its data");
      write_pod(os, static_cast<std::uint32_t>(a.name.size()));
      os.write(a.name.data(), static_cast<std::streamsize>(a.name.size()));
      write_pod(os, static_cast<std::uint32_t>(a.shape.size()));
      for (auto d : a.shape) write_pod(os, d);
      os.write(reinterpret_cast<const char*>(a.data.data()),
               static_cast<std::streamsize>(a.data.size() * sizeof(double)));
    }
    os.flush();
    if (!os) throw CheckpointError("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw CheckpointError("cannot move checkpoint into " + path.string() + ": " + ec.message());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw CheckpointError("cannot open checkpoint " + path.string());
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw CheckpointError(path.string() + " is not a checkpoint (bad magic)");
  const auto version = read_pod<std::uint32_t>(is, "version");
  if (version != Checkpoint::kFormatVersion)
    throw CheckpointError("unsupported checkpoint format version " + std::to_string(version));
  Checkpoint ckpt;
  ckpt.model_hash = read_pod<std::uint64_t>(is, "model hash");
  const auto header_len = read_pod<std::uint64_t>(is, "header length");
  try {
    ckpt.header = Json::parse(read_string(is, header_len, "header"));
  } catch (const Json::parse_error& e) {
    throw CheckpointError(std::string("corrupt checkpoint header: ") + e.what());
  }
  const auto count = read_pod<std::uint32_t>(is, "array count");
  for (std::uint32_t k = 0; k < count; ++k) {
    NamedArray a;
    a.name = read_string(is, read_pod<std::uint32_t>(is, "name length"), "array name");
    const auto rank = read_pod<std::uint32_t>(is, "rank of " + a.name);
    if (rank > 8) throw CheckpointError("implausible rank for " + a.name);
    std::int64_t n = 1;
    for (std::uint32_t d = 0; d < rank; ++d) {
      a.shape.push_back(read_pod<std::int64_t>(is, "shape of " + a.name));
      if (a.shape.back() < 0) throw CheckpointError("negative dimension in " + a.name);
      n *= a.shape.back();
    }
    if (n > (1ll << 31)) throw CheckpointError("implausible size for " + a.name);
    a.data.resize(static_cast<std::size_t>(n));
    is.read(reinterpret_cast<char*>(a.data.data()), static_cast<std::streamsize>(n * 8));
    if (!is) throw CheckpointError("truncated checkpoint while reading " + a.name);
    ckpt.arrays.push_back(std::move(a));
  }
  return ckpt;
}

}  // namespace zmlloco
