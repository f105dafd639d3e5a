#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "zmlloco/json_util.hpp"

namespace zmlloco {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct NamedArray {
  std::string name;
  std::vector<std::int64_t> shape;
  std::vector<double> data;
};

// Binary container: magic "ZMLCKPT\0", u32 format version, u64 model hash,
// u64 header length, JSON header, u32 array count, then per array
// {u32 name length, name, u32 rank, i64 dims, f64 data}. Little-endian.
struct Checkpoint {
  static constexpr std::uint32_t kFormatVersion = 1;

  std::uint64_t model_hash = 0;
  Json header = Json::object();
  std::vector<NamedArray> arrays;

  void put(const std::string& name, const MatX& m);
  void put(const std::string& name, const VecX& v);
  template <typename Derived>
  void put_cast(const std::string& name, const Eigen::MatrixBase<Derived>& m) {
    put(name, MatX(m.template cast<double>()));
  }

  bool has(const std::string& name) const;
  const NamedArray& at(const std::string& name) const;
  MatX matrix(const std::string& name) const;
  VecX vector(const std::string& name) const;
};

// Writes to a temporary file and renames it into place; throws
// CheckpointError on any I/O failure.
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace zmlloco
