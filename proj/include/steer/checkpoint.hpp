#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "steer/binary_io.hpp"
#include "steer/kernels.hpp"

namespace steer::num {

struct NamedTensor {
  std::string name;
  Matrix value;
};

// Binary tensor container:
//   "STCK" | u32 format_version | u32 tensor_count | string metadata (JSON)
//   per tensor: string name | u32 ndim (=2) | u64 rows | u64 cols | f64[rows*cols] row-major
// All integers and reals little-endian.
struct TensorFile {
  static constexpr std::uint32_t kFormatVersion = 1;
  std::string metadata = "{}";
  std::vector<NamedTensor> tensors;

  const Matrix& at(const std::string& name) const;
  bool contains(const std::string& name) const;
};

void save_tensor_file(const TensorFile& file, const std::filesystem::path& path);
TensorFile load_tensor_file(const std::filesystem::path& path);

}  // namespace steer::num
