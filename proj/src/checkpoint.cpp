#include "steer/checkpoint.hpp"

#include <fstream>

namespace steer::num {

const Matrix& TensorFile::at(const std::string& name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return t.value;
  }
  throw io::FormatError("tensor file: missing tensor '" + name + "'");
}

bool TensorFile::contains(const std::string& name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return true;
  }
  return false;
}

void save_tensor_file(const TensorFile& file, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open for writing: " + path.string());
  os.write("STCK", 4);
  io::write_le<std::uint32_t>(os, TensorFile::kFormatVersion);
  io::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(file.tensors.size()));
  io::write_string(os, file.metadata);
  for (const auto& t : file.tensors) {
    io::write_string(os, t.name);
    io::write_le<std::uint32_t>(os, 2);
    io::write_le<std::uint64_t>(os, static_cast<std::uint64_t>(t.value.rows()));
    io::write_le<std::uint64_t>(os, static_cast<std::uint64_t>(t.value.cols()));
    for (Eigen::Index i = 0; i < t.value.size(); ++i) io::write_le<double>(os, t.value.data()[i]);
  }
  if (!os) throw std::runtime_error("write failed: " + path.string());
}

TensorFile load_tensor_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open: " + path.string());
  char magic[4];
  if (!is.read(magic, 4) || std::string(magic, 4) != "STCK") throw io::FormatError("not a tensor file: " + path.string());
  const auto version = io::read_le<std::uint32_t>(is, "format_version");
  if (version != TensorFile::kFormatVersion) {
    throw io::FormatError("tensor file version " + std::to_string(version) + " unsupported (expected " +
                          std::to_string(TensorFile::kFormatVersion) + ")");
  }
  const auto count = io::read_le<std::uint32_t>(is, "tensor_count");
  TensorFile file;
  file.metadata = io::read_string(is, "metadata");
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedTensor t;
    t.name = io::read_string(is, "tensor name", 4096);
    const auto ndim = io::read_le<std::uint32_t>(is, "ndim");
    if (ndim != 2) throw io::FormatError("tensor '" + t.name + "': unsupported rank " + std::to_string(ndim));
    const auto rows = io::read_le<std::uint64_t>(is, "rows");
    const auto cols = io::read_le<std::uint64_t>(is, "cols");
    if (rows > (1u << 24) || cols > (1u << 24)) throw io::FormatError("tensor '" + t.name + "': implausible shape");
    t.value.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index j = 0; j < t.value.size(); ++j) t.value.data()[j] = io::read_le<double>(is, "tensor data");
    file.tensors.push_back(std::move(t));
  }
  return file;
}

}  // namespace steer::num
