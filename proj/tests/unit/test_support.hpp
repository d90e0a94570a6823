#pragma once

#include <filesystem>
#include <string>

#include "steer/rng.hpp"
#include "steer/transformer.hpp"

namespace steer::fixture {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    Rng r(static_cast<std::uint64_t>(std::hash<std::string>{}(tag)), reinterpret_cast<std::uintptr_t>(this));
    path_ = std::filesystem::temp_directory_path() / ("steer_" + tag + "_" + std::to_string(r.next_u64() % 1000000007));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline model::ModelConfig tiny_config(int vocab = 212, int n_layers = 2) {
  model::ModelConfig c;
  c.n_layers = n_layers;
  c.d_model = 16;
  c.n_heads = 2;
  c.d_ff = 32;
  c.vocab_size = vocab;
  c.max_seq_len = 128;
  c.seed = 11;
  return c;
}

inline num::Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng, double scale = 1.0) {
  num::Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = scale * rng.normal();
  return m;
}

// Scales the stop-token column of the output head so an untrained model
// stops often enough for extraction to have successful samples.
inline void boost_stop(model::Transformer& m, int stop_token = 3, double factor = 60.0) {
  m.weights().unembed.col(stop_token) *= factor;
}

}  // namespace steer::fixture
