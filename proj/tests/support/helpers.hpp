#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "mhrnn/affinity.hpp"
#include "mhrnn/clustering.hpp"
#include "mhrnn/random.hpp"

namespace testing {

// A scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "t") {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("mhrnn-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
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
  std::filesystem::path operator/(const std::string& s) const { return path_ / s; }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& p, const std::string& contents) {
  std::filesystem::create_directories(p.parent_path());
  std::ofstream(p, std::ios::binary) << contents;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline std::vector<std::string> ids(std::size_t n) {
  std::vector<std::string> v;
  for (std::size_t i = 0; i < n; ++i) v.push_back("d" + std::to_string(i));
  return v;
}

// Labels drawn uniformly from [0, n) then used as cluster ids.
inline std::vector<std::size_t> random_labels(mhrnn::Rng& rng, std::size_t n) {
  std::vector<std::size_t> labels(n);
  const std::size_t k = 1 + rng.below(n);
  for (auto& l : labels) l = rng.below(k);
  return labels;
}

// Symmetric matrix with off-diagonal values in (0, 1) and a larger diagonal.
inline mhrnn::AffinityMatrix random_affinity(mhrnn::Rng& rng, std::size_t n,
                                             bool coarse = false) {
  mhrnn::AffinityMatrix a{ids(n), mhrnn::Matrix(n, n)};
  for (std::size_t i = 0; i < n; ++i) {
    a.values(i, i) = 1.5 + rng.uniform();
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = coarse ? static_cast<double>(rng.below(5)) / 5.0 + 0.1 : rng.uniform();
      a.values(i, j) = a.values(j, i) = v;
    }
  }
  return a;
}

inline std::vector<double> flat(const mhrnn::AffinityMatrix& a) { return a.values.values; }

}  // namespace testing
