#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "vawe/numerics.hpp"

namespace vawe::testutil {

// Fresh scratch directory under the system temp root, removed on destruction.
class TempDir {
  public:
    explicit TempDir(const std::string& tag) {
        auto base = std::filesystem::temp_directory_path();
        path_ = base / ("vawe_test_" + tag + "_" + std::to_string(counter_++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }

  private:
    static inline int counter_ = 0;
    std::filesystem::path path_;
};

inline DenseMatrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng,
                                 double lo = -1.0, double hi = 1.0) {
    DenseMatrix m(rows, cols);
    for (double& v : m.data()) v = rng.uniform(lo, hi);
    return m;
}

inline DenseMatrix random_gaussian(std::size_t rows, std::size_t cols, Rng& rng) {
    DenseMatrix m(rows, cols);
    for (double& v : m.data()) v = rng.normal();
    return m;
}

}  // namespace vawe::testutil
