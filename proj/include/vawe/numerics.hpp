#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "vawe/errors.hpp"

namespace vawe {

// Dense row-major matrix of 64-bit floats. The only matrix carrier in this
// library; everything runs at desk scale, so no sparse/GPU/SIMD paths.
class DenseMatrix {
  public:
    DenseMatrix() = default;
    DenseMatrix(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}
    DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }

    double& at(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double at(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
    std::span<const double> row(std::size_t i) const {
        return {data_.data() + i * cols_, cols_};
    }

    std::vector<double>& data() noexcept { return data_; }
    const std::vector<double>& data() const noexcept { return data_; }

    bool operator==(const DenseMatrix& other) const = default;

    // Throws NumericError if any entry is NaN/Inf.
    void check_finite(const char* context) const;

  private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

// Seedable splittable generator (SplitMix64). Pure integer core, so the raw
// u64 stream is identical across platforms; normal() goes through libm.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64();

    // Independent child stream; advances this generator by one step.
    Rng split();

    // Uniform in [0, 1), 53-bit resolution.
    double uniform();

    // Uniform in [lo, hi).
    double uniform(double lo, double hi);

    // Uniform integer in [0, n). n must be > 0.
    std::uint64_t uniform_int(std::uint64_t n);

    // Standard normal via Box-Muller (two uniforms per draw, no caching).
    double normal();

    template <typename T>
    void shuffle(std::vector<T>& items) {
        if (items.size() < 2) return;
        for (std::size_t i = items.size() - 1; i > 0; --i) {
            std::size_t j = static_cast<std::size_t>(uniform_int(i + 1));
            std::swap(items[i], items[j]);
        }
    }

  private:
    std::uint64_t state_;
};

// Standard matrix product. Throws ShapeError if a.cols != b.rows.
DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);

// Transposed copy.
DenseMatrix transpose(const DenseMatrix& a);

// Solves a * X = b for symmetric positive definite a via Cholesky. Only the
// lower triangle of a is read. Throws NumericError on a non-positive pivot
// and ShapeError on dimension mismatch.
DenseMatrix solve_spd(const DenseMatrix& a, const DenseMatrix& b);

// v / max(||v||, eps). Unit norm whenever ||v|| >= eps; the zero vector
// stays zero.
std::vector<double> l2_normalize(std::span<const double> v, double eps);
void l2_normalize_in_place(std::span<double> v, double eps);

// Entry (i, j) = squared Euclidean distance between row i of a and row j of
// b; clamped at 0. Throws ShapeError if column counts differ.
DenseMatrix pairwise_sq_dist(const DenseMatrix& rows_a, const DenseMatrix& rows_b);

double dot(std::span<const double> a, std::span<const double> b);
double squared_distance(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> v);

}  // namespace vawe
