#include "vawe/numerics.hpp"

#include <cmath>
#include <cstddef>
#include <string>

namespace vawe {

namespace {

std::string shape_str(const DenseMatrix& m) {
    return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

// SplitMix64 finalizer (Steele, Lea, Flood 2014).
std::uint64_t mix64(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ULL;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBULL;
    z ^= z >> 31;
    return z;
}

}  // namespace

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
        throw ShapeError("matrix data length " + std::to_string(data_.size()) +
                         " does not match " + std::to_string(rows_) + "x" +
                         std::to_string(cols_));
    }
}

void DenseMatrix::check_finite(const char* context) const {
    for (double v : data_) {
        if (!std::isfinite(v)) {
            throw NumericError(std::string(context) + ": non-finite entry");
        }
    }
}

std::uint64_t Rng::next_u64() {
    state_ += 0x9E3779B97F4A7C15ULL;
    return mix64(state_);
}

Rng Rng::split() { return Rng(mix64(next_u64())); }

double Rng::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

std::uint64_t Rng::uniform_int(std::uint64_t n) {
    // Lemire's multiply-shift with rejection; exact and platform-stable.
    std::uint64_t x = next_u64();
    __uint128_t m = static_cast<__uint128_t>(x) * n;
    auto low = static_cast<std::uint64_t>(m);
    if (low < n) {
        std::uint64_t threshold = (0ULL - n) % n;
        while (low < threshold) {
            x = next_u64();
            m = static_cast<__uint128_t>(x) * n;
            low = static_cast<std::uint64_t>(m);
        }
    }
    return static_cast<std::uint64_t>(m >> 64);
}

double Rng::normal() {
    double u1 = 1.0 - uniform();  // (0, 1]; keeps log finite
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.cols() != b.rows()) {
        throw ShapeError("matmul: " + shape_str(a) + " * " + shape_str(b));
    }
    DenseMatrix out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t k = 0; k < a.cols(); ++k) {
            double aik = a.at(i, k);
            if (aik == 0.0) continue;
            const auto brow = b.row(k);
            auto orow = out.row(i);
            for (std::size_t j = 0; j < b.cols(); ++j) {
                orow[j] += aik * brow[j];
            }
        }
    }
    return out;
}

DenseMatrix transpose(const DenseMatrix& a) {
    DenseMatrix out(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < a.cols(); ++j) {
            out.at(j, i) = a.at(i, j);
        }
    }
    return out;
}

DenseMatrix solve_spd(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.rows() != a.cols()) {
        throw ShapeError("solve_spd: matrix is " + shape_str(a) + ", not square");
    }
    if (a.rows() != b.rows()) {
        throw ShapeError("solve_spd: lhs " + shape_str(a) + " vs rhs " + shape_str(b));
    }
    const std::size_t n = a.rows();

    // In-place lower Cholesky factor.
    DenseMatrix l = a;
    for (std::size_t j = 0; j < n; ++j) {
        double diag = l.at(j, j);
        for (std::size_t k = 0; k < j; ++k) diag -= l.at(j, k) * l.at(j, k);
        if (!(diag > 0.0)) {
            throw NumericError("solve_spd: matrix not positive definite (pivot " +
                               std::to_string(j) + ")");
        }
        diag = std::sqrt(diag);
        l.at(j, j) = diag;
        for (std::size_t i = j + 1; i < n; ++i) {
            double v = l.at(i, j);
            for (std::size_t k = 0; k < j; ++k) v -= l.at(i, k) * l.at(j, k);
            l.at(i, j) = v / diag;
        }
    }

    // Solve L y = b, then L^T x = y, one rhs column at a time.
    DenseMatrix x = b;
    for (std::size_t c = 0; c < b.cols(); ++c) {
        for (std::size_t i = 0; i < n; ++i) {
            double v = x.at(i, c);
            for (std::size_t k = 0; k < i; ++k) v -= l.at(i, k) * x.at(k, c);
            x.at(i, c) = v / l.at(i, i);
        }
        for (std::size_t ii = n; ii-- > 0;) {
            double v = x.at(ii, c);
            for (std::size_t k = ii + 1; k < n; ++k) v -= l.at(k, ii) * x.at(k, c);
            x.at(ii, c) = v / l.at(ii, ii);
        }
    }
    x.check_finite("solve_spd");
    return x;
}

std::vector<double> l2_normalize(std::span<const double> v, double eps) {
    std::vector<double> out(v.begin(), v.end());
    l2_normalize_in_place(out, eps);
    return out;
}

void l2_normalize_in_place(std::span<double> v, double eps) {
    double scale = norm2(v);
    if (scale < eps) scale = eps;
    for (double& x : v) x /= scale;
}

DenseMatrix pairwise_sq_dist(const DenseMatrix& rows_a, const DenseMatrix& rows_b) {
    if (rows_a.cols() != rows_b.cols()) {
        throw ShapeError("pairwise_sq_dist: " + shape_str(rows_a) + " vs " +
                         shape_str(rows_b));
    }
    DenseMatrix out(rows_a.rows(), rows_b.rows());
    for (std::size_t i = 0; i < rows_a.rows(); ++i) {
        for (std::size_t j = 0; j < rows_b.rows(); ++j) {
            double d = squared_distance(rows_a.row(i), rows_b.row(j));
            out.at(i, j) = d < 0.0 ? 0.0 : d;
        }
    }
    return out;
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

double norm2(std::span<const double> v) { return std::sqrt(dot(v, v)); }

}  // namespace vawe
