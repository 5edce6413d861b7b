#pragma once

#include <cstddef>
#include <vector>

namespace soh {

/// Dense row-major matrix. Sized for the small systems in this project
/// (regression designs have at most a dozen columns).
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Matrix identity(std::size_t n);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    const std::vector<double>& data() const { return data_; }
    std::vector<double>& data() { return data_; }

    Matrix transpose() const;
    Matrix operator*(const Matrix& rhs) const;

    /// A^T * A, exploiting symmetry.
    Matrix gram() const;

    std::vector<double> mul(const std::vector<double>& v) const;
    std::vector<double> tmul(const std::vector<double>& v) const;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// Cholesky factorization of a symmetric positive definite matrix,
/// giving solves and log-determinants without explicit inversion.
class Cholesky {
public:
    Cholesky() = default;

    /// Throws soh::Error if the matrix is not positive definite.
    explicit Cholesky(const Matrix& a);

    std::vector<double> solve(const std::vector<double>& b) const;
    Matrix solve(const Matrix& b) const;
    Matrix inverse() const;

    /// log det(A) = 2 * sum(log L_ii).
    double log_det() const;

private:
    Matrix lower_;
};

/// Attempts Cholesky with escalating diagonal jitter. Returns the jitter
/// that succeeded via `used_jitter` (0 when none was needed).
Cholesky cholesky_with_jitter(Matrix a, double scale, double& used_jitter,
                              double jitter_lo = 1e-10, double jitter_hi = 1e-6);

double dot(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace soh
