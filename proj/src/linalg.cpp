#include "soh/linalg.hpp"

#include <cmath>
#include <cstddef>

#include "soh/errors.hpp"

namespace soh {

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::transpose() const {
    Matrix t(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r)
        for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
    return t;
}

Matrix Matrix::operator*(const Matrix& rhs) const {
    if (cols_ != rhs.rows_) throw Error("matrix multiply: dimension mismatch");
    Matrix out(rows_, rhs.cols_);
    for (std::size_t r = 0; r < rows_; ++r) {
        for (std::size_t k = 0; k < cols_; ++k) {
            const double a = (*this)(r, k);
            if (a == 0.0) continue;
            for (std::size_t c = 0; c < rhs.cols_; ++c) out(r, c) += a * rhs(k, c);
        }
    }
    return out;
}

Matrix Matrix::gram() const {
    Matrix g(cols_, cols_);
    for (std::size_t r = 0; r < rows_; ++r) {
        const double* row = data_.data() + r * cols_;
        for (std::size_t i = 0; i < cols_; ++i) {
            const double a = row[i];
            if (a == 0.0) continue;
            for (std::size_t j = i; j < cols_; ++j) g(i, j) += a * row[j];
        }
    }
    for (std::size_t i = 0; i < cols_; ++i)
        for (std::size_t j = 0; j < i; ++j) g(i, j) = g(j, i);
    return g;
}

std::vector<double> Matrix::mul(const std::vector<double>& v) const {
    if (v.size() != cols_) throw Error("matrix-vector multiply: dimension mismatch");
    std::vector<double> out(rows_, 0.0);
    for (std::size_t r = 0; r < rows_; ++r) {
        double acc = 0.0;
        const double* row = data_.data() + r * cols_;
        for (std::size_t c = 0; c < cols_; ++c) acc += row[c] * v[c];
        out[r] = acc;
    }
    return out;
}

std::vector<double> Matrix::tmul(const std::vector<double>& v) const {
    if (v.size() != rows_) throw Error("matrix^T-vector multiply: dimension mismatch");
    std::vector<double> out(cols_, 0.0);
    for (std::size_t r = 0; r < rows_; ++r) {
        const double a = v[r];
        if (a == 0.0) continue;
        const double* row = data_.data() + r * cols_;
        for (std::size_t c = 0; c < cols_; ++c) out[c] += a * row[c];
    }
    return out;
}

Cholesky::Cholesky(const Matrix& a) {
    if (a.rows() != a.cols()) throw Error("cholesky: matrix not square");
    const std::size_t n = a.rows();
    lower_ = Matrix(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        double diag = a(j, j);
        for (std::size_t k = 0; k < j; ++k) diag -= lower_(j, k) * lower_(j, k);
        if (!(diag > 0.0) || !std::isfinite(diag))
            throw Error("cholesky: matrix not positive definite");
        lower_(j, j) = std::sqrt(diag);
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = a(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= lower_(i, k) * lower_(j, k);
            lower_(i, j) = s / lower_(j, j);
        }
    }
}

std::vector<double> Cholesky::solve(const std::vector<double>& b) const {
    const std::size_t n = lower_.rows();
    if (b.size() != n) throw Error("cholesky solve: dimension mismatch");
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = b[i];
        for (std::size_t k = 0; k < i; ++k) s -= lower_(i, k) * y[k];
        y[i] = s / lower_(i, i);
    }
    std::vector<double> x(n);
    for (std::size_t ii = n; ii-- > 0;) {
        double s = y[ii];
        for (std::size_t k = ii + 1; k < n; ++k) s -= lower_(k, ii) * x[k];
        x[ii] = s / lower_(ii, ii);
    }
    return x;
}

Matrix Cholesky::solve(const Matrix& b) const {
    Matrix out(b.rows(), b.cols());
    std::vector<double> col(b.rows());
    for (std::size_t c = 0; c < b.cols(); ++c) {
        for (std::size_t r = 0; r < b.rows(); ++r) col[r] = b(r, c);
        std::vector<double> x = solve(col);
        for (std::size_t r = 0; r < b.rows(); ++r) out(r, c) = x[r];
    }
    return out;
}

Matrix Cholesky::inverse() const { return solve(Matrix::identity(lower_.rows())); }

double Cholesky::log_det() const {
    double s = 0.0;
    for (std::size_t i = 0; i < lower_.rows(); ++i) s += std::log(lower_(i, i));
    return 2.0 * s;
}

Cholesky cholesky_with_jitter(Matrix a, double scale, double& used_jitter,
                              double jitter_lo, double jitter_hi) {
    used_jitter = 0.0;
    for (double jitter = 0.0;;) {
        try {
            return Cholesky(a);
        } catch (const Error&) {
            jitter = (jitter == 0.0) ? jitter_lo : jitter * 10.0;
            if (jitter > jitter_hi) throw;
            const double bump = jitter * scale - used_jitter * scale;
            for (std::size_t i = 0; i < a.rows(); ++i) a(i, i) += bump;
            used_jitter = jitter;
        }
    }
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

}  // namespace soh
