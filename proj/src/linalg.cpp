#include "genban/linalg.hpp"

#include <cmath>

#include "genban/errors.hpp"

namespace genban {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows * cols) throw ContractError("matrix: data size does not match shape");
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) throw ContractError("matmul: inner dimensions differ");
    Matrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
        }
    return c;
}

Matrix transpose(const Matrix& a) {
    Matrix t(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
    return t;
}

std::vector<double> matvec(const Matrix& a, std::span<const double> x) {
    if (a.cols() != x.size()) throw ContractError("matvec: dimension mismatch");
    std::vector<double> y(a.rows(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) y[i] = dot(a.row(i), x);
    return y;
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double frobenius_norm(const Matrix& a) {
    double s = 0.0;
    for (double v : a.values()) s += v * v;
    return std::sqrt(s);
}

bool cholesky(const Matrix& a, Matrix& lower) {
    const std::size_t n = a.rows();
    if (a.cols() != n) throw ContractError("cholesky: matrix is not square");
    lower = Matrix(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        double d = a(j, j);
        for (std::size_t k = 0; k < j; ++k) d -= lower(j, k) * lower(j, k);
        if (!(d > 0.0)) return false;
        const double ljj = std::sqrt(d);
        lower(j, j) = ljj;
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = a(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= lower(i, k) * lower(j, k);
            lower(i, j) = s / ljj;
        }
    }
    return true;
}

std::vector<double> cholesky_solve(const Matrix& lower, std::span<const double> b) {
    const std::size_t n = lower.rows();
    std::vector<double> y(b.begin(), b.end());
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < i; ++k) y[i] -= lower(i, k) * y[k];
        y[i] /= lower(i, i);
    }
    for (std::size_t ii = n; ii-- > 0;) {
        for (std::size_t k = ii + 1; k < n; ++k) y[ii] -= lower(k, ii) * y[k];
        y[ii] /= lower(ii, ii);
    }
    return y;
}

Matrix spd_inverse(const Matrix& a) {
    Matrix lower;
    if (!cholesky(a, lower)) throw ContractError("spd_inverse: matrix is not positive definite");
    const std::size_t n = a.rows();
    // inv = L^{-T} L^{-1}; form L^{-1} by forward substitution first.
    Matrix linv(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        linv(j, j) = 1.0 / lower(j, j);
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = 0.0;
            for (std::size_t k = j; k < i; ++k) s -= lower(i, k) * linv(k, j);
            linv(i, j) = s / lower(i, i);
        }
    }
    Matrix inv(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j <= i; ++j) {
            double s = 0.0;
            for (std::size_t k = i; k < n; ++k) s += linv(k, i) * linv(k, j);
            inv(i, j) = s;
            inv(j, i) = s;
        }
    return inv;
}

Matrix ridge_inverse(const Matrix& mat, double eps) {
    if (!(eps > 0.0)) throw ContractError("ridge_inverse: eps must be positive");
    if (mat.rows() != mat.cols()) throw ContractError("ridge_inverse: matrix is not square");
    Matrix shifted = mat;
    for (std::size_t i = 0; i < mat.rows(); ++i) shifted(i, i) += eps;
    Matrix lower;
    if (!cholesky(shifted, lower)) throw ContractError("ridge_inverse: input is not positive semidefinite");
    return spd_inverse(shifted);
}

} // namespace genban
