#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace genban {

// Dense row-major matrix. Just enough linear algebra for summary statistics,
// Bayesian linear regression and small Newton systems.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0) : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

    static Matrix identity(std::size_t n);

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    const std::vector<double>& values() const { return data_; }

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);
std::vector<double> matvec(const Matrix& a, std::span<const double> x);
double dot(std::span<const double> a, std::span<const double> b);
double frobenius_norm(const Matrix& a);

// Lower-triangular L with a = L L^T. Returns false when a is not
// (numerically) positive definite.
bool cholesky(const Matrix& a, Matrix& lower);

// x solving (L L^T) x = b for a Cholesky factor L.
std::vector<double> cholesky_solve(const Matrix& lower, std::span<const double> b);

// Inverse of an SPD matrix; throws ContractError when not positive definite.
Matrix spd_inverse(const Matrix& a);

// (mat + eps I)^{-1}. Requires eps > 0 and mat PSD; throws ContractError otherwise.
Matrix ridge_inverse(const Matrix& mat, double eps);

} // namespace genban
