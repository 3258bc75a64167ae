#pragma once

#include <cstddef>

namespace genban::kernels {

// Row-major dense products used by the MLP. Each parallel variant splits the
// output over threads without changing the per-element accumulation order,
// so serial and parallel results are bit-identical.

// C (m x n) = A (m x k) * B (k x n), or C += ... when accumulate is set.
void gemm_serial(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n,
                 bool accumulate = false);
void gemm_parallel(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n,
                   bool accumulate = false);

// C (k x n) = A^T * B with A (m x k), B (m x n); rows of A and B are summed in order.
void gemm_tn_serial(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n,
                    bool accumulate = false);
void gemm_tn_parallel(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n,
                      bool accumulate = false);

// out (cols x rows) = in (rows x cols)^T
void transpose(const double* in, double* out, std::size_t rows, std::size_t cols);

// Rows per OpenMP chunk; below 2 chunks the parallel variants run inline.
inline constexpr std::size_t kRowBlock = 32;

} // namespace genban::kernels
