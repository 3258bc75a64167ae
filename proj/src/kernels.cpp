#include "genban/kernels.hpp"

#include <algorithm>
#include <cstring>

namespace genban::kernels {

namespace {

// c += a B for one row, in register-sized column chunks so c stays out of
// memory across the p loop. Zero entries of a (ReLU) are skipped.
void gemv_row(const double* __restrict a, const double* __restrict b, double* __restrict c, std::size_t k,
              std::size_t n) {
    constexpr std::size_t kChunk = 32;
    std::size_t j0 = 0;
    for (; j0 + kChunk <= n; j0 += kChunk) {
        double acc[kChunk];
        for (std::size_t j = 0; j < kChunk; ++j) acc[j] = c[j0 + j];
        for (std::size_t p = 0; p < k; ++p) {
            const double v = a[p];
            if (v == 0.0) continue;
            const double* brow = b + p * n + j0;
            for (std::size_t j = 0; j < kChunk; ++j) acc[j] += v * brow[j];
        }
        for (std::size_t j = 0; j < kChunk; ++j) c[j0 + j] = acc[j];
    }
    if (j0 == n) return;
    for (std::size_t p = 0; p < k; ++p) {
        const double v = a[p];
        if (v == 0.0) continue;
        const double* brow = b + p * n;
        for (std::size_t j = j0; j < n; ++j) c[j] += v * brow[j];
    }
}

// Rows [r0, r1) of C = A B. Four rows share each load of a B row; every
// C(i, j) is accumulated over p = 0..k-1 in order regardless of blocking.
void gemm_rows(const double* __restrict a, const double* __restrict b, double* __restrict c, std::size_t r0,
               std::size_t r1, std::size_t k, std::size_t n, bool accumulate) {
    if (!accumulate) std::memset(c + r0 * n, 0, (r1 - r0) * n * sizeof(double));
    std::size_t i = r0;
    for (; i + 4 <= r1; i += 4) {
        double* c0 = c + i * n;
        double* c1 = c0 + n;
        double* c2 = c1 + n;
        double* c3 = c2 + n;
        const double* a0 = a + i * k;
        const double* a1 = a0 + k;
        const double* a2 = a1 + k;
        const double* a3 = a2 + k;
        for (std::size_t p = 0; p < k; ++p) {
            const double* brow = b + p * n;
            const double v0 = a0[p], v1 = a1[p], v2 = a2[p], v3 = a3[p];
            for (std::size_t j = 0; j < n; ++j) {
                const double bj = brow[j];
                c0[j] += v0 * bj;
                c1[j] += v1 * bj;
                c2[j] += v2 * bj;
                c3[j] += v3 * bj;
            }
        }
    }
    for (; i < r1; ++i) gemv_row(a + i * k, b, c + i * n, k, n);
}

// Rows [q0, q1) of C = A^T B.
void gemm_tn_rows(const double* __restrict a, const double* __restrict b, double* __restrict c, std::size_t q0,
                  std::size_t q1, std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
    if (!accumulate) std::memset(c + q0 * n, 0, (q1 - q0) * n * sizeof(double));
    for (std::size_t r = 0; r < m; ++r) {
        const double* arow = a + r * k;
        const double* brow = b + r * n;
        for (std::size_t q = q0; q < q1; ++q) {
            const double v = arow[q];
            if (v == 0.0) continue; // ReLU activations are often exactly zero
            double* cq = c + q * n;
            for (std::size_t j = 0; j < n; ++j) cq[j] += v * brow[j];
        }
    }
}

} // namespace

void gemm_serial(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n,
                 bool accumulate) {
    gemm_rows(a, b, c, 0, m, k, n, accumulate);
}

void gemm_parallel(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n,
                   bool accumulate) {
    const std::size_t blocks = (m + kRowBlock - 1) / kRowBlock;
    if (blocks < 2) {
        gemm_rows(a, b, c, 0, m, k, n, accumulate);
        return;
    }
#pragma omp parallel for schedule(static)
    for (std::size_t blk = 0; blk < blocks; ++blk) {
        const std::size_t r0 = blk * kRowBlock;
        gemm_rows(a, b, c, r0, std::min(m, r0 + kRowBlock), k, n, accumulate);
    }
}

void gemm_tn_serial(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n,
                    bool accumulate) {
    gemm_tn_rows(a, b, c, 0, k, m, k, n, accumulate);
}

void gemm_tn_parallel(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n,
                      bool accumulate) {
    constexpr std::size_t kOutBlock = 8;
    const std::size_t blocks = (k + kOutBlock - 1) / kOutBlock;
    if (blocks < 2) {
        gemm_tn_rows(a, b, c, 0, k, m, k, n, accumulate);
        return;
    }
#pragma omp parallel for schedule(static)
    for (std::size_t blk = 0; blk < blocks; ++blk) {
        const std::size_t q0 = blk * kOutBlock;
        gemm_tn_rows(a, b, c, q0, std::min(k, q0 + kOutBlock), m, k, n, accumulate);
    }
}

void transpose(const double* in, double* out, std::size_t rows, std::size_t cols) {
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) out[j * rows + i] = in[i * cols + j];
}

} // namespace genban::kernels
