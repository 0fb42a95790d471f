#pragma once

#include <cstdint>

namespace dscx::kern {

// Accumulating GEMM kernels over raw row-major buffers. Filter counts are
// small here while the im2col panels are large, so each loop nest is ordered
// to stream the largest operand exactly once and keep the small ones
// resident. Per-element accumulation order is fixed by construction, so a
// given call is bit-reproducible.

// C[M x N] += A[M x K] * B[K x N]; streams B once, C rows stay hot.
inline void mm_acc(double* C, const double* A, const double* B, int M, int K, int N) {
    for (int k = 0; k < K; ++k) {
        const double* b = B + static_cast<int64_t>(k) * N;
        for (int m = 0; m < M; ++m) {
            const double av = A[static_cast<int64_t>(m) * K + k];
            double* c = C + static_cast<int64_t>(m) * N;
            for (int n = 0; n < N; ++n) c[n] += av * b[n];
        }
    }
}

// Dot product over eight accumulator lanes. The lane array form is what the
// auto-vectorizer folds into vector FMAs without being allowed to reassociate
// anything itself; the summation order is fixed by this code alone.
inline double dot8(const double* a, const double* b, int n) {
    double s[8] = {0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0};
    int i = 0;
    for (; i + 8 <= n; i += 8)
        for (int l = 0; l < 8; ++l) s[l] += a[i + l] * b[i + l];
    double tail = 0.0;
    for (; i < n; ++i) tail += a[i] * b[i];
    return (((s[0] + s[1]) + (s[2] + s[3])) + ((s[4] + s[5]) + (s[6] + s[7]))) + tail;
}

// C[M x N] += A[M x K] * B^T where B is [N x K]; streams B once.
inline void mm_nt_acc(double* C, const double* A, const double* B, int M, int K, int N) {
    for (int n = 0; n < N; ++n) {
        const double* b = B + static_cast<int64_t>(n) * K;
        for (int m = 0; m < M; ++m)
            C[static_cast<int64_t>(m) * N + n] += dot8(A + static_cast<int64_t>(m) * K, b, K);
    }
}

// C[K x N] += A^T * B where A is [M x K], B is [M x N]; streams C once.
inline void mm_tn_acc(double* C, const double* A, const double* B, int M, int K, int N) {
    for (int k = 0; k < K; ++k) {
        double* c = C + static_cast<int64_t>(k) * N;
        for (int m = 0; m < M; ++m) {
            const double av = A[static_cast<int64_t>(m) * K + k];
            const double* b = B + static_cast<int64_t>(m) * N;
            for (int n = 0; n < N; ++n) c[n] += av * b[n];
        }
    }
}

} // namespace dscx::kern
