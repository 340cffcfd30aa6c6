#pragma once

#include <cstring>

// Small row-major GEMM kernels. Loop orders keep the innermost axis
// contiguous in both operands so -O3 can vectorize them.

namespace ral::detail {

// C[M,N] (+)= A[M,K] * B[K,N]
template <typename S>
void gemm_nn(int M, int N, int K, const S* A, const S* B, S* C, bool accumulate) {
    for (int i = 0; i < M; ++i) {
        S* c = C + static_cast<std::size_t>(i) * N;
        if (!accumulate)
            for (int j = 0; j < N; ++j) c[j] = S(0);
        const S* a = A + static_cast<std::size_t>(i) * K;
        for (int k = 0; k < K; ++k) {
            const S av = a[k];
            const S* b = B + static_cast<std::size_t>(k) * N;
            for (int j = 0; j < N; ++j) c[j] += av * b[j];
        }
    }
}

// C[M,N] (+)= A[K,M]^T * B[K,N]
template <typename S>
void gemm_tn(int M, int N, int K, const S* A, const S* B, S* C, bool accumulate) {
    if (!accumulate)
        for (std::size_t i = 0; i < static_cast<std::size_t>(M) * N; ++i) C[i] = S(0);
    for (int k = 0; k < K; ++k) {
        const S* a = A + static_cast<std::size_t>(k) * M;
        const S* b = B + static_cast<std::size_t>(k) * N;
        for (int i = 0; i < M; ++i) {
            const S av = a[i];
            S* c = C + static_cast<std::size_t>(i) * N;
            for (int j = 0; j < N; ++j) c[j] += av * b[j];
        }
    }
}

// C[M,N] (+)= A[M,K] * B[N,K]^T
template <typename S>
void gemm_nt(int M, int N, int K, const S* A, const S* B, S* C, bool accumulate) {
    for (int i = 0; i < M; ++i) {
        const S* a = A + static_cast<std::size_t>(i) * K;
        S* c = C + static_cast<std::size_t>(i) * N;
        for (int j = 0; j < N; ++j) {
            const S* b = B + static_cast<std::size_t>(j) * K;
            S acc = S(0);
            for (int k = 0; k < K; ++k) acc += a[k] * b[k];
            c[j] = accumulate ? c[j] + acc : acc;
        }
    }
}

}  // namespace ral::detail
