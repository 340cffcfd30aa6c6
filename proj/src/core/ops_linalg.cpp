#include "core/gemm.hpp"
#include "core/ops.hpp"

namespace ral {

template <typename S>
TensorT<S> matmul(const TensorT<S>& a, const TensorT<S>& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0))
        throw DimensionError("matmul: incompatible shapes " + shape_str(a.shape()) + " vs " +
                             shape_str(b.shape()));
    const int M = a.dim(0), K = a.dim(1), N = b.dim(1);
    auto y = TensorT<S>::zeros({M, N});
    detail::gemm_nn(M, N, K, a.data(), b.data(), y.data(), false);
    record_op<S>("matmul", a.requires_grad() || b.requires_grad(), y, [a, b, y, M, K, N]() {
        const auto& gy = y.st()->g;
        if (gy.empty()) return;
        if (a.requires_grad()) {
            a.st()->ensure_grad();
            // ga += gy * b^T
            detail::gemm_nt(M, K, N, gy.data(), b.data(), a.st()->g.data(), true);
        }
        if (b.requires_grad()) {
            b.st()->ensure_grad();
            // gb += a^T * gy
            detail::gemm_tn(K, N, M, a.data(), gy.data(), b.st()->g.data(), true);
        }
    });
    return y;
}

template <typename S>
TensorT<S> transpose2(const TensorT<S>& a) {
    if (a.rank() != 2)
        throw DimensionError("transpose2: expects rank-2, got " + shape_str(a.shape()));
    const int M = a.dim(0), N = a.dim(1);
    auto y = TensorT<S>::zeros({N, M});
    const S* pa = a.data();
    S* py = y.data();
    for (int i = 0; i < M; ++i)
        for (int j = 0; j < N; ++j) py[static_cast<std::int64_t>(j) * M + i] = pa[static_cast<std::int64_t>(i) * N + j];
    record_op<S>("transpose2", a.requires_grad(), y, [a, y, M, N]() {
        const auto& gy = y.st()->g;
        if (gy.empty() || !a.requires_grad()) return;
        a.st()->ensure_grad();
        auto& ga = a.st()->g;
        for (int i = 0; i < M; ++i)
            for (int j = 0; j < N; ++j)
                ga[static_cast<std::int64_t>(i) * N + j] += gy[static_cast<std::int64_t>(j) * M + i];
    });
    return y;
}

template TensorT<float> matmul<float>(const TensorT<float>&, const TensorT<float>&);
template TensorT<double> matmul<double>(const TensorT<double>&, const TensorT<double>&);
template TensorT<float> transpose2<float>(const TensorT<float>&);
template TensorT<double> transpose2<double>(const TensorT<double>&);

}  // namespace ral
