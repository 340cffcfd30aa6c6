#pragma once

#include <array>
#include <vector>

#include "core/tensor.hpp"

// Differentiable operator set. Layout conventions:
//   [T,C,H,W]  per-frame 2-D feature maps of one clip (frame-major)
//   [C,T,H,W]  3-D conv layout (channel-major, frontend only)
//   [C,T]      temporal feature sequence
//   [N,C]      attention tokens (N spatial positions, C channels)
// Elementwise ops accept any rank. Broadcasting is limited to the per-channel
// and per-row forms below.

namespace ral {

// ---- elementwise ----
template <typename S> TensorT<S> add(const TensorT<S>& a, const TensorT<S>& b);
template <typename S> TensorT<S> sub(const TensorT<S>& a, const TensorT<S>& b);
template <typename S> TensorT<S> mul(const TensorT<S>& a, const TensorT<S>& b);
template <typename S> TensorT<S> scalar_mul(const TensorT<S>& a, double c);
template <typename S> TensorT<S> abs_(const TensorT<S>& x);
template <typename S> TensorT<S> relu(const TensorT<S>& x);
template <typename S> TensorT<S> sigmoid(const TensorT<S>& x);
// y = alpha * x with a trainable scalar tensor alpha of shape [1].
template <typename S> TensorT<S> mul_scalar_tensor(const TensorT<S>& x, const TensorT<S>& alpha);

// ---- limited broadcasting ----
// channel axis: rank-2 [C,T] and rank-3 [C,H,W] use axis 0, rank-4 [T,C,H,W] axis 1.
template <typename S> TensorT<S> add_channel(const TensorT<S>& x, const TensorT<S>& b);
template <typename S> TensorT<S> mul_channel(const TensorT<S>& x, const TensorT<S>& s);
template <typename S> TensorT<S> add_row(const TensorT<S>& x, const TensorT<S>& b);  // [M,N]+[N]

// ---- linear algebra ----
template <typename S> TensorT<S> matmul(const TensorT<S>& a, const TensorT<S>& b);
template <typename S> TensorT<S> transpose2(const TensorT<S>& a);

// ---- reductions ----
template <typename S> TensorT<S> sum_all(const TensorT<S>& x);
template <typename S> TensorT<S> mean_all(const TensorT<S>& x);
// per-channel spatial mean: [C,H,W] -> [C], [T,C,H,W] -> [T,C]
template <typename S> TensorT<S> global_avg_pool(const TensorT<S>& x);
template <typename S> TensorT<S> mean_lastdim(const TensorT<S>& x);  // [C,T] -> [C]

// ---- movement ----
template <typename S> TensorT<S> reshape(const TensorT<S>& x, Shape shape);
template <typename S> TensorT<S> slice0(const TensorT<S>& x, int i);
template <typename S> TensorT<S> slice0_range(const TensorT<S>& x, int i0, int i1);
template <typename S> TensorT<S> stack0(const std::vector<TensorT<S>>& xs);
template <typename S> TensorT<S> concat0(const TensorT<S>& a, const TensorT<S>& b);
template <typename S> TensorT<S> slice_lastdim(const TensorT<S>& x, int c0, int c1);
template <typename S> TensorT<S> flip_lastdim(const TensorT<S>& x);
template <typename S> TensorT<S> concat_lastdim(const TensorT<S>& a, const TensorT<S>& b);
template <typename S> TensorT<S> swap01(const TensorT<S>& x);  // [A,B,...] -> [B,A,...]
template <typename S> TensorT<S> chw_to_nc(const TensorT<S>& x);              // [C,H,W] -> [H*W,C]
template <typename S> TensorT<S> nc_to_chw(const TensorT<S>& x, int h, int w);  // [N,C] -> [C,H,W]
template <typename S> TensorT<S> concat_channel(const std::vector<TensorT<S>>& xs);  // [Ci,T] cat

// ---- convolutions / pooling ----
template <typename S>
TensorT<S> conv1d(const TensorT<S>& x, const TensorT<S>& w, int stride = 1, int padding = 0,
                  int dilation = 1);
template <typename S>
TensorT<S> conv2d(const TensorT<S>& x, const TensorT<S>& w, int stride = 1, int padding = 0);
template <typename S>
TensorT<S> conv3d(const TensorT<S>& x, const TensorT<S>& w, const std::array<int, 3>& stride,
                  const std::array<int, 3>& padding);
template <typename S> TensorT<S> maxpool_hw(const TensorT<S>& x, int kh, int kw);

// ---- normalization / activations over structured axes ----
template <typename S> TensorT<S> softmax_lastdim(const TensorT<S>& x);
template <typename S>
TensorT<S> layer_norm_lastdim(const TensorT<S>& x, const TensorT<S>& gain, const TensorT<S>& bias,
                              double eps = 1e-5);
// Batch norm over all frames of a clip: statistics per channel over (T,H,W).
// running_mean/var are module state, updated in training mode only.
template <typename S>
TensorT<S> batch_norm(const TensorT<S>& x, const TensorT<S>& gain, const TensorT<S>& bias,
                      std::vector<S>& running_mean, std::vector<S>& running_var, bool training,
                      double momentum = 0.1, double eps = 1e-5);

// ---- task-specific ----
// y = sign(x) * max(|x| - tau_c, 0); tau [C] for rank-3 x, [T,C] for rank-4 x.
template <typename S> TensorT<S> soft_threshold(const TensorT<S>& x, const TensorT<S>& tau);
template <typename S>
TensorT<S> cross_entropy_logits(const TensorT<S>& logits, const std::vector<int>& labels);
template <typename S>
TensorT<S> dropout(const TensorT<S>& x, double rate, Rng& rng, bool training);
// deterministic-mask variant (mask already includes the 1/keep scale)
template <typename S>
TensorT<S> dropout_mask(const TensorT<S>& x, const std::vector<S>& mask);

#define RAL_EXTERN_OPS(S)                                                                         \
    extern template TensorT<S> add<S>(const TensorT<S>&, const TensorT<S>&);                     \
    extern template TensorT<S> sub<S>(const TensorT<S>&, const TensorT<S>&);                     \
    extern template TensorT<S> mul<S>(const TensorT<S>&, const TensorT<S>&);                     \
    extern template TensorT<S> scalar_mul<S>(const TensorT<S>&, double);                         \
    extern template TensorT<S> abs_<S>(const TensorT<S>&);                                       \
    extern template TensorT<S> relu<S>(const TensorT<S>&);                                       \
    extern template TensorT<S> sigmoid<S>(const TensorT<S>&);                                    \
    extern template TensorT<S> mul_scalar_tensor<S>(const TensorT<S>&, const TensorT<S>&);       \
    extern template TensorT<S> add_channel<S>(const TensorT<S>&, const TensorT<S>&);             \
    extern template TensorT<S> mul_channel<S>(const TensorT<S>&, const TensorT<S>&);             \
    extern template TensorT<S> add_row<S>(const TensorT<S>&, const TensorT<S>&);                 \
    extern template TensorT<S> matmul<S>(const TensorT<S>&, const TensorT<S>&);                  \
    extern template TensorT<S> transpose2<S>(const TensorT<S>&);                                 \
    extern template TensorT<S> sum_all<S>(const TensorT<S>&);                                    \
    extern template TensorT<S> mean_all<S>(const TensorT<S>&);                                   \
    extern template TensorT<S> global_avg_pool<S>(const TensorT<S>&);                            \
    extern template TensorT<S> mean_lastdim<S>(const TensorT<S>&);                               \
    extern template TensorT<S> reshape<S>(const TensorT<S>&, Shape);                             \
    extern template TensorT<S> slice0<S>(const TensorT<S>&, int);                                \
    extern template TensorT<S> slice0_range<S>(const TensorT<S>&, int, int);                     \
    extern template TensorT<S> stack0<S>(const std::vector<TensorT<S>>&);                        \
    extern template TensorT<S> concat0<S>(const TensorT<S>&, const TensorT<S>&);                 \
    extern template TensorT<S> slice_lastdim<S>(const TensorT<S>&, int, int);                    \
    extern template TensorT<S> flip_lastdim<S>(const TensorT<S>&);                               \
    extern template TensorT<S> concat_lastdim<S>(const TensorT<S>&, const TensorT<S>&);          \
    extern template TensorT<S> swap01<S>(const TensorT<S>&);                                     \
    extern template TensorT<S> chw_to_nc<S>(const TensorT<S>&);                                  \
    extern template TensorT<S> nc_to_chw<S>(const TensorT<S>&, int, int);                        \
    extern template TensorT<S> concat_channel<S>(const std::vector<TensorT<S>>&);                \
    extern template TensorT<S> conv1d<S>(const TensorT<S>&, const TensorT<S>&, int, int, int);   \
    extern template TensorT<S> conv2d<S>(const TensorT<S>&, const TensorT<S>&, int, int);        \
    extern template TensorT<S> conv3d<S>(const TensorT<S>&, const TensorT<S>&,                   \
                                         const std::array<int, 3>&, const std::array<int, 3>&);  \
    extern template TensorT<S> maxpool_hw<S>(const TensorT<S>&, int, int);                       \
    extern template TensorT<S> softmax_lastdim<S>(const TensorT<S>&);                            \
    extern template TensorT<S> layer_norm_lastdim<S>(const TensorT<S>&, const TensorT<S>&,       \
                                                     const TensorT<S>&, double);                 \
    extern template TensorT<S> batch_norm<S>(const TensorT<S>&, const TensorT<S>&,               \
                                             const TensorT<S>&, std::vector<S>&,                 \
                                             std::vector<S>&, bool, double, double);             \
    extern template TensorT<S> soft_threshold<S>(const TensorT<S>&, const TensorT<S>&);          \
    extern template TensorT<S> cross_entropy_logits<S>(const TensorT<S>&,                        \
                                                       const std::vector<int>&);                 \
    extern template TensorT<S> dropout<S>(const TensorT<S>&, double, Rng&, bool);                \
    extern template TensorT<S> dropout_mask<S>(const TensorT<S>&, const std::vector<S>&);

RAL_EXTERN_OPS(float)
RAL_EXTERN_OPS(double)
#undef RAL_EXTERN_OPS

}  // namespace ral
