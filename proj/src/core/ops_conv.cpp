#include <cstring>

#include "core/gemm.hpp"
#include "core/ops.hpp"

namespace ral {

namespace {

// cols layout: [(ci*kh+i)*kw+j][ho*Wo+wo], row-major
template <typename S>
void im2col(const S* x, int Ci, int H, int W, int kh, int kw, int stride, int pad, int Ho, int Wo,
            S* cols) {
    for (int ci = 0; ci < Ci; ++ci) {
        const S* xc = x + static_cast<std::int64_t>(ci) * H * W;
        for (int i = 0; i < kh; ++i)
            for (int j = 0; j < kw; ++j) {
                S* row = cols + (static_cast<std::int64_t>(ci) * kh * kw + i * kw + j) *
                                    (static_cast<std::int64_t>(Ho) * Wo);
                for (int ho = 0; ho < Ho; ++ho) {
                    const int ih = ho * stride - pad + i;
                    S* seg = row + static_cast<std::int64_t>(ho) * Wo;
                    if (ih < 0 || ih >= H) {
                        for (int wo = 0; wo < Wo; ++wo) seg[wo] = S(0);
                        continue;
                    }
                    const S* xrow = xc + static_cast<std::int64_t>(ih) * W;
                    for (int wo = 0; wo < Wo; ++wo) {
                        const int iw = wo * stride - pad + j;
                        seg[wo] = (iw >= 0 && iw < W) ? xrow[iw] : S(0);
                    }
                }
            }
    }
}

template <typename S>
void col2im_acc(const S* cols, int Ci, int H, int W, int kh, int kw, int stride, int pad, int Ho,
                int Wo, S* gx) {
    for (int ci = 0; ci < Ci; ++ci) {
        S* xc = gx + static_cast<std::int64_t>(ci) * H * W;
        for (int i = 0; i < kh; ++i)
            for (int j = 0; j < kw; ++j) {
                const S* row = cols + (static_cast<std::int64_t>(ci) * kh * kw + i * kw + j) *
                                          (static_cast<std::int64_t>(Ho) * Wo);
                for (int ho = 0; ho < Ho; ++ho) {
                    const int ih = ho * stride - pad + i;
                    if (ih < 0 || ih >= H) continue;
                    const S* seg = row + static_cast<std::int64_t>(ho) * Wo;
                    S* xrow = xc + static_cast<std::int64_t>(ih) * W;
                    for (int wo = 0; wo < Wo; ++wo) {
                        const int iw = wo * stride - pad + j;
                        if (iw >= 0 && iw < W) xrow[iw] += seg[wo];
                    }
                }
            }
    }
}

// 3-D analogue; cols: [((ci*kt+a)*kh+i)*kw+j][(to*Ho+ho)*Wo+wo]
template <typename S>
void vol2col(const S* x, int Ci, int T, int H, int W, int kt, int kh, int kw, int st, int sh,
             int sw, int pt, int ph, int pw, int To, int Ho, int Wo, S* cols) {
    const std::int64_t out_inner = static_cast<std::int64_t>(To) * Ho * Wo;
    for (int ci = 0; ci < Ci; ++ci)
        for (int a = 0; a < kt; ++a)
            for (int i = 0; i < kh; ++i)
                for (int j = 0; j < kw; ++j) {
                    S* row = cols + (((static_cast<std::int64_t>(ci) * kt + a) * kh + i) * kw + j) *
                                        out_inner;
                    for (int to = 0; to < To; ++to) {
                        const int it = to * st - pt + a;
                        for (int ho = 0; ho < Ho; ++ho) {
                            const int ih = ho * sh - ph + i;
                            S* seg = row + (static_cast<std::int64_t>(to) * Ho + ho) * Wo;
                            if (it < 0 || it >= T || ih < 0 || ih >= H) {
                                for (int wo = 0; wo < Wo; ++wo) seg[wo] = S(0);
                                continue;
                            }
                            const S* xrow = x + ((static_cast<std::int64_t>(ci) * T + it) * H + ih) * W;
                            for (int wo = 0; wo < Wo; ++wo) {
                                const int iw = wo * sw - pw + j;
                                seg[wo] = (iw >= 0 && iw < W) ? xrow[iw] : S(0);
                            }
                        }
                    }
                }
}

template <typename S>
void col2vol_acc(const S* cols, int Ci, int T, int H, int W, int kt, int kh, int kw, int st,
                 int sh, int sw, int pt, int ph, int pw, int To, int Ho, int Wo, S* gx) {
    const std::int64_t out_inner = static_cast<std::int64_t>(To) * Ho * Wo;
    for (int ci = 0; ci < Ci; ++ci)
        for (int a = 0; a < kt; ++a)
            for (int i = 0; i < kh; ++i)
                for (int j = 0; j < kw; ++j) {
                    const S* row =
                        cols + (((static_cast<std::int64_t>(ci) * kt + a) * kh + i) * kw + j) *
                                   out_inner;
                    for (int to = 0; to < To; ++to) {
                        const int it = to * st - pt + a;
                        if (it < 0 || it >= T) continue;
                        for (int ho = 0; ho < Ho; ++ho) {
                            const int ih = ho * sh - ph + i;
                            if (ih < 0 || ih >= H) continue;
                            const S* seg = row + (static_cast<std::int64_t>(to) * Ho + ho) * Wo;
                            S* xrow = gx + ((static_cast<std::int64_t>(ci) * T + it) * H + ih) * W;
                            for (int wo = 0; wo < Wo; ++wo) {
                                const int iw = wo * sw - pw + j;
                                if (iw >= 0 && iw < W) xrow[iw] += seg[wo];
                            }
                        }
                    }
                }
}

inline int conv_out_extent(const char* op, int in, int k, int stride, int pad) {
    if (k > in + 2 * pad)
        throw DimensionError(std::string(op) + ": kernel extent " + std::to_string(k) +
                             " exceeds padded input extent " + std::to_string(in + 2 * pad));
    return (in + 2 * pad - k) / stride + 1;
}

}  // namespace

template <typename S>
TensorT<S> conv1d(const TensorT<S>& x, const TensorT<S>& w, int stride, int padding,
                  int dilation) {
    if (x.rank() != 2 || w.rank() != 3 || w.dim(1) != x.dim(0))
        throw DimensionError("conv1d: x " + shape_str(x.shape()) + " vs kernel " +
                             shape_str(w.shape()));
    const int Ci = x.dim(0), T = x.dim(1);
    const int Co = w.dim(0), k = w.dim(2);
    const int span = dilation * (k - 1) + 1;
    if (span > T + 2 * padding)
        throw DimensionError("conv1d: dilated kernel span " + std::to_string(span) +
                             " exceeds padded input extent " + std::to_string(T + 2 * padding));
    const int To = (T + 2 * padding - span) / stride + 1;
    auto y = TensorT<S>::zeros({Co, To});
    const S* px = x.data();
    const S* pw = w.data();
    S* py = y.data();
    for (int co = 0; co < Co; ++co)
        for (int to = 0; to < To; ++to) {
            S acc = S(0);
            for (int ci = 0; ci < Ci; ++ci) {
                const S* xr = px + static_cast<std::int64_t>(ci) * T;
                const S* wr = pw + (static_cast<std::int64_t>(co) * Ci + ci) * k;
                for (int a = 0; a < k; ++a) {
                    const int it = to * stride - padding + a * dilation;
                    if (it >= 0 && it < T) acc += wr[a] * xr[it];
                }
            }
            py[static_cast<std::int64_t>(co) * To + to] = acc;
        }
    record_op<S>("conv1d", x.requires_grad() || w.requires_grad(), y,
                 [x, w, y, Ci, T, Co, k, To, stride, padding, dilation]() {
                     const auto& gy = y.st()->g;
                     if (gy.empty()) return;
                     const S* px2 = x.data();
                     const S* pw2 = w.data();
                     for (int co = 0; co < Co; ++co)
                         for (int to = 0; to < To; ++to) {
                             const S g = gy[static_cast<std::int64_t>(co) * To + to];
                             if (g == S(0)) continue;
                             for (int ci = 0; ci < Ci; ++ci) {
                                 const std::int64_t wbase =
                                     (static_cast<std::int64_t>(co) * Ci + ci) * k;
                                 for (int a = 0; a < k; ++a) {
                                     const int it = to * stride - padding + a * dilation;
                                     if (it < 0 || it >= T) continue;
                                     if (w.requires_grad()) {
                                         w.st()->ensure_grad();
                                         w.st()->g[wbase + a] +=
                                             g * px2[static_cast<std::int64_t>(ci) * T + it];
                                     }
                                     if (x.requires_grad()) {
                                         x.st()->ensure_grad();
                                         x.st()->g[static_cast<std::int64_t>(ci) * T + it] +=
                                             g * pw2[wbase + a];
                                     }
                                 }
                             }
                         }
                 });
    return y;
}

template <typename S>
TensorT<S> conv2d(const TensorT<S>& x, const TensorT<S>& w, int stride, int padding) {
    if (x.rank() != 4 || w.rank() != 4 || w.dim(1) != x.dim(1))
        throw DimensionError("conv2d: x " + shape_str(x.shape()) + " vs kernel " +
                             shape_str(w.shape()));
    const int T = x.dim(0), Ci = x.dim(1), H = x.dim(2), W = x.dim(3);
    const int Co = w.dim(0), kh = w.dim(2), kw = w.dim(3);
    const int Ho = conv_out_extent("conv2d", H, kh, stride, padding);
    const int Wo = conv_out_extent("conv2d", W, kw, stride, padding);
    const int ckk = Ci * kh * kw;
    const std::int64_t out_inner = static_cast<std::int64_t>(Ho) * Wo;

    auto y = TensorT<S>::zeros({T, Co, Ho, Wo});
    std::vector<S> cols(static_cast<std::size_t>(ckk) * out_inner);
    for (int t = 0; t < T; ++t) {
        im2col(x.data() + static_cast<std::int64_t>(t) * Ci * H * W, Ci, H, W, kh, kw, stride,
               padding, Ho, Wo, cols.data());
        detail::gemm_nn(Co, static_cast<int>(out_inner), ckk, w.data(), cols.data(),
                        y.data() + static_cast<std::int64_t>(t) * Co * out_inner, false);
    }
    record_op<S>("conv2d", x.requires_grad() || w.requires_grad(), y,
                 [x, w, y, T, Ci, H, W, Co, kh, kw, Ho, Wo, ckk, out_inner, stride, padding]() {
                     const auto& gy = y.st()->g;
                     if (gy.empty()) return;
                     const bool fault = debug::fault() == "conv2d-backward-sign";
                     std::vector<S> cols(static_cast<std::size_t>(ckk) * out_inner);
                     std::vector<S> gcols;
                     if (x.requires_grad()) {
                         x.st()->ensure_grad();
                         gcols.resize(cols.size());
                     }
                     if (w.requires_grad()) w.st()->ensure_grad();
                     for (int t = 0; t < T; ++t) {
                         const S* gy_t = gy.data() + static_cast<std::int64_t>(t) * Co * out_inner;
                         if (w.requires_grad()) {
                             im2col(x.data() + static_cast<std::int64_t>(t) * Ci * H * W, Ci, H, W,
                                    kh, kw, stride, padding, Ho, Wo, cols.data());
                             if (!fault) {
                                 detail::gemm_nt(Co, ckk, static_cast<int>(out_inner), gy_t,
                                                 cols.data(), w.st()->g.data(), true);
                             } else {
                                 // fault hook: accumulate the weight gradient with flipped sign
                                 std::vector<S> tmp(static_cast<std::size_t>(Co) * ckk);
                                 detail::gemm_nt(Co, ckk, static_cast<int>(out_inner), gy_t,
                                                 cols.data(), tmp.data(), false);
                                 auto& gw = w.st()->g;
                                 for (std::size_t i = 0; i < tmp.size(); ++i) gw[i] -= tmp[i];
                             }
                         }
                         if (x.requires_grad()) {
                             detail::gemm_tn(ckk, static_cast<int>(out_inner), Co, w.data(), gy_t,
                                             gcols.data(), false);
                             col2im_acc(gcols.data(), Ci, H, W, kh, kw, stride, padding, Ho, Wo,
                                        x.st()->g.data() +
                                            static_cast<std::int64_t>(t) * Ci * H * W);
                         }
                     }
                 });
    return y;
}

template <typename S>
TensorT<S> conv3d(const TensorT<S>& x, const TensorT<S>& w, const std::array<int, 3>& stride,
                  const std::array<int, 3>& padding) {
    if (x.rank() != 4 || w.rank() != 5 || w.dim(1) != x.dim(0))
        throw DimensionError("conv3d: x " + shape_str(x.shape()) + " vs kernel " +
                             shape_str(w.shape()));
    const int Ci = x.dim(0), T = x.dim(1), H = x.dim(2), W = x.dim(3);
    const int Co = w.dim(0), kt = w.dim(2), kh = w.dim(3), kw = w.dim(4);
    const int To = conv_out_extent("conv3d", T, kt, stride[0], padding[0]);
    const int Ho = conv_out_extent("conv3d", H, kh, stride[1], padding[1]);
    const int Wo = conv_out_extent("conv3d", W, kw, stride[2], padding[2]);
    const int ckk = Ci * kt * kh * kw;
    const std::int64_t out_inner = static_cast<std::int64_t>(To) * Ho * Wo;

    auto y = TensorT<S>::zeros({Co, To, Ho, Wo});
    {
        std::vector<S> cols(static_cast<std::size_t>(ckk) * out_inner);
        vol2col(x.data(), Ci, T, H, W, kt, kh, kw, stride[0], stride[1], stride[2], padding[0],
                padding[1], padding[2], To, Ho, Wo, cols.data());
        detail::gemm_nn(Co, static_cast<int>(out_inner), ckk, w.data(), cols.data(), y.data(),
                        false);
    }
    record_op<S>("conv3d", x.requires_grad() || w.requires_grad(), y,
                 [x, w, y, Ci, T, H, W, Co, kt, kh, kw, To, Ho, Wo, ckk, out_inner, stride,
                  padding]() {
                     const auto& gy = y.st()->g;
                     if (gy.empty()) return;
                     std::vector<S> cols(static_cast<std::size_t>(ckk) * out_inner);
                     if (w.requires_grad()) {
                         w.st()->ensure_grad();
                         vol2col(x.data(), Ci, T, H, W, kt, kh, kw, stride[0], stride[1],
                                 stride[2], padding[0], padding[1], padding[2], To, Ho, Wo,
                                 cols.data());
                         detail::gemm_nt(Co, ckk, static_cast<int>(out_inner), gy.data(),
                                         cols.data(), w.st()->g.data(), true);
                     }
                     if (x.requires_grad()) {
                         x.st()->ensure_grad();
                         detail::gemm_tn(ckk, static_cast<int>(out_inner), Co, w.data(), gy.data(),
                                         cols.data(), false);
                         col2vol_acc(cols.data(), Ci, T, H, W, kt, kh, kw, stride[0], stride[1],
                                     stride[2], padding[0], padding[1], padding[2], To, Ho, Wo,
                                     x.st()->g.data());
                     }
                 });
    return y;
}

template <typename S>
TensorT<S> maxpool_hw(const TensorT<S>& x, int kh, int kw) {
    if (x.rank() != 4)
        throw DimensionError("maxpool_hw: expects [T,C,H,W], got " + shape_str(x.shape()));
    const int T = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    if (kh > H || kw > W)
        throw DimensionError("maxpool_hw: window " + std::to_string(kh) + "x" +
                             std::to_string(kw) + " exceeds input " + shape_str(x.shape()));
    const int Ho = H / kh, Wo = W / kw;
    auto y = TensorT<S>::zeros({T, C, Ho, Wo});
    std::vector<std::int64_t> arg(static_cast<std::size_t>(y.size()));
    const S* px = x.data();
    S* py = y.data();
    std::int64_t o = 0;
    for (int t = 0; t < T; ++t)
        for (int c = 0; c < C; ++c) {
            const std::int64_t base = (static_cast<std::int64_t>(t) * C + c) * H * W;
            for (int ho = 0; ho < Ho; ++ho)
                for (int wo = 0; wo < Wo; ++wo, ++o) {
                    std::int64_t best_idx = base + static_cast<std::int64_t>(ho * kh) * W + wo * kw;
                    S best = px[best_idx];
                    for (int i = 0; i < kh; ++i)
                        for (int j = 0; j < kw; ++j) {
                            const std::int64_t idx =
                                base + (static_cast<std::int64_t>(ho * kh + i)) * W + wo * kw + j;
                            if (px[idx] > best) {  // ties keep the first scanned element
                                best = px[idx];
                                best_idx = idx;
                            }
                        }
                    py[o] = best;
                    arg[static_cast<std::size_t>(o)] = best_idx;
                }
        }
    record_op<S>("maxpool_hw", x.requires_grad(), y, [x, y, arg = std::move(arg)]() {
        const auto& gy = y.st()->g;
        if (gy.empty() || !x.requires_grad()) return;
        x.st()->ensure_grad();
        auto& gx = x.st()->g;
        for (std::size_t i = 0; i < gy.size(); ++i) gx[static_cast<std::size_t>(arg[i])] += gy[i];
    });
    return y;
}

#define RAL_INSTANTIATE_CONV(S)                                                                  \
    template TensorT<S> conv1d<S>(const TensorT<S>&, const TensorT<S>&, int, int, int);          \
    template TensorT<S> conv2d<S>(const TensorT<S>&, const TensorT<S>&, int, int);               \
    template TensorT<S> conv3d<S>(const TensorT<S>&, const TensorT<S>&,                          \
                                  const std::array<int, 3>&, const std::array<int, 3>&);         \
    template TensorT<S> maxpool_hw<S>(const TensorT<S>&, int, int);

RAL_INSTANTIATE_CONV(float)
RAL_INSTANTIATE_CONV(double)
#undef RAL_INSTANTIATE_CONV

}  // namespace ral
