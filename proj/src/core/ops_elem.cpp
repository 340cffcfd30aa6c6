#include <algorithm>
#include <cmath>

#include "core/ops.hpp"

namespace ral {

namespace {

template <typename S>
void check_same_shape(const char* op, const TensorT<S>& a, const TensorT<S>& b) {
    if (a.shape() != b.shape())
        throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                             " vs " + shape_str(b.shape()));
}

// Decompose a tensor into (outer, channels, inner) around its channel axis:
// rank-2 [C,T] and rank-3 [C,H,W] use axis 0, rank-4 [T,C,H,W] uses axis 1.
struct ChannelView {
    std::int64_t outer, channels, inner;
};

template <typename S>
ChannelView channel_view(const char* op, const TensorT<S>& x, const TensorT<S>& per_channel) {
    const auto& s = x.shape();
    ChannelView v{};
    if (s.size() == 2) {
        v = {1, s[0], s[1]};
    } else if (s.size() == 3) {
        v = {1, s[0], static_cast<std::int64_t>(s[1]) * s[2]};
    } else if (s.size() == 4) {
        v = {s[0], s[1], static_cast<std::int64_t>(s[2]) * s[3]};
    } else {
        throw DimensionError(std::string(op) + ": unsupported rank for shape " +
                             shape_str(x.shape()));
    }
    if (per_channel.rank() != 1 || per_channel.dim(0) != v.channels)
        throw DimensionError(std::string(op) + ": channel vector " +
                             shape_str(per_channel.shape()) + " does not match " +
                             shape_str(x.shape()));
    return v;
}

}  // namespace

template <typename S>
TensorT<S> add(const TensorT<S>& a, const TensorT<S>& b) {
    check_same_shape("add", a, b);
    auto y = TensorT<S>::zeros(a.shape());
    const S* pa = a.data();
    const S* pb = b.data();
    S* py = y.data();
    const std::int64_t n = y.size();
    for (std::int64_t i = 0; i < n; ++i) py[i] = pa[i] + pb[i];
    record_op<S>("add", a.requires_grad() || b.requires_grad(), y, [a, b, y]() {
        const auto& gy = y.st()->g;
        if (gy.empty()) return;
        if (a.requires_grad()) {
            a.st()->ensure_grad();
            auto& ga = a.st()->g;
            for (std::size_t i = 0; i < gy.size(); ++i) ga[i] += gy[i];
        }
        if (b.requires_grad()) {
            b.st()->ensure_grad();
            auto& gb = b.st()->g;
            for (std::size_t i = 0; i < gy.size(); ++i) gb[i] += gy[i];
        }
    });
    return y;
}

template <typename S>
TensorT<S> sub(const TensorT<S>& a, const TensorT<S>& b) {
    check_same_shape("sub", a, b);
    auto y = TensorT<S>::zeros(a.shape());
    const S* pa = a.data();
    const S* pb = b.data();
    S* py = y.data();
    const std::int64_t n = y.size();
    for (std::int64_t i = 0; i < n; ++i) py[i] = pa[i] - pb[i];
    record_op<S>("sub", a.requires_grad() || b.requires_grad(), y, [a, b, y]() {
        const auto& gy = y.st()->g;
        if (gy.empty()) return;
        if (a.requires_grad()) {
            a.st()->ensure_grad();
            auto& ga = a.st()->g;
            for (std::size_t i = 0; i < gy.size(); ++i) ga[i] += gy[i];
        }
        if (b.requires_grad()) {
            b.st()->ensure_grad();
            auto& gb = b.st()->g;
            for (std::size_t i = 0; i < gy.size(); ++i) gb[i] -= gy[i];
        }
    });
    return y;
}

template <typename S>
TensorT<S> mul(const TensorT<S>& a, const TensorT<S>& b) {
    check_same_shape("mul_elementwise", a, b);
    auto y = TensorT<S>::zeros(a.shape());
    const S* pa = a.data();
    const S* pb = b.data();
    S* py = y.data();
    const std::int64_t n = y.size();
    for (std::int64_t i = 0; i < n; ++i) py[i] = pa[i] * pb[i];
    record_op<S>("mul_elementwise", a.requires_grad() || b.requires_grad(), y, [a, b, y]() {
        const auto& gy = y.st()->g;
        if (gy.empty()) return;
        if (a.requires_grad()) {
            a.st()->ensure_grad();
            auto& ga = a.st()->g;
            const S* pb2 = b.data();
            for (std::size_t i = 0; i < gy.size(); ++i) ga[i] += gy[i] * pb2[i];
        }
        if (b.requires_grad()) {
            b.st()->ensure_grad();
            auto& gb = b.st()->g;
            const S* pa2 = a.data();
            for (std::size_t i = 0; i < gy.size(); ++i) gb[i] += gy[i] * pa2[i];
        }
    });
    return y;
}

template <typename S>
TensorT<S> scalar_mul(const TensorT<S>& a, double c) {
    auto y = TensorT<S>::zeros(a.shape());
    const S* pa = a.data();
    S* py = y.data();
    const S cs = static_cast<S>(c);
    const std::int64_t n = y.size();
    for (std::int64_t i = 0; i < n; ++i) py[i] = cs * pa[i];
    record_op<S>("scalar_mul", a.requires_grad(), y, [a, y, cs]() {
        const auto& gy = y.st()->g;
        if (gy.empty() || !a.requires_grad()) return;
        a.st()->ensure_grad();
        auto& ga = a.st()->g;
        for (std::size_t i = 0; i < gy.size(); ++i) ga[i] += cs * gy[i];
    });
    return y;
}

template <typename S>
TensorT<S> abs_(const TensorT<S>& x) {
    auto y = TensorT<S>::zeros(x.shape());
    const S* px = x.data();
    S* py = y.data();
    const std::int64_t n = y.size();
    for (std::int64_t i = 0; i < n; ++i) py[i] = px[i] < S(0) ? -px[i] : px[i];
    record_op<S>("abs", x.requires_grad(), y, [x, y]() {
        const auto& gy = y.st()->g;
        if (gy.empty() || !x.requires_grad()) return;
        x.st()->ensure_grad();
        auto& gx = x.st()->g;
        const S* px2 = x.data();
        // subgradient 0 at exactly 0
        for (std::size_t i = 0; i < gy.size(); ++i)
            gx[i] += px2[i] > S(0) ? gy[i] : (px2[i] < S(0) ? -gy[i] : S(0));
    });
    return y;
}

template <typename S>
TensorT<S> relu(const TensorT<S>& x) {
    auto y = TensorT<S>::zeros(x.shape());
    const S* px = x.data();
    S* py = y.data();
    const std::int64_t n = y.size();
    for (std::int64_t i = 0; i < n; ++i) py[i] = px[i] > S(0) ? px[i] : S(0);
    record_op<S>("relu", x.requires_grad(), y, [x, y]() {
        const auto& gy = y.st()->g;
        if (gy.empty() || !x.requires_grad()) return;
        x.st()->ensure_grad();
        auto& gx = x.st()->g;
        const S* px2 = x.data();
        for (std::size_t i = 0; i < gy.size(); ++i)
            if (px2[i] > S(0)) gx[i] += gy[i];
    });
    return y;
}

template <typename S>
TensorT<S> sigmoid(const TensorT<S>& x) {
    auto y = TensorT<S>::zeros(x.shape());
    const S* px = x.data();
    S* py = y.data();
    const std::int64_t n = y.size();
    for (std::int64_t i = 0; i < n; ++i) {
        const S v = px[i];
        if (v >= S(0)) {
            py[i] = S(1) / (S(1) + std::exp(-v));
        } else {
            const S e = std::exp(v);
            py[i] = e / (S(1) + e);
        }
    }
    record_op<S>("sigmoid", x.requires_grad(), y, [x, y]() {
        const auto& gy = y.st()->g;
        if (gy.empty() || !x.requires_grad()) return;
        x.st()->ensure_grad();
        auto& gx = x.st()->g;
        const S* py2 = y.data();
        for (std::size_t i = 0; i < gy.size(); ++i) gx[i] += gy[i] * py2[i] * (S(1) - py2[i]);
    });
    return y;
}

template <typename S>
TensorT<S> mul_scalar_tensor(const TensorT<S>& x, const TensorT<S>& alpha) {
    if (alpha.size() != 1)
        throw DimensionError("mul_scalar_tensor: alpha must be a scalar tensor, got " +
                             shape_str(alpha.shape()));
    auto y = TensorT<S>::zeros(x.shape());
    const S a = alpha.data()[0];
    const S* px = x.data();
    S* py = y.data();
    const std::int64_t n = y.size();
    for (std::int64_t i = 0; i < n; ++i) py[i] = a * px[i];
    record_op<S>("mul_scalar_tensor", x.requires_grad() || alpha.requires_grad(), y,
                 [x, alpha, y, a]() {
                     const auto& gy = y.st()->g;
                     if (gy.empty()) return;
                     if (x.requires_grad()) {
                         x.st()->ensure_grad();
                         auto& gx = x.st()->g;
                         for (std::size_t i = 0; i < gy.size(); ++i) gx[i] += a * gy[i];
                     }
                     if (alpha.requires_grad()) {
                         alpha.st()->ensure_grad();
                         const S* px2 = x.data();
                         S acc = S(0);
                         for (std::size_t i = 0; i < gy.size(); ++i) acc += gy[i] * px2[i];
                         alpha.st()->g[0] += acc;
                     }
                 });
    return y;
}

template <typename S>
TensorT<S> add_channel(const TensorT<S>& x, const TensorT<S>& b) {
    const ChannelView v = channel_view("add_channel", x, b);
    auto y = TensorT<S>::zeros(x.shape());
    const S* px = x.data();
    const S* pb = b.data();
    S* py = y.data();
    for (std::int64_t o = 0; o < v.outer; ++o)
        for (std::int64_t c = 0; c < v.channels; ++c) {
            const std::int64_t base = (o * v.channels + c) * v.inner;
            const S bv = pb[c];
            for (std::int64_t i = 0; i < v.inner; ++i) py[base + i] = px[base + i] + bv;
        }
    record_op<S>("add_channel", x.requires_grad() || b.requires_grad(), y, [x, b, y, v]() {
        const auto& gy = y.st()->g;
        if (gy.empty()) return;
        if (x.requires_grad()) {
            x.st()->ensure_grad();
            auto& gx = x.st()->g;
            for (std::size_t i = 0; i < gy.size(); ++i) gx[i] += gy[i];
        }
        if (b.requires_grad()) {
            b.st()->ensure_grad();
            auto& gb = b.st()->g;
            for (std::int64_t o = 0; o < v.outer; ++o)
                for (std::int64_t c = 0; c < v.channels; ++c) {
                    const std::int64_t base = (o * v.channels + c) * v.inner;
                    S acc = S(0);
                    for (std::int64_t i = 0; i < v.inner; ++i) acc += gy[base + i];
                    gb[c] += acc;
                }
        }
    });
    return y;
}

template <typename S>
TensorT<S> mul_channel(const TensorT<S>& x, const TensorT<S>& s) {
    const ChannelView v = channel_view("mul_channel", x, s);
    auto y = TensorT<S>::zeros(x.shape());
    const S* px = x.data();
    const S* ps = s.data();
    S* py = y.data();
    for (std::int64_t o = 0; o < v.outer; ++o)
        for (std::int64_t c = 0; c < v.channels; ++c) {
            const std::int64_t base = (o * v.channels + c) * v.inner;
            const S sv = ps[c];
            for (std::int64_t i = 0; i < v.inner; ++i) py[base + i] = px[base + i] * sv;
        }
    record_op<S>("mul_channel", x.requires_grad() || s.requires_grad(), y, [x, s, y, v]() {
        const auto& gy = y.st()->g;
        if (gy.empty()) return;
        if (x.requires_grad()) {
            x.st()->ensure_grad();
            auto& gx = x.st()->g;
            const S* ps2 = s.data();
            for (std::int64_t o = 0; o < v.outer; ++o)
                for (std::int64_t c = 0; c < v.channels; ++c) {
                    const std::int64_t base = (o * v.channels + c) * v.inner;
                    const S sv = ps2[c];
                    for (std::int64_t i = 0; i < v.inner; ++i) gx[base + i] += gy[base + i] * sv;
                }
        }
        if (s.requires_grad()) {
            s.st()->ensure_grad();
            auto& gs = s.st()->g;
            const S* px2 = x.data();
            for (std::int64_t o = 0; o < v.outer; ++o)
                for (std::int64_t c = 0; c < v.channels; ++c) {
                    const std::int64_t base = (o * v.channels + c) * v.inner;
                    S acc = S(0);
                    for (std::int64_t i = 0; i < v.inner; ++i)
                        acc += gy[base + i] * px2[base + i];
                    gs[c] += acc;
                }
        }
    });
    return y;
}

template <typename S>
TensorT<S> add_row(const TensorT<S>& x, const TensorT<S>& b) {
    if (x.rank() != 2 || b.rank() != 1 || b.dim(0) != x.dim(1))
        throw DimensionError("add_row: " + shape_str(x.shape()) + " vs " + shape_str(b.shape()));
    const int M = x.dim(0), N = x.dim(1);
    auto y = TensorT<S>::zeros(x.shape());
    const S* px = x.data();
    const S* pb = b.data();
    S* py = y.data();
    for (int i = 0; i < M; ++i)
        for (int j = 0; j < N; ++j) py[i * N + j] = px[i * N + j] + pb[j];
    record_op<S>("add_row", x.requires_grad() || b.requires_grad(), y, [x, b, y, M, N]() {
        const auto& gy = y.st()->g;
        if (gy.empty()) return;
        if (x.requires_grad()) {
            x.st()->ensure_grad();
            auto& gx = x.st()->g;
            for (std::size_t i = 0; i < gy.size(); ++i) gx[i] += gy[i];
        }
        if (b.requires_grad()) {
            b.st()->ensure_grad();
            auto& gb = b.st()->g;
            for (int i = 0; i < M; ++i)
                for (int j = 0; j < N; ++j) gb[j] += gy[static_cast<std::size_t>(i) * N + j];
        }
    });
    return y;
}

template <typename S>
TensorT<S> sum_all(const TensorT<S>& x) {
    auto y = TensorT<S>::zeros({1});
    const S* px = x.data();
    S acc = S(0);
    const std::int64_t n = x.size();
    for (std::int64_t i = 0; i < n; ++i) acc += px[i];
    y.data()[0] = acc;
    record_op<S>("sum_all", x.requires_grad(), y, [x, y]() {
        const auto& gy = y.st()->g;
        if (gy.empty() || !x.requires_grad()) return;
        x.st()->ensure_grad();
        auto& gx = x.st()->g;
        const S g = gy[0];
        for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g;
    });
    return y;
}

template <typename S>
TensorT<S> mean_all(const TensorT<S>& x) {
    auto y = TensorT<S>::zeros({1});
    const S* px = x.data();
    S acc = S(0);
    const std::int64_t n = x.size();
    for (std::int64_t i = 0; i < n; ++i) acc += px[i];
    y.data()[0] = acc / static_cast<S>(n);
    record_op<S>("mean_all", x.requires_grad(), y, [x, y, n]() {
        const auto& gy = y.st()->g;
        if (gy.empty() || !x.requires_grad()) return;
        x.st()->ensure_grad();
        auto& gx = x.st()->g;
        const S g = gy[0] / static_cast<S>(n);
        for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g;
    });
    return y;
}

template <typename S>
TensorT<S> global_avg_pool(const TensorT<S>& x) {
    Shape out_shape;
    std::int64_t maps = 0, inner = 0;
    if (x.rank() == 3) {
        out_shape = {x.dim(0)};
        maps = x.dim(0);
        inner = static_cast<std::int64_t>(x.dim(1)) * x.dim(2);
    } else if (x.rank() == 4) {
        out_shape = {x.dim(0), x.dim(1)};
        maps = static_cast<std::int64_t>(x.dim(0)) * x.dim(1);
        inner = static_cast<std::int64_t>(x.dim(2)) * x.dim(3);
    } else {
        throw DimensionError("global_avg_pool: expects [C,H,W] or [T,C,H,W], got " +
                             shape_str(x.shape()));
    }
    if (inner < 1) throw DimensionError("global_avg_pool: empty spatial extent " +
                                        shape_str(x.shape()));
    auto y = TensorT<S>::zeros(out_shape);
    const S* px = x.data();
    S* py = y.data();
    for (std::int64_t m = 0; m < maps; ++m) {
        S acc = S(0);
        const S* p = px + m * inner;
        for (std::int64_t i = 0; i < inner; ++i) acc += p[i];
        py[m] = acc / static_cast<S>(inner);
    }
    record_op<S>("global_avg_pool", x.requires_grad(), y, [x, y, maps, inner]() {
        const auto& gy = y.st()->g;
        if (gy.empty() || !x.requires_grad()) return;
        x.st()->ensure_grad();
        auto& gx = x.st()->g;
        const S scale = S(1) / static_cast<S>(inner);
        for (std::int64_t m = 0; m < maps; ++m) {
            const S g = gy[m] * scale;
            S* p = gx.data() + m * inner;
            for (std::int64_t i = 0; i < inner; ++i) p[i] += g;
        }
    });
    return y;
}

template <typename S>
TensorT<S> mean_lastdim(const TensorT<S>& x) {
    if (x.rank() != 2)
        throw DimensionError("mean_lastdim: expects rank-2, got " + shape_str(x.shape()));
    const int C = x.dim(0), T = x.dim(1);
    auto y = TensorT<S>::zeros({C});
    const S* px = x.data();
    S* py = y.data();
    for (int c = 0; c < C; ++c) {
        S acc = S(0);
        for (int t = 0; t < T; ++t) acc += px[c * T + t];
        py[c] = acc / static_cast<S>(T);
    }
    record_op<S>("mean_lastdim", x.requires_grad(), y, [x, y, C, T]() {
        const auto& gy = y.st()->g;
        if (gy.empty() || !x.requires_grad()) return;
        x.st()->ensure_grad();
        auto& gx = x.st()->g;
        const S scale = S(1) / static_cast<S>(T);
        for (int c = 0; c < C; ++c) {
            const S g = gy[c] * scale;
            for (int t = 0; t < T; ++t) gx[static_cast<std::size_t>(c) * T + t] += g;
        }
    });
    return y;
}

template <typename S>
TensorT<S> reshape(const TensorT<S>& x, Shape shape) {
    if (shape_numel(shape) != x.size())
        throw DimensionError("reshape: cannot view " + shape_str(x.shape()) + " as " +
                             shape_str(shape));
    auto y = TensorT<S>::from_vec(std::move(shape), x.vec());
    record_op<S>("reshape", x.requires_grad(), y, [x, y]() {
        const auto& gy = y.st()->g;
        if (gy.empty() || !x.requires_grad()) return;
        x.st()->ensure_grad();
        auto& gx = x.st()->g;
        for (std::size_t i = 0; i < gy.size(); ++i) gx[i] += gy[i];
    });
    return y;
}

template <typename S>
TensorT<S> slice0(const TensorT<S>& x, int i) {
    if (x.rank() < 2)
        throw DimensionError("slice0: expects rank >= 2, got " + shape_str(x.shape()));
    if (i < 0 || i >= x.dim(0))
        throw DimensionError("slice0: index " + std::to_string(i) + " out of range for " +
                             shape_str(x.shape()));
    Shape out_shape(x.shape().begin() + 1, x.shape().end());
    const std::int64_t inner = shape_numel(out_shape);
    auto y = TensorT<S>::zeros(out_shape);
    std::copy_n(x.data() + static_cast<std::int64_t>(i) * inner, inner, y.data());
    record_op<S>("slice0", x.requires_grad(), y, [x, y, i, inner]() {
        const auto& gy = y.st()->g;
        if (gy.empty() || !x.requires_grad()) return;
        x.st()->ensure_grad();
        auto& gx = x.st()->g;
        S* p = gx.data() + static_cast<std::int64_t>(i) * inner;
        for (std::int64_t k = 0; k < inner; ++k) p[k] += gy[k];
    });
    return y;
}

template <typename S>
TensorT<S> slice0_range(const TensorT<S>& x, int i0, int i1) {
    if (x.rank() < 2 || i0 < 0 || i1 > x.dim(0) || i0 >= i1)
        throw DimensionError("slice0_range: range [" + std::to_string(i0) + "," +
                             std::to_string(i1) + ") invalid for " + shape_str(x.shape()));
    Shape out_shape = x.shape();
    out_shape[0] = i1 - i0;
    const std::int64_t inner = x.size() / x.dim(0);
    auto y = TensorT<S>::zeros(out_shape);
    std::copy_n(x.data() + static_cast<std::int64_t>(i0) * inner,
                static_cast<std::int64_t>(i1 - i0) * inner, y.data());
    record_op<S>("slice0_range", x.requires_grad(), y, [x, y, i0, inner]() {
        const auto& gy = y.st()->g;
        if (gy.empty() || !x.requires_grad()) return;
        x.st()->ensure_grad();
        auto& gx = x.st()->g;
        S* p = gx.data() + static_cast<std::int64_t>(i0) * inner;
        for (std::size_t k = 0; k < gy.size(); ++k) p[k] += gy[k];
    });
    return y;
}

template <typename S>
TensorT<S> concat0(const TensorT<S>& a, const TensorT<S>& b) {
    if (a.rank() != b.rank() || a.rank() < 2)
        throw DimensionError("concat0: rank mismatch " + shape_str(a.shape()) + " vs " +
                             shape_str(b.shape()));
    for (int i = 1; i < a.rank(); ++i)
        if (a.dim(i) != b.dim(i))
            throw DimensionError("concat0: trailing dims differ " + shape_str(a.shape()) +
                                 " vs " + shape_str(b.shape()));
    Shape out_shape = a.shape();
    out_shape[0] = a.dim(0) + b.dim(0);
    auto y = TensorT<S>::zeros(out_shape);
    std::copy_n(a.data(), a.size(), y.data());
    std::copy_n(b.data(), b.size(), y.data() + a.size());
    record_op<S>("concat0", a.requires_grad() || b.requires_grad(), y, [a, b, y]() {
        const auto& gy = y.st()->g;
        if (gy.empty()) return;
        if (a.requires_grad()) {
            a.st()->ensure_grad();
            auto& ga = a.st()->g;
            for (std::int64_t i = 0; i < a.size(); ++i) ga[i] += gy[i];
        }
        if (b.requires_grad()) {
            b.st()->ensure_grad();
            auto& gb = b.st()->g;
            const std::int64_t off = a.size();
            for (std::int64_t i = 0; i < b.size(); ++i) gb[i] += gy[off + i];
        }
    });
    return y;
}

template <typename S>
TensorT<S> stack0(const std::vector<TensorT<S>>& xs) {
    if (xs.empty()) throw DimensionError("stack0: empty input list");
    const Shape& base = xs[0].shape();
    for (const auto& x : xs)
        if (x.shape() != base)
            throw DimensionError("stack0: shape mismatch " + shape_str(base) + " vs " +
                                 shape_str(x.shape()));
    Shape out_shape;
    out_shape.push_back(static_cast<int>(xs.size()));
    out_shape.insert(out_shape.end(), base.begin(), base.end());
    const std::int64_t inner = shape_numel(base);
    auto y = TensorT<S>::zeros(out_shape);
    bool any_rg = false;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        std::copy_n(xs[k].data(), inner, y.data() + static_cast<std::int64_t>(k) * inner);
        any_rg = any_rg || xs[k].requires_grad();
    }
    record_op<S>("stack0", any_rg, y, [xs, y, inner]() {
        const auto& gy = y.st()->g;
        if (gy.empty()) return;
        for (std::size_t k = 0; k < xs.size(); ++k) {
            if (!xs[k].requires_grad()) continue;
            xs[k].st()->ensure_grad();
            auto& gx = xs[k].st()->g;
            const S* p = gy.data() + static_cast<std::int64_t>(k) * inner;
            for (std::int64_t i = 0; i < inner; ++i) gx[i] += p[i];
        }
    });
    return y;
}

template <typename S>
TensorT<S> slice_lastdim(const TensorT<S>& x, int c0, int c1) {
    const int W = x.dim(x.rank() - 1);
    if (c0 < 0 || c1 > W || c0 >= c1)
        throw DimensionError("slice_lastdim: range [" + std::to_string(c0) + "," +
                             std::to_string(c1) + ") invalid for " + shape_str(x.shape()));
    Shape out_shape = x.shape();
    out_shape.back() = c1 - c0;
    const std::int64_t rows = x.size() / W;
    const int w_out = c1 - c0;
    auto y = TensorT<S>::zeros(out_shape);
    const S* px = x.data();
    S* py = y.data();
    for (std::int64_t r = 0; r < rows; ++r)
        std::copy_n(px + r * W + c0, w_out, py + r * w_out);
    record_op<S>("slice_lastdim", x.requires_grad(), y, [x, y, rows, W, w_out, c0]() {
        const auto& gy = y.st()->g;
        if (gy.empty() || !x.requires_grad()) return;
        x.st()->ensure_grad();
        auto& gx = x.st()->g;
        for (std::int64_t r = 0; r < rows; ++r) {
            S* p = gx.data() + r * W + c0;
            const S* g = gy.data() + r * w_out;
            for (int j = 0; j < w_out; ++j) p[j] += g[j];
        }
    });
    return y;
}

template <typename S>
TensorT<S> flip_lastdim(const TensorT<S>& x) {
    const int W = x.dim(x.rank() - 1);
    const std::int64_t rows = x.size() / W;
    auto y = TensorT<S>::zeros(x.shape());
    const S* px = x.data();
    S* py = y.data();
    for (std::int64_t r = 0; r < rows; ++r)
        for (int j = 0; j < W; ++j) py[r * W + j] = px[r * W + (W - 1 - j)];
    record_op<S>("flip_lastdim", x.requires_grad(), y, [x, y, rows, W]() {
        const auto& gy = y.st()->g;
        if (gy.empty() || !x.requires_grad()) return;
        x.st()->ensure_grad();
        auto& gx = x.st()->g;
        for (std::int64_t r = 0; r < rows; ++r)
            for (int j = 0; j < W; ++j) gx[r * W + (W - 1 - j)] += gy[r * W + j];
    });
    return y;
}

template <typename S>
TensorT<S> concat_lastdim(const TensorT<S>& a, const TensorT<S>& b) {
    if (a.rank() != b.rank())
        throw DimensionError("concat_lastdim: rank mismatch " + shape_str(a.shape()) + " vs " +
                             shape_str(b.shape()));
    for (int i = 0; i + 1 < a.rank(); ++i)
        if (a.dim(i) != b.dim(i))
            throw DimensionError("concat_lastdim: leading dims differ " + shape_str(a.shape()) +
                                 " vs " + shape_str(b.shape()));
    const int wa = a.dim(a.rank() - 1), wb = b.dim(b.rank() - 1);
    Shape out_shape = a.shape();
    out_shape.back() = wa + wb;
    const std::int64_t rows = a.size() / wa;
    auto y = TensorT<S>::zeros(out_shape);
    const S* pa = a.data();
    const S* pb = b.data();
    S* py = y.data();
    for (std::int64_t r = 0; r < rows; ++r) {
        std::copy_n(pa + r * wa, wa, py + r * (wa + wb));
        std::copy_n(pb + r * wb, wb, py + r * (wa + wb) + wa);
    }
    record_op<S>("concat_lastdim", a.requires_grad() || b.requires_grad(), y,
                 [a, b, y, rows, wa, wb]() {
                     const auto& gy = y.st()->g;
                     if (gy.empty()) return;
                     if (a.requires_grad()) {
                         a.st()->ensure_grad();
                         auto& ga = a.st()->g;
                         for (std::int64_t r = 0; r < rows; ++r)
                             for (int j = 0; j < wa; ++j)
                                 ga[r * wa + j] += gy[r * (wa + wb) + j];
                     }
                     if (b.requires_grad()) {
                         b.st()->ensure_grad();
                         auto& gb = b.st()->g;
                         for (std::int64_t r = 0; r < rows; ++r)
                             for (int j = 0; j < wb; ++j)
                                 gb[r * wb + j] += gy[r * (wa + wb) + wa + j];
                     }
                 });
    return y;
}

template <typename S>
TensorT<S> swap01(const TensorT<S>& x) {
    if (x.rank() < 2)
        throw DimensionError("swap01: expects rank >= 2, got " + shape_str(x.shape()));
    const int A = x.dim(0), B = x.dim(1);
    Shape out_shape = x.shape();
    std::swap(out_shape[0], out_shape[1]);
    const std::int64_t inner = x.size() / (static_cast<std::int64_t>(A) * B);
    auto y = TensorT<S>::zeros(out_shape);
    const S* px = x.data();
    S* py = y.data();
    for (int a = 0; a < A; ++a)
        for (int b = 0; b < B; ++b)
            std::copy_n(px + (static_cast<std::int64_t>(a) * B + b) * inner, inner,
                        py + (static_cast<std::int64_t>(b) * A + a) * inner);
    record_op<S>("swap01", x.requires_grad(), y, [x, y, A, B, inner]() {
        const auto& gy = y.st()->g;
        if (gy.empty() || !x.requires_grad()) return;
        x.st()->ensure_grad();
        auto& gx = x.st()->g;
        for (int a = 0; a < A; ++a)
            for (int b = 0; b < B; ++b) {
                const S* src = gy.data() + (static_cast<std::int64_t>(b) * A + a) * inner;
                S* dst = gx.data() + (static_cast<std::int64_t>(a) * B + b) * inner;
                for (std::int64_t i = 0; i < inner; ++i) dst[i] += src[i];
            }
    });
    return y;
}

template <typename S>
TensorT<S> chw_to_nc(const TensorT<S>& x) {
    if (x.rank() != 3)
        throw DimensionError("chw_to_nc: expects [C,H,W], got " + shape_str(x.shape()));
    const int C = x.dim(0);
    const std::int64_t N = static_cast<std::int64_t>(x.dim(1)) * x.dim(2);
    auto y = TensorT<S>::zeros({static_cast<int>(N), C});
    const S* px = x.data();
    S* py = y.data();
    for (int c = 0; c < C; ++c)
        for (std::int64_t n = 0; n < N; ++n) py[n * C + c] = px[c * N + n];
    record_op<S>("chw_to_nc", x.requires_grad(), y, [x, y, C, N]() {
        const auto& gy = y.st()->g;
        if (gy.empty() || !x.requires_grad()) return;
        x.st()->ensure_grad();
        auto& gx = x.st()->g;
        for (int c = 0; c < C; ++c)
            for (std::int64_t n = 0; n < N; ++n) gx[c * N + n] += gy[n * C + c];
    });
    return y;
}

template <typename S>
TensorT<S> nc_to_chw(const TensorT<S>& x, int h, int w) {
    if (x.rank() != 2 || x.dim(0) != h * w)
        throw DimensionError("nc_to_chw: cannot view " + shape_str(x.shape()) + " as spatial " +
                             std::to_string(h) + "x" + std::to_string(w));
    const int C = x.dim(1);
    const std::int64_t N = x.dim(0);
    auto y = TensorT<S>::zeros({C, h, w});
    const S* px = x.data();
    S* py = y.data();
    for (std::int64_t n = 0; n < N; ++n)
        for (int c = 0; c < C; ++c) py[c * N + n] = px[n * C + c];
    record_op<S>("nc_to_chw", x.requires_grad(), y, [x, y, C, N]() {
        const auto& gy = y.st()->g;
        if (gy.empty() || !x.requires_grad()) return;
        x.st()->ensure_grad();
        auto& gx = x.st()->g;
        for (std::int64_t n = 0; n < N; ++n)
            for (int c = 0; c < C; ++c) gx[n * C + c] += gy[c * N + n];
    });
    return y;
}

template <typename S>
TensorT<S> concat_channel(const std::vector<TensorT<S>>& xs) {
    if (xs.empty()) throw DimensionError("concat_channel: empty input list");
    const int T = xs[0].dim(1);
    int total_c = 0;
    bool any_rg = false;
    for (const auto& x : xs) {
        if (x.rank() != 2 || x.dim(1) != T)
            throw DimensionError("concat_channel: expects [C,T] with shared T, got " +
                                 shape_str(x.shape()));
        total_c += x.dim(0);
        any_rg = any_rg || x.requires_grad();
    }
    auto y = TensorT<S>::zeros({total_c, T});
    S* py = y.data();
    std::int64_t off = 0;
    for (const auto& x : xs) {
        std::copy_n(x.data(), x.size(), py + off);
        off += x.size();
    }
    record_op<S>("concat_channel", any_rg, y, [xs, y]() {
        const auto& gy = y.st()->g;
        if (gy.empty()) return;
        std::int64_t off2 = 0;
        for (const auto& x : xs) {
            if (x.requires_grad()) {
                x.st()->ensure_grad();
                auto& gx = x.st()->g;
                for (std::int64_t i = 0; i < x.size(); ++i) gx[i] += gy[off2 + i];
            }
            off2 += x.size();
        }
    });
    return y;
}

template <typename S>
TensorT<S> softmax_lastdim(const TensorT<S>& x) {
    const int N = x.rank() >= 1 ? x.dim(x.rank() - 1) : 0;
    if (N < 1)
        throw DimensionError("softmax_lastdim: empty last dimension in " + shape_str(x.shape()));
    const std::int64_t rows = x.size() / N;
    auto y = TensorT<S>::zeros(x.shape());
    const S* px = x.data();
    S* py = y.data();
    for (std::int64_t r = 0; r < rows; ++r) {
        const S* in = px + r * N;
        S* out = py + r * N;
        S m = in[0];
        for (int j = 1; j < N; ++j) m = std::max(m, in[j]);
        S sum = S(0);
        for (int j = 0; j < N; ++j) {
            out[j] = std::exp(in[j] - m);
            sum += out[j];
        }
        const S inv = S(1) / sum;
        for (int j = 0; j < N; ++j) out[j] *= inv;
    }
    record_op<S>("softmax_lastdim", x.requires_grad(), y, [x, y, rows, N]() {
        const auto& gy = y.st()->g;
        if (gy.empty() || !x.requires_grad()) return;
        x.st()->ensure_grad();
        auto& gx = x.st()->g;
        const S* py2 = y.data();
        for (std::int64_t r = 0; r < rows; ++r) {
            const S* out = py2 + r * N;
            const S* g = gy.data() + r * N;
            S dot = S(0);
            for (int j = 0; j < N; ++j) dot += g[j] * out[j];
            S* gi = gx.data() + r * N;
            for (int j = 0; j < N; ++j) gi[j] += out[j] * (g[j] - dot);
        }
    });
    return y;
}

template <typename S>
TensorT<S> layer_norm_lastdim(const TensorT<S>& x, const TensorT<S>& gain, const TensorT<S>& bias,
                              double eps) {
    const int C = x.dim(x.rank() - 1);
    if (gain.rank() != 1 || gain.dim(0) != C || bias.rank() != 1 || bias.dim(0) != C)
        throw DimensionError("layer_norm: gain/bias " + shape_str(gain.shape()) + "/" +
                             shape_str(bias.shape()) + " do not match " + shape_str(x.shape()));
    const std::int64_t rows = x.size() / C;
    auto y = TensorT<S>::zeros(x.shape());
    std::vector<S> mu(rows), inv(rows);
    const S* px = x.data();
    const S* pg = gain.data();
    const S* pb = bias.data();
    S* py = y.data();
    for (std::int64_t r = 0; r < rows; ++r) {
        const S* in = px + r * C;
        S m = S(0);
        for (int j = 0; j < C; ++j) m += in[j];
        m /= static_cast<S>(C);
        S var = S(0);
        for (int j = 0; j < C; ++j) {
            const S d = in[j] - m;
            var += d * d;
        }
        var /= static_cast<S>(C);
        const S iv = S(1) / std::sqrt(var + static_cast<S>(eps));
        mu[r] = m;
        inv[r] = iv;
        S* out = py + r * C;
        for (int j = 0; j < C; ++j) out[j] = (in[j] - m) * iv * pg[j] + pb[j];
    }
    const bool rg = x.requires_grad() || gain.requires_grad() || bias.requires_grad();
    record_op<S>("layer_norm", rg, y,
                 [x, gain, bias, y, rows, C, mu = std::move(mu), inv = std::move(inv)]() {
                     const auto& gy = y.st()->g;
                     if (gy.empty()) return;
                     const S* px2 = x.data();
                     const S* pg2 = gain.data();
                     for (std::int64_t r = 0; r < rows; ++r) {
                         const S* in = px2 + r * C;
                         const S* g = gy.data() + r * C;
                         const S m = mu[r], iv = inv[r];
                         if (gain.requires_grad() || bias.requires_grad()) {
                             if (gain.requires_grad()) {
                                 gain.st()->ensure_grad();
                                 auto& gg = gain.st()->g;
                                 for (int j = 0; j < C; ++j) gg[j] += g[j] * (in[j] - m) * iv;
                             }
                             if (bias.requires_grad()) {
                                 bias.st()->ensure_grad();
                                 auto& gb = bias.st()->g;
                                 for (int j = 0; j < C; ++j) gb[j] += g[j];
                             }
                         }
                         if (x.requires_grad()) {
                             x.st()->ensure_grad();
                             auto& gx = x.st()->g;
                             S mean_h = S(0), mean_hx = S(0);
                             for (int j = 0; j < C; ++j) {
                                 const S h = g[j] * pg2[j];
                                 const S xh = (in[j] - m) * iv;
                                 mean_h += h;
                                 mean_hx += h * xh;
                             }
                             mean_h /= static_cast<S>(C);
                             mean_hx /= static_cast<S>(C);
                             S* gi = gx.data() + r * C;
                             for (int j = 0; j < C; ++j) {
                                 const S h = g[j] * pg2[j];
                                 const S xh = (in[j] - m) * iv;
                                 gi[j] += iv * (h - mean_h - xh * mean_hx);
                             }
                         }
                     }
                 });
    return y;
}

template <typename S>
TensorT<S> batch_norm(const TensorT<S>& x, const TensorT<S>& gain, const TensorT<S>& bias,
                      std::vector<S>& running_mean, std::vector<S>& running_var, bool training,
                      double momentum, double eps) {
    if (x.rank() != 4)
        throw DimensionError("batch_norm: expects [T,C,H,W], got " + shape_str(x.shape()));
    const int T = x.dim(0), C = x.dim(1);
    const std::int64_t hw = static_cast<std::int64_t>(x.dim(2)) * x.dim(3);
    const std::int64_t n = static_cast<std::int64_t>(T) * hw;
    if (gain.dim(0) != C || bias.dim(0) != C ||
        running_mean.size() != static_cast<std::size_t>(C) ||
        running_var.size() != static_cast<std::size_t>(C))
        throw DimensionError("batch_norm: parameter size mismatch for " + shape_str(x.shape()));

    std::vector<S> mu(C), inv(C);
    const S* px = x.data();
    if (training) {
        for (int c = 0; c < C; ++c) {
            S m = S(0);
            for (int t = 0; t < T; ++t) {
                const S* p = px + (static_cast<std::int64_t>(t) * C + c) * hw;
                for (std::int64_t i = 0; i < hw; ++i) m += p[i];
            }
            m /= static_cast<S>(n);
            S var = S(0);
            for (int t = 0; t < T; ++t) {
                const S* p = px + (static_cast<std::int64_t>(t) * C + c) * hw;
                for (std::int64_t i = 0; i < hw; ++i) {
                    const S d = p[i] - m;
                    var += d * d;
                }
            }
            var /= static_cast<S>(n);
            mu[c] = m;
            inv[c] = S(1) / std::sqrt(var + static_cast<S>(eps));
            const S mom = static_cast<S>(momentum);
            const S unbiased =
                n > 1 ? var * static_cast<S>(n) / static_cast<S>(n - 1) : var;
            running_mean[c] = (S(1) - mom) * running_mean[c] + mom * m;
            running_var[c] = (S(1) - mom) * running_var[c] + mom * unbiased;
        }
    } else {
        for (int c = 0; c < C; ++c) {
            mu[c] = running_mean[c];
            inv[c] = S(1) / std::sqrt(running_var[c] + static_cast<S>(eps));
        }
    }

    auto y = TensorT<S>::zeros(x.shape());
    const S* pg = gain.data();
    const S* pb = bias.data();
    S* py = y.data();
    for (int t = 0; t < T; ++t)
        for (int c = 0; c < C; ++c) {
            const std::int64_t base = (static_cast<std::int64_t>(t) * C + c) * hw;
            const S m = mu[c], iv = inv[c], g = pg[c], b = pb[c];
            for (std::int64_t i = 0; i < hw; ++i) py[base + i] = (px[base + i] - m) * iv * g + b;
        }

    const bool rg = x.requires_grad() || gain.requires_grad() || bias.requires_grad();
    record_op<S>("batch_norm", rg, y,
                 [x, gain, bias, y, T, C, hw, n, training, mu = std::move(mu),
                  inv = std::move(inv)]() {
                     const auto& gy = y.st()->g;
                     if (gy.empty()) return;
                     const S* px2 = x.data();
                     const S* pg2 = gain.data();
                     for (int c = 0; c < C; ++c) {
                         const S m = mu[c], iv = inv[c];
                         S sum_g = S(0), sum_gx = S(0);
                         for (int t = 0; t < T; ++t) {
                             const std::int64_t base = (static_cast<std::int64_t>(t) * C + c) * hw;
                             for (std::int64_t i = 0; i < hw; ++i) {
                                 const S g = gy[base + i];
                                 sum_g += g;
                                 sum_gx += g * (px2[base + i] - m) * iv;
                             }
                         }
                         if (gain.requires_grad()) {
                             gain.st()->ensure_grad();
                             gain.st()->g[c] += sum_gx;
                         }
                         if (bias.requires_grad()) {
                             bias.st()->ensure_grad();
                             bias.st()->g[c] += sum_g;
                         }
                         if (x.requires_grad()) {
                             x.st()->ensure_grad();
                             auto& gx = x.st()->g;
                             const S gm = pg2[c];
                             if (training) {
                                 const S mean_g = sum_g / static_cast<S>(n);
                                 const S mean_gx = sum_gx / static_cast<S>(n);
                                 for (int t = 0; t < T; ++t) {
                                     const std::int64_t base =
                                         (static_cast<std::int64_t>(t) * C + c) * hw;
                                     for (std::int64_t i = 0; i < hw; ++i) {
                                         const S xh = (px2[base + i] - m) * iv;
                                         gx[base + i] +=
                                             gm * iv * (gy[base + i] - mean_g - xh * mean_gx);
                                     }
                                 }
                             } else {
                                 for (int t = 0; t < T; ++t) {
                                     const std::int64_t base =
                                         (static_cast<std::int64_t>(t) * C + c) * hw;
                                     for (std::int64_t i = 0; i < hw; ++i)
                                         gx[base + i] += gm * iv * gy[base + i];
                                 }
                             }
                         }
                     }
                 });
    return y;
}

template <typename S>
TensorT<S> soft_threshold(const TensorT<S>& x, const TensorT<S>& tau) {
    std::int64_t maps = 0, inner = 0;
    if (x.rank() == 3 && tau.rank() == 1 && tau.dim(0) == x.dim(0)) {
        maps = x.dim(0);
        inner = static_cast<std::int64_t>(x.dim(1)) * x.dim(2);
    } else if (x.rank() == 4 && tau.rank() == 2 && tau.dim(0) == x.dim(0) &&
               tau.dim(1) == x.dim(1)) {
        maps = static_cast<std::int64_t>(x.dim(0)) * x.dim(1);
        inner = static_cast<std::int64_t>(x.dim(2)) * x.dim(3);
    } else {
        throw DimensionError("soft_threshold: x " + shape_str(x.shape()) + " vs tau " +
                             shape_str(tau.shape()));
    }
    const S* pt = tau.data();
    for (std::int64_t m = 0; m < maps; ++m)
        if (pt[m] < S(0))
            throw ContractError("soft_threshold: negative threshold " + std::to_string(pt[m]) +
                                " at channel index " + std::to_string(m));

    auto y = TensorT<S>::zeros(x.shape());
    const S* px = x.data();
    S* py = y.data();
    for (std::int64_t m = 0; m < maps; ++m) {
        const S th = pt[m];
        const S* in = px + m * inner;
        S* out = py + m * inner;
        for (std::int64_t i = 0; i < inner; ++i) {
            const S v = in[i];
            const S a = v < S(0) ? -v : v;
            out[i] = a > th ? (v > S(0) ? v - th : v + th) : S(0);
        }
    }
    record_op<S>("soft_threshold", x.requires_grad() || tau.requires_grad(), y,
                 [x, tau, y, maps, inner]() {
                     const auto& gy = y.st()->g;
                     if (gy.empty()) return;
                     const S* px2 = x.data();
                     const S* pt2 = tau.data();
                     for (std::int64_t m = 0; m < maps; ++m) {
                         const S th = pt2[m];
                         const S* in = px2 + m * inner;
                         const S* g = gy.data() + m * inner;
                         if (x.requires_grad()) {
                             x.st()->ensure_grad();
                             S* gx = x.st()->g.data() + m * inner;
                             for (std::int64_t i = 0; i < inner; ++i) {
                                 const S a = in[i] < S(0) ? -in[i] : in[i];
                                 if (a > th) gx[i] += g[i];
                             }
                         }
                         if (tau.requires_grad()) {
                             tau.st()->ensure_grad();
                             S acc = S(0);
                             for (std::int64_t i = 0; i < inner; ++i) {
                                 const S a = in[i] < S(0) ? -in[i] : in[i];
                                 if (a > th) acc += in[i] > S(0) ? -g[i] : g[i];
                             }
                             tau.st()->g[m] += acc;
                         }
                     }
                 });
    return y;
}

template <typename S>
TensorT<S> cross_entropy_logits(const TensorT<S>& logits, const std::vector<int>& labels) {
    if (logits.rank() != 2)
        throw DimensionError("cross_entropy: logits must be [B,K], got " +
                             shape_str(logits.shape()));
    const int B = logits.dim(0), K = logits.dim(1);
    if (static_cast<int>(labels.size()) != B)
        throw DimensionError("cross_entropy: " + std::to_string(labels.size()) +
                             " labels for batch of " + std::to_string(B));
    for (int b = 0; b < B; ++b)
        if (labels[b] < 0 || labels[b] >= K)
            throw LabelError("cross_entropy: label " + std::to_string(labels[b]) +
                             " out of range for " + std::to_string(K) + " classes at row " +
                             std::to_string(b));

    auto y = TensorT<S>::zeros({1});
    std::vector<S> lse(B);
    const S* pl = logits.data();
    S total = S(0);
    for (int b = 0; b < B; ++b) {
        const S* row = pl + static_cast<std::int64_t>(b) * K;
        S m = row[0];
        for (int k = 1; k < K; ++k) m = std::max(m, row[k]);
        S sum = S(0);
        for (int k = 0; k < K; ++k) sum += std::exp(row[k] - m);
        lse[b] = m + std::log(sum);
        total += lse[b] - row[labels[b]];
    }
    y.data()[0] = total / static_cast<S>(B);
    record_op<S>("cross_entropy", logits.requires_grad(), y,
                 [logits, y, labels, B, K, lse = std::move(lse)]() {
                     const auto& gy = y.st()->g;
                     if (gy.empty() || !logits.requires_grad()) return;
                     logits.st()->ensure_grad();
                     auto& gl = logits.st()->g;
                     const S* pl2 = logits.data();
                     const S scale = gy[0] / static_cast<S>(B);
                     for (int b = 0; b < B; ++b) {
                         const S* row = pl2 + static_cast<std::int64_t>(b) * K;
                         S* grow = gl.data() + static_cast<std::int64_t>(b) * K;
                         for (int k = 0; k < K; ++k) {
                             const S p = std::exp(row[k] - lse[b]);
                             grow[k] += scale * (p - (k == labels[b] ? S(1) : S(0)));
                         }
                     }
                 });
    return y;
}

template <typename S>
TensorT<S> dropout_mask(const TensorT<S>& x, const std::vector<S>& mask) {
    if (mask.size() != static_cast<std::size_t>(x.size()))
        throw DimensionError("dropout: mask size " + std::to_string(mask.size()) +
                             " vs tensor " + shape_str(x.shape()));
    auto y = TensorT<S>::zeros(x.shape());
    const S* px = x.data();
    S* py = y.data();
    for (std::size_t i = 0; i < mask.size(); ++i) py[i] = px[i] * mask[i];
    record_op<S>("dropout", x.requires_grad(), y, [x, y, mask]() {
        const auto& gy = y.st()->g;
        if (gy.empty() || !x.requires_grad()) return;
        x.st()->ensure_grad();
        auto& gx = x.st()->g;
        for (std::size_t i = 0; i < gy.size(); ++i) gx[i] += gy[i] * mask[i];
    });
    return y;
}

template <typename S>
TensorT<S> dropout(const TensorT<S>& x, double rate, Rng& rng, bool training) {
    if (rate < 0.0 || rate >= 1.0)
        throw ContractError("dropout: rate " + std::to_string(rate) + " outside [0,1)");
    if (!training || rate == 0.0) return x;
    const double keep = 1.0 - rate;
    const S scale = static_cast<S>(1.0 / keep);
    std::vector<S> mask(static_cast<std::size_t>(x.size()));
    for (auto& m : mask) m = rng.uniform() < keep ? scale : S(0);
    return dropout_mask(x, mask);
}

#define RAL_INSTANTIATE_ELEM(S)                                                                  \
    template TensorT<S> add<S>(const TensorT<S>&, const TensorT<S>&);                            \
    template TensorT<S> sub<S>(const TensorT<S>&, const TensorT<S>&);                            \
    template TensorT<S> mul<S>(const TensorT<S>&, const TensorT<S>&);                            \
    template TensorT<S> scalar_mul<S>(const TensorT<S>&, double);                                \
    template TensorT<S> abs_<S>(const TensorT<S>&);                                              \
    template TensorT<S> relu<S>(const TensorT<S>&);                                              \
    template TensorT<S> sigmoid<S>(const TensorT<S>&);                                           \
    template TensorT<S> mul_scalar_tensor<S>(const TensorT<S>&, const TensorT<S>&);              \
    template TensorT<S> add_channel<S>(const TensorT<S>&, const TensorT<S>&);                    \
    template TensorT<S> mul_channel<S>(const TensorT<S>&, const TensorT<S>&);                    \
    template TensorT<S> add_row<S>(const TensorT<S>&, const TensorT<S>&);                        \
    template TensorT<S> sum_all<S>(const TensorT<S>&);                                           \
    template TensorT<S> mean_all<S>(const TensorT<S>&);                                          \
    template TensorT<S> global_avg_pool<S>(const TensorT<S>&);                                   \
    template TensorT<S> mean_lastdim<S>(const TensorT<S>&);                                      \
    template TensorT<S> reshape<S>(const TensorT<S>&, Shape);                                    \
    template TensorT<S> slice0<S>(const TensorT<S>&, int);                                       \
    template TensorT<S> slice0_range<S>(const TensorT<S>&, int, int);                            \
    template TensorT<S> stack0<S>(const std::vector<TensorT<S>>&);                               \
    template TensorT<S> concat0<S>(const TensorT<S>&, const TensorT<S>&);                        \
    template TensorT<S> slice_lastdim<S>(const TensorT<S>&, int, int);                           \
    template TensorT<S> flip_lastdim<S>(const TensorT<S>&);                                      \
    template TensorT<S> concat_lastdim<S>(const TensorT<S>&, const TensorT<S>&);                 \
    template TensorT<S> swap01<S>(const TensorT<S>&);                                            \
    template TensorT<S> chw_to_nc<S>(const TensorT<S>&);                                         \
    template TensorT<S> nc_to_chw<S>(const TensorT<S>&, int, int);                               \
    template TensorT<S> concat_channel<S>(const std::vector<TensorT<S>>&);                       \
    template TensorT<S> softmax_lastdim<S>(const TensorT<S>&);                                   \
    template TensorT<S> layer_norm_lastdim<S>(const TensorT<S>&, const TensorT<S>&,              \
                                              const TensorT<S>&, double);                        \
    template TensorT<S> batch_norm<S>(const TensorT<S>&, const TensorT<S>&, const TensorT<S>&,   \
                                      std::vector<S>&, std::vector<S>&, bool, double, double);   \
    template TensorT<S> soft_threshold<S>(const TensorT<S>&, const TensorT<S>&);                 \
    template TensorT<S> cross_entropy_logits<S>(const TensorT<S>&, const std::vector<int>&);     \
    template TensorT<S> dropout<S>(const TensorT<S>&, double, Rng&, bool);                       \
    template TensorT<S> dropout_mask<S>(const TensorT<S>&, const std::vector<S>&);

RAL_INSTANTIATE_ELEM(float)
RAL_INSTANTIATE_ELEM(double)
#undef RAL_INSTANTIATE_ELEM

}  // namespace ral
