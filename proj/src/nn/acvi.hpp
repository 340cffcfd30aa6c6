#pragma once

#include <utility>

#include "nn/module.hpp"

namespace ral::nn {

// softmax(Q K^T / sqrt(C)) V over spatial-position tokens.
template <typename S>
TensorT<S> scaled_dot_attention(const TensorT<S>& q, const TensorT<S>& k, const TensorT<S>& v) {
    if (q.rank() != 2 || k.rank() != 2 || v.rank() != 2 || q.dim(1) != k.dim(1) ||
        k.dim(0) != v.dim(0))
        throw DimensionError("scaled_dot_attention: q " + shape_str(q.shape()) + ", k " +
                             shape_str(k.shape()) + ", v " + shape_str(v.shape()));
    const double scale = 1.0 / std::sqrt(static_cast<double>(q.dim(1)));
    auto weights = softmax_lastdim(scalar_mul(matmul(q, transpose2(k)), scale));
    return matmul(weights, v);
}

// Bidirectional cross-view interaction with trainable fusion scales:
//   M_{R->L} = Attention(W1L LN(X_L), W1R LN(X_R), W2R X_R)
//   M_{L->R} = Attention(W1R LN(X_R), W1L LN(X_L), W2L X_L)
//   out_L = alpha_L * M_{R->L} + X_L,   out_R = alpha_R * M_{L->R} + X_R
// Values are projected from the un-normalized inputs on purpose.
// alpha_L/alpha_R start at 0 so the module begins as an exact passthrough.
template <typename S>
struct AcviT {
    TensorT<S> w1l, w1r, w2l, w2r;  // [C,C]
    LayerNormT<S> ln_l, ln_r;
    TensorT<S> alpha_l, alpha_r;  // [1]

    // xl, xr: [T,C,H,W], attention per frame over N = H*W tokens
    std::pair<TensorT<S>, TensorT<S>> forward(const TensorT<S>& xl, const TensorT<S>& xr) const {
        if (xl.shape() != xr.shape())
            throw DimensionError("cross_view_interact: " + shape_str(xl.shape()) + " vs " +
                                 shape_str(xr.shape()));
        const int t_frames = xl.dim(0), h = xl.dim(2), w = xl.dim(3);
        std::vector<TensorT<S>> out_l, out_r;
        out_l.reserve(t_frames);
        out_r.reserve(t_frames);
        for (int t = 0; t < t_frames; ++t) {
            auto l = chw_to_nc(slice0(xl, t));
            auto r = chw_to_nc(slice0(xr, t));
            auto lt = ln_l.forward(l);
            auto rt = ln_r.forward(r);
            auto m_rl = scaled_dot_attention(matmul(lt, w1l), matmul(rt, w1r), matmul(r, w2r));
            auto m_lr = scaled_dot_attention(matmul(rt, w1r), matmul(lt, w1l), matmul(l, w2l));
            out_l.push_back(nc_to_chw(add(mul_scalar_tensor(m_rl, alpha_l), l), h, w));
            out_r.push_back(nc_to_chw(add(mul_scalar_tensor(m_lr, alpha_r), r), h, w));
        }
        return {stack0(out_l), stack0(out_r)};
    }
};

template <typename S>
AcviT<S> make_acvi(ParamStoreT<S>& ps, Rng& rng, const std::string& name, int channels,
                   bool share_view_layernorm) {
    AcviT<S> a;
    a.w1l = ps.add(name + ".w1l", {channels, channels}, true);
    a.w1r = ps.add(name + ".w1r", {channels, channels}, true);
    a.w2l = ps.add(name + ".w2l", {channels, channels}, true);
    a.w2r = ps.add(name + ".w2r", {channels, channels}, true);
    init_fc(a.w1l, rng, channels);
    init_fc(a.w1r, rng, channels);
    init_fc(a.w2l, rng, channels);
    init_fc(a.w2r, rng, channels);
    a.ln_l = make_layer_norm(ps, name + ".ln_l", channels);
    a.ln_r = share_view_layernorm ? a.ln_l : make_layer_norm(ps, name + ".ln_r", channels);
    a.alpha_l = ps.add(name + ".alpha_l", {1}, true);
    a.alpha_r = ps.add(name + ".alpha_r", {1}, true);
    return a;
}

}  // namespace ral::nn
