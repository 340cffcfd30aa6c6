#pragma once

#include "nn/module.hpp"

namespace ral::nn {

inline int reduced_width(int channels, int ratio) {
    const int r = channels / ratio;
    return r < 4 ? 4 : r;
}

// Attention subnet that derives one positive threshold per channel and frame:
//   a   = GAP(|x|)
//   f   = fc2(relu(fc1(a)))
//   tau = sigmoid(f) * a
// so 0 < tau_c < a_c on any channel with nonzero activation, and tau_c = 0
// exactly on all-zero channels.
template <typename S>
struct ThresholdSubnetT {
    TensorT<S> fc1_w, fc1_b;  // [C,Cr], [Cr]
    TensorT<S> fc2_w, fc2_b;  // [Cr,C], [C]

    // x [T,C,H,W] -> tau [T,C]
    TensorT<S> estimate(const TensorT<S>& x) const {
        if (x.rank() != 4 || x.dim(1) != fc1_w.dim(0))
            throw DimensionError("estimate_threshold: input " + shape_str(x.shape()) +
                                 " does not match subnet of width " +
                                 std::to_string(fc1_w.dim(0)));
        auto a = global_avg_pool(abs_(x));
        auto h = relu(add_row(matmul(a, fc1_w), fc1_b));
        auto f = add_row(matmul(h, fc2_w), fc2_b);
        return mul(sigmoid(f), a);
    }
};

template <typename S>
ThresholdSubnetT<S> make_threshold_subnet(ParamStoreT<S>& ps, Rng& rng, const std::string& name,
                                          int channels, int ratio) {
    const int cr = reduced_width(channels, ratio);
    ThresholdSubnetT<S> s;
    s.fc1_w = ps.add(name + ".fc1.weight", {channels, cr}, true);
    s.fc1_b = ps.add(name + ".fc1.bias", {cr}, false);
    s.fc2_w = ps.add(name + ".fc2.weight", {cr, channels}, true);
    s.fc2_b = ps.add(name + ".fc2.bias", {channels}, false);
    init_fc(s.fc1_w, rng, channels);
    init_fc(s.fc2_w, rng, cr);
    return s;
}

// Shrink x toward zero with the subnet's per-channel thresholds.
template <typename S>
TensorT<S> rao_apply(const TensorT<S>& x, const ThresholdSubnetT<S>& subnet) {
    return soft_threshold(x, subnet.estimate(x));
}

// One residual unit: conv-norm-relu-conv-norm (+ optional projection skip).
template <typename S>
struct ResUnitT {
    Conv2dT<S> conv1;
    BatchNormT<S> bn1;
    Conv2dT<S> conv2;
    BatchNormT<S> bn2;
    bool has_proj = false;
    Conv2dT<S> proj;
    BatchNormT<S> bnp;

    TensorT<S> branch(const TensorT<S>& x, bool training) const {
        auto h = relu(bn1.forward(conv1.forward(x), training));
        return bn2.forward(conv2.forward(h), training);
    }

    TensorT<S> skip(const TensorT<S>& x, bool training) const {
        return has_proj ? bnp.forward(proj.forward(x), training) : x;
    }
};

// DRSBlock: a plain residual block followed by a modified residual block whose
// residual branch passes through the redundancy-aware gate before the skip add.
template <typename S>
struct DrsBlockT {
    ResUnitT<S> plain;     // carries any stride / channel change
    ResUnitT<S> modified;  // stride 1, same channels
    bool use_rao = false;
    ThresholdSubnetT<S> subnet;  // present iff use_rao

    TensorT<S> forward(const TensorT<S>& x, bool training) const {
        auto h = add(relu(plain.branch(x, training)), plain.skip(x, training));
        auto z = modified.branch(h, training);
        if (use_rao) z = rao_apply(z, subnet);
        return add(h, z);
    }
};

template <typename S>
ResUnitT<S> make_res_unit(ParamStoreT<S>& ps, StateRegistryT<S>& sr, Rng& rng,
                          const std::string& name, int ci, int co, int stride) {
    ResUnitT<S> u;
    u.conv1 = make_conv2d(ps, rng, name + ".conv1", co, ci, 3, stride, 1);
    u.bn1 = make_batch_norm(ps, sr, name + ".bn1", co);
    u.conv2 = make_conv2d(ps, rng, name + ".conv2", co, co, 3, 1, 1);
    u.bn2 = make_batch_norm(ps, sr, name + ".bn2", co);
    if (stride != 1 || ci != co) {
        u.has_proj = true;
        u.proj = make_conv2d(ps, rng, name + ".proj", co, ci, 1, stride, 0);
        u.bnp = make_batch_norm(ps, sr, name + ".bnp", co);
    }
    return u;
}

template <typename S>
DrsBlockT<S> make_drs_block(ParamStoreT<S>& ps, StateRegistryT<S>& sr, Rng& rng,
                            const std::string& name, int ci, int co, int stride, bool use_rao,
                            int reduction_ratio) {
    DrsBlockT<S> b;
    b.plain = make_res_unit(ps, sr, rng, name + ".plain", ci, co, stride);
    b.modified = make_res_unit(ps, sr, rng, name + ".mod", co, co, 1);
    b.use_rao = use_rao;
    if (use_rao) b.subnet = make_threshold_subnet(ps, rng, name + ".mod.subnet", co, reduction_ratio);
    return b;
}

}  // namespace ral::nn
