#pragma once

#include "nn/rao.hpp"

namespace ral::nn {

// Left/right half-width views of a feature map. The right view is flipped
// into the left-facing canonical orientation so one weight set serves both.
// Odd widths put the center column in both views; reassemble averages it.
template <typename S>
struct ViewPairT {
    TensorT<S> left;
    TensorT<S> right;
    bool mirrored_right = true;
    int original_width = 0;
};

template <typename S>
ViewPairT<S> split_views(const TensorT<S>& x) {
    const int w = x.dim(x.rank() - 1);
    if (w < 2)
        throw DimensionError("split_views: width must be >= 2, got " + shape_str(x.shape()));
    const int wh = (w + 1) / 2;
    ViewPairT<S> pair;
    pair.left = slice_lastdim(x, 0, wh);
    pair.right = flip_lastdim(slice_lastdim(x, w - wh, w));
    pair.mirrored_right = true;
    pair.original_width = w;
    return pair;
}

// One parameter set serves both views: apply the same blocks to each.
template <typename S>
ViewPairT<S> encode_shared(const ViewPairT<S>& pair, const std::vector<DrsBlockT<S>>& blocks,
                           bool training) {
    ViewPairT<S> out = pair;
    for (const auto& block : blocks) {
        out.left = block.forward(out.left, training);
        out.right = block.forward(out.right, training);
    }
    return out;
}

template <typename S>
TensorT<S> reassemble(const ViewPairT<S>& pair) {
    const int w = pair.original_width;
    const int wh = (w + 1) / 2;
    const auto& ls = pair.left.shape();
    if (ls.empty() || ls.back() != wh || pair.right.shape() != ls)
        throw ContractError("reassemble: views " + shape_str(pair.left.shape()) + "/" +
                            shape_str(pair.right.shape()) + " inconsistent with original width " +
                            std::to_string(w));
    auto right = pair.mirrored_right ? flip_lastdim(pair.right) : pair.right;
    if (w % 2 == 0) return concat_lastdim(pair.left, right);
    // overlap column: mean of the two copies
    auto left_body = slice_lastdim(pair.left, 0, wh - 1);
    auto center = scalar_mul(
        add(slice_lastdim(pair.left, wh - 1, wh), slice_lastdim(right, 0, 1)), 0.5);
    auto right_body = slice_lastdim(right, 1, wh);
    return concat_lastdim(concat_lastdim(left_body, center), right_body);
}

}  // namespace ral::nn
