#include "nn/model.hpp"

namespace ral::nn {

template <typename S>
RalModelT<S>::RalModelT(RalConfig cfg, std::uint64_t seed) : cfg_(std::move(cfg)) {
    cfg_.validate();
    Rng rng(Rng::mix(seed, 0x6d6f64656cull));

    const int c0 = cfg_.stage_channels[0];
    front_conv_ = make_conv3d(params_, rng, "frontend.conv", c0, 1, {5, 7, 7}, {1, 2, 2}, {2, 3, 3});
    front_bn_ = make_batch_norm(params_, state_, "frontend.bn", c0);

    const auto acvi_flags = cfg_.acvi_flags();
    int ci = c0;
    for (std::size_t si = 0; si < cfg_.stage_channels.size(); ++si) {
        Stage stage;
        const int co = cfg_.stage_channels[si];
        for (int bi = 0; bi < cfg_.blocks_per_stage; ++bi) {
            const int stride = (bi == 0 && si > 0) ? 2 : 1;
            const std::string name =
                "encoder.stage" + std::to_string(si) + ".block" + std::to_string(bi);
            stage.blocks.push_back(make_drs_block(params_, state_, rng, name, bi == 0 ? ci : co,
                                                  co, stride, cfg_.enable_rao,
                                                  cfg_.reduction_ratio));
        }
        stage.acvi_enabled = cfg_.enable_acvi && acvi_flags[si] != 0;
        if (stage.acvi_enabled)
            stage.acvi = make_acvi(params_, rng, "acvi.stage" + std::to_string(si), co,
                                   cfg_.share_view_layernorm);
        stages_.push_back(std::move(stage));
        ci = co;
    }

    const int c_last = cfg_.stage_channels.back();
    const int nk = static_cast<int>(cfg_.mstcn_kernels.size());
    const int tcn_width = nk * c_last;
    int tcn_in = c_last;
    for (int li = 0; li < 2; ++li) {
        std::vector<Conv1dT<S>> branches;
        for (int k : cfg_.mstcn_kernels) {
            const std::string name = "tcn.layer" + std::to_string(li) + ".k" + std::to_string(k);
            branches.push_back(make_conv1d(params_, rng, name, c_last, tcn_in, k, (k - 1) / 2, 1));
        }
        tcn_branches_.push_back(std::move(branches));
        tcn_norms_.push_back(
            make_layer_norm(params_, "tcn.layer" + std::to_string(li) + ".ln", tcn_width));
        tcn_in = tcn_width;
    }
    classifier_ = make_linear(params_, rng, "classifier", tcn_width, cfg_.num_classes);
}

// Two views travel the shared encoder stacked along the frame axis, so the
// batch-norm statistics span both views and left/right contrast survives
// normalization. The stack is split back only around the interaction module.
template <typename S>
TensorT<S> RalModelT<S>::encode_views(std::vector<TensorT<S>>& views, bool training) {
    const bool two = views.size() == 2;
    const int t_frames = views[0].dim(0);
    TensorT<S> x = two ? concat0(views[0], views[1]) : views[0];
    for (auto& stage : stages_) {
        for (const auto& block : stage.blocks) x = block.forward(x, training);
        if (stage.acvi_enabled) {
            if (two) {
                auto [l, r] = stage.acvi->forward(slice0_range(x, 0, t_frames),
                                                  slice0_range(x, t_frames, 2 * t_frames));
                x = concat0(l, r);
            } else {
                // single-view configuration: the module degenerates to
                // self-interaction; average the two outputs to keep every
                // parameter live
                auto [a, b] = stage.acvi->forward(x, x);
                x = scalar_mul(add(a, b), 0.5);
            }
        }
    }
    auto pooled = global_avg_pool(x);  // [T,C] or [2T,C]
    if (!two) return pooled;
    return scalar_mul(
        add(slice0_range(pooled, 0, t_frames), slice0_range(pooled, t_frames, 2 * t_frames)),
        0.5);
}

template <typename S>
TensorT<S> RalModelT<S>::forward_clip(const TensorT<S>& clip, bool training, Rng* dropout_rng) {
    if (clip.rank() != 4 || clip.dim(0) != 1)
        throw DimensionError("forward: clip must be [1,T,H,W], got " + shape_str(clip.shape()));
    int min_kernel = cfg_.mstcn_kernels[0];
    for (int k : cfg_.mstcn_kernels) min_kernel = std::min(min_kernel, k);
    if (clip.dim(1) < min_kernel)
        throw DimensionError("forward: clip length " + std::to_string(clip.dim(1)) +
                             " shorter than smallest temporal kernel " +
                             std::to_string(min_kernel));

    auto x = front_conv_.forward(clip);           // [C0,T,H/2,W/2]
    auto frames = swap01(x);                      // [T,C0,H/2,W/2]
    frames = relu(front_bn_.forward(frames, training));
    frames = maxpool_hw(frames, 2, 2);            // [T,C0,H/4,W/4]

    std::vector<TensorT<S>> views;
    if (cfg_.enable_dlsv) {
        auto pair = split_views(frames);
        views = {pair.left, pair.right};
    } else {
        views = {frames};
    }
    auto seq = transpose2(encode_views(views, training));  // [C,T]

    for (std::size_t li = 0; li < tcn_branches_.size(); ++li) {
        std::vector<TensorT<S>> outs;
        outs.reserve(tcn_branches_[li].size());
        for (const auto& branch : tcn_branches_[li]) outs.push_back(branch.forward(seq));
        auto cat = concat_channel(outs);  // [nk*C,T]
        seq = relu(transpose2(tcn_norms_[li].forward(transpose2(cat))));
    }

    auto emb = mean_lastdim(seq);  // [nk*C]
    if (training && cfg_.dropout > 0.0 && dropout_rng)
        emb = dropout(emb, cfg_.dropout, *dropout_rng, true);
    auto logits = classifier_.forward(reshape(emb, {1, emb.dim(0)}));
    return reshape(logits, {cfg_.num_classes});
}

template <typename S>
TensorT<S> RalModelT<S>::forward(const TensorT<S>& batch, bool training, Rng* dropout_rng) {
    if (batch.rank() != 5 || batch.dim(1) != 1)
        throw DimensionError("forward: batch must be [B,1,T,H,W], got " +
                             shape_str(batch.shape()));
    std::vector<TensorT<S>> logits;
    logits.reserve(static_cast<std::size_t>(batch.dim(0)));
    for (int b = 0; b < batch.dim(0); ++b)
        logits.push_back(forward_clip(slice0(batch, b), training, dropout_rng));
    return stack0(logits);
}

template class RalModelT<float>;
template class RalModelT<double>;

}  // namespace ral::nn
