#pragma once

#include <optional>

#include "nn/acvi.hpp"
#include "nn/config.hpp"
#include "nn/views.hpp"

namespace ral::nn {

// Full assembly: 3-D conv frontend, per-frame shared encoder over the two
// half-lip views with redundancy gates, cross-view interaction after selected
// stages, spatial pooling, a two-layer multi-scale temporal decoder and a
// linear classifier. The three config switches carve the ablation grid.
template <typename S>
class RalModelT {
public:
    RalModelT(RalConfig cfg, std::uint64_t seed);

    // batch [B,1,T,H,W] -> logits [B,num_classes]
    TensorT<S> forward(const TensorT<S>& batch, bool training = false, Rng* dropout_rng = nullptr);
    // clip [1,T,H,W] -> logits [num_classes]
    TensorT<S> forward_clip(const TensorT<S>& clip, bool training = false,
                            Rng* dropout_rng = nullptr);

    const RalConfig& config() const { return cfg_; }
    ParamStoreT<S>& params() { return params_; }
    const ParamStoreT<S>& params() const { return params_; }
    StateRegistryT<S>& state() { return state_; }
    const StateRegistryT<S>& state() const { return state_; }
    std::int64_t param_count() const { return params_.total_count(); }

private:
    struct Stage {
        std::vector<DrsBlockT<S>> blocks;
        bool acvi_enabled = false;
        std::optional<AcviT<S>> acvi;
    };

    TensorT<S> encode_views(std::vector<TensorT<S>>& views, bool training);

    RalConfig cfg_;
    ParamStoreT<S> params_;
    StateRegistryT<S> state_;
    Conv3dT<S> front_conv_;
    BatchNormT<S> front_bn_;
    std::vector<Stage> stages_;
    std::vector<std::vector<Conv1dT<S>>> tcn_branches_;  // [layer][kernel]
    std::vector<LayerNormT<S>> tcn_norms_;
    LinearT<S> classifier_;
};

using RalModel = RalModelT<float>;

extern template class RalModelT<float>;
extern template class RalModelT<double>;

}  // namespace ral::nn
