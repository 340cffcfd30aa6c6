#pragma once

#include <vector>

#include "core/ops.hpp"

namespace ral::data {

struct SequenceSample {
    Tensor frames;  // [T,H,W], grayscale in [0,1]
    int label = 0;
    int length = 0;
};

// Asymmetry-coded synthetic task. Classes come in pairs (2k, 2k+1) sharing a
// mirror-symmetric moving-ellipse mouth pattern; the two members differ only
// by a class-specific additive pattern on the right half whose amplitude is
// asymmetry_strength. Background clutter has per-pixel std
// redundancy_noise_level; its right half is mirror-correlated so that at
// asymmetry 0 every frame is exactly mirror-symmetric at any noise level.
struct SynthSpec {
    int num_classes = 4;
    int frames = 8;
    int height = 32;
    int width = 32;
    double asymmetry_strength = 0.6;
    double redundancy_noise_level = 0.3;
    std::uint64_t seed = 1;

    void validate() const {
        if (num_classes < 2 || num_classes % 2 != 0)
            throw ContractError("synth: num_classes must be an even number >= 2");
        if (frames < 1 || height < 4 || width < 4)
            throw ContractError("synth: invalid extents T=" + std::to_string(frames) + " H=" +
                                std::to_string(height) + " W=" + std::to_string(width));
        if (asymmetry_strength < 0.0 || asymmetry_strength > 1.0)
            throw ContractError("synth: asymmetry_strength outside [0,1]");
        if (redundancy_noise_level < 0.0)
            throw ContractError("synth: redundancy_noise_level must be >= 0");
    }
};

// Deterministic per (spec.seed, index); parallel generation cannot reorder it.
SequenceSample generate_one(const SynthSpec& spec, std::int64_t index);
std::vector<SequenceSample> generate(const SynthSpec& spec, int n);

// 96x96 RoI pipeline: one shared crop position per clip (random in training,
// centered otherwise), then per-clip normalization to zero mean, unit variance.
Tensor preprocess(const Tensor& frames, bool train_mode, Rng* rng, int crop = 88);

// zero-mean unit-variance over the whole clip
Tensor normalize_clip(const Tensor& frames);

}  // namespace ral::data
