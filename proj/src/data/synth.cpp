#include "data/synth.hpp"

#include <cmath>

namespace ral::data {

namespace {

constexpr double kBackground = 0.45;
constexpr double kRingWidth = 0.25;
constexpr int kPatternBumps = 6;
// mirror-symmetric decoy bumps drawn per sample; they share the pattern's
// statistics so absolute-position template matching cannot separate a pair
constexpr int kDecoyBumps = 8;
constexpr double kBumpSigma = 1.6;
constexpr double kBumpAmplitude = 0.55;
constexpr double kTwoPi = 6.283185307179586476925286766559;

struct PatternBump {
    double y, x, sign;
};

// Fixed per class: a small arrangement of bumps on the right half. Even class
// of a pair carries bright bumps, the odd one dark bumps, so the pair is
// separated by the signed bump mass of the asymmetric component rather than
// by absolute bump positions.
std::vector<PatternBump> class_pattern(const SynthSpec& spec, int label) {
    Rng rng(Rng::mix(Rng::mix(spec.seed, 0x504154u), static_cast<std::uint64_t>(label)));
    std::vector<PatternBump> bumps;
    bumps.reserve(kPatternBumps);
    for (int i = 0; i < kPatternBumps; ++i) {
        PatternBump b;
        b.y = rng.uniform(0.15, 0.85) * (spec.height - 1);
        b.x = rng.uniform(0.58, 0.92) * (spec.width - 1);
        b.sign = label % 2 == 0 ? 1.0 : -1.0;
        bumps.push_back(b);
    }
    return bumps;
}

}  // namespace

SequenceSample generate_one(const SynthSpec& spec, std::int64_t index) {
    spec.validate();
    const int T = spec.frames, H = spec.height, W = spec.width;
    const int wh = (W + 1) / 2;  // columns computed directly; the rest mirrored
    const double a = spec.asymmetry_strength;
    const double sigma = spec.redundancy_noise_level;
    const double cx = (W - 1) / 2.0;

    SequenceSample sample;
    sample.label = static_cast<int>(index % spec.num_classes);
    sample.length = T;
    const int pair = sample.label / 2;

    Rng rng(Rng::mix(spec.seed, static_cast<std::uint64_t>(index)));

    // per-sample geometry and motion style (pair-coded frequency and phase)
    const double cy = 0.5 * H + rng.uniform(-1.5, 1.5);
    const double rx0 = 0.22 * W * (1.0 + rng.uniform(-0.1, 0.1));
    const double ry0 = 0.13 * H * (1.0 + rng.uniform(-0.1, 0.1));
    const double amp = 0.5 * (1.0 + rng.uniform(-0.15, 0.15));
    const double freq = 1.0 + pair;
    const double phase = pair * 1.5707963267948966 + rng.uniform(-0.3, 0.3);
    const double pattern_scale = kBumpAmplitude * (1.0 + rng.uniform(-0.1, 0.1));

    const auto bumps = class_pattern(spec, sample.label);

    // per-sample symmetric decoys, static across frames like the pattern
    std::vector<float> decoy(static_cast<std::size_t>(H) * W, 0.0f);
    for (int i = 0; i < kDecoyBumps; ++i) {
        const double by = rng.uniform(0.15, 0.85) * (H - 1);
        const double bx = rng.uniform(0.58, 0.92) * (W - 1);
        const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
        const double bamp = kBumpAmplitude * (1.0 + rng.uniform(-0.1, 0.1));
        const int y0 = std::max(0, static_cast<int>(by - 3 * kBumpSigma));
        const int y1 = std::min(H - 1, static_cast<int>(by + 3 * kBumpSigma) + 1);
        const int x0 = std::max(wh, static_cast<int>(bx - 3 * kBumpSigma));
        const int x1 = std::min(W - 1, static_cast<int>(bx + 3 * kBumpSigma) + 1);
        for (int y = y0; y <= y1; ++y)
            for (int x = x0; x <= x1; ++x) {
                const double dy = y - by;
                const double dx = x - bx;
                decoy[static_cast<std::size_t>(y) * W + x] += static_cast<float>(
                    sign * bamp * std::exp(-(dx * dx + dy * dy) / (2 * kBumpSigma * kBumpSigma)));
            }
    }
    for (int y = 0; y < H; ++y)  // mirror onto the left half
        for (int x = 0; x < W - wh; ++x)
            decoy[static_cast<std::size_t>(y) * W + x] =
                decoy[static_cast<std::size_t>(y) * W + (W - 1 - x)];

    auto frames = Tensor::zeros({T, H, W});
    float* out = frames.data();
    std::vector<float> gate(static_cast<std::size_t>(H) * W);
    std::vector<float> noise_l(static_cast<std::size_t>(H) * wh);

    for (int t = 0; t < T; ++t) {
        const double u = T > 1 ? static_cast<double>(t) / T : 0.0;
        const double mod = std::sin(kTwoPi * freq * u + phase);
        const double rx = rx0 * (1.0 + 0.35 * mod);
        const double ry = ry0 * (1.0 - 0.5 * mod);
        float* frame = out + static_cast<std::int64_t>(t) * H * W;

        // mirror-symmetric base: compute left half, copy to the right
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < wh; ++x) {
                const double dx = (x - cx) / rx;
                const double dy = (y - cy) / ry;
                const double d = std::sqrt(dx * dx + dy * dy);
                const double g = std::exp(-(d - 1.0) * (d - 1.0) / (2.0 * kRingWidth * kRingWidth));
                frame[y * W + x] = static_cast<float>(kBackground + amp * g);
                gate[static_cast<std::size_t>(y) * W + x] = static_cast<float>(g);
            }
        for (int y = 0; y < H; ++y)
            for (int x = wh; x < W; ++x) {
                frame[y * W + x] = frame[y * W + (W - 1 - x)];
                gate[static_cast<std::size_t>(y) * W + x] =
                    gate[static_cast<std::size_t>(y) * W + (W - 1 - x)];
            }

        for (int i = 0; i < H * W; ++i) frame[i] += decoy[static_cast<std::size_t>(i)];

        if (sigma > 0.0) {
            for (auto& v : noise_l) v = static_cast<float>(rng.normal());
            const double keep = std::sqrt(std::max(0.0, 1.0 - a * a));
            for (int y = 0; y < H; ++y) {
                // background clutter, masked away from the mouth ring
                for (int x = 0; x < wh; ++x) {
                    const double mask = 1.0 - gate[static_cast<std::size_t>(y) * W + x];
                    frame[y * W + x] += static_cast<float>(
                        sigma * mask * noise_l[static_cast<std::size_t>(y) * wh + x]);
                }
                for (int x = wh; x < W; ++x) {
                    const double mask = 1.0 - gate[static_cast<std::size_t>(y) * W + x];
                    const double mirrored = noise_l[static_cast<std::size_t>(y) * wh + (W - 1 - x)];
                    const double fresh = rng.normal();
                    frame[y * W + x] +=
                        static_cast<float>(sigma * mask * (keep * mirrored + a * fresh));
                }
            }
        }

        if (a > 0.0) {
            // class-coded asymmetric pattern, strictly right of the mirror axis
            for (const auto& b : bumps) {
                const int y0 = std::max(0, static_cast<int>(b.y - 3 * kBumpSigma));
                const int y1 = std::min(H - 1, static_cast<int>(b.y + 3 * kBumpSigma) + 1);
                const int x0 = std::max(wh, static_cast<int>(b.x - 3 * kBumpSigma));
                const int x1 = std::min(W - 1, static_cast<int>(b.x + 3 * kBumpSigma) + 1);
                for (int y = y0; y <= y1; ++y)
                    for (int x = x0; x <= x1; ++x) {
                        const double dy = y - b.y;
                        const double dx = x - b.x;
                        const double g =
                            std::exp(-(dx * dx + dy * dy) / (2.0 * kBumpSigma * kBumpSigma));
                        frame[y * W + x] +=
                            static_cast<float>(a * pattern_scale * b.sign * g);
                    }
            }
        }

        for (int i = 0; i < H * W; ++i)
            frame[i] = std::min(1.0f, std::max(0.0f, frame[i]));
    }

    sample.frames = frames;
    return sample;
}

std::vector<SequenceSample> generate(const SynthSpec& spec, int n) {
    if (n < 1) throw ContractError("generate: sample count must be >= 1, got " + std::to_string(n));
    std::vector<SequenceSample> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) out.push_back(generate_one(spec, i));
    return out;
}

Tensor normalize_clip(const Tensor& frames) {
    auto out = frames.clone();
    double mean = 0.0;
    for (auto v : out.vec()) mean += v;
    mean /= static_cast<double>(out.size());
    double var = 0.0;
    for (auto v : out.vec()) {
        const double d = v - mean;
        var += d * d;
    }
    var /= static_cast<double>(out.size());
    const double inv = var > 0.0 ? 1.0 / std::sqrt(var) : 0.0;
    for (auto& v : out.vec()) v = static_cast<float>((v - mean) * inv);
    return out;
}

Tensor preprocess(const Tensor& frames, bool train_mode, Rng* rng, int crop) {
    if (frames.rank() != 3)
        throw DimensionError("preprocess: expects [T,H,W], got " + shape_str(frames.shape()));
    const int T = frames.dim(0), H = frames.dim(1), W = frames.dim(2);
    if (H < crop || W < crop)
        throw DimensionError("preprocess: spatial extent " + std::to_string(H) + "x" +
                             std::to_string(W) + " below crop size " + std::to_string(crop));
    int oy = (H - crop) / 2, ox = (W - crop) / 2;
    if (train_mode) {
        if (!rng) throw ContractError("preprocess: training crop needs an RNG stream");
        oy = rng->uniform_int(0, H - crop);
        ox = rng->uniform_int(0, W - crop);
    }
    auto out = Tensor::zeros({T, crop, crop});
    const float* src = frames.data();
    float* dst = out.data();
    for (int t = 0; t < T; ++t)
        for (int y = 0; y < crop; ++y)
            for (int x = 0; x < crop; ++x)
                dst[(static_cast<std::int64_t>(t) * crop + y) * crop + x] =
                    src[(static_cast<std::int64_t>(t) * H + oy + y) * W + ox + x];
    return normalize_clip(out);
}

}  // namespace ral::data
