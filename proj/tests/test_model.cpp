#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "core/gradcheck.hpp"
#include "io/checkpoint.hpp"
#include "nn/model.hpp"
#include "testutil.hpp"

using namespace ral;

namespace {

Tensor random_batch(Rng& rng, int b, int t, int h, int w) {
    auto x = Tensor::zeros({b, 1, t, h, w});
    for (auto& v : x.vec()) v = static_cast<float>(rng.uniform());
    return x;
}

RalConfig tiny_config() {
    RalConfig cfg;
    cfg.num_classes = 2;
    cfg.stage_channels = {4};
    cfg.blocks_per_stage = 1;
    cfg.mstcn_kernels = {3};
    cfg.dropout = 0.0;
    return cfg;
}

// Independently wired baseline: fetches the switches-off model's parameters
// by name and replays the pipeline with raw ops.
Tensor hand_baseline_forward(nn::RalModel& model, const Tensor& clip) {
    const auto& cfg = model.config();
    auto& ps = model.params();
    auto state_of = [&](const std::string& name) -> std::vector<float>& {
        for (auto& e : model.state().entries())
            if (e.name == name) return *e.data;
        throw ContractError("state not found: " + name);
    };
    auto bn = [&](const Tensor& x, const std::string& name) {
        return batch_norm(x, ps.find(name + ".gain").tensor, ps.find(name + ".bias").tensor,
                          state_of(name + ".running_mean"), state_of(name + ".running_var"),
                          false);
    };

    auto x = conv3d(clip, ps.find("frontend.conv.weight").tensor, {1, 2, 2}, {2, 3, 3});
    auto frames = maxpool_hw(relu(bn(swap01(x), "frontend.bn")), 2, 2);

    for (std::size_t si = 0; si < cfg.stage_channels.size(); ++si)
        for (int bi = 0; bi < cfg.blocks_per_stage; ++bi) {
            const std::string p =
                "encoder.stage" + std::to_string(si) + ".block" + std::to_string(bi);
            const int stride = (bi == 0 && si > 0) ? 2 : 1;
            // plain unit
            auto h = relu(bn(conv2d(frames, ps.find(p + ".plain.conv1.weight").tensor, stride, 1),
                             p + ".plain.bn1"));
            h = bn(conv2d(h, ps.find(p + ".plain.conv2.weight").tensor, 1, 1), p + ".plain.bn2");
            Tensor skip = frames;
            if (stride != 1 ||
                frames.dim(1) != ps.find(p + ".plain.conv1.weight").tensor.dim(0)) {
                skip = bn(conv2d(frames, ps.find(p + ".plain.proj.weight").tensor, stride, 0),
                          p + ".plain.bnp");
            }
            auto u = add(relu(h), skip);
            // modified unit, no gate when RAO is off
            auto z = relu(bn(conv2d(u, ps.find(p + ".mod.conv1.weight").tensor, 1, 1),
                             p + ".mod.bn1"));
            z = bn(conv2d(z, ps.find(p + ".mod.conv2.weight").tensor, 1, 1), p + ".mod.bn2");
            frames = add(u, z);
        }

    auto seq = transpose2(global_avg_pool(frames));
    for (int li = 0; li < 2; ++li) {
        const std::string lp = "tcn.layer" + std::to_string(li);
        std::vector<Tensor> outs;
        for (int k : cfg.mstcn_kernels)
            outs.push_back(conv1d(seq, ps.find(lp + ".k" + std::to_string(k) + ".weight").tensor,
                                  1, (k - 1) / 2, 1));
        auto cat = concat_channel(outs);
        seq = relu(transpose2(layer_norm_lastdim(transpose2(cat), ps.find(lp + ".ln.gain").tensor,
                                                 ps.find(lp + ".ln.bias").tensor)));
    }
    auto emb = mean_lastdim(seq);
    auto logits = add_row(matmul(reshape(emb, {1, emb.dim(0)}), ps.find("classifier.weight").tensor),
                          ps.find("classifier.bias").tensor);
    return reshape(logits, {cfg.num_classes});
}

long long subnet_param_count(int c, int ratio) {
    const long long cr = nn::reduced_width(c, ratio);
    return static_cast<long long>(c) * cr + cr + cr * c + c;
}

}  // namespace

TEST_CASE("forward produces [B,num_classes] logits") {
    RalConfig cfg;
    cfg.num_classes = 10;
    cfg.stage_channels = {8, 16, 32};
    nn::RalModel model(cfg, 42);
    Rng rng(1);
    auto logits = model.forward(random_batch(rng, 2, 8, 32, 32), false, nullptr);
    CHECK(logits.shape() == Shape{2, 10});
    for (auto v : logits.vec()) CHECK(std::isfinite(v));
}

TEST_CASE("all-switches-off model equals the hand-assembled baseline") {
    RalConfig cfg;
    cfg.num_classes = 5;
    cfg.stage_channels = {4, 8};
    cfg.blocks_per_stage = 1;
    cfg.mstcn_kernels = {3, 5};
    cfg.dropout = 0.0;
    cfg.enable_dlsv = false;
    cfg.enable_rao = false;
    cfg.enable_acvi = false;
    nn::RalModel model(cfg, 9);
    Rng rng(2);
    auto batch = random_batch(rng, 2, 6, 16, 16);
    auto got = model.forward(batch, false, nullptr);
    for (int b = 0; b < 2; ++b) {
        auto want = hand_baseline_forward(model, slice0(batch, b));
        for (int k = 0; k < 5; ++k)
            CHECK(got.data()[b * 5 + k] == want.data()[k]);
    }
}

TEST_CASE("model rejects clips shorter than the smallest temporal kernel") {
    auto cfg = tiny_config();
    nn::RalModel model(cfg, 3);
    Rng rng(3);
    CHECK_THROWS_AS(model.forward(random_batch(rng, 1, 2, 16, 16), false, nullptr),
                    DimensionError);
}

TEST_CASE("parameter bookkeeping across the ablation switches") {
    RalConfig cfg;
    cfg.num_classes = 4;
    cfg.stage_channels = {8, 16};
    cfg.blocks_per_stage = 2;

    auto count = [&](bool dlsv, bool rao, bool acvi) {
        RalConfig c = cfg;
        c.enable_dlsv = dlsv;
        c.enable_rao = rao;
        c.enable_acvi = acvi;
        return nn::RalModel(c, 1).param_count();
    };

    const long long base = count(false, false, false);

    SUBCASE("DLSV adds no parameters (weight sharing)") {
        CHECK(count(true, false, false) == base);
        CHECK(count(true, true, true) == count(false, true, true));
    }

    SUBCASE("RAO adds exactly the threshold subnets") {
        long long expected = 0;
        for (int c : cfg.stage_channels)
            expected += cfg.blocks_per_stage * subnet_param_count(c, cfg.reduction_ratio);
        CHECK(count(false, true, false) - base == expected);
    }

    SUBCASE("ACVI adds exactly 4C^2 + LN + 2 scalars per module") {
        long long expected = 0;
        for (int c : cfg.stage_channels)
            expected += 4LL * c * c + 4LL * c + 2;  // per-view layer norms
        CHECK(count(false, false, true) - base == expected);
    }

    SUBCASE("full model has strictly more parameters than the baseline") {
        CHECK(count(true, true, true) > base);
    }
}

TEST_CASE("same seed gives bit-identical models, different seed differs") {
    auto cfg = tiny_config();
    nn::RalModel a(cfg, 7), b(cfg, 7), c(cfg, 8);
    const auto& pa = a.params().items();
    const auto& pb = b.params().items();
    const auto& pc = c.params().items();
    bool all_equal = true, any_diff = false;
    for (std::size_t i = 0; i < pa.size(); ++i) {
        all_equal = all_equal && pa[i].tensor.vec() == pb[i].tensor.vec();
        any_diff = any_diff || pa[i].tensor.vec() != pc[i].tensor.vec();
    }
    CHECK(all_equal);
    CHECK(any_diff);
}

TEST_CASE("checkpoint round trip is bit-exact") {
    testutil::TempDir dir("ckpt");
    RalConfig cfg;
    cfg.num_classes = 3;
    cfg.stage_channels = {4, 8};
    cfg.mstcn_kernels = {3};
    nn::RalModel model(cfg, 11);
    Rng rng(4);
    auto batch = random_batch(rng, 1, 4, 16, 16);
    // touch the running stats so they are not all default
    (void)model.forward(batch, true, nullptr);
    auto before = model.forward(batch, false, nullptr);

    io::CheckpointMeta meta;
    meta.epoch = 5;
    io::save_checkpoint(dir.str(), model, meta);

    auto stored = io::peek_checkpoint_config(dir.str());
    nn::RalModel loaded(stored, 999);  // seed must not matter after load
    auto got_meta = io::load_checkpoint(dir.str(), loaded);
    CHECK(got_meta.epoch == 5);

    const auto& pa = model.params().items();
    const auto& pb = loaded.params().items();
    REQUIRE(pa.size() == pb.size());
    for (std::size_t i = 0; i < pa.size(); ++i) CHECK(pa[i].tensor.vec() == pb[i].tensor.vec());

    auto after = loaded.forward(batch, false, nullptr);
    CHECK(after.vec() == before.vec());
}

TEST_CASE("loss stays finite over 1000 random batches") {
    auto cfg = tiny_config();
    nn::RalModel model(cfg, 13);
    Rng rng(5);
    for (int i = 0; i < 1000; ++i) {
        auto batch = random_batch(rng, 1, 3, 8, 8);
        std::vector<int> labels{rng.uniform_int(0, 1)};
        auto loss = cross_entropy_logits(model.forward(batch, true, nullptr), labels);
        CHECK(std::isfinite(loss.item()));
    }
}

TEST_CASE("end-to-end gradient check") {
    for (const auto& entry : gradcheck_suite()) {
        if (entry.kind != CheckKind::EndToEnd) continue;
        const double err = entry.run(2024);
        INFO("end-to-end max rel err " << err);
        CHECK(err < 1e-4);
    }
}
