// Acceptance suite: one pass/fail line per criterion, exit 0 iff all pass.
//
//   1. gradient suite under tolerance, within the time budget
//   2. redundancy-gate invariants over 1000 random inputs
//   3. cross-view attention invariants
//   4. symmetric-view invariants
//   5. scaled five-row ablation ordering within the 4-core time budget
//   6. determinism and persistence round trips
//   7. training-recipe conformance

#include <algorithm>
#include <array>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "core/gradcheck.hpp"
#include "io/checkpoint.hpp"
#include "nn/model.hpp"
#include "testutil.hpp"
#include "train/trainer.hpp"

using namespace ral;

namespace {

int g_failures = 0;

void report(int criterion, const std::string& name, bool pass, const std::string& detail) {
    std::printf("[%d] %-28s %s  (%s)\n", criterion, name.c_str(), pass ? "PASS" : "FAIL",
                detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

std::string slurp(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

double now_seconds() {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

// ---- criterion 1 ----
void criterion_gradients() {
    const double t0 = now_seconds();
    const auto rep = run_gradcheck_suite(1e-6, 1e-5, 1e-4, 20250810);
    const double elapsed = now_seconds() - t0;
    double worst_op = 0, e2e = 0;
    bool pass = true;
    for (const auto& l : rep.lines) {
        pass = pass && l.pass;
        if (l.name == "model-end-to-end")
            e2e = l.max_rel_err;
        else
            worst_op = std::max(worst_op, l.max_rel_err);
    }
    pass = pass && elapsed < 120.0;
    char buf[160];
    std::snprintf(buf, sizeof(buf), "worst op %.2e < 1e-6, end-to-end %.2e < 1e-4, %.1fs < 120s",
                  worst_op, e2e, elapsed);
    report(1, "gradient suite", pass, buf);
}

// ---- criterion 2 ----
void criterion_rao() {
    Rng rng(11);
    bool bound = true, shrink = true, lipschitz = true, monotone = true, never_zero = true;
    int applicable = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        nn::ParamStoreT<double> ps;
        auto subnet = nn::make_threshold_subnet(ps, rng, "s", 4, 4);
        auto x = TensorD::zeros({1, 4, 3, 3});
        for (auto& v : x.vec()) v = rng.uniform(-2, 2);
        auto tau = subnet.estimate(x);
        auto gap = global_avg_pool(abs_(x));
        for (int c = 0; c < 4; ++c)
            bound = bound && tau.vec()[c] > 0.0 && tau.vec()[c] < gap.vec()[c];

        auto y = soft_threshold(x, tau);
        double mx = 0;
        bool any_nonzero = false;
        for (std::int64_t i = 0; i < x.size(); ++i) {
            shrink = shrink && std::abs(y.vec()[i]) <= std::abs(x.vec()[i]) &&
                     (y.vec()[i] == 0.0 || (y.vec()[i] > 0) == (x.vec()[i] > 0));
            any_nonzero = any_nonzero || y.vec()[i] != 0.0;
        }
        for (int c = 0; c < 4; ++c) {
            double cm = 0;
            for (int i = 0; i < 9; ++i) cm = std::max(cm, std::abs(x.vec()[c * 9 + i]));
            mx = std::max(mx, cm - gap.vec()[c]);
        }
        if (mx > 0) {
            ++applicable;
            never_zero = never_zero && any_nonzero;
        }

        // 1-Lipschitz against a perturbed copy
        auto x2 = x.clone();
        for (auto& v : x2.vec()) v += rng.uniform(-0.5, 0.5);
        auto y2 = soft_threshold(x2, tau);
        for (std::int64_t i = 0; i < x.size(); ++i)
            lipschitz = lipschitz && std::abs(y.vec()[i] - y2.vec()[i]) <=
                                         std::abs(x.vec()[i] - x2.vec()[i]) + 1e-15;

        // sparsification monotonicity
        auto zero_count = [](const TensorD& t) {
            int n = 0;
            for (auto v : t.vec()) n += v == 0.0;
            return n;
        };
        auto tau_up = tau.clone();
        tau_up.data()[rng.uniform_int(0, 3)] += rng.uniform(0.0, 1.0);
        monotone = monotone && zero_count(soft_threshold(x, tau_up)) >= zero_count(y);
    }
    const bool pass = bound && shrink && lipschitz && monotone && never_zero && applicable > 900;
    char buf[200];
    std::snprintf(buf, sizeof(buf),
                  "bound %s, shrinkage %s, 1-Lipschitz %s, monotone %s, never-all-zero %s (%d/1000)",
                  bound ? "ok" : "BAD", shrink ? "ok" : "BAD", lipschitz ? "ok" : "BAD",
                  monotone ? "ok" : "BAD", never_zero ? "ok" : "BAD", applicable);
    report(2, "redundancy-gate invariants", pass, buf);
}

// ---- criterion 3 ----
void criterion_acvi() {
    Rng rng(13);
    bool rows_ok = true;
    for (int trial = 0; trial < 100; ++trial) {
        auto q = TensorD::zeros({6, 4});
        auto k = TensorD::zeros({6, 4});
        for (auto& v : q.vec()) v = rng.uniform(-3, 3);
        for (auto& v : k.vec()) v = rng.uniform(-3, 3);
        auto w = softmax_lastdim(scalar_mul(matmul(q, transpose2(k)), 0.5));
        for (int i = 0; i < 6; ++i) {
            double sum = 0;
            for (int j = 0; j < 6; ++j) {
                rows_ok = rows_ok && w.data()[i * 6 + j] >= 0.0;
                sum += w.data()[i * 6 + j];
            }
            rows_ok = rows_ok && std::abs(sum - 1.0) < 1e-9;
        }
    }

    nn::ParamStoreT<double> ps;
    auto acvi = nn::make_acvi(ps, rng, "m", 4, false);
    auto xl = TensorD::zeros({2, 4, 3, 3});
    auto xr = TensorD::zeros({2, 4, 3, 3});
    for (auto& v : xl.vec()) v = rng.uniform(-1, 1);
    for (auto& v : xr.vec()) v = rng.uniform(-1, 1);
    auto [pl, pr] = acvi.forward(xl, xr);  // alphas start at zero
    const bool passthrough = pl.vec() == xl.vec() && pr.vec() == xr.vec();

    acvi.w1r.vec() = acvi.w1l.vec();
    acvi.w2r.vec() = acvi.w2l.vec();
    acvi.ln_r.gain.vec() = acvi.ln_l.gain.vec();
    acvi.ln_r.bias.vec() = acvi.ln_l.bias.vec();
    acvi.alpha_l.data()[0] = 0.8;
    acvi.alpha_r.data()[0] = 0.8;
    auto [l1, r1] = acvi.forward(xl, xr);
    auto [l2, r2] = acvi.forward(xr, xl);
    double swap_err = 0;
    for (std::int64_t i = 0; i < l1.size(); ++i) {
        swap_err = std::max(swap_err, std::abs(l2.vec()[i] - r1.vec()[i]));
        swap_err = std::max(swap_err, std::abs(r2.vec()[i] - l1.vec()[i]));
    }
    const bool pass = rows_ok && passthrough && swap_err < 1e-6;
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "rows sum to 1 within 1e-9 %s, alpha=0 bit-exact %s, swap err %.2e < 1e-6",
                  rows_ok ? "ok" : "BAD", passthrough ? "ok" : "BAD", swap_err);
    report(3, "cross-view invariants", pass, buf);
}

// ---- criterion 4 ----
void criterion_dlsv() {
    Rng rng(17);
    bool round_trip = true;
    for (int trial = 0; trial < 50; ++trial) {
        auto x = TensorD::zeros({2, 3, 4, 2 * rng.uniform_int(2, 8)});
        for (auto& v : x.vec()) v = rng.uniform(-1, 1);
        auto back = nn::reassemble(nn::split_views(x));
        round_trip = round_trip && back.vec() == x.vec();
    }

    nn::ParamStoreT<double> ps;
    nn::StateRegistryT<double> sr;
    std::vector<nn::DrsBlockT<double>> blocks;
    blocks.push_back(nn::make_drs_block(ps, sr, rng, "b0", 3, 3, 1, true, 4));
    auto x = TensorD::zeros({2, 3, 4, 8});
    for (auto& v : x.vec()) v = rng.uniform(-1, 1);
    auto out = nn::encode_shared(nn::split_views(x), blocks, false);
    auto out_f = nn::encode_shared(nn::split_views(flip_lastdim(x)), blocks, false);
    const bool equivariant =
        out_f.left.vec() == out.right.vec() && out_f.right.vec() == out.left.vec();

    RalConfig mc;
    mc.num_classes = 4;
    mc.stage_channels = {8, 16};
    RalConfig single = mc;
    single.enable_dlsv = false;
    const auto two_count = nn::RalModel(mc, 1).param_count();
    const auto one_count = nn::RalModel(single, 1).param_count();
    const bool shared = two_count == one_count;

    const bool pass = round_trip && equivariant && shared;
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "even round trip bit-exact %s, mirror-swap exact %s, params %lld == %lld",
                  round_trip ? "ok" : "BAD", equivariant ? "ok" : "BAD",
                  static_cast<long long>(two_count), static_cast<long long>(one_count));
    report(4, "symmetric-view invariants", pass, buf);
}

// ---- criterion 5 ----
void criterion_ablation(const std::string& scratch) {
    io::RunConfig cfg;
    cfg.out_dir = scratch + "/sweep";
    cfg.synth.num_classes = 4;
    cfg.synth.frames = 8;
    cfg.synth.height = 32;
    cfg.synth.width = 32;
    cfg.synth.asymmetry_strength = 0.6;
    cfg.synth.redundancy_noise_level = 0.3;
    cfg.synth.seed = 7;
    cfg.model.stage_channels = {8, 16, 32};
    cfg.model.blocks_per_stage = 1;
    cfg.train.epochs = 30;
    cfg.train.train_count = 512;
    cfg.train.val_count = 128;
    cfg.ablate.seeds = {1, 2, 3};

    train::AblateStats stats;
    const auto rows = train::run_ablate(cfg, &stats);

    // schedule the measured run times onto 4 workers (list scheduling in task
    // order) to evaluate the stated 4-core budget on any host
    std::array<double, 4> workers{};
    for (double s : stats.run_seconds) {
        auto it = std::min_element(workers.begin(), workers.end());
        *it += s;
    }
    const double makespan4 = *std::max_element(workers.begin(), workers.end());

    const double base = rows[0].mean_acc, full = rows[4].mean_acc;
    bool full_beats_all = true;
    for (const auto& r : rows) full_beats_all = full_beats_all && full >= r.mean_acc;
    const bool margin = full >= base + 0.10;
    const bool budget = makespan4 < 1800.0;

    const bool paper_order = rows[0].mean_acc < rows[1].mean_acc &&
                             rows[1].mean_acc < rows[2].mean_acc &&
                             rows[2].mean_acc < rows[3].mean_acc &&
                             rows[3].mean_acc < rows[4].mean_acc;

    char buf[240];
    std::snprintf(buf, sizeof(buf),
                  "base %.3f dlsv %.3f dlsv+rao %.3f acvi %.3f full %.3f | full-base %+.1fpt >= 10, "
                  "full max %s, 4-core %.0fs < 1800s (wall %.0fs); strict paper order: %s",
                  rows[0].mean_acc, rows[1].mean_acc, rows[2].mean_acc, rows[3].mean_acc,
                  rows[4].mean_acc, (full - base) * 100, full_beats_all ? "ok" : "BAD", makespan4,
                  stats.wall_seconds, paper_order ? "yes" : "no (reported, not gated)");
    report(5, "scaled ablation ordering", margin && full_beats_all && budget, buf);
}

// ---- criterion 6 ----
void criterion_determinism(const std::string& scratch) {
    setenv("RAL_THREADS", "1", 1);
    io::RunConfig cfg;
    cfg.seed = 5;
    cfg.synth.num_classes = 4;
    cfg.synth.frames = 4;
    cfg.synth.height = 16;
    cfg.synth.width = 16;
    cfg.synth.seed = 9;
    cfg.model.stage_channels = {4, 8};
    cfg.model.mstcn_kernels = {3};
    cfg.train.epochs = 2;
    cfg.train.batch_size = 8;
    cfg.train.train_count = 16;
    cfg.train.val_count = 8;
    cfg.out_dir = scratch + "/det_a";
    train::run_train(cfg);
    cfg.out_dir = scratch + "/det_b";
    train::run_train(cfg);
    const bool metrics_equal =
        slurp(scratch + "/det_a/metrics.jsonl") == slurp(scratch + "/det_b/metrics.jsonl");

    // checkpoint round trip
    nn::RalModel model(cfg.model, 3);
    Rng rng(4);
    auto batch = Tensor::zeros({1, 1, 4, 16, 16});
    for (auto& v : batch.vec()) v = static_cast<float>(rng.uniform());
    (void)model.forward(batch, true, nullptr);
    auto before = model.forward(batch, false, nullptr);
    io::save_checkpoint(scratch + "/ckpt", model, io::CheckpointMeta{});
    nn::RalModel loaded(io::peek_checkpoint_config(scratch + "/ckpt"), 777);
    io::load_checkpoint(scratch + "/ckpt", loaded);
    const bool ckpt_ok = loaded.forward(batch, false, nullptr).vec() == before.vec();

    // RALT round trip
    auto samples = data::generate(cfg.synth, 4);
    data::write_lrw_layout(scratch + "/ralt", samples, {"train", "train", "val", "val"});
    auto back = data::ingest_lrw_layout(scratch + "/ralt", scratch + "/ralt/manifest.jsonl");
    bool ralt_ok = back.samples.size() == 4;
    for (std::size_t i = 0; ralt_ok && i < 4; ++i)
        ralt_ok = back.samples[i].frames.vec() == samples[i].frames.vec();

    unsetenv("RAL_THREADS");
    const bool pass = metrics_equal && ckpt_ok && ralt_ok;
    char buf[160];
    std::snprintf(buf, sizeof(buf), "metrics bit-identical %s, checkpoint %s, RALT %s",
                  metrics_equal ? "ok" : "BAD", ckpt_ok ? "ok" : "BAD", ralt_ok ? "ok" : "BAD");
    report(6, "determinism & persistence", pass, buf);
}

// ---- criterion 7 ----
void criterion_recipe() {
    train::OptimConfig oc;  // lr 3e-4, floor 1e-6, decay 1e-4
    const double lr0 = train::cosine_lr(oc, 0, 30);
    const double lrN = train::cosine_lr(oc, 29, 30);
    const bool schedule_ok = std::abs(lr0 - 3e-4) < 1e-12 && lrN == 1e-6;

    RalConfig mc;
    mc.num_classes = 4;
    mc.stage_channels = {8, 16};
    nn::RalModel model(mc, 2);
    bool flags_ok = true;
    for (const auto& p : model.params().items()) {
        const bool norm_or_bias = p.name.rfind(".bias") == p.name.size() - 5 ||
                                  p.name.rfind(".gain") == p.name.size() - 5;
        flags_ok = flags_ok && p.decay == !norm_or_bias;
    }

    train::Adam adam(model.params(), oc);
    std::vector<std::vector<float>> before;
    for (const auto& p : model.params().items()) before.push_back(p.tensor.vec());
    model.params().zero_grads();
    adam.step(3e-4);
    bool decay_ok = true;
    for (std::size_t i = 0; i < before.size(); ++i) {
        const auto& p = model.params().items()[i];
        for (std::size_t k = 0; k < before[i].size(); ++k) {
            const float want =
                p.decay ? before[i][k] - 3e-4f * 1e-4f * before[i][k] : before[i][k];
            decay_ok = decay_ok && p.tensor.vec()[k] == want;
        }
    }
    const bool pass = schedule_ok && flags_ok && decay_ok;
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "lr(0)=%.6g cosine to %.6g %s, decay set = non-norm non-bias %s, applied %s",
                  lr0, lrN, schedule_ok ? "ok" : "BAD", flags_ok ? "ok" : "BAD",
                  decay_ok ? "ok" : "BAD");
    report(7, "training-recipe conformance", pass, buf);
}

}  // namespace

int main(int argc, char** argv) {
    const bool quick = argc > 1 && std::string(argv[1]) == "--skip-sweep";
    testutil::TempDir scratch("acceptance");
    criterion_gradients();
    criterion_rao();
    criterion_acvi();
    criterion_dlsv();
    if (quick)
        std::printf("[5] scaled ablation ordering   SKIPPED (--skip-sweep)\n");
    else
        criterion_ablation(scratch.str());
    criterion_determinism(scratch.str());
    criterion_recipe();
    if (g_failures == 0)
        std::printf("acceptance: all criteria passed\n");
    else
        std::printf("acceptance: %d criteria FAILED\n", g_failures);
    return g_failures == 0 ? 0 : 1;
}
