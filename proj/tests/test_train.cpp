#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "io/checkpoint.hpp"
#include "testutil.hpp"
#include "train/trainer.hpp"

using namespace ral;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    REQUIRE(is);
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

io::RunConfig tiny_run(const std::string& out) {
    io::RunConfig cfg;
    cfg.out_dir = out;
    cfg.seed = 3;
    cfg.synth.num_classes = 4;
    cfg.synth.frames = 4;
    cfg.synth.height = 16;
    cfg.synth.width = 16;
    cfg.synth.asymmetry_strength = 0.8;
    cfg.synth.redundancy_noise_level = 0.1;
    cfg.synth.seed = 5;
    cfg.model.stage_channels = {4, 8};
    cfg.model.blocks_per_stage = 1;
    cfg.model.mstcn_kernels = {3};
    cfg.train.epochs = 2;
    cfg.train.batch_size = 8;
    cfg.train.train_count = 16;
    cfg.train.val_count = 8;
    return cfg;
}

std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream is(path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(is, line)) lines.push_back(line);
    return lines;
}

}  // namespace

TEST_CASE("cosine schedule endpoints and monotonicity") {
    train::OptimConfig oc;
    CHECK(train::cosine_lr(oc, 0, 30) == doctest::Approx(3e-4).epsilon(1e-12));
    CHECK(train::cosine_lr(oc, 29, 30) == doctest::Approx(1e-6).epsilon(1e-12));
    CHECK(train::cosine_lr(oc, 0, 1) == doctest::Approx(1e-6));
    for (int e = 1; e < 30; ++e)
        CHECK(train::cosine_lr(oc, e, 30) < train::cosine_lr(oc, e - 1, 30));
}

TEST_CASE("decoupled weight decay touches exactly the non-norm, non-bias parameters") {
    RalConfig cfg;
    cfg.num_classes = 3;
    cfg.stage_channels = {4, 8};
    nn::RalModel model(cfg, 1);

    // the decay flag must match the naming rule
    for (const auto& p : model.params().items()) {
        const bool norm_or_bias = p.name.size() >= 5 &&
                                  (p.name.rfind(".bias") == p.name.size() - 5 ||
                                   p.name.rfind(".gain") == p.name.size() - 5);
        CHECK(p.decay == !norm_or_bias);
    }

    train::OptimConfig oc;
    oc.weight_decay = 1e-4;
    train::Adam adam(model.params(), oc);
    std::vector<std::vector<float>> before;
    for (const auto& p : model.params().items()) before.push_back(p.tensor.vec());

    model.params().zero_grads();  // all-zero gradients isolate the decay term
    const double lr = 3e-4;
    adam.step(lr);

    const float scale = static_cast<float>(1.0 - lr * 1e-4);
    for (std::size_t i = 0; i < before.size(); ++i) {
        const auto& p = model.params().items()[i];
        for (std::size_t k = 0; k < before[i].size(); ++k) {
            const float want = p.decay ? before[i][k] * scale : before[i][k];
            CHECK(p.tensor.vec()[k] == doctest::Approx(want).epsilon(1e-7));
        }
    }
}

TEST_CASE("200 steps on a 64-sample synthetic set beat chance loss") {
    io::RunConfig cfg = tiny_run("unused");
    cfg.train.train_count = 64;
    cfg.train.batch_size = 16;  // 4 steps per epoch
    auto data = train::load_dataset(cfg);
    nn::RalModel model(cfg.model, 7);
    train::Adam adam(model.params(), io::make_optim_config(cfg.train));
    Rng rng(9);
    double last_loss = 0;
    for (int epoch = 0; epoch < 50; ++epoch) {  // 200 optimizer steps
        auto stats = train::train_epoch(model, adam, data.train, 3e-4, cfg.train, false, rng);
        last_loss = stats.loss;
    }
    CHECK(adam.step_count() == 200);
    CHECK(last_loss < std::log(4.0));
}

TEST_CASE("evaluate contracts") {
    io::RunConfig cfg = tiny_run("unused");
    auto data = train::load_dataset(cfg);

    SUBCASE("constant-class predictor scores 1/K on a balanced set") {
        nn::RalModel model(cfg.model, 2);
        for (auto& p : model.params().items())
            std::fill(p.tensor.vec().begin(), p.tensor.vec().end(), 0.0f);
        const double acc = train::evaluate(model, data.train, 2);
        CHECK(acc == doctest::Approx(0.25));
    }

    SUBCASE("perfect-logit oracle scores 1.0") {
        auto oracle = [&](const data::SequenceSample& s) {
            std::vector<float> logits(4, 0.0f);
            logits[static_cast<std::size_t>(s.label)] = 1.0f;
            return logits;
        };
        CHECK(train::evaluate_logits(oracle, data.train) == 1.0);
    }

    SUBCASE("empty dataset is rejected") {
        nn::RalModel model(cfg.model, 2);
        std::vector<data::SequenceSample> empty;
        CHECK_THROWS_AS(train::evaluate(model, empty, 1), ContractError);
    }

    SUBCASE("sharded evaluation matches single-threaded") {
        nn::RalModel model(cfg.model, 4);
        CHECK(train::evaluate(model, data.train, 1) == train::evaluate(model, data.train, 3));
    }
}

TEST_CASE("non-finite loss aborts naming the producing op") {
    io::RunConfig cfg = tiny_run("unused");
    auto data = train::load_dataset(cfg);
    nn::RalModel model(cfg.model, 3);
    // poison the classifier so the NaN reaches the loss (upstream NaNs would
    // be flushed by relu and never surface in the loss value)
    auto w = model.params().find("classifier.weight").tensor;
    w.data()[0] = std::numeric_limits<float>::quiet_NaN();
    train::Adam adam(model.params(), io::make_optim_config(cfg.train));
    Rng rng(1);
    try {
        train::train_epoch(model, adam, data.train, 3e-4, cfg.train, false, rng);
        FAIL("expected NumericError");
    } catch (const NumericError& e) {
        CHECK(e.op == std::string("matmul"));  // first op touching the poisoned weight
    }
}

TEST_CASE("same seed and config reproduce metrics bit-exactly") {
    setenv("RAL_THREADS", "1", 1);
    testutil::TempDir dir("determinism");
    auto a = tiny_run(dir.str() + "/a");
    auto b = tiny_run(dir.str() + "/b");
    train::run_train(a);
    train::run_train(b);
    CHECK(slurp(dir.str() + "/a/metrics.jsonl") == slurp(dir.str() + "/b/metrics.jsonl"));
    unsetenv("RAL_THREADS");
}

TEST_CASE("run directory records the resolved config and reruns reproduce it") {
    setenv("RAL_THREADS", "1", 1);
    testutil::TempDir dir("rerun");
    auto cfg = tiny_run(dir.str() + "/orig");
    train::run_train(cfg);

    auto replay = io::load_run_config(dir.str() + "/orig/config.json");
    replay.out_dir = dir.str() + "/replay";
    train::run_train(replay);
    CHECK(slurp(dir.str() + "/orig/metrics.jsonl") == slurp(dir.str() + "/replay/metrics.jsonl"));
    unsetenv("RAL_THREADS");
}

TEST_CASE("resume continues the epoch count and schedule") {
    testutil::TempDir dir("resume");
    auto cfg = tiny_run(dir.str() + "/run");
    cfg.train.epochs = 3;
    train::run_train(cfg);
    CHECK(read_lines(dir.str() + "/run/metrics.jsonl").size() == 3);

    auto cont = cfg;
    cont.train.epochs = 5;
    cont.train.resume = dir.str() + "/run/checkpoint";
    train::run_train(cont);

    const auto lines = read_lines(dir.str() + "/run/metrics.jsonl");
    CHECK(lines.size() == 5);
    const auto j = nlohmann::json::parse(lines[3]);
    CHECK(j["epoch"] == 3);
    const auto oc = io::make_optim_config(cont.train);
    CHECK(j["lr"].get<double>() == doctest::Approx(train::cosine_lr(oc, 3, 5)).epsilon(1e-12));
}

TEST_CASE("training on missing dataset root raises an I/O error") {
    testutil::TempDir dir("badroot");
    io::RunConfig cfg = tiny_run(dir.str() + "/run");
    cfg.data.root = "/nonexistent/dataset";
    CHECK_THROWS_AS(train::run_train(cfg), IoError);
}
