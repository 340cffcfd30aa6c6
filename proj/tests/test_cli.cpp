// Drives the installed CLI binary the way a user would; RAL_CLI_PATH is
// injected by the build.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "testutil.hpp"

namespace {

int run_cli(const std::string& args, const std::string& log) {
    const std::string cmd = std::string(RAL_CLI_PATH) + " " + args + " > " + log + " 2>&1";
    const int rc = std::system(cmd.c_str());
    return WEXITSTATUS(rc);
}

std::string slurp(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

const char* kTinyArgs =
    " --set synth.num_classes=4 --set synth.frames=4 --set synth.height=16"
    " --set synth.width=16 --set model.stage_channels=[4,8] --set model.mstcn_kernels=[3]"
    " --set train.epochs=2 --set train.batch_size=8 --set train.train_count=16"
    " --set train.val_count=8";

}  // namespace

TEST_CASE("gradcheck command reports per-op errors and exits 0") {
    testutil::TempDir dir("cligrad");
    const auto log = dir.str() + "/log.txt";
    CHECK(run_cli("gradcheck", log) == 0);
    const auto text = slurp(log);
    CHECK(text.find("matmul") != std::string::npos);
    CHECK(text.find("conv2d") != std::string::npos);
    CHECK(text.find("model-end-to-end") != std::string::npos);
    CHECK(text.find("all checks passed") != std::string::npos);
}

TEST_CASE("gradcheck with unattainable tolerance exits 1") {
    testutil::TempDir dir("cligrad2");
    CHECK(run_cli("gradcheck --set gradcheck.op_tolerance=1e-12", dir.str() + "/log.txt") == 1);
}

TEST_CASE("generate -> train -> eval pipeline") {
    setenv("RAL_THREADS", "1", 1);
    testutil::TempDir dir("clipipe");

    CHECK(run_cli("generate --out " + dir.str() + "/gen --seed 5" + kTinyArgs,
                  dir.str() + "/gen.log") == 0);
    CHECK(std::filesystem::exists(dir.str() + "/gen/data/manifest.jsonl"));

    // train on the generated RALT dataset
    CHECK(run_cli("train --out " + dir.str() + "/run --seed 5 --set data.root=\"" + dir.str() +
                      "/gen/data\" --set model.num_classes=4" + kTinyArgs,
                  dir.str() + "/train.log") == 0);
    const auto metrics = slurp(dir.str() + "/run/metrics.jsonl");
    CHECK(std::count(metrics.begin(), metrics.end(), '\n') == 2);
    CHECK(std::filesystem::exists(dir.str() + "/run/config.json"));

    // deterministic rerun
    CHECK(run_cli("train --out " + dir.str() + "/run2 --seed 5 --set data.root=\"" + dir.str() +
                      "/gen/data\" --set model.num_classes=4" + kTinyArgs,
                  dir.str() + "/train2.log") == 0);
    CHECK(slurp(dir.str() + "/run2/metrics.jsonl") == metrics);

    CHECK(run_cli("eval --set eval.checkpoint=\"" + dir.str() + "/run/checkpoint\"" +
                      " --set data.root=\"" + dir.str() + "/gen/data\"" + kTinyArgs,
                  dir.str() + "/eval.log") == 0);
    CHECK(slurp(dir.str() + "/eval.log").find("accuracy") != std::string::npos);
    unsetenv("RAL_THREADS");
}

TEST_CASE("exit codes: 3 for I/O failures, 2 for numeric aborts") {
    testutil::TempDir dir("clicodes");
    CHECK(run_cli("train --out " + dir.str() + "/io --set data.root=/nonexistent" + kTinyArgs,
                  dir.str() + "/io.log") == 3);
    CHECK(run_cli("train --out " + dir.str() + "/nan --set train.lr=1e38 --set train.epochs=4" +
                      std::string(kTinyArgs),
                  dir.str() + "/nan.log") == 2);
}

TEST_CASE("ablate emits exactly the five-row grid with switches recorded") {
    testutil::TempDir dir("cliablate");
    CHECK(run_cli("ablate --out " + dir.str() + "/sweep --set train.epochs=1" +
                      " --set ablate.seeds=[1]" + kTinyArgs,
                  dir.str() + "/ablate.log") == 0);
    const auto table = slurp(dir.str() + "/sweep/ablation.json");
    int rows = 0;
    for (std::size_t pos = 0; (pos = table.find("\"dlsv\"", pos)) != std::string::npos; ++pos)
        ++rows;
    CHECK(rows == 5);
    // every row records its switch triple
    CHECK(table.find("\"rao\"") != std::string::npos);
    CHECK(table.find("\"acvi\"") != std::string::npos);
    CHECK(table.find("\"param_count\"") != std::string::npos);
    const auto log = slurp(dir.str() + "/ablate.log");
    CHECK(log.find("baseline") != std::string::npos);
    CHECK(log.find("full") != std::string::npos);
}
