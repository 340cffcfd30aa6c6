// Command-line front end. Everything goes through the C API in ral.h.

#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ral.h"

namespace {

struct ConfigDeleter {
    void operator()(ral_config* c) const { ral_config_free(c); }
};
using ConfigPtr = std::unique_ptr<ral_config, ConfigDeleter>;

// exit codes: 0 ok, 1 check/config failure, 2 numeric abort, 3 I/O
int exit_code(int status) {
    switch (status) {
        case RAL_OK:
            return 0;
        case RAL_ERR_NUMERIC:
            return 2;
        case RAL_ERR_IO:
            return 3;
        default:
            return 1;
    }
}

int fail(int status) {
    std::fprintf(stderr, "error: %s\n", ral_last_error());
    return exit_code(status);
}

struct CommonOpts {
    std::string config_path;
    std::string out_dir;
    std::string seed;
    std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config_path, "JSON config file");
    cmd->add_option("--out", opts.out_dir, "output directory");
    cmd->add_option("--seed", opts.seed, "run seed (u64)");
    cmd->add_option("--set", opts.overrides, "dotted-path override key=value")
        ->take_all();
}

ConfigPtr build_config(const CommonOpts& opts, int& status) {
    ConfigPtr cfg(opts.config_path.empty() ? ral_config_default()
                                           : ral_config_load(opts.config_path.c_str()));
    if (!cfg) {
        status = RAL_ERR_IO;
        return nullptr;
    }
    // flags win over the config file
    if (!opts.seed.empty()) {
        if (int rc = ral_config_set(cfg.get(), "seed", opts.seed.c_str()); rc != RAL_OK) {
            status = rc;
            return nullptr;
        }
    }
    if (!opts.out_dir.empty()) {
        const std::string quoted = "\"" + opts.out_dir + "\"";
        if (int rc = ral_config_set(cfg.get(), "out_dir", quoted.c_str()); rc != RAL_OK) {
            status = rc;
            return nullptr;
        }
    }
    for (const auto& kv : opts.overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) {
            std::fprintf(stderr, "error: --set expects key=value, got '%s'\n", kv.c_str());
            status = RAL_ERR_INVALID;
            return nullptr;
        }
        const std::string key = kv.substr(0, eq), value = kv.substr(eq + 1);
        if (int rc = ral_config_set(cfg.get(), key.c_str(), value.c_str()); rc != RAL_OK) {
            status = rc;
            return nullptr;
        }
    }
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"lipreading model trainer and verification harness"};
    app.require_subcommand(1);

    CommonOpts gradcheck_opts, train_opts, eval_opts, ablate_opts, generate_opts;
    auto* cmd_gradcheck =
        app.add_subcommand("gradcheck", "finite-difference check of every op and the full model");
    add_common(cmd_gradcheck, gradcheck_opts);
    auto* cmd_train = app.add_subcommand("train", "train a model, writing metrics + checkpoints");
    add_common(cmd_train, train_opts);
    auto* cmd_eval = app.add_subcommand("eval", "evaluate a checkpoint on a dataset split");
    add_common(cmd_eval, eval_opts);
    auto* cmd_ablate = app.add_subcommand("ablate", "run the five-row component ablation sweep");
    add_common(cmd_ablate, ablate_opts);
    auto* cmd_generate = app.add_subcommand("generate", "write a synthetic RALT dataset");
    add_common(cmd_generate, generate_opts);

    CLI11_PARSE(app, argc, argv);

    int status = RAL_OK;
    if (cmd_gradcheck->parsed()) {
        auto cfg = build_config(gradcheck_opts, status);
        if (!cfg) return fail(status);
        status = ral_run_gradcheck(cfg.get(), 1);
        if (status == RAL_OK) std::printf("gradcheck: all checks passed\n");
        return status == RAL_OK ? 0 : fail(status);
    }
    if (cmd_train->parsed()) {
        auto cfg = build_config(train_opts, status);
        if (!cfg) return fail(status);
        status = ral_run_train(cfg.get());
        return status == RAL_OK ? 0 : fail(status);
    }
    if (cmd_eval->parsed()) {
        auto cfg = build_config(eval_opts, status);
        if (!cfg) return fail(status);
        double acc = 0.0;
        status = ral_run_eval(cfg.get(), &acc);
        return status == RAL_OK ? 0 : fail(status);
    }
    if (cmd_ablate->parsed()) {
        auto cfg = build_config(ablate_opts, status);
        if (!cfg) return fail(status);
        status = ral_run_ablate(cfg.get());
        return status == RAL_OK ? 0 : fail(status);
    }
    if (cmd_generate->parsed()) {
        auto cfg = build_config(generate_opts, status);
        if (!cfg) return fail(status);
        status = ral_run_generate(cfg.get());
        return status == RAL_OK ? 0 : fail(status);
    }
    return 0;
}
