#pragma once

#include <string>

#include <json.hpp>

#include "data/synth.hpp"
#include "nn/config.hpp"
#include "train/optim.hpp"

namespace ral::io {

struct TrainConfig {
    int epochs = 30;
    int batch_size = 16;
    int train_count = 512;
    int val_count = 128;
    double lr = 3e-4;
    double lr_final = 1e-6;
    double weight_decay = 1e-4;
    std::string resume;        // checkpoint directory to continue from
    bool flip_augment = false; // horizontal flip augmentation (off: interacts with DLSV)
    bool temporal_crop = false;
    int temporal_crop_len = 0;
};

struct DataConfig {
    std::string root;      // empty => synthetic
    std::string manifest;  // defaults to <root>/manifest.jsonl
};

struct EvalConfig {
    std::string checkpoint;
    std::string split = "val";
};

struct GradcheckConfig {
    double op_tolerance = 1e-6;
    double module_tolerance = 1e-5;
    double e2e_tolerance = 1e-4;
};

struct AblateConfig {
    std::vector<std::uint64_t> seeds = {1, 2, 3};
    int workers = 0;  // 0 => hardware concurrency, capped by RAL_THREADS
};

struct RunConfig {
    std::uint64_t seed = 1;
    std::string out_dir = "runs/out";
    RalConfig model;
    data::SynthSpec synth;
    DataConfig data;
    TrainConfig train;
    EvalConfig eval;
    GradcheckConfig gradcheck;
    AblateConfig ablate;
};

nlohmann::json to_json(const RunConfig& cfg);
RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const std::string& path);  // defaults overlaid with the file
// dotted-path override, e.g. "model.enable_rao=true"; values parsed as JSON
// with a plain-string fallback
void apply_override(nlohmann::json& j, const std::string& key, const std::string& value);

nlohmann::json model_config_to_json(const RalConfig& cfg);
RalConfig model_config_from_json(const nlohmann::json& j);

train::OptimConfig make_optim_config(const TrainConfig& t);

// worker pool sizing: min(requested or hardware, RAL_THREADS if set), >= 1
int worker_count(int requested);

}  // namespace ral::io
