#include "io/runconfig.hpp"

#include <cstdlib>
#include <fstream>
#include <thread>

namespace ral::io {

namespace {

template <typename T>
void get_if(const nlohmann::json& j, const char* key, T& field) {
    if (j.contains(key)) j.at(key).get_to(field);
}

}  // namespace

nlohmann::json model_config_to_json(const RalConfig& cfg) {
    return nlohmann::json{{"num_classes", cfg.num_classes},
                          {"stage_channels", cfg.stage_channels},
                          {"blocks_per_stage", cfg.blocks_per_stage},
                          {"acvi_after_stage", cfg.acvi_after_stage},
                          {"mstcn_kernels", cfg.mstcn_kernels},
                          {"dropout", cfg.dropout},
                          {"enable_dlsv", cfg.enable_dlsv},
                          {"enable_rao", cfg.enable_rao},
                          {"enable_acvi", cfg.enable_acvi},
                          {"reduction_ratio", cfg.reduction_ratio},
                          {"share_view_layernorm", cfg.share_view_layernorm}};
}

RalConfig model_config_from_json(const nlohmann::json& j) {
    RalConfig cfg;
    get_if(j, "num_classes", cfg.num_classes);
    get_if(j, "stage_channels", cfg.stage_channels);
    get_if(j, "blocks_per_stage", cfg.blocks_per_stage);
    get_if(j, "acvi_after_stage", cfg.acvi_after_stage);
    get_if(j, "mstcn_kernels", cfg.mstcn_kernels);
    get_if(j, "dropout", cfg.dropout);
    get_if(j, "enable_dlsv", cfg.enable_dlsv);
    get_if(j, "enable_rao", cfg.enable_rao);
    get_if(j, "enable_acvi", cfg.enable_acvi);
    get_if(j, "reduction_ratio", cfg.reduction_ratio);
    get_if(j, "share_view_layernorm", cfg.share_view_layernorm);
    return cfg;
}

nlohmann::json to_json(const RunConfig& cfg) {
    nlohmann::json j;
    j["seed"] = cfg.seed;
    j["out_dir"] = cfg.out_dir;
    j["model"] = model_config_to_json(cfg.model);
    j["synth"] = {{"num_classes", cfg.synth.num_classes},
                  {"frames", cfg.synth.frames},
                  {"height", cfg.synth.height},
                  {"width", cfg.synth.width},
                  {"asymmetry_strength", cfg.synth.asymmetry_strength},
                  {"redundancy_noise_level", cfg.synth.redundancy_noise_level},
                  {"seed", cfg.synth.seed}};
    j["data"] = {{"root", cfg.data.root}, {"manifest", cfg.data.manifest}};
    j["train"] = {{"epochs", cfg.train.epochs},
                  {"batch_size", cfg.train.batch_size},
                  {"train_count", cfg.train.train_count},
                  {"val_count", cfg.train.val_count},
                  {"lr", cfg.train.lr},
                  {"lr_final", cfg.train.lr_final},
                  {"weight_decay", cfg.train.weight_decay},
                  {"resume", cfg.train.resume},
                  {"flip_augment", cfg.train.flip_augment},
                  {"temporal_crop", cfg.train.temporal_crop},
                  {"temporal_crop_len", cfg.train.temporal_crop_len}};
    j["eval"] = {{"checkpoint", cfg.eval.checkpoint}, {"split", cfg.eval.split}};
    j["gradcheck"] = {{"op_tolerance", cfg.gradcheck.op_tolerance},
                      {"module_tolerance", cfg.gradcheck.module_tolerance},
                      {"e2e_tolerance", cfg.gradcheck.e2e_tolerance}};
    j["ablate"] = {{"seeds", cfg.ablate.seeds}, {"workers", cfg.ablate.workers}};
    return j;
}

RunConfig run_config_from_json(const nlohmann::json& j) {
    RunConfig cfg;
    get_if(j, "seed", cfg.seed);
    get_if(j, "out_dir", cfg.out_dir);
    if (j.contains("model")) cfg.model = model_config_from_json(j.at("model"));
    if (j.contains("synth")) {
        const auto& s = j.at("synth");
        get_if(s, "num_classes", cfg.synth.num_classes);
        get_if(s, "frames", cfg.synth.frames);
        get_if(s, "height", cfg.synth.height);
        get_if(s, "width", cfg.synth.width);
        get_if(s, "asymmetry_strength", cfg.synth.asymmetry_strength);
        get_if(s, "redundancy_noise_level", cfg.synth.redundancy_noise_level);
        get_if(s, "seed", cfg.synth.seed);
    }
    if (j.contains("data")) {
        const auto& d = j.at("data");
        get_if(d, "root", cfg.data.root);
        get_if(d, "manifest", cfg.data.manifest);
    }
    if (j.contains("train")) {
        const auto& t = j.at("train");
        get_if(t, "epochs", cfg.train.epochs);
        get_if(t, "batch_size", cfg.train.batch_size);
        get_if(t, "train_count", cfg.train.train_count);
        get_if(t, "val_count", cfg.train.val_count);
        get_if(t, "lr", cfg.train.lr);
        get_if(t, "lr_final", cfg.train.lr_final);
        get_if(t, "weight_decay", cfg.train.weight_decay);
        get_if(t, "resume", cfg.train.resume);
        get_if(t, "flip_augment", cfg.train.flip_augment);
        get_if(t, "temporal_crop", cfg.train.temporal_crop);
        get_if(t, "temporal_crop_len", cfg.train.temporal_crop_len);
    }
    if (j.contains("eval")) {
        const auto& e = j.at("eval");
        get_if(e, "checkpoint", cfg.eval.checkpoint);
        get_if(e, "split", cfg.eval.split);
    }
    if (j.contains("gradcheck")) {
        const auto& g = j.at("gradcheck");
        get_if(g, "op_tolerance", cfg.gradcheck.op_tolerance);
        get_if(g, "module_tolerance", cfg.gradcheck.module_tolerance);
        get_if(g, "e2e_tolerance", cfg.gradcheck.e2e_tolerance);
    }
    if (j.contains("ablate")) {
        const auto& a = j.at("ablate");
        get_if(a, "seeds", cfg.ablate.seeds);
        get_if(a, "workers", cfg.ablate.workers);
    }
    return cfg;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("config: cannot open " + path);
    nlohmann::json j;
    try {
        is >> j;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("config: " + path + ": " + e.what());
    }
    return run_config_from_json(j);
}

void apply_override(nlohmann::json& j, const std::string& key, const std::string& value) {
    nlohmann::json parsed;
    try {
        parsed = nlohmann::json::parse(value);
    } catch (const nlohmann::json::exception&) {
        parsed = value;  // plain string
    }
    nlohmann::json* cur = &j;
    std::size_t pos = 0;
    while (true) {
        const std::size_t dot = key.find('.', pos);
        const std::string part = key.substr(pos, dot == std::string::npos ? dot : dot - pos);
        if (part.empty()) throw ContractError("override: malformed key '" + key + "'");
        if (dot == std::string::npos) {
            (*cur)[part] = parsed;
            return;
        }
        cur = &(*cur)[part];
        pos = dot + 1;
    }
}

train::OptimConfig make_optim_config(const TrainConfig& t) {
    train::OptimConfig oc;
    oc.lr = t.lr;
    oc.lr_final = t.lr_final;
    oc.weight_decay = t.weight_decay;
    return oc;
}

int worker_count(int requested) {
    int n = requested > 0 ? requested : static_cast<int>(std::thread::hardware_concurrency());
    if (n < 1) n = 1;
    if (const char* env = std::getenv("RAL_THREADS")) {
        const int cap = std::atoi(env);
        if (cap >= 1 && cap < n) n = cap;
    }
    return n;
}

}  // namespace ral::io
