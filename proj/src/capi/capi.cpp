#include "ral.h"

#include <cstdio>
#include <cstring>

#include <json.hpp>

#include "core/gradcheck.hpp"
#include "io/checkpoint.hpp"
#include "train/trainer.hpp"

using nlohmann::json;

namespace {

thread_local std::string g_last_error;

int set_error(const std::exception& e) {
    g_last_error = e.what();
    if (dynamic_cast<const ral::NumericError*>(&e)) return RAL_ERR_NUMERIC;
    if (dynamic_cast<const ral::IoError*>(&e)) return RAL_ERR_IO;
    if (dynamic_cast<const ral::FormatError*>(&e)) return RAL_ERR_IO;
    return RAL_ERR_INVALID;
}

}  // namespace

struct ral_config {
    json j;
    ral::io::RunConfig parsed() const { return ral::io::run_config_from_json(j); }
};

struct ral_model {
    std::unique_ptr<ral::nn::RalModel> model;
};

struct ral_dataset {
    std::vector<ral::data::SequenceSample> samples;
};

extern "C" {

const char* ral_version(void) { return "0.1.0"; }

const char* ral_last_error(void) { return g_last_error.c_str(); }

void ral_free_string(char* s) { std::free(s); }

ral_config* ral_config_default(void) {
    auto* cfg = new ral_config;
    cfg->j = ral::io::to_json(ral::io::RunConfig{});
    return cfg;
}

ral_config* ral_config_load(const char* path) {
    try {
        auto* cfg = new ral_config;
        cfg->j = ral::io::to_json(ral::io::load_run_config(path));
        return cfg;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return nullptr;
    }
}

int ral_config_set(ral_config* cfg, const char* key, const char* value) {
    if (!cfg || !key || !value) {
        g_last_error = "ral_config_set: null argument";
        return RAL_ERR_INVALID;
    }
    try {
        ral::io::apply_override(cfg->j, key, value);
        // re-normalize so later reads see a fully resolved document
        cfg->j = ral::io::to_json(ral::io::run_config_from_json(cfg->j));
        return RAL_OK;
    } catch (const std::exception& e) {
        return set_error(e);
    }
}

char* ral_config_json(const ral_config* cfg) {
    if (!cfg) return nullptr;
    const std::string s = cfg->j.dump(2);
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

void ral_config_free(ral_config* cfg) { delete cfg; }

int ral_run_gradcheck(const ral_config* cfg, int verbose) {
    if (!cfg) {
        g_last_error = "ral_run_gradcheck: null config";
        return RAL_ERR_INVALID;
    }
    try {
        const auto rc = cfg->parsed();
        const auto report = ral::run_gradcheck_suite(
            rc.gradcheck.op_tolerance, rc.gradcheck.module_tolerance, rc.gradcheck.e2e_tolerance,
            rc.seed);
        std::string worst;
        for (const auto& line : report.lines) {
            if (verbose || !line.pass)
                std::printf("%-22s max rel err %.3e  (tolerance %.0e)  %s\n", line.name.c_str(),
                            line.max_rel_err, line.tolerance, line.pass ? "ok" : "FAIL");
            if (!line.pass && worst.empty()) worst = line.name;
        }
        if (!report.all_pass) {
            g_last_error = "gradcheck: " + worst + " exceeded tolerance";
            return RAL_ERR_CHECK;
        }
        return RAL_OK;
    } catch (const std::exception& e) {
        return set_error(e);
    }
}

int ral_run_train(const ral_config* cfg) {
    if (!cfg) {
        g_last_error = "ral_run_train: null config";
        return RAL_ERR_INVALID;
    }
    try {
        ral::train::run_train(cfg->parsed());
        return RAL_OK;
    } catch (const std::exception& e) {
        return set_error(e);
    }
}

int ral_run_eval(const ral_config* cfg, double* accuracy_out) {
    if (!cfg) {
        g_last_error = "ral_run_eval: null config";
        return RAL_ERR_INVALID;
    }
    try {
        const double acc = ral::train::run_eval(cfg->parsed());
        if (accuracy_out) *accuracy_out = acc;
        return RAL_OK;
    } catch (const std::exception& e) {
        return set_error(e);
    }
}

int ral_run_ablate(const ral_config* cfg) {
    if (!cfg) {
        g_last_error = "ral_run_ablate: null config";
        return RAL_ERR_INVALID;
    }
    try {
        ral::train::run_ablate(cfg->parsed());
        return RAL_OK;
    } catch (const std::exception& e) {
        return set_error(e);
    }
}

int ral_run_generate(const ral_config* cfg) {
    if (!cfg) {
        g_last_error = "ral_run_generate: null config";
        return RAL_ERR_INVALID;
    }
    try {
        ral::train::run_generate(cfg->parsed());
        return RAL_OK;
    } catch (const std::exception& e) {
        return set_error(e);
    }
}

ral_dataset* ral_dataset_open(const char* root, const char* manifest, const char* split) {
    try {
        auto ds = ral::data::ingest_lrw_layout(
            root ? root : "",
            manifest && *manifest ? manifest
                                  : (std::string(root ? root : "") + "/manifest.jsonl"),
            split ? split : "");
        auto* out = new ral_dataset;
        out->samples = std::move(ds.samples);
        return out;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return nullptr;
    }
}

int64_t ral_dataset_size(const ral_dataset* ds) {
    return ds ? static_cast<int64_t>(ds->samples.size()) : -1;
}

void ral_dataset_free(ral_dataset* ds) { delete ds; }

ral_model* ral_model_create(const ral_config* cfg) {
    if (!cfg) {
        g_last_error = "ral_model_create: null config";
        return nullptr;
    }
    try {
        const auto rc = cfg->parsed();
        auto* m = new ral_model;
        m->model = std::make_unique<ral::nn::RalModel>(rc.model, rc.seed);
        return m;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return nullptr;
    }
}

ral_model* ral_model_load(const char* checkpoint_dir) {
    try {
        auto stored = ral::io::peek_checkpoint_config(checkpoint_dir);
        auto* m = new ral_model;
        m->model = std::make_unique<ral::nn::RalModel>(stored, 0);
        ral::io::load_checkpoint(checkpoint_dir, *m->model);
        return m;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return nullptr;
    }
}

int ral_model_save(const ral_model* model, const char* checkpoint_dir) {
    if (!model || !checkpoint_dir) {
        g_last_error = "ral_model_save: null argument";
        return RAL_ERR_INVALID;
    }
    try {
        ral::io::save_checkpoint(checkpoint_dir, *model->model, ral::io::CheckpointMeta{});
        return RAL_OK;
    } catch (const std::exception& e) {
        return set_error(e);
    }
}

int64_t ral_model_param_count(const ral_model* model) {
    return model ? model->model->param_count() : -1;
}

int ral_model_num_classes(const ral_model* model) {
    return model ? model->model->config().num_classes : -1;
}

int ral_model_forward(ral_model* model, const float* frames, int64_t b, int64_t t, int64_t h,
                      int64_t w, float* logits_out) {
    if (!model || !frames || !logits_out || b < 1 || t < 1 || h < 1 || w < 1) {
        g_last_error = "ral_model_forward: bad arguments";
        return RAL_ERR_INVALID;
    }
    try {
        auto batch = ral::Tensor::zeros({static_cast<int>(b), 1, static_cast<int>(t),
                                         static_cast<int>(h), static_cast<int>(w)});
        std::copy_n(frames, batch.size(), batch.data());
        auto logits = model->model->forward(batch, false, nullptr);
        std::copy_n(logits.data(), logits.size(), logits_out);
        return RAL_OK;
    } catch (const std::exception& e) {
        return set_error(e);
    }
}

int ral_evaluate(ral_model* model, const ral_dataset* ds, double* accuracy_out) {
    if (!model || !ds || !accuracy_out) {
        g_last_error = "ral_evaluate: null argument";
        return RAL_ERR_INVALID;
    }
    try {
        auto samples = ds->samples;  // evaluate on normalized clips
        for (auto& s : samples) s.frames = ral::data::normalize_clip(s.frames);
        *accuracy_out = ral::train::evaluate(*model->model, samples, ral::io::worker_count(0));
        return RAL_OK;
    } catch (const std::exception& e) {
        return set_error(e);
    }
}

void ral_model_free(ral_model* model) { delete model; }

void ral_debug_set_fault(const char* name) { ral::debug::set_fault(name ? name : ""); }

}  // extern "C"
