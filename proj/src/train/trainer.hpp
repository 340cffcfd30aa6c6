#pragma once

#include <functional>

#include "data/ralt.hpp"
#include "io/runconfig.hpp"
#include "nn/model.hpp"
#include "train/optim.hpp"

namespace ral::train {

struct EpochStats {
    double loss = 0.0;
    double acc = 0.0;
};

struct LoadedData {
    std::vector<data::SequenceSample> train;  // raw frames when crop_train is set
    std::vector<data::SequenceSample> val;    // always ready for the model
    bool crop_train = false;                  // 96x96-style inputs: random 88x88 crop per epoch
};

LoadedData load_dataset(const io::RunConfig& cfg);

EpochStats train_epoch(nn::RalModelT<float>& model, Adam& adam,
                       const std::vector<data::SequenceSample>& train_set, double lr,
                       const io::TrainConfig& tc, bool crop_train, Rng& rng);

// argmax accuracy; dataset may be sharded over workers (counts merge exactly)
double evaluate(nn::RalModelT<float>& model, const std::vector<data::SequenceSample>& samples,
                int workers = 1);
// same contract with an arbitrary logits source (used by oracle tests)
double evaluate_logits(const std::function<std::vector<float>(const data::SequenceSample&)>& fn,
                       const std::vector<data::SequenceSample>& samples);

struct TrainResult {
    int epochs_run = 0;
    double final_val_acc = 0.0;
};

TrainResult run_train(const io::RunConfig& cfg);
double run_eval(const io::RunConfig& cfg);
void run_generate(const io::RunConfig& cfg);

struct AblateRow {
    bool dlsv, rao, acvi;
    long long param_count = 0;
    std::vector<double> accs;  // per seed
    double mean_acc = 0.0;
};

struct AblateStats {
    double wall_seconds = 0.0;
    std::vector<double> run_seconds;  // per (row, seed) task, task order
};

// The five-row component grid, each trained with every configured seed on the
// identical synthetic dataset and budget. Rows run on a worker pool; each run
// itself is single-threaded and deterministic.
std::vector<AblateRow> run_ablate(const io::RunConfig& cfg, AblateStats* stats = nullptr);

}  // namespace ral::train
