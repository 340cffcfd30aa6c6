#include "train/trainer.hpp"

#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "io/checkpoint.hpp"

namespace ral::train {

namespace {

namespace fs = std::filesystem;

Tensor flip_width(const Tensor& frames) {
    const int w = frames.dim(frames.rank() - 1);
    const std::int64_t rows = frames.size() / w;
    auto out = Tensor::zeros(frames.shape());
    const float* src = frames.data();
    float* dst = out.data();
    for (std::int64_t r = 0; r < rows; ++r)
        for (int j = 0; j < w; ++j) dst[r * w + j] = src[r * w + (w - 1 - j)];
    return out;
}

Tensor crop_time(const Tensor& frames, int start, int len) {
    const int h = frames.dim(1), w = frames.dim(2);
    auto out = Tensor::zeros({len, h, w});
    std::copy_n(frames.data() + static_cast<std::int64_t>(start) * h * w,
                static_cast<std::int64_t>(len) * h * w, out.data());
    return out;
}

// [T,H,W] -> [1,T,H,W] view copy
Tensor as_clip(const Tensor& frames) {
    auto out = Tensor::from_vec({1, frames.dim(0), frames.dim(1), frames.dim(2)}, frames.vec());
    return out;
}

int argmax_row(const float* p, int n) {
    int best = 0;
    for (int k = 1; k < n; ++k)
        if (p[k] > p[best]) best = k;
    return best;
}

void write_resolved_config(const io::RunConfig& cfg) {
    fs::create_directories(cfg.out_dir);
    const auto path = (fs::path(cfg.out_dir) / "config.json").string();
    std::ofstream os(path);
    if (!os) throw IoError("run: cannot write " + path);
    os << io::to_json(cfg).dump(2) << '\n';
}

}  // namespace

LoadedData load_dataset(const io::RunConfig& cfg) {
    LoadedData out;
    if (!cfg.data.root.empty()) {
        const auto manifest = cfg.data.manifest.empty()
                                  ? (fs::path(cfg.data.root) / "manifest.jsonl").string()
                                  : cfg.data.manifest;
        auto train_ds = data::ingest_lrw_layout(cfg.data.root, manifest, "train");
        auto val_ds = data::ingest_lrw_layout(cfg.data.root, manifest, "val");
        if (train_ds.samples.empty())
            throw ContractError("dataset: no samples with split 'train' in " + manifest);
        const int h = train_ds.samples[0].frames.dim(1);
        const int w = train_ds.samples[0].frames.dim(2);
        out.crop_train = h >= 88 && w >= 88 && (h > 88 || w > 88);
        out.train = std::move(train_ds.samples);
        if (!out.crop_train)
            for (auto& s : out.train) s.frames = data::normalize_clip(s.frames);
        out.val = std::move(val_ds.samples);
        for (auto& s : out.val) {
            s.frames = out.crop_train ? data::preprocess(s.frames, false, nullptr)
                                      : data::normalize_clip(s.frames);
        }
        return out;
    }
    cfg.synth.validate();
    if (cfg.train.train_count < 1 || cfg.train.val_count < 0)
        throw ContractError("dataset: train_count must be >= 1");
    out.train.reserve(static_cast<std::size_t>(cfg.train.train_count));
    for (int i = 0; i < cfg.train.train_count; ++i) {
        auto s = data::generate_one(cfg.synth, i);
        s.frames = data::normalize_clip(s.frames);
        out.train.push_back(std::move(s));
    }
    out.val.reserve(static_cast<std::size_t>(cfg.train.val_count));
    for (int i = 0; i < cfg.train.val_count; ++i) {
        auto s = data::generate_one(cfg.synth, cfg.train.train_count + i);
        s.frames = data::normalize_clip(s.frames);
        out.val.push_back(std::move(s));
    }
    return out;
}

EpochStats train_epoch(nn::RalModelT<float>& model, Adam& adam,
                       const std::vector<data::SequenceSample>& train_set, double lr,
                       const io::TrainConfig& tc, bool crop_train, Rng& rng) {
    if (train_set.empty()) throw ContractError("train_epoch: empty dataset");
    const int n = static_cast<int>(train_set.size());
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    for (int i = n - 1; i > 0; --i) std::swap(order[i], order[rng.uniform_int(0, i)]);

    double loss_sum = 0.0;
    int correct = 0;
    const int batch = std::max(1, tc.batch_size);
    for (int b0 = 0; b0 < n; b0 += batch) {
        const int bsz = std::min(batch, n - b0);
        std::vector<Tensor> clips;
        std::vector<int> labels;
        clips.reserve(static_cast<std::size_t>(bsz));
        for (int i = 0; i < bsz; ++i) {
            const auto& s = train_set[static_cast<std::size_t>(order[b0 + i])];
            Tensor frames = s.frames;
            if (tc.temporal_crop && tc.temporal_crop_len > 0 &&
                tc.temporal_crop_len < frames.dim(0)) {
                const int start = rng.uniform_int(0, frames.dim(0) - tc.temporal_crop_len);
                frames = crop_time(frames, start, tc.temporal_crop_len);
            }
            if (tc.flip_augment && rng.uniform() < 0.5) frames = flip_width(frames);
            if (crop_train) frames = data::preprocess(frames, true, &rng);
            clips.push_back(as_clip(frames));
            labels.push_back(s.label);
        }
        auto batch_t = Tensor::zeros({bsz, 1, clips[0].dim(1), clips[0].dim(2), clips[0].dim(3)});
        {
            float* dst = batch_t.data();
            for (int i = 0; i < bsz; ++i)
                std::copy_n(clips[i].data(), clips[i].size(), dst + i * clips[i].size());
        }

        Tape tape;
        auto logits = model.forward(batch_t, true, &rng);
        auto loss = cross_entropy_logits(logits, labels);
        const double loss_value = loss.item();
        if (!std::isfinite(loss_value)) {
            // post-mortem: replay the batch with per-op output scanning to
            // name the first op that produced a non-finite value
            set_finite_checks(true);
            try {
                auto replay = model.forward(batch_t, true, &rng);
                (void)cross_entropy_logits(replay, labels);
            } catch (const NumericError&) {
                set_finite_checks(false);
                throw;
            }
            set_finite_checks(false);
            throw NumericError("loss", "loss: non-finite value; producing op not identified");
        }
        tape.backward(loss);
        adam.step(lr);
        model.params().zero_grads();

        loss_sum += loss_value * bsz;
        for (int i = 0; i < bsz; ++i) {
            const float* row = logits.data() + static_cast<std::int64_t>(i) * logits.dim(1);
            if (argmax_row(row, logits.dim(1)) == labels[static_cast<std::size_t>(i)]) ++correct;
        }
    }
    return EpochStats{loss_sum / n, static_cast<double>(correct) / n};
}

double evaluate_logits(const std::function<std::vector<float>(const data::SequenceSample&)>& fn,
                       const std::vector<data::SequenceSample>& samples) {
    if (samples.empty()) throw ContractError("evaluate: empty dataset");
    int correct = 0;
    for (const auto& s : samples) {
        const auto logits = fn(s);
        if (argmax_row(logits.data(), static_cast<int>(logits.size())) == s.label) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(samples.size());
}

double evaluate(nn::RalModelT<float>& model, const std::vector<data::SequenceSample>& samples,
                int workers) {
    if (samples.empty()) throw ContractError("evaluate: empty dataset");
    const int n = static_cast<int>(samples.size());
    workers = std::max(1, std::min(workers, n));

    auto eval_range = [&](int lo, int hi) {
        int correct = 0;
        for (int i = lo; i < hi; ++i) {
            const auto& s = samples[static_cast<std::size_t>(i)];
            auto logits = model.forward_clip(as_clip(s.frames), false, nullptr);
            if (argmax_row(logits.data(), logits.dim(0)) == s.label) ++correct;
        }
        return correct;
    };

    if (workers == 1) return static_cast<double>(eval_range(0, n)) / n;

    std::vector<int> counts(static_cast<std::size_t>(workers), 0);
    std::vector<std::thread> threads;
    std::atomic<bool> failed{false};
    std::string error;
    std::mutex error_mu;
    for (int wi = 0; wi < workers; ++wi) {
        const int lo = static_cast<int>(static_cast<std::int64_t>(n) * wi / workers);
        const int hi = static_cast<int>(static_cast<std::int64_t>(n) * (wi + 1) / workers);
        threads.emplace_back([&, wi, lo, hi]() {
            try {
                counts[static_cast<std::size_t>(wi)] = eval_range(lo, hi);
            } catch (const std::exception& e) {
                failed.store(true);
                std::lock_guard<std::mutex> lk(error_mu);
                if (error.empty()) error = e.what();
            }
        });
    }
    for (auto& t : threads) t.join();
    if (failed.load()) throw RalError("evaluate: worker failed: " + error);
    int correct = 0;
    for (int c : counts) correct += c;
    return static_cast<double>(correct) / n;
}

TrainResult run_train(const io::RunConfig& cfg_in) {
    io::RunConfig cfg = cfg_in;
    if (cfg.data.root.empty()) cfg.model.num_classes = cfg.synth.num_classes;
    cfg.model.validate();
    write_resolved_config(cfg);

    auto data = load_dataset(cfg);
    const auto optim_cfg = io::make_optim_config(cfg.train);

    std::unique_ptr<nn::RalModel> model;
    Rng train_rng(Rng::mix(cfg.seed, 0x747261696eull));
    int start_epoch = 0;
    std::unique_ptr<Adam> adam;

    if (!cfg.train.resume.empty()) {
        auto stored = io::peek_checkpoint_config(cfg.train.resume);
        model = std::make_unique<nn::RalModel>(stored, cfg.seed);
        adam = std::make_unique<Adam>(model->params(), optim_cfg);
        auto meta = io::load_checkpoint(cfg.train.resume, *model, adam.get());
        start_epoch = meta.epoch;
        if (!meta.train_rng.empty()) train_rng.deserialize(meta.train_rng);
    } else {
        model = std::make_unique<nn::RalModel>(cfg.model, cfg.seed);
        adam = std::make_unique<Adam>(model->params(), optim_cfg);
    }

    const auto metrics_path = (fs::path(cfg.out_dir) / "metrics.jsonl").string();
    std::ofstream metrics(metrics_path, start_epoch > 0 ? std::ios::app : std::ios::trunc);
    if (!metrics) throw IoError("run: cannot write " + metrics_path);

    const int eval_workers = io::worker_count(0);
    TrainResult result;
    for (int epoch = start_epoch; epoch < cfg.train.epochs; ++epoch) {
        const double lr = cosine_lr(optim_cfg, epoch, cfg.train.epochs);
        const auto stats =
            train_epoch(*model, *adam, data.train, lr, cfg.train, data.crop_train, train_rng);
        const double val_acc = data.val.empty() ? 0.0 : evaluate(*model, data.val, eval_workers);

        nlohmann::json line{{"epoch", epoch},
                            {"loss", stats.loss},
                            {"train_acc", stats.acc},
                            {"val_acc", val_acc},
                            {"lr", lr}};
        metrics << line.dump() << '\n';
        metrics.flush();

        io::CheckpointMeta meta;
        meta.epoch = epoch + 1;
        meta.step = adam->step_count();
        meta.train_rng = train_rng.serialize();
        io::save_checkpoint((fs::path(cfg.out_dir) / "checkpoint").string(), *model, meta,
                            adam.get());

        result.epochs_run = epoch + 1;
        result.final_val_acc = val_acc;
    }
    return result;
}

double run_eval(const io::RunConfig& cfg) {
    if (cfg.eval.checkpoint.empty()) throw ContractError("eval: no checkpoint configured");
    auto stored = io::peek_checkpoint_config(cfg.eval.checkpoint);
    nn::RalModel model(stored, cfg.seed);
    io::load_checkpoint(cfg.eval.checkpoint, model);

    std::vector<data::SequenceSample> samples;
    if (!cfg.data.root.empty()) {
        const auto manifest = cfg.data.manifest.empty()
                                  ? (fs::path(cfg.data.root) / "manifest.jsonl").string()
                                  : cfg.data.manifest;
        auto ds = data::ingest_lrw_layout(cfg.data.root, manifest, cfg.eval.split);
        samples = std::move(ds.samples);
        const bool crop = !samples.empty() && samples[0].frames.dim(1) >= 88 &&
                          samples[0].frames.dim(2) >= 88 &&
                          (samples[0].frames.dim(1) > 88 || samples[0].frames.dim(2) > 88);
        for (auto& s : samples)
            s.frames = crop ? data::preprocess(s.frames, false, nullptr)
                            : data::normalize_clip(s.frames);
    } else {
        auto data = load_dataset(cfg);
        samples = cfg.eval.split == "train" ? std::move(data.train) : std::move(data.val);
    }
    const double acc = evaluate(model, samples, io::worker_count(0));
    nlohmann::json out{{"accuracy", acc}, {"samples", samples.size()}, {"split", cfg.eval.split}};
    std::cout << out.dump() << std::endl;
    return acc;
}

void run_generate(const io::RunConfig& cfg) {
    const int n_train = cfg.train.train_count;
    const int n_val = cfg.train.val_count;
    if (n_train + n_val < 1)
        throw ContractError("generate: sample count must be >= 1, got " +
                            std::to_string(n_train + n_val));
    write_resolved_config(cfg);
    auto samples = data::generate(cfg.synth, n_train + n_val);
    std::vector<std::string> splits;
    splits.reserve(samples.size());
    for (int i = 0; i < n_train + n_val; ++i)
        splits.push_back(i < n_train ? "train" : "val");
    const auto root = (fs::path(cfg.out_dir) / "data").string();
    data::write_lrw_layout(root, samples, splits);
    nlohmann::json out{{"root", root},
                       {"manifest", (fs::path(root) / "manifest.jsonl").string()},
                       {"train", n_train},
                       {"val", n_val}};
    std::cout << out.dump() << std::endl;
}

std::vector<AblateRow> run_ablate(const io::RunConfig& cfg, AblateStats* stats) {
    // Table rows: baseline; DLSV; DLSV+RAO; ACVI; DLSV+RAO+ACVI
    const bool grid[5][3] = {
        {false, false, false},
        {true, false, false},
        {true, true, false},
        {false, false, true},
        {true, true, true},
    };
    write_resolved_config(cfg);

    struct Task {
        int row;
        int seed_idx;
        io::RunConfig run;
    };
    std::vector<Task> tasks;
    std::vector<AblateRow> rows(5);
    for (int r = 0; r < 5; ++r) {
        rows[r].dlsv = grid[r][0];
        rows[r].rao = grid[r][1];
        rows[r].acvi = grid[r][2];
        rows[r].accs.assign(cfg.ablate.seeds.size(), 0.0);
        for (std::size_t s = 0; s < cfg.ablate.seeds.size(); ++s) {
            io::RunConfig run = cfg;
            run.model.enable_dlsv = grid[r][0];
            run.model.enable_rao = grid[r][1];
            run.model.enable_acvi = grid[r][2];
            run.seed = cfg.ablate.seeds[s];
            run.out_dir = (fs::path(cfg.out_dir) / ("row" + std::to_string(r) + "_seed" +
                                                    std::to_string(run.seed)))
                              .string();
            tasks.push_back({r, static_cast<int>(s), std::move(run)});
        }
        RalConfig probe = cfg.model;
        probe.enable_dlsv = grid[r][0];
        probe.enable_rao = grid[r][1];
        probe.enable_acvi = grid[r][2];
        probe.num_classes = cfg.data.root.empty() ? cfg.synth.num_classes : cfg.model.num_classes;
        rows[r].param_count = nn::RalModel(probe, 0).param_count();
    }

    const int workers = io::worker_count(cfg.ablate.workers);
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::string error;
    std::mutex error_mu;
    std::vector<double> run_seconds(tasks.size(), 0.0);
    const auto t0 = std::chrono::steady_clock::now();

    auto worker_fn = [&]() {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= tasks.size() || failed.load()) return;
            try {
                const auto r0 = std::chrono::steady_clock::now();
                auto result = run_train(tasks[i].run);
                run_seconds[i] =
                    std::chrono::duration<double>(std::chrono::steady_clock::now() - r0).count();
                rows[static_cast<std::size_t>(tasks[i].row)]
                    .accs[static_cast<std::size_t>(tasks[i].seed_idx)] = result.final_val_acc;
            } catch (const std::exception& e) {
                failed.store(true);
                std::lock_guard<std::mutex> lk(error_mu);
                if (error.empty()) error = e.what();
            }
        }
    };
    {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(worker_fn);
        for (auto& t : pool) t.join();
    }
    if (failed.load()) throw RalError("ablate: run failed: " + error);

    for (auto& row : rows) {
        double sum = 0.0;
        for (double a : row.accs) sum += a;
        row.mean_acc = row.accs.empty() ? 0.0 : sum / static_cast<double>(row.accs.size());
    }

    nlohmann::json jrows = nlohmann::json::array();
    for (const auto& row : rows)
        jrows.push_back({{"dlsv", row.dlsv},
                         {"rao", row.rao},
                         {"acvi", row.acvi},
                         {"param_count", row.param_count},
                         {"acc_per_seed", row.accs},
                         {"mean_acc", row.mean_acc}});
    {
        const auto path = (fs::path(cfg.out_dir) / "ablation.json").string();
        std::ofstream os(path);
        if (!os) throw IoError("ablate: cannot write " + path);
        os << nlohmann::json{{"rows", jrows}}.dump(2) << '\n';
    }

    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    double max_run = 0.0;
    for (double s : run_seconds) max_run = std::max(max_run, s);
    if (stats) {
        stats->wall_seconds = wall;
        stats->run_seconds = run_seconds;
    }

    std::printf("%-10s %-5s %-5s %-5s %10s %10s\n", "row", "DLSV", "RAO", "ACVI", "params",
                "mean_acc");
    const char* names[5] = {"baseline", "dlsv", "dlsv+rao", "acvi", "full"};
    for (int r = 0; r < 5; ++r)
        std::printf("%-10s %-5s %-5s %-5s %10lld %9.4f\n", names[r], rows[r].dlsv ? "x" : "-",
                    rows[r].rao ? "x" : "-", rows[r].acvi ? "x" : "-", rows[r].param_count,
                    rows[r].mean_acc);
    std::printf("sweep wall %.1fs, slowest run %.1fs, workers %d\n", wall, max_run, workers);
    return rows;
}

}  // namespace ral::train
