#include "io/checkpoint.hpp"

#include <filesystem>
#include <fstream>
#include <unordered_map>

#include <json.hpp>

#include "io/binio.hpp"
#include "io/runconfig.hpp"

namespace ral::io {

namespace {

struct Entry {
    std::string name;
    Shape shape;
    const float* data;
    std::size_t count;
};

std::vector<Entry> collect_entries(const nn::RalModelT<float>& model, train::Adam* adam) {
    std::vector<Entry> entries;
    const auto& items = model.params().items();
    for (const auto& p : items)
        entries.push_back({p.name, p.tensor.shape(), p.tensor.data(),
                           static_cast<std::size_t>(p.tensor.size())});
    for (const auto& s : model.state().entries())
        entries.push_back({s.name, {static_cast<int>(s.data->size())}, s.data->data(),
                           s.data->size()});
    if (adam) {
        for (std::size_t i = 0; i < items.size(); ++i) {
            entries.push_back({"opt.m." + items[i].name, items[i].tensor.shape(),
                               adam->moment1()[i].data(), adam->moment1()[i].size()});
            entries.push_back({"opt.v." + items[i].name, items[i].tensor.shape(),
                               adam->moment2()[i].data(), adam->moment2()[i].size()});
        }
    }
    return entries;
}

}  // namespace

void save_checkpoint(const std::string& dir, const nn::RalModelT<float>& model,
                     const CheckpointMeta& meta, train::Adam* adam) {
    std::filesystem::create_directories(dir);
    const auto entries = collect_entries(model, adam);

    nlohmann::json manifest;
    manifest["schema_version"] = kCheckpointSchema;
    manifest["model"] = model_config_to_json(model.config());
    manifest["epoch"] = meta.epoch;
    manifest["step"] = meta.step;
    manifest["train_rng"] = meta.train_rng;
    manifest["has_optimizer"] = adam != nullptr;

    nlohmann::json list = nlohmann::json::array();
    std::uint64_t offset = 0;
    for (const auto& e : entries) {
        list.push_back({{"name", e.name}, {"shape", e.shape}, {"dtype", "f32"}, {"offset", offset}});
        offset += e.count * 4;
    }
    manifest["entries"] = list;

    const auto blob_path = (std::filesystem::path(dir) / "params.bin").string();
    std::ofstream blob(blob_path, std::ios::binary);
    if (!blob) throw IoError("checkpoint: cannot open " + blob_path);
    for (const auto& e : entries) put_f32_span(blob, e.data, e.count);
    if (!blob) throw IoError("checkpoint: write failed for " + blob_path);
    blob.close();

    const auto manifest_path = (std::filesystem::path(dir) / "manifest.json").string();
    std::ofstream mf(manifest_path);
    if (!mf) throw IoError("checkpoint: cannot open " + manifest_path);
    mf << manifest.dump(2) << '\n';
    if (!mf) throw IoError("checkpoint: write failed for " + manifest_path);
}

namespace {

nlohmann::json read_manifest_json(const std::string& dir) {
    const auto path = (std::filesystem::path(dir) / "manifest.json").string();
    std::ifstream is(path);
    if (!is) throw IoError("checkpoint: cannot open " + path);
    nlohmann::json j;
    try {
        is >> j;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("checkpoint: " + path + ": " + e.what());
    }
    if (j.value("schema_version", -1) != kCheckpointSchema)
        throw FormatError("checkpoint: unsupported schema_version in " + path);
    return j;
}

}  // namespace

RalConfig peek_checkpoint_config(const std::string& dir) {
    return model_config_from_json(read_manifest_json(dir).at("model"));
}

CheckpointMeta load_checkpoint(const std::string& dir, nn::RalModelT<float>& model,
                               train::Adam* adam) {
    const auto manifest = read_manifest_json(dir);
    if (adam && !manifest.value("has_optimizer", false))
        throw FormatError("checkpoint: " + dir + " has no optimizer state to resume from");

    const auto blob_path = (std::filesystem::path(dir) / "params.bin").string();
    std::ifstream blob(blob_path, std::ios::binary);
    if (!blob) throw IoError("checkpoint: cannot open " + blob_path);

    // name -> (destination, count)
    struct Dst {
        float* p;
        std::size_t n;
    };
    std::unordered_map<std::string, Dst> dsts;
    auto& items = model.params().items();
    for (auto& p : items)
        dsts[p.name] = {p.tensor.data(), static_cast<std::size_t>(p.tensor.size())};
    for (auto& s : model.state().entries()) dsts[s.name] = {s.data->data(), s.data->size()};
    if (adam) {
        for (std::size_t i = 0; i < items.size(); ++i) {
            dsts["opt.m." + items[i].name] = {adam->moment1()[i].data(),
                                              adam->moment1()[i].size()};
            dsts["opt.v." + items[i].name] = {adam->moment2()[i].data(),
                                              adam->moment2()[i].size()};
        }
    }

    std::size_t restored = 0;
    for (const auto& e : manifest.at("entries")) {
        const auto name = e.at("name").get<std::string>();
        const auto offset = e.at("offset").get<std::uint64_t>();
        const Shape shape = e.at("shape").get<Shape>();
        auto it = dsts.find(name);
        if (it == dsts.end()) {
            if (name.rfind("opt.", 0) == 0 && !adam) continue;  // inference load
            throw FormatError("checkpoint: entry '" + name + "' does not match the model");
        }
        if (static_cast<std::size_t>(shape_numel(shape)) != it->second.n)
            throw FormatError("checkpoint: entry '" + name + "' has shape " + shape_str(shape) +
                              ", expected " + std::to_string(it->second.n) + " values");
        blob.seekg(static_cast<std::streamoff>(offset));
        get_f32_span(blob, it->second.p, it->second.n);
        if (!blob) throw FormatError("checkpoint: truncated blob reading '" + name + "'");
        ++restored;
    }
    const std::size_t expected = dsts.size();
    if (restored < expected)
        throw FormatError("checkpoint: " + std::to_string(expected - restored) +
                          " model entries missing from " + dir);

    CheckpointMeta meta;
    meta.epoch = manifest.value("epoch", 0);
    meta.step = manifest.value("step", std::int64_t(0));
    meta.train_rng = manifest.value("train_rng", std::string());
    if (adam) adam->set_step_count(meta.step);
    return meta;
}

}  // namespace ral::io
