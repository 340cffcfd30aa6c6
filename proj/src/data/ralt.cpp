#include "data/ralt.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>

#include <json.hpp>

namespace ral::data {

namespace {

void put_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    return static_cast<std::uint32_t>(b[0]) | static_cast<std::uint32_t>(b[1]) << 8 |
           static_cast<std::uint32_t>(b[2]) << 16 | static_cast<std::uint32_t>(b[3]) << 24;
}

void put_f32(std::ostream& os, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(os, bits);
}

float get_f32(std::istream& is) {
    const std::uint32_t bits = get_u32(is);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
}

}  // namespace

void write_ralt(const std::string& path, const Tensor& frames) {
    if (frames.rank() != 3)
        throw DimensionError("write_ralt: expects [T,H,W], got " + shape_str(frames.shape()));
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("write_ralt: cannot open " + path);
    os.write("RALT", 4);
    put_u32(os, kRaltVersion);
    put_u32(os, static_cast<std::uint32_t>(frames.dim(0)));
    put_u32(os, static_cast<std::uint32_t>(frames.dim(1)));
    put_u32(os, static_cast<std::uint32_t>(frames.dim(2)));
    for (std::int64_t i = 0; i < frames.size(); ++i) put_f32(os, frames.data()[i]);
    if (!os) throw IoError("write_ralt: write failed for " + path);
}

Tensor read_ralt(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("read_ralt: cannot open " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "RALT", 4) != 0)
        throw FormatError("read_ralt: bad magic in " + path);
    const std::uint32_t version = get_u32(is);
    if (version != kRaltVersion)
        throw FormatError("read_ralt: unsupported version " + std::to_string(version) + " in " +
                          path);
    const int t = static_cast<int>(get_u32(is));
    const int h = static_cast<int>(get_u32(is));
    const int w = static_cast<int>(get_u32(is));
    if (!is || t < 1 || h < 1 || w < 1)
        throw FormatError("read_ralt: bad header extents in " + path);
    auto frames = Tensor::zeros({t, h, w});
    for (std::int64_t i = 0; i < frames.size(); ++i) frames.data()[i] = get_f32(is);
    if (!is) throw FormatError("read_ralt: truncated payload in " + path);
    return frames;
}

void write_manifest(const std::string& path, const std::vector<ManifestEntry>& entries) {
    std::ofstream os(path);
    if (!os) throw IoError("write_manifest: cannot open " + path);
    for (const auto& e : entries) {
        nlohmann::json j{{"file", e.file}, {"label", e.label}, {"split", e.split}};
        os << j.dump() << '\n';
    }
    if (!os) throw IoError("write_manifest: write failed for " + path);
}

std::vector<ManifestEntry> read_manifest(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("read_manifest: cannot open " + path);
    std::vector<ManifestEntry> entries;
    std::string line;
    int line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw FormatError("read_manifest: line " + std::to_string(line_no) + " of " + path +
                              ": " + e.what());
        }
        if (!j.contains("file") || !j.contains("label"))
            throw FormatError("read_manifest: line " + std::to_string(line_no) + " of " + path +
                              ": missing file/label field");
        ManifestEntry e;
        e.file = j["file"].get<std::string>();
        e.label = j["label"].get<int>();
        e.split = j.value("split", std::string("train"));
        e.line = line_no;
        entries.push_back(std::move(e));
    }
    return entries;
}

Dataset ingest_lrw_layout(const std::string& root, const std::string& manifest_path,
                          const std::string& split_filter) {
    const auto entries = read_manifest(manifest_path);
    Dataset ds;
    for (const auto& e : entries) {
        if (!split_filter.empty() && e.split != split_filter) continue;
        const auto path = (std::filesystem::path(root) / e.file).string();
        if (!std::filesystem::exists(path))
            throw IoError("manifest line " + std::to_string(e.line) + ": missing file " + path);
        SequenceSample s;
        s.frames = read_ralt(path);
        s.label = e.label;
        s.length = s.frames.dim(0);
        ds.samples.push_back(std::move(s));
    }
    return ds;
}

void write_lrw_layout(const std::string& root, const std::vector<SequenceSample>& samples,
                      const std::vector<std::string>& splits) {
    if (splits.size() != samples.size())
        throw ContractError("write_lrw_layout: " + std::to_string(splits.size()) +
                            " split names for " + std::to_string(samples.size()) + " samples");
    std::filesystem::create_directories(root);
    std::vector<ManifestEntry> entries;
    entries.reserve(samples.size());
    char name[32];
    for (std::size_t i = 0; i < samples.size(); ++i) {
        std::snprintf(name, sizeof(name), "sample_%06zu.ralt", i);
        write_ralt((std::filesystem::path(root) / name).string(), samples[i].frames);
        entries.push_back({name, samples[i].label, splits[i]});
    }
    write_manifest((std::filesystem::path(root) / "manifest.jsonl").string(), entries);
}

}  // namespace ral::data
