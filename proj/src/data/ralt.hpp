#pragma once

#include <string>
#include <vector>

#include "data/synth.hpp"

namespace ral::data {

// RALT raw-tensor clip file: magic "RALT", u32 version, u32 T/H/W, then
// T*H*W f32 payload. All integers and floats little-endian.
constexpr std::uint32_t kRaltVersion = 1;

void write_ralt(const std::string& path, const Tensor& frames);
Tensor read_ralt(const std::string& path);

struct ManifestEntry {
    std::string file;  // relative to the dataset root
    int label = 0;
    std::string split;  // "train" | "val" | ...
    int line = 0;       // 1-based manifest line, set by read_manifest
};

// JSONL manifest, one {"file","label","split"} object per line.
void write_manifest(const std::string& path, const std::vector<ManifestEntry>& entries);
std::vector<ManifestEntry> read_manifest(const std::string& path);

struct Dataset {
    std::vector<SequenceSample> samples;
};

// Reads every manifest entry (optionally filtered by split) and loads the
// referenced RALT files. Missing files are reported with the manifest line.
Dataset ingest_lrw_layout(const std::string& root, const std::string& manifest_path,
                          const std::string& split_filter = "");

// Writes samples as RALT files plus a manifest; splits[i] labels sample i.
void write_lrw_layout(const std::string& root, const std::vector<SequenceSample>& samples,
                      const std::vector<std::string>& splits);

}  // namespace ral::data
