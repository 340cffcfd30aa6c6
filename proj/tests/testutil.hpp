#pragma once

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "data/synth.hpp"

namespace testutil {

// Unique scratch directory under the build tree, removed on destruction.
struct TempDir {
    std::filesystem::path path;
    explicit TempDir(const std::string& tag) {
        path = std::filesystem::temp_directory_path() /
               ("ral_test_" + tag + "_" + std::to_string(::getpid()));
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    std::string str() const { return path.string(); }
};

// Independent task-difficulty oracle: nearest centroid in raw pixel space.
// Centroids are class means over a training set; accuracy is measured on a
// held-out set. Deliberately knows nothing about the model stack.
inline double nearest_centroid_accuracy(const std::vector<ral::data::SequenceSample>& train,
                                        const std::vector<ral::data::SequenceSample>& test,
                                        int num_classes) {
    const std::size_t dim = static_cast<std::size_t>(train.at(0).frames.size());
    std::vector<std::vector<double>> centroid(static_cast<std::size_t>(num_classes),
                                              std::vector<double>(dim, 0.0));
    std::vector<int> counts(static_cast<std::size_t>(num_classes), 0);
    for (const auto& s : train) {
        auto& c = centroid[static_cast<std::size_t>(s.label)];
        for (std::size_t i = 0; i < dim; ++i) c[i] += s.frames.data()[i];
        ++counts[static_cast<std::size_t>(s.label)];
    }
    for (int k = 0; k < num_classes; ++k)
        if (counts[static_cast<std::size_t>(k)] > 0)
            for (auto& v : centroid[static_cast<std::size_t>(k)])
                v /= counts[static_cast<std::size_t>(k)];

    int correct = 0;
    for (const auto& s : test) {
        int best = 0;
        double best_d = 0.0;
        for (int k = 0; k < num_classes; ++k) {
            double d = 0.0;
            const auto& c = centroid[static_cast<std::size_t>(k)];
            for (std::size_t i = 0; i < dim; ++i) {
                const double diff = s.frames.data()[i] - c[i];
                d += diff * diff;
            }
            if (k == 0 || d < best_d) {
                best_d = d;
                best = k;
            }
        }
        if (best == s.label) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(test.size());
}

}  // namespace testutil
