#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "liketrack/features.hpp"
#include "liketrack/grid.hpp"

namespace liketrack::testing {

inline ResponseMap random_map(int rows, int cols, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> s(static_cast<std::size_t>(rows) * cols);
    for (auto& v : s) {
        v = u(rng);
    }
    return ResponseMap(rows, cols, std::move(s));
}

inline FeaturePyramid random_pyramid(int layers, int channels, int rows, int cols, std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    FeaturePyramid p;
    for (int l = 0; l < layers; ++l) {
        FeatureLayer layer(l, channels, rows, cols, 1.0 / (l + 1));
        for (auto& v : layer.values) {
            v = n(rng);
        }
        p.layers.push_back(std::move(layer));
    }
    p.patch_box = {100.0, 80.0, static_cast<double>(cols), static_cast<double>(rows)};
    return p;
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() / ("liketrack_" + tag + "_" + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& leaf) const { return path_ / leaf; }

private:
    std::filesystem::path path_;
};

}  // namespace liketrack::testing
