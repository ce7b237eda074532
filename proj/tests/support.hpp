#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "cloudedge/dataset.hpp"
#include "cloudedge/matrix.hpp"

namespace testing {

inline std::vector<double> normal_sample(std::size_t n, double mean, double sd, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> d(mean, sd);
    std::vector<double> out(n);
    for (auto& v : out) v = d(rng);
    return out;
}

inline cloudedge::numerics::Matrix random_matrix(std::size_t r, std::size_t c, std::mt19937_64& rng,
                                                 double scale = 1.0) {
    std::normal_distribution<double> d(0.0, scale);
    cloudedge::numerics::Matrix m(r, c);
    for (auto& v : m.data()) v = d(rng);
    return m;
}

/// Fresh, empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("cloudedge_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace testing
