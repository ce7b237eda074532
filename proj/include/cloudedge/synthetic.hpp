#pragma once

#include <cstdint>
#include <vector>

#include <json.hpp>

#include "cloudedge/dataset.hpp"

namespace cloudedge::dataset {

struct AttackWindow {
    std::int64_t start = 0;  // inclusive, seconds
    std::int64_t end = 0;    // exclusive
    int attack_type = 1;
    std::vector<std::size_t> sensors;
    double magnitude = 6.0;  // multiples of the sensor's stationary std
};

/// Each edge has one latent AR(1) driver; every sensor of the edge is an
/// affine function of it plus independent noise.
struct BaseProcess {
    double ar_coefficient = 0.9;
    double driver_std = 1.0;  // innovation std of the driver
    double noise_std = 0.5;
    double level = 50.0;
    double level_spread = 20.0;
    double gain_min = 0.5;
    double gain_max = 2.0;
};

struct SyntheticSpec {
    std::size_t n_sensors = 12;
    std::size_t n_edges = 3;
    std::int64_t duration = 20000;
    std::int64_t train_duration = 12100;
    std::vector<AttackWindow> attack_windows;
    BaseProcess base;
    std::uint64_t seed = 1;
};

/// Throws ConfigError when the spec is inconsistent.
void validate(const SyntheticSpec& spec);

/// Deterministic for a fixed spec. Sensors are assigned to edges in
/// contiguous blocks.
DatasetSplit generate_synthetic(const SyntheticSpec& spec);

/// Stationary standard deviation of one sensor under the base process.
double stationary_std(const BaseProcess& base, double gain);

/// The desk-scale scenario: 12 sensors, 3 edges, 20000 s, six attack
/// types, each over 6 sensors at 6..8 sigma, aligned to 11-sample windows.
SyntheticSpec default_synthetic_spec(std::uint64_t seed = 1);

SyntheticSpec synthetic_spec_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const SyntheticSpec& spec);

}  // namespace cloudedge::dataset
