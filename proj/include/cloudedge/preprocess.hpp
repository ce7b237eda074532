#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "cloudedge/dataset.hpp"

namespace cloudedge::preprocess {

struct AggregationConfig {
    std::int64_t sampling_period = 1;  // seconds between raw samples
    std::size_t scale = 10;            // B: a window holds B + 1 samples
    std::size_t stride = 11;           // raw samples between window starts

    std::size_t window_length() const noexcept { return scale + 1; }
};

void validate(const AggregationConfig& config);

/// Sum of one window of B + 1 raw samples (compensated summation).
double aggregate(std::span<const double> window, std::size_t scale);

/// Start offsets of every complete window over `n_frames` samples.
std::vector<std::size_t> window_starts(std::size_t n_frames, const AggregationConfig& config);

/// Aggregated series of one sensor: one value per window start.
std::vector<double> aggregate_sensor(std::span<const dataset::SensorFrame> frames, std::size_t sensor,
                                     const AggregationConfig& config);

/// Ground-truth class of a window: normal unless some frame is abnormal, in
/// which case the most frequent attack type (lowest id on ties).
int window_class(std::span<const dataset::SensorFrame> window);

inline constexpr double kShiftEpsilon = 1e-6;
inline constexpr std::size_t kMinFitSamples = 20;
inline constexpr double kLambdaMin = -5.0;
inline constexpr double kLambdaMax = 5.0;

struct BoxCoxParams {
    double lambda = 1.0;
    double shift = 0.0;
    bool degenerate = false;
    /// Geometric mean of the shifted training data; 1 when unknown.
    double reference = 1.0;
};

/// Box-Cox profile log-likelihood of `data + shift` at `lambda`. All shifted
/// values must be positive.
double boxcox_log_likelihood(std::span<const double> data, double shift, double lambda);

/// Maximum-likelihood lambda over [-5, 5]: coarse grid, then golden-section
/// refinement around the best grid point. Constant input yields lambda = 1
/// flagged degenerate.
BoxCoxParams fit_lambda(std::span<const double> aggregates);

struct Transformed {
    double value = 0.0;
    bool clamped = false;  // X + shift was <= 0 and got clamped to epsilon
};

Transformed transform(double x, const BoxCoxParams& params);

/// ((y / reference)^lambda - 1) / lambda with y = X + shift. A positive affine
/// map of transform(), so Gaussian decisions agree, but it keeps full
/// precision when y^lambda is far from 1.
Transformed transform_relative(double x, const BoxCoxParams& params);

/// Box-Cox parameters keyed by (edge id, sensor name).
using BoxCoxTable = std::map<std::pair<int, std::string>, BoxCoxParams>;

nlohmann::json to_json(const BoxCoxTable& table);
BoxCoxTable boxcox_table_from_json(const nlohmann::json& doc);

}  // namespace cloudedge::preprocess
