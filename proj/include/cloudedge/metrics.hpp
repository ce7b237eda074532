#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

namespace cloudedge::harness {

struct Tallies {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    std::size_t tn = 0;

    std::size_t total() const noexcept { return tp + fp + fn + tn; }
    bool operator==(const Tallies&) const = default;
};

/// Undefined ratios (zero denominators) are std::nullopt.
struct DetectionMetrics {
    Tallies tallies;
    std::optional<double> fnr;  // FN / (TP + FN)
    std::size_t k_times = 0;    // TP + FP
    std::int64_t rtl = 0;       // (N_samples - k_times * B) * N_sensors
    std::optional<double> precision;
    std::optional<double> recall;
    std::optional<double> f1;

    bool operator==(const DetectionMetrics&) const = default;
};

DetectionMetrics compute_metrics(const Tallies& tallies, std::size_t n_samples, std::size_t n_sensors,
                                 std::size_t scale);

std::optional<double> f1_score(std::optional<double> precision, std::optional<double> recall);

/// Correct / total per class id in [0, n_classes); absent classes are nullopt.
std::map<int, std::optional<double>> per_class_accuracy(std::span<const int> predictions,
                                                        std::span<const int> truth, std::size_t n_classes);

struct RunMetrics {
    DetectionMetrics edge;   // upload decision vs window truth
    DetectionMetrics final;  // edge + cloud decision vs window truth
    std::map<int, std::optional<double>> per_class_acc;
    std::size_t windows = 0;
    std::size_t n_frames = 0;
    std::size_t n_sensors = 0;
    std::size_t scale = 0;
    long e = 0;
    std::optional<double> mean_time_ms;  // wall clock; kept out of to_json unless asked

    bool operator==(const RunMetrics& o) const {
        return edge == o.edge && final == o.final && per_class_acc == o.per_class_acc && windows == o.windows &&
               n_frames == o.n_frames && n_sensors == o.n_sensors && scale == o.scale && e == o.e;
    }
};

nlohmann::json to_json(const RunMetrics& metrics, bool include_timing = false);

/// One CSV row per run; header from metrics_csv_header().
std::string metrics_csv_header();
std::string metrics_csv_row(const RunMetrics& metrics, std::optional<double> p_threshold = std::nullopt);

}  // namespace cloudedge::harness
